#include "colonies/store/store.hpp"

#include <sqlite3.h>

#include <string_view>

#include "schema.hpp"

namespace colonies::store {
namespace {

[[noreturn]] void fail(sqlite3* db, int rc, std::string_view what) {
  std::string msg = std::string(what) + ": " + sqlite3_errmsg(db);
  int primary = rc & 0xff;
  if (rc == SQLITE_CONSTRAINT_PRIMARYKEY || rc == SQLITE_CONSTRAINT_UNIQUE) {
    throw Error(Errc::kDuplicateId, msg);
  }
  if (rc == SQLITE_CONSTRAINT_TRIGGER) {
    throw Error(Errc::kInvalidTransition, msg);
  }
  if (primary == SQLITE_CONSTRAINT) throw Error(Errc::kInvalidArgument, msg);
  throw Error(Errc::kStorageFailure, msg);
}

// Binds parameters left to right and resets the statement on destruction.
class Query {
 public:
  explicit Query(sqlite3_stmt* s) : s_(s) {}
  ~Query() {
    sqlite3_reset(s_);
    sqlite3_clear_bindings(s_);
  }
  Query(const Query&) = delete;
  Query& operator=(const Query&) = delete;

  Query& bind(std::string_view v) {
    check(sqlite3_bind_text(s_, ++idx_, v.data(), static_cast<int>(v.size()),
                            SQLITE_TRANSIENT));
    return *this;
  }
  Query& bind(const std::string& v) { return bind(std::string_view(v)); }
  Query& bind(const char* v) { return bind(std::string_view(v)); }
  Query& bind(std::int64_t v) {
    check(sqlite3_bind_int64(s_, ++idx_, v));
    return *this;
  }
  Query& bind(int v) { return bind(static_cast<std::int64_t>(v)); }
  Query& bind(bool v) { return bind(static_cast<std::int64_t>(v ? 1 : 0)); }

  bool step() {
    int rc = sqlite3_step(s_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    fail(sqlite3_db_handle(s_), sqlite3_extended_errcode(sqlite3_db_handle(s_)),
         "sqlite step");
  }
  void run() {
    while (step()) {
    }
  }

  std::string text(int col) const {
    auto* p = sqlite3_column_text(s_, col);
    if (p == nullptr) return {};
    return {reinterpret_cast<const char*>(p),
            static_cast<std::size_t>(sqlite3_column_bytes(s_, col))};
  }
  std::int64_t integer(int col) const { return sqlite3_column_int64(s_, col); }
  bool flag(int col) const { return sqlite3_column_int64(s_, col) != 0; }
  Json json(int col) const { return Json::parse(text(col)); }

 private:
  void check(int rc) {
    if (rc != SQLITE_OK) fail(sqlite3_db_handle(s_), rc, "sqlite bind");
  }
  sqlite3_stmt* s_;
  int idx_ = 0;
};

std::string strings_text(const std::vector<std::string>& v) {
  Json j = Json::array();
  for (const auto& s : v) j.push_back(s);
  return j.dump();
}

std::vector<std::string> strings_from(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& item : Json::parse(text)) out.push_back(item.get<std::string>());
  return out;
}

int state_code(ProcessState s) { return static_cast<int>(s); }
ProcessState state_of(std::int64_t code) {
  return static_cast<ProcessState>(code);
}

Process read_process(const Query& q) {
  Process p;
  p.process_id = q.text(0);
  p.state = state_of(q.integer(1));
  p.wait_for_parents = q.flag(2);
  p.assigned_executor = q.text(3);
  p.submission_time = q.integer(4);
  p.priority_time = q.integer(5);
  p.queued_time = q.integer(6);
  p.start_time = q.integer(7);
  p.end_time = q.integer(8);
  p.deadline = q.integer(9);
  p.retries = static_cast<int>(q.integer(10));
  p.spec = spec_from_json(q.json(11));
  p.errors = strings_from(q.text(12));
  p.parents = strings_from(q.text(13));
  p.children = strings_from(q.text(14));
  p.workflow_id = q.text(15);
  p.input = q.json(16);
  p.output = q.json(17);
  return p;
}

#define PROCESS_SELECT(where)                                              \
  "SELECT p.process_id, p.state, p.wait_for_parents, p.assigned_executor, " \
  "p.submission_time, p.priority_time, p.queued_time, p.start_time, "       \
  "p.end_time, p.deadline, p.retries, p.spec, p.errors, p.parents, "        \
  "p.children, p.workflow_id, io.input, io.output "                         \
  "FROM processes p JOIN io ON io.process_id = p.process_id " where

ExecutorRecord read_executor(const Query& q) {
  ExecutorRecord e;
  e.executor_id = q.text(0);
  e.colony_id = q.text(1);
  e.executor_name = q.text(2);
  e.executor_type = q.text(3);
  e.approved = q.flag(4);
  e.functions = strings_from(q.text(5));
  e.last_seen = q.integer(6);
  return e;
}

CronDef read_cron(const Query& q) {
  CronDef c;
  c.cron_id = q.text(0);
  c.colony_id = q.text(1);
  c.name = q.text(2);
  c.interval = q.integer(3);
  c.cron_expr = q.text(4);
  c.workflow = workflow_from_json(q.json(5));
  c.next_deadline = q.integer(6);
  c.last_run = q.integer(7);
  return c;
}

GeneratorDef read_generator(const Query& q) {
  GeneratorDef g;
  g.generator_id = q.text(0);
  g.colony_id = q.text(1);
  g.name = q.text(2);
  g.workflow = workflow_from_json(q.json(3));
  g.trigger_count = q.integer(4);
  g.timeout = q.integer(5);
  return g;
}

#define FILE_COLUMNS                                                    \
  "file_id, colony_id, label, name, revision, checksum, size, protocol, " \
  "server, object_key, credentials, added, tombstone"

FileMeta read_file(const Query& q) {
  FileMeta f;
  f.file_id = q.text(0);
  f.colony_id = q.text(1);
  f.label = q.text(2);
  f.name = q.text(3);
  f.revision = q.integer(4);
  f.checksum = q.text(5);
  f.size = q.integer(6);
  f.storage.protocol = q.text(7);
  f.storage.server = q.text(8);
  f.storage.key = q.text(9);
  f.credentials_ref = q.text(10);
  f.added = q.integer(11);
  f.tombstone = q.flag(12);
  return f;
}

AuditEvent read_audit(const Query& q) {
  AuditEvent e;
  e.seq = q.integer(0);
  e.time = q.integer(1);
  e.process_id = q.text(2);
  e.action = q.text(3);
  e.state = state_of(q.integer(4));
  e.executor_id = q.text(5);
  e.term = q.integer(6);
  e.reason = q.text(7);
  e.retries = static_cast<int>(q.integer(8));
  return e;
}

#define AUDIT_COLUMNS \
  "seq, time, process_id, action, state, executor_id, term, reason, retries"

// "/a/b" is below "/a" and "/"; "/ab" is not below "/a".
bool label_below(std::string_view label, std::string_view root) {
  if (root == "/" || root.empty()) return true;
  if (label == root) return true;
  return label.size() > root.size() && label.substr(0, root.size()) == root &&
         label[root.size()] == '/';
}

}  // namespace

Json to_json(const AuditEvent& e) {
  return {{"seq", e.seq},
          {"time", e.time},
          {"processid", e.process_id},
          {"action", e.action},
          {"state", std::string(state_name(e.state))},
          {"executorid", e.executor_id},
          {"term", e.term},
          {"reason", e.reason},
          {"retries", e.retries}};
}

// ---------------------------------------------------------------------------
// Store

Store::Store(StoreOptions options) : options_(std::move(options)) {
  int flags = SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_NOMUTEX;
  int rc = sqlite3_open_v2(options_.path.c_str(), &db_, flags, nullptr);
  if (rc != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    throw Error(Errc::kStorageFailure, "cannot open store: " + msg);
  }
  sqlite3_extended_result_codes(db_, 1);
  sqlite3_busy_timeout(db_, options_.busy_timeout_ms);
  auto pragma = [&](const std::string& sql) {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
      std::string msg = err ? err : "unknown";
      sqlite3_free(err);
      throw Error(Errc::kStorageFailure, "store setup failed: " + msg);
    }
  };
  if (options_.path != ":memory:") pragma("PRAGMA journal_mode=WAL");
  pragma(std::string("PRAGMA synchronous=") +
         (options_.synchronous_full ? "FULL" : "NORMAL"));
  migrate();
}

Store::~Store() {
  for (auto& [sql, s] : cache_) sqlite3_finalize(s);
  sqlite3_close(db_);
}

sqlite3_stmt* Store::cached(const char* sql) {
  auto it = cache_.find(sql);
  if (it != cache_.end()) return it->second;
  sqlite3_stmt* s = nullptr;
  int rc = sqlite3_prepare_v3(db_, sql, -1, SQLITE_PREPARE_PERSISTENT, &s,
                              nullptr);
  if (rc != SQLITE_OK) fail(db_, rc, std::string("prepare ") + sql);
  cache_.emplace(sql, s);
  return s;
}

void Store::begin(bool write) {
  if (!available_.load()) {
    throw Error(Errc::kStorageFailure, "store unreachable");
  }
  const char* sql = write ? "BEGIN IMMEDIATE" : "BEGIN";
  int rc = sqlite3_exec(db_, sql, nullptr, nullptr, nullptr);
  if (rc != SQLITE_OK) fail(db_, rc, sql);
}

void Store::commit() {
  int rc = sqlite3_exec(db_, "COMMIT", nullptr, nullptr, nullptr);
  if (rc != SQLITE_OK) fail(db_, rc, "COMMIT");
}

void Store::rollback() {
  if (!sqlite3_get_autocommit(db_)) {
    sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
  }
}

void Store::migrate() {
  std::lock_guard lock(mu_);
  begin(true);
  try {
    sqlite3_exec(db_,
                 "CREATE TABLE IF NOT EXISTS schema_version "
                 "(version INTEGER NOT NULL)",
                 nullptr, nullptr, nullptr);
    std::int64_t version = 0;
    {
      Query q(cached("SELECT version FROM schema_version"));
      if (q.step()) {
        version = q.integer(0);
      } else {
        Query ins(cached("INSERT INTO schema_version (version) VALUES (0)"));
        ins.run();
      }
    }
    for (auto v = static_cast<std::size_t>(version); v < kMigrations.size();
         ++v) {
      std::string sql(kMigrations[v]);
      char* err = nullptr;
      if (sqlite3_exec(db_, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown";
        sqlite3_free(err);
        throw Error(Errc::kStorageFailure, "migration failed: " + msg);
      }
      Query up(cached("UPDATE schema_version SET version = ?"));
      up.bind(static_cast<std::int64_t>(v + 1)).run();
    }
    commit();
  } catch (...) {
    rollback();
    throw;
  }
}

int Store::schema_version() {
  return read([&](Tx& tx) {
    Query q(tx.stmt("SELECT version FROM schema_version"));
    return q.step() ? static_cast<int>(q.integer(0)) : 0;
  });
}

Json Store::dump() {
  std::lock_guard lock(mu_);
  begin(false);
  try {
    Json out = Json::object();
    for (const auto& table : kTables) {
      std::string sql = "SELECT * FROM " + std::string(table.name) +
                        " ORDER BY " + std::string(table.order_by);
      sqlite3_stmt* s = nullptr;
      if (sqlite3_prepare_v2(db_, sql.c_str(), -1, &s, nullptr) != SQLITE_OK) {
        fail(db_, sqlite3_errcode(db_), "dump prepare");
      }
      Json rows = Json::array();
      while (sqlite3_step(s) == SQLITE_ROW) {
        Json row = Json::object();
        for (int c = 0; c < sqlite3_column_count(s); ++c) {
          std::string col = sqlite3_column_name(s, c);
          switch (sqlite3_column_type(s, c)) {
            case SQLITE_INTEGER:
              row[col] = sqlite3_column_int64(s, c);
              break;
            case SQLITE_NULL:
              row[col] = nullptr;
              break;
            default:
              row[col] = std::string(
                  reinterpret_cast<const char*>(sqlite3_column_text(s, c)),
                  static_cast<std::size_t>(sqlite3_column_bytes(s, c)));
          }
        }
        rows.push_back(std::move(row));
      }
      sqlite3_finalize(s);
      out[std::string(table.name)] = std::move(rows);
    }
    commit();
    return out;
  } catch (...) {
    rollback();
    throw;
  }
}

void Store::load(const Json& dump) {
  write([&](Tx& tx) {
    for (const auto& table : kTables) {
      std::string name(table.name);
      if (!dump.contains(name)) continue;
      if (name == "fence") {
        for (const auto& row : dump[name]) tx.fence(row.at("term").get<std::int64_t>());
        continue;
      }
      for (const auto& row : dump[name]) {
        std::string cols;
        std::string marks;
        for (const auto& [col, value] : row.items()) {
          if (!cols.empty()) {
            cols += ", ";
            marks += ", ";
          }
          cols += col;
          marks += "?";
        }
        std::string sql =
            "INSERT INTO " + name + " (" + cols + ") VALUES (" + marks + ")";
        sqlite3_stmt* s = nullptr;
        if (sqlite3_prepare_v2(db_, sql.c_str(), -1, &s, nullptr) != SQLITE_OK) {
          fail(db_, sqlite3_errcode(db_), "load prepare");
        }
        int i = 0;
        for (const auto& [col, value] : row.items()) {
          ++i;
          if (value.is_number_integer()) {
            sqlite3_bind_int64(s, i, value.get<std::int64_t>());
          } else if (value.is_null()) {
            sqlite3_bind_null(s, i);
          } else {
            std::string text = value.get<std::string>();
            sqlite3_bind_text(s, i, text.data(), static_cast<int>(text.size()),
                              SQLITE_TRANSIENT);
          }
        }
        int rc = sqlite3_step(s);
        sqlite3_finalize(s);
        if (rc != SQLITE_DONE) fail(db_, sqlite3_extended_errcode(db_), "load");
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Tx

sqlite3_stmt* Tx::stmt(const char* sql) { return store_.cached(sql); }

void Tx::exec(const std::string& sql) {
  char* err = nullptr;
  int rc = sqlite3_exec(store_.db_, sql.c_str(), nullptr, nullptr, &err);
  if (rc != SQLITE_OK) {
    sqlite3_free(err);
    fail(store_.db_, sqlite3_extended_errcode(store_.db_), "exec");
  }
}

void Tx::insert_process(const Process& p) {
  Query q(stmt(
      "INSERT INTO processes (process_id, colony_id, executor_type, func_name, "
      "executor_names, state, wait_for_parents, assigned_executor, "
      "submission_time, priority_time, queued_time, start_time, end_time, "
      "deadline, retries, max_retries, max_wait_time, spec, errors, parents, "
      "children, workflow_id) "
      "VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)"));
  q.bind(p.process_id)
      .bind(p.spec.conditions.colony_id)
      .bind(p.spec.conditions.executor_type)
      .bind(p.spec.func_name)
      .bind(strings_text(p.spec.conditions.executor_names))
      .bind(state_code(p.state))
      .bind(p.wait_for_parents)
      .bind(p.assigned_executor)
      .bind(p.submission_time)
      .bind(p.priority_time)
      .bind(p.queued_time)
      .bind(p.start_time)
      .bind(p.end_time)
      .bind(p.deadline)
      .bind(p.retries)
      .bind(p.spec.max_retries)
      .bind(p.spec.max_wait_time)
      .bind(canonical(to_json(p.spec)))
      .bind(strings_text(p.errors))
      .bind(strings_text(p.parents))
      .bind(strings_text(p.children))
      .bind(p.workflow_id)
      .run();
  Query io(stmt("INSERT INTO io (process_id, input, output) VALUES (?, ?, ?)"));
  io.bind(p.process_id).bind(canonical(p.input)).bind(canonical(p.output)).run();
}

std::optional<Process> Tx::find_process(const std::string& id) {
  Query q(stmt(PROCESS_SELECT("WHERE p.process_id = ?")));
  q.bind(id);
  if (!q.step()) return std::nullopt;
  return read_process(q);
}

Process Tx::get_process(const std::string& id) {
  auto p = find_process(id);
  if (!p) throw Error(Errc::kNotFound, "process " + id + " not found");
  return *p;
}

void Tx::update_process(const Process& p) {
  Query q(stmt(
      "UPDATE processes SET state = ?, wait_for_parents = ?, "
      "assigned_executor = ?, queued_time = ?, start_time = ?, end_time = ?, "
      "deadline = ?, retries = ?, errors = ?, parents = ?, children = ? "
      "WHERE process_id = ?"));
  q.bind(state_code(p.state))
      .bind(p.wait_for_parents)
      .bind(p.assigned_executor)
      .bind(p.queued_time)
      .bind(p.start_time)
      .bind(p.end_time)
      .bind(p.deadline)
      .bind(p.retries)
      .bind(strings_text(p.errors))
      .bind(strings_text(p.parents))
      .bind(strings_text(p.children))
      .bind(p.process_id)
      .run();
  if (sqlite3_changes(store_.db_) != 1) {
    throw Error(Errc::kNotFound, "process " + p.process_id + " not found");
  }
  Query io(stmt("UPDATE io SET input = ?, output = ? WHERE process_id = ?"));
  io.bind(canonical(p.input)).bind(canonical(p.output)).bind(p.process_id).run();
}

std::vector<Process> Tx::list_processes(const std::string& colony_id,
                                        std::optional<ProcessState> state,
                                        std::int64_t limit) {
  std::vector<Process> out;
  if (state) {
    Query q(stmt(PROCESS_SELECT(
        "WHERE p.colony_id = ? AND p.state = ? "
        "ORDER BY p.priority_time, p.process_id LIMIT ?")));
    q.bind(colony_id).bind(state_code(*state)).bind(limit);
    while (q.step()) out.push_back(read_process(q));
  } else {
    Query q(stmt(PROCESS_SELECT(
        "WHERE p.colony_id = ? ORDER BY p.priority_time, p.process_id LIMIT ?")));
    q.bind(colony_id).bind(limit);
    while (q.step()) out.push_back(read_process(q));
  }
  return out;
}

std::vector<ClaimCandidate> Tx::claim_candidates(
    const std::string& colony_id, const std::string& executor_type,
    std::int64_t limit, std::int64_t offset) {
  Query q(stmt(
      "SELECT process_id, func_name, executor_names FROM processes "
      "WHERE colony_id = ? AND executor_type = ? AND state = 0 "
      "AND wait_for_parents = 0 ORDER BY priority_time, process_id "
      "LIMIT ? OFFSET ?"));
  q.bind(colony_id).bind(executor_type).bind(limit).bind(offset);
  std::vector<ClaimCandidate> out;
  while (q.step()) {
    out.push_back({q.text(0), q.text(1), strings_from(q.text(2))});
  }
  return out;
}

std::vector<std::string> Tx::expired_running(Nanos now) {
  Query q(stmt(
      "SELECT process_id FROM processes WHERE state = 1 AND deadline > 0 "
      "AND deadline < ? ORDER BY deadline, process_id"));
  q.bind(now);
  std::vector<std::string> out;
  while (q.step()) out.push_back(q.text(0));
  return out;
}

std::vector<std::string> Tx::expired_waiting(Nanos now) {
  Query q(stmt(
      "SELECT process_id FROM processes WHERE state = 0 "
      "AND wait_for_parents = 0 AND max_wait_time > 0 "
      "AND queued_time + max_wait_time * 1000000000 < ? "
      "ORDER BY queued_time, process_id"));
  q.bind(now);
  std::vector<std::string> out;
  while (q.step()) out.push_back(q.text(0));
  return out;
}

StateCounts Tx::count_states(const std::string& colony_id) {
  Query q(stmt(
      "SELECT state, COUNT(*) FROM processes WHERE colony_id = ? "
      "GROUP BY state"));
  q.bind(colony_id);
  StateCounts c;
  while (q.step()) {
    switch (state_of(q.integer(0))) {
      case ProcessState::kWaiting:
        c.waiting = q.integer(1);
        break;
      case ProcessState::kRunning:
        c.running = q.integer(1);
        break;
      case ProcessState::kSuccessful:
        c.successful = q.integer(1);
        break;
      case ProcessState::kFailed:
        c.failed = q.integer(1);
        break;
    }
  }
  return c;
}

void Tx::insert_workflow(const WorkflowRow& w) {
  Query q(stmt(
      "INSERT INTO workflows (workflow_id, colony_id, submission_time, source) "
      "VALUES (?, ?, ?, ?)"));
  q.bind(w.workflow_id).bind(w.colony_id).bind(w.submission_time).bind(w.source).run();
}

std::optional<WorkflowRow> Tx::find_workflow(const std::string& id) {
  Query q(stmt(
      "SELECT workflow_id, colony_id, submission_time, source FROM workflows "
      "WHERE workflow_id = ?"));
  q.bind(id);
  if (!q.step()) return std::nullopt;
  return WorkflowRow{q.text(0), q.text(1), q.integer(2), q.text(3)};
}

std::vector<std::string> Tx::workflow_processes(const std::string& workflow_id) {
  Query q(stmt(
      "SELECT process_id FROM processes WHERE workflow_id = ? "
      "ORDER BY submission_time, priority_time, process_id"));
  q.bind(workflow_id);
  std::vector<std::string> out;
  while (q.step()) out.push_back(q.text(0));
  return out;
}

void Tx::insert_dependency(const DependencyRow& row) {
  Query q(stmt(
      "INSERT INTO dependencies (process_id, workflow_id, node_name, "
      "dependencies) VALUES (?, ?, ?, ?)"));
  q.bind(row.process_id)
      .bind(row.workflow_id)
      .bind(row.node_name)
      .bind(strings_text(row.dependencies))
      .run();
}

std::optional<DependencyRow> Tx::find_dependency(const std::string& process_id) {
  Query q(stmt(
      "SELECT process_id, workflow_id, node_name, dependencies FROM "
      "dependencies WHERE process_id = ?"));
  q.bind(process_id);
  if (!q.step()) return std::nullopt;
  return DependencyRow{q.text(0), q.text(1), q.text(2), strings_from(q.text(3))};
}

void Tx::update_dependency(const DependencyRow& row) {
  Query q(stmt("UPDATE dependencies SET dependencies = ? WHERE process_id = ?"));
  q.bind(strings_text(row.dependencies)).bind(row.process_id).run();
}

void Tx::insert_colony(const Colony& c) {
  Query q(stmt("INSERT INTO colonies (colony_id, name) VALUES (?, ?)"));
  q.bind(c.colony_id).bind(c.name).run();
}

std::optional<Colony> Tx::find_colony(const std::string& id) {
  Query q(stmt("SELECT colony_id, name FROM colonies WHERE colony_id = ?"));
  q.bind(id);
  if (!q.step()) return std::nullopt;
  return Colony{q.text(0), q.text(1)};
}

void Tx::delete_colony(const std::string& id) {
  Query q(stmt("DELETE FROM colonies WHERE colony_id = ?"));
  q.bind(id).run();
  Query e(stmt("DELETE FROM executors WHERE colony_id = ?"));
  e.bind(id).run();
}

std::vector<Colony> Tx::list_colonies() {
  Query q(stmt("SELECT colony_id, name FROM colonies ORDER BY name, colony_id"));
  std::vector<Colony> out;
  while (q.step()) out.push_back({q.text(0), q.text(1)});
  return out;
}

void Tx::insert_executor(const ExecutorRecord& e) {
  Query q(stmt(
      "INSERT INTO executors (executor_id, colony_id, executor_name, "
      "executor_type, approved, functions, last_seen) "
      "VALUES (?, ?, ?, ?, ?, ?, ?)"));
  q.bind(e.executor_id)
      .bind(e.colony_id)
      .bind(e.executor_name)
      .bind(e.executor_type)
      .bind(e.approved)
      .bind(strings_text(e.functions))
      .bind(e.last_seen)
      .run();
}

std::optional<ExecutorRecord> Tx::find_executor(const std::string& id) {
  Query q(stmt(
      "SELECT executor_id, colony_id, executor_name, executor_type, approved, "
      "functions, last_seen FROM executors WHERE executor_id = ?"));
  q.bind(id);
  if (!q.step()) return std::nullopt;
  return read_executor(q);
}

void Tx::update_executor(const ExecutorRecord& e) {
  Query q(stmt(
      "UPDATE executors SET approved = ?, functions = ?, last_seen = ? "
      "WHERE executor_id = ?"));
  q.bind(e.approved).bind(strings_text(e.functions)).bind(e.last_seen)
      .bind(e.executor_id).run();
}

void Tx::delete_executor(const std::string& id) {
  Query q(stmt("DELETE FROM executors WHERE executor_id = ?"));
  q.bind(id).run();
}

std::vector<ExecutorRecord> Tx::list_executors(const std::string& colony_id) {
  Query q(stmt(
      "SELECT executor_id, colony_id, executor_name, executor_type, approved, "
      "functions, last_seen FROM executors WHERE colony_id = ? "
      "ORDER BY executor_name"));
  q.bind(colony_id);
  std::vector<ExecutorRecord> out;
  while (q.step()) out.push_back(read_executor(q));
  return out;
}

void Tx::insert_cron(const CronDef& c) {
  Query q(stmt(
      "INSERT INTO crons (cron_id, colony_id, name, interval, cron_expr, "
      "workflow, next_deadline, last_run) VALUES (?, ?, ?, ?, ?, ?, ?, ?)"));
  q.bind(c.cron_id)
      .bind(c.colony_id)
      .bind(c.name)
      .bind(c.interval)
      .bind(c.cron_expr)
      .bind(canonical(workflow_to_json(c.workflow)))
      .bind(c.next_deadline)
      .bind(c.last_run)
      .run();
}

std::optional<CronDef> Tx::find_cron(const std::string& id) {
  Query q(stmt(
      "SELECT cron_id, colony_id, name, interval, cron_expr, workflow, "
      "next_deadline, last_run FROM crons WHERE cron_id = ?"));
  q.bind(id);
  if (!q.step()) return std::nullopt;
  return read_cron(q);
}

void Tx::update_cron(const CronDef& c) {
  Query q(stmt(
      "UPDATE crons SET next_deadline = ?, last_run = ? WHERE cron_id = ?"));
  q.bind(c.next_deadline).bind(c.last_run).bind(c.cron_id).run();
}

void Tx::delete_cron(const std::string& id) {
  Query q(stmt("DELETE FROM crons WHERE cron_id = ?"));
  q.bind(id).run();
}

std::vector<CronDef> Tx::list_crons(const std::string& colony_id) {
  Query q(stmt(
      "SELECT cron_id, colony_id, name, interval, cron_expr, workflow, "
      "next_deadline, last_run FROM crons WHERE colony_id = ? "
      "ORDER BY name, cron_id"));
  q.bind(colony_id);
  std::vector<CronDef> out;
  while (q.step()) out.push_back(read_cron(q));
  return out;
}

std::vector<std::string> Tx::due_crons(Nanos now) {
  Query q(stmt(
      "SELECT cron_id FROM crons WHERE next_deadline <= ? "
      "ORDER BY next_deadline, cron_id"));
  q.bind(now);
  std::vector<std::string> out;
  while (q.step()) out.push_back(q.text(0));
  return out;
}

void Tx::insert_generator(const GeneratorDef& g) {
  Query q(stmt(
      "INSERT INTO generators (generator_id, colony_id, name, workflow, "
      "trigger_count, timeout) VALUES (?, ?, ?, ?, ?, ?)"));
  q.bind(g.generator_id)
      .bind(g.colony_id)
      .bind(g.name)
      .bind(canonical(workflow_to_json(g.workflow)))
      .bind(g.trigger_count)
      .bind(g.timeout)
      .run();
}

std::optional<GeneratorDef> Tx::find_generator(const std::string& id) {
  Query q(stmt(
      "SELECT generator_id, colony_id, name, workflow, trigger_count, timeout "
      "FROM generators WHERE generator_id = ?"));
  q.bind(id);
  if (!q.step()) return std::nullopt;
  return read_generator(q);
}

void Tx::delete_generator(const std::string& id) {
  Query q(stmt("DELETE FROM generators WHERE generator_id = ?"));
  q.bind(id).run();
}

std::vector<GeneratorDef> Tx::list_generators(const std::string& colony_id) {
  Query q(stmt(
      "SELECT generator_id, colony_id, name, workflow, trigger_count, timeout "
      "FROM generators WHERE colony_id = ? ORDER BY name, generator_id"));
  q.bind(colony_id);
  std::vector<GeneratorDef> out;
  while (q.step()) out.push_back(read_generator(q));
  return out;
}

std::vector<std::string> Tx::all_generator_ids() {
  Query q(stmt("SELECT generator_id FROM generators ORDER BY generator_id"));
  std::vector<std::string> out;
  while (q.step()) out.push_back(q.text(0));
  return out;
}

std::int64_t Tx::insert_pack(const PackRow& pack) {
  Query q(stmt(
      "INSERT INTO packs (generator_id, payload, arrival, consumed, "
      "workflow_id) VALUES (?, ?, ?, 0, '')"));
  q.bind(pack.generator_id).bind(canonical(pack.payload)).bind(pack.arrival).run();
  return sqlite3_last_insert_rowid(store_.db_);
}

std::vector<PackRow> Tx::unconsumed_packs(const std::string& generator_id,
                                          std::int64_t limit) {
  Query q(stmt(
      "SELECT seq, generator_id, payload, arrival FROM packs "
      "WHERE generator_id = ? AND consumed = 0 ORDER BY seq LIMIT ?"));
  q.bind(generator_id).bind(limit);
  std::vector<PackRow> out;
  while (q.step()) {
    PackRow p;
    p.seq = q.integer(0);
    p.generator_id = q.text(1);
    p.payload = q.json(2);
    p.arrival = q.integer(3);
    out.push_back(std::move(p));
  }
  return out;
}

std::int64_t Tx::count_unconsumed(const std::string& generator_id) {
  Query q(stmt(
      "SELECT COUNT(*) FROM packs WHERE generator_id = ? AND consumed = 0"));
  q.bind(generator_id);
  q.step();
  return q.integer(0);
}

void Tx::mark_consumed(std::int64_t seq, const std::string& workflow_id) {
  Query q(stmt(
      "UPDATE packs SET consumed = 1, workflow_id = ? "
      "WHERE seq = ? AND consumed = 0"));
  q.bind(workflow_id).bind(seq).run();
  if (sqlite3_changes(store_.db_) != 1) {
    throw Error(Errc::kInvalidTransition,
                "pack " + std::to_string(seq) + " already consumed");
  }
}

void Tx::insert_file(const FileMeta& f) {
  Query q(stmt("INSERT INTO files (" FILE_COLUMNS
               ") VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)"));
  q.bind(f.file_id)
      .bind(f.colony_id)
      .bind(f.label)
      .bind(f.name)
      .bind(f.revision)
      .bind(f.checksum)
      .bind(f.size)
      .bind(f.storage.protocol)
      .bind(f.storage.server)
      .bind(f.storage.key)
      .bind(f.credentials_ref)
      .bind(f.added)
      .bind(f.tombstone)
      .run();
}

std::optional<FileMeta> Tx::find_file(const std::string& file_id) {
  Query q(stmt("SELECT " FILE_COLUMNS " FROM files WHERE file_id = ?"));
  q.bind(file_id);
  if (!q.step()) return std::nullopt;
  return read_file(q);
}

std::optional<FileMeta> Tx::latest_file(const std::string& colony_id,
                                        const std::string& label,
                                        const std::string& name) {
  Query q(stmt("SELECT " FILE_COLUMNS
               " FROM files WHERE colony_id = ? AND label = ? AND name = ? "
               "ORDER BY revision DESC LIMIT 1"));
  q.bind(colony_id).bind(label).bind(name);
  if (!q.step()) return std::nullopt;
  return read_file(q);
}

std::vector<FileMeta> Tx::file_revisions(const std::string& colony_id,
                                         const std::string& label,
                                         const std::string& name) {
  Query q(stmt("SELECT " FILE_COLUMNS
               " FROM files WHERE colony_id = ? AND label = ? AND name = ? "
               "ORDER BY revision"));
  q.bind(colony_id).bind(label).bind(name);
  std::vector<FileMeta> out;
  while (q.step()) out.push_back(read_file(q));
  return out;
}

std::vector<FileMeta> Tx::files_under(const std::string& colony_id,
                                      const std::string& label) {
  Query q(stmt("SELECT " FILE_COLUMNS
               " FROM files f WHERE colony_id = ? AND revision = "
               "(SELECT MAX(revision) FROM files g WHERE g.colony_id = "
               "f.colony_id AND g.label = f.label AND g.name = f.name) "
               "ORDER BY label, name"));
  q.bind(colony_id);
  std::vector<FileMeta> out;
  while (q.step()) {
    FileMeta f = read_file(q);
    if (!f.tombstone && label_below(f.label, label)) out.push_back(std::move(f));
  }
  return out;
}

std::vector<FileMeta> Tx::all_files() {
  Query q(stmt("SELECT " FILE_COLUMNS " FROM files ORDER BY file_id"));
  std::vector<FileMeta> out;
  while (q.step()) out.push_back(read_file(q));
  return out;
}

bool Tx::label_exists(const std::string& colony_id, const std::string& label) {
  for (const auto& l : list_labels(colony_id)) {
    if (label_below(l, label)) return true;
  }
  return false;
}

std::vector<std::string> Tx::list_labels(const std::string& colony_id) {
  Query q(stmt(
      "SELECT DISTINCT label FROM files WHERE colony_id = ? ORDER BY label"));
  q.bind(colony_id);
  std::vector<std::string> out;
  while (q.step()) out.push_back(q.text(0));
  return out;
}

void Tx::insert_snapshot(const Snapshot& s) {
  Query q(stmt(
      "INSERT INTO snapshots (snapshot_id, colony_id, label, created) "
      "VALUES (?, ?, ?, ?)"));
  q.bind(s.snapshot_id).bind(s.colony_id).bind(s.label).bind(s.created).run();
  std::int64_t pos = 0;
  for (const auto& e : s.files) {
    Query f(stmt(
        "INSERT INTO snapshot_files (snapshot_id, position, file_id, revision, "
        "label, name) VALUES (?, ?, ?, ?, ?, ?)"));
    f.bind(s.snapshot_id).bind(pos++).bind(e.file_id).bind(e.revision)
        .bind(e.label).bind(e.name).run();
  }
}

std::optional<Snapshot> Tx::find_snapshot(const std::string& id) {
  Query q(stmt(
      "SELECT snapshot_id, colony_id, label, created FROM snapshots "
      "WHERE snapshot_id = ?"));
  q.bind(id);
  if (!q.step()) return std::nullopt;
  Snapshot s;
  s.snapshot_id = q.text(0);
  s.colony_id = q.text(1);
  s.label = q.text(2);
  s.created = q.integer(3);
  Query f(stmt(
      "SELECT file_id, revision, label, name FROM snapshot_files "
      "WHERE snapshot_id = ? ORDER BY position"));
  f.bind(id);
  while (f.step()) {
    s.files.push_back({f.text(0), f.integer(1), f.text(2), f.text(3)});
  }
  return s;
}

void Tx::delete_snapshot(const std::string& id) {
  Query f(stmt("DELETE FROM snapshot_files WHERE snapshot_id = ?"));
  f.bind(id).run();
  Query q(stmt("DELETE FROM snapshots WHERE snapshot_id = ?"));
  q.bind(id).run();
}

std::vector<Snapshot> Tx::list_snapshots(const std::string& colony_id) {
  std::vector<std::string> ids;
  {
    Query q(stmt(
        "SELECT snapshot_id FROM snapshots WHERE colony_id = ? "
        "ORDER BY created, snapshot_id"));
    q.bind(colony_id);
    while (q.step()) ids.push_back(q.text(0));
  }
  std::vector<Snapshot> out;
  for (const auto& id : ids) out.push_back(*find_snapshot(id));
  return out;
}

std::int64_t Tx::append_audit(const AuditEvent& e) {
  Query q(stmt(
      "INSERT INTO audit (time, process_id, action, state, executor_id, term, "
      "reason, retries) VALUES (?, ?, ?, ?, ?, ?, ?, ?)"));
  q.bind(e.time)
      .bind(e.process_id)
      .bind(e.action)
      .bind(state_code(e.state))
      .bind(e.executor_id)
      .bind(e.term)
      .bind(e.reason)
      .bind(e.retries)
      .run();
  return sqlite3_last_insert_rowid(store_.db_);
}

std::vector<AuditEvent> Tx::audit_for_process(const std::string& process_id,
                                              std::int64_t after_seq) {
  Query q(stmt("SELECT " AUDIT_COLUMNS
               " FROM audit WHERE process_id = ? AND seq > ? ORDER BY seq"));
  q.bind(process_id).bind(after_seq);
  std::vector<AuditEvent> out;
  while (q.step()) out.push_back(read_audit(q));
  return out;
}

std::vector<AuditEvent> Tx::audit_since(std::int64_t after_seq,
                                        std::int64_t limit) {
  Query q(stmt("SELECT " AUDIT_COLUMNS
               " FROM audit WHERE seq > ? ORDER BY seq LIMIT ?"));
  q.bind(after_seq).bind(limit);
  std::vector<AuditEvent> out;
  while (q.step()) out.push_back(read_audit(q));
  return out;
}

void Tx::fence(std::int64_t term) {
  std::int64_t highest = fenced_term();
  if (term < highest) throw StaleTermError(term, highest);
  if (term > highest) {
    Query q(stmt("UPDATE fence SET term = ? WHERE id = 1"));
    q.bind(term).run();
  }
}

std::int64_t Tx::fenced_term() {
  Query q(stmt("SELECT term FROM fence WHERE id = 1"));
  if (!q.step()) return 0;
  return q.integer(0);
}

}  // namespace colonies::store
