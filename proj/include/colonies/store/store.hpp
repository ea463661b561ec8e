#pragma once

// Transactional persistent store: the process queue, workflow tables, colony
// and executor registry, trigger tables, CFS catalog and audit trail. Servers
// keep no state between requests; everything lives here.
//
// Each Store owns one SQLite connection. Several Store objects (one per
// server replica) may open the same database file; writers serialize through
// BEGIN IMMEDIATE.

#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "colonies/core/error.hpp"
#include "colonies/core/model.hpp"

struct sqlite3;
struct sqlite3_stmt;

namespace colonies::store {

struct StoreOptions {
  std::string path = ":memory:";
  // FULL fsyncs every commit; NORMAL survives process crashes but not power
  // loss.
  bool synchronous_full = true;
  int busy_timeout_ms = 30'000;
};

// Thrown when a claim or scan carries an election term older than the
// highest term the store has seen.
class StaleTermError : public Error {
 public:
  StaleTermError(std::int64_t offered, std::int64_t highest)
      : Error(Errc::kStaleTerm, "term " + std::to_string(offered) +
                                    " is older than fenced term " +
                                    std::to_string(highest)),
        highest_(highest) {}
  std::int64_t highest() const noexcept { return highest_; }

 private:
  std::int64_t highest_;
};

struct AuditEvent {
  std::int64_t seq = 0;
  Nanos time = 0;
  std::string process_id;
  std::string action;  // submit, claim, reset, close, fail, release, ...
  ProcessState state = ProcessState::kWaiting;
  std::string executor_id;
  std::int64_t term = 0;
  std::string reason;
  int retries = 0;
};

Json to_json(const AuditEvent& e);

struct ClaimCandidate {
  std::string process_id;
  std::string func_name;
  std::vector<std::string> executor_names;
};

struct StateCounts {
  std::int64_t waiting = 0;
  std::int64_t running = 0;
  std::int64_t successful = 0;
  std::int64_t failed = 0;
};

struct DependencyRow {
  std::string process_id;
  std::string workflow_id;
  std::string node_name;
  std::vector<std::string> dependencies;
};

struct WorkflowRow {
  std::string workflow_id;
  std::string colony_id;
  Nanos submission_time = 0;
  std::string source;
};

class Store;

// Row-level access inside one transaction. Only valid inside Store::write or
// Store::read callbacks.
class Tx {
 public:
  // Processes and their io rows.
  void insert_process(const Process& p);
  std::optional<Process> find_process(const std::string& id);
  Process get_process(const std::string& id);
  void update_process(const Process& p);
  std::vector<Process> list_processes(const std::string& colony_id,
                                      std::optional<ProcessState> state,
                                      std::int64_t limit);
  // WAITING, ungated processes of one colony and type, by priority time.
  std::vector<ClaimCandidate> claim_candidates(const std::string& colony_id,
                                               const std::string& executor_type,
                                               std::int64_t limit,
                                               std::int64_t offset);
  std::vector<std::string> expired_running(Nanos now);
  std::vector<std::string> expired_waiting(Nanos now);
  StateCounts count_states(const std::string& colony_id);

  // Workflows and dependency rows.
  void insert_workflow(const WorkflowRow& w);
  std::optional<WorkflowRow> find_workflow(const std::string& id);
  std::vector<std::string> workflow_processes(const std::string& workflow_id);
  void insert_dependency(const DependencyRow& row);
  std::optional<DependencyRow> find_dependency(const std::string& process_id);
  void update_dependency(const DependencyRow& row);

  // Colonies and executors.
  void insert_colony(const Colony& c);
  std::optional<Colony> find_colony(const std::string& id);
  void delete_colony(const std::string& id);
  std::vector<Colony> list_colonies();
  void insert_executor(const ExecutorRecord& e);
  std::optional<ExecutorRecord> find_executor(const std::string& id);
  void update_executor(const ExecutorRecord& e);
  void delete_executor(const std::string& id);
  std::vector<ExecutorRecord> list_executors(const std::string& colony_id);

  // Triggers.
  void insert_cron(const CronDef& c);
  std::optional<CronDef> find_cron(const std::string& id);
  void update_cron(const CronDef& c);
  void delete_cron(const std::string& id);
  std::vector<CronDef> list_crons(const std::string& colony_id);
  std::vector<std::string> due_crons(Nanos now);
  void insert_generator(const GeneratorDef& g);
  std::optional<GeneratorDef> find_generator(const std::string& id);
  void delete_generator(const std::string& id);
  std::vector<GeneratorDef> list_generators(const std::string& colony_id);
  std::vector<std::string> all_generator_ids();
  std::int64_t insert_pack(const PackRow& pack);
  std::vector<PackRow> unconsumed_packs(const std::string& generator_id,
                                        std::int64_t limit);
  std::int64_t count_unconsumed(const std::string& generator_id);
  void mark_consumed(std::int64_t seq, const std::string& workflow_id);

  // CFS catalog. File and snapshot rows are insert-only.
  void insert_file(const FileMeta& f);
  std::optional<FileMeta> find_file(const std::string& file_id);
  std::optional<FileMeta> latest_file(const std::string& colony_id,
                                      const std::string& label,
                                      const std::string& name);
  std::vector<FileMeta> file_revisions(const std::string& colony_id,
                                       const std::string& label,
                                       const std::string& name);
  // Latest non-tombstoned revision of every file at or below `label`.
  std::vector<FileMeta> files_under(const std::string& colony_id,
                                    const std::string& label);
  std::vector<FileMeta> all_files();
  bool label_exists(const std::string& colony_id, const std::string& label);
  std::vector<std::string> list_labels(const std::string& colony_id);
  void insert_snapshot(const Snapshot& s);
  std::optional<Snapshot> find_snapshot(const std::string& id);
  void delete_snapshot(const std::string& id);
  std::vector<Snapshot> list_snapshots(const std::string& colony_id);

  // Audit trail.
  std::int64_t append_audit(const AuditEvent& e);
  std::vector<AuditEvent> audit_for_process(const std::string& process_id,
                                            std::int64_t after_seq);
  std::vector<AuditEvent> audit_since(std::int64_t after_seq,
                                      std::int64_t limit);

  // Election-term fencing. Throws StaleTermError if term is older than the
  // highest term recorded; otherwise records max(highest, term).
  void fence(std::int64_t term);
  std::int64_t fenced_term();

  // Raw statement execution for tests and migrations.
  void exec(const std::string& sql);

 private:
  friend class Store;
  explicit Tx(Store& store) : store_(store) {}
  sqlite3_stmt* stmt(const char* sql);
  Store& store_;
};

class Store {
 public:
  explicit Store(StoreOptions options = {});
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  // Runs f inside BEGIN IMMEDIATE ... COMMIT. Any exception rolls back and
  // propagates.
  template <class F>
  auto write(F&& f) {
    std::lock_guard lock(mu_);
    begin(true);
    Tx tx(*this);
    try {
      if constexpr (std::is_void_v<decltype(f(tx))>) {
        f(tx);
        commit();
      } else {
        auto result = f(tx);
        commit();
        return result;
      }
    } catch (...) {
      rollback();
      throw;
    }
  }

  template <class F>
  auto read(F&& f) {
    std::lock_guard lock(mu_);
    begin(false);
    Tx tx(*this);
    try {
      if constexpr (std::is_void_v<decltype(f(tx))>) {
        f(tx);
        commit();
      } else {
        auto result = f(tx);
        commit();
        return result;
      }
    } catch (...) {
      rollback();
      throw;
    }
  }

  // When false every transaction fails with kStorageFailure (partition
  // simulation for the cluster harness).
  void set_available(bool available) { available_.store(available); }
  bool available() const { return available_.load(); }

  // Deterministic JSON export of every table, rows ordered by primary key.
  Json dump();
  // Imports a dump into an empty store.
  void load(const Json& dump);

  int schema_version();
  const StoreOptions& options() const { return options_; }

 private:
  friend class Tx;
  void begin(bool write);
  void commit();
  void rollback();
  void migrate();
  sqlite3_stmt* cached(const char* sql);

  StoreOptions options_;
  sqlite3* db_ = nullptr;
  std::mutex mu_;
  std::atomic<bool> available_{true};
  std::unordered_map<const char*, sqlite3_stmt*> cache_;
};

}  // namespace colonies::store
