#include "colonies/cluster/sim.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "colonies/store/queue.hpp"
#include "colonies/workflow/workflow.hpp"

namespace colonies::cluster {

Json to_json(const TraceEvent& e) {
  return {{"at", e.at}, {"node", e.node}, {"kind", e.kind}, {"term", e.term},
          {"detail", e.detail}};
}

std::vector<Fault> parse_scenario(const Json& j) {
  static const std::set<std::string> actions = {
      "kill", "restart", "partition", "heal", "partition_store", "heal_store",
      "kill_executor"};
  if (!j.is_array()) throw Error(Errc::kInvalidArgument, "scenario must be a JSON array");
  std::vector<Fault> out;
  for (const auto& item : j) {
    if (!item.is_object() || !item.contains("at_ms") || !item["at_ms"].is_number_integer() ||
        !item.contains("action") || !item["action"].is_string() ||
        !item.contains("target") || !item["target"].is_string()) {
      throw Error(Errc::kInvalidArgument,
                  "scenario entries need integer at_ms and string action, target");
    }
    Fault f{item["at_ms"].get<Nanos>(), item["action"].get<std::string>(),
            item["target"].get<std::string>()};
    if (f.at_ms < 0) throw Error(Errc::kInvalidArgument, "at_ms must be >= 0");
    if (actions.count(f.action) == 0) {
      throw Error(Errc::kInvalidArgument, "unknown scenario action " + f.action);
    }
    out.push_back(std::move(f));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Fault& a, const Fault& b) { return a.at_ms < b.at_ms; });
  return out;
}

struct SimHarness::Replica final : api::Leadership {
  SimHarness& h;
  std::string name;
  std::vector<std::string> peers;
  std::uint64_t seed;
  Durable disk;
  std::unique_ptr<store::Store> store;
  std::unique_ptr<Node> node;
  std::unique_ptr<LeaderDuties> duties;
  bool alive = false;
  bool isolated = false;
  bool store_cut = false;
  Role last_role = Role::kFollower;
  Nanos next_scan = 0;

  Replica(SimHarness& harness, std::string n, std::vector<std::string> p,
          std::uint64_t s)
      : h(harness), name(std::move(n)), peers(std::move(p)), seed(s) {}

  bool is_leader() const override { return node && node->role() == Role::kLeader; }
  std::int64_t term() const override { return node ? node->term() : 0; }
  std::optional<std::string> leader_url() const override {
    return node ? node->leader() : std::nullopt;
  }
  void stale_term(std::int64_t highest) override {
    if (!node) return;
    node->observe_term(highest, h.clock_.now());
    disk = node->durable();
    h.note_role(*this);
  }
  void store_health(bool healthy) override {
    if (!node) return;
    node->set_store_healthy(healthy, h.clock_.now());
    h.note_role(*this);
  }
  Json status() const override {
    return {{"name", name},
            {"role", std::string(role_name(node ? node->role() : Role::kFollower))},
            {"term", term()}};
  }
};

struct SimHarness::Executor {
  ExecutorRecord record;
  Nanos exec_time;
  Function fn;
  bool alive = true;
  std::optional<Process> current;
  Nanos done_at = 0;
  Nanos next_poll = 0;
  std::mt19937_64 rng;
};

SimHarness::SimHarness(SimOptions options)
    : options_(std::move(options)),
      clock_(options_.start_time),
      ids_(options_.seed),
      rng_(options_.seed * 7919 + 1) {
  if (options_.db.empty()) throw Error(Errc::kInvalidArgument, "sim needs a db path");
  if (options_.replicas < 1) throw Error(Errc::kInvalidArgument, "need >= 1 replica");
  store::StoreOptions so;
  so.path = options_.db.string();
  so.synchronous_full = false;
  admin_ = std::make_unique<store::Store>(so);
  std::vector<std::string> names;
  for (int i = 0; i < options_.replicas; ++i) names.push_back(replica_name(i));
  for (int i = 0; i < options_.replicas; ++i) {
    std::vector<std::string> peers;
    for (const auto& n : names) {
      if (n != names[static_cast<std::size_t>(i)]) peers.push_back(n);
    }
    replicas_.push_back(std::make_unique<Replica>(
        *this, names[static_cast<std::size_t>(i)], peers,
        options_.seed * 1000 + static_cast<std::uint64_t>(i)));
    boot(*replicas_.back());
  }
}

SimHarness::~SimHarness() = default;

std::string SimHarness::replica_name(int i) const { return "r" + std::to_string(i); }

void SimHarness::boot(Replica& r) {
  store::StoreOptions so;
  so.path = options_.db.string();
  so.synchronous_full = false;
  r.store = std::make_unique<store::Store>(so);
  r.seed += 101;
  r.node = std::make_unique<Node>(r.name, r.peers, options_.timing, r.seed, r.disk);
  r.duties = std::make_unique<LeaderDuties>(*r.store, clock_, ids_, r);
  r.alive = true;
  r.store_cut = false;
  r.last_role = Role::kFollower;
  r.next_scan = clock_.now();
}

void SimHarness::schedule(std::vector<Fault> faults) {
  faults_.insert(faults_.end(), faults.begin(), faults.end());
  std::stable_sort(faults_.begin(), faults_.end(),
                   [](const Fault& a, const Fault& b) { return a.at_ms < b.at_ms; });
}

SimHarness::Replica* SimHarness::find(const std::string& name) {
  for (auto& r : replicas_) {
    if (r->name == name) return r.get();
  }
  return nullptr;
}

std::optional<std::string> SimHarness::leader() const {
  std::optional<std::string> out;
  std::int64_t best = -1;
  for (const auto& r : replicas_) {
    if (r->alive && r->is_leader() && r->term() > best) {
      best = r->term();
      out = r->name;
    }
  }
  return out;
}

void SimHarness::record(const std::string& node, const std::string& kind,
                        std::int64_t term, const std::string& detail) {
  trace_.push_back({clock_.now(), node, kind, term, detail});
}

void SimHarness::note_role(Replica& r) {
  if (!r.node) return;
  Role now = r.node->role();
  if (now == r.last_role) return;
  if (now == Role::kLeader) record(r.name, "leader", r.node->term());
  if (r.last_role == Role::kLeader) record(r.name, "stepdown", r.node->term());
  r.last_role = now;
}

void SimHarness::apply(const Fault& f) {
  if (f.action == "kill_executor") {
    kill_executor(f.target);
    return;
  }
  std::string target = f.target;
  if (target == "leader") {
    auto l = leader();
    if (!l) {
      record("harness", "fault-skipped", 0, f.action + " leader: no leader");
      return;
    }
    target = *l;
  }
  Replica* r = find(target);
  if (r == nullptr) throw Error(Errc::kInvalidArgument, "unknown replica " + target);
  record(r->name, f.action, r->term());
  if (f.action == "kill") {
    if (!r->alive) return;
    if (r->last_role == Role::kLeader) record(r->name, "stepdown", r->term());
    r->alive = false;
    r->duties.reset();
    r->node.reset();
    r->store.reset();
    r->last_role = Role::kFollower;
  } else if (f.action == "restart") {
    if (!r->alive) boot(*r);
  } else if (f.action == "partition") {
    r->isolated = true;
  } else if (f.action == "heal") {
    r->isolated = false;
  } else if (f.action == "partition_store") {
    r->store_cut = true;
    if (r->store) r->store->set_available(false);
  } else if (f.action == "heal_store") {
    r->store_cut = false;
    if (r->store) r->store->set_available(true);
  }
}

void SimHarness::post(const std::vector<Message>& out, const std::string& from) {
  std::uniform_int_distribution<Nanos> delay(options_.min_delay, options_.max_delay);
  for (const auto& m : out) {
    bus_.push_back({clock_.now() + delay(rng_), order_++, m});
  }
  (void)from;
}

void SimHarness::deliver_due() {
  Nanos now = clock_.now();
  std::vector<Pending> due;
  auto split = std::stable_partition(bus_.begin(), bus_.end(),
                                     [&](const Pending& p) { return p.at > now; });
  due.assign(std::make_move_iterator(split), std::make_move_iterator(bus_.end()));
  bus_.erase(split, bus_.end());
  std::sort(due.begin(), due.end(), [](const Pending& a, const Pending& b) {
    return a.at != b.at ? a.at < b.at : a.order < b.order;
  });
  for (const auto& p : due) {
    Replica* src = find(p.msg.from);
    Replica* dst = find(p.msg.to);
    if (dst == nullptr || !dst->alive || dst->isolated) continue;
    if (src == nullptr || src->isolated) continue;
    auto out = dst->node->receive(p.msg, now);
    dst->disk = dst->node->durable();
    note_role(*dst);
    post(out, dst->name);
  }
}

void SimHarness::tick_replicas() {
  for (auto& r : replicas_) {
    if (!r->alive) continue;
    auto out = r->node->tick(clock_.now());
    r->disk = r->node->durable();
    note_role(*r);
    post(out, r->name);
  }
}

void SimHarness::run_duties() {
  for (auto& r : replicas_) {
    if (!r->alive || clock_.now() < r->next_scan) continue;
    r->next_scan = clock_.now() + options_.scan_interval;
    auto report = r->duties->run_once();
    r->disk = r->node->durable();
    note_role(*r);
    for (const auto& wf : report.cron_workflows) record(r->name, "cron", r->term(), wf);
    for (const auto& wf : report.generator_workflows) {
      record(r->name, "generator", r->term(), wf);
    }
    for (const auto& id : report.reaped.reset) record(r->name, "reset", r->term(), id);
    for (const auto& id : report.reaped.failed) record(r->name, "reap-fail", r->term(), id);
  }
}

SimHarness::Replica* SimHarness::route(std::mt19937_64& rng) {
  std::vector<Replica*> live;
  for (auto& r : replicas_) {
    if (r->alive) live.push_back(r.get());
  }
  if (live.empty()) return nullptr;
  std::uniform_int_distribution<std::size_t> pick(0, live.size() - 1);
  return live[pick(rng)];
}

void SimHarness::run_executors() {
  Nanos now = clock_.now();
  for (auto& e : executors_) {
    if (!e->alive) continue;
    if (e->current) {
      if (now < e->done_at) continue;
      Replica* r = route(e->rng);
      if (r == nullptr) continue;
      try {
        Json out = e->fn(*e->current);
        r->store->write([&](store::Tx& tx) {
          Process p = store::close_process(tx, e->current->process_id,
                                           e->record.executor_id, true, out, {}, now);
          workflow::after_transition(tx, p, now, 0);
        });
        record(r->name, "close", 0, e->current->process_id);
        e->current.reset();
      } catch (const Error& err) {
        if (err.code() == Errc::kStorageFailure) continue;
        record(r->name, "close-rejected", 0,
               e->current->process_id + ": " + std::string(errc_name(err.code())));
        e->current.reset();
      }
      continue;
    }
    if (now < e->next_poll) continue;
    e->next_poll = now + options_.poll_interval;
    Replica* r = route(e->rng);
    if (r == nullptr) continue;
    Replica* l = r;
    if (!r->is_leader()) {
      auto name = r->node->leader();
      if (!name) continue;
      l = find(*name);
      // Forwarding crosses the replica network.
      if (l == nullptr || !l->alive || r->isolated || l->isolated) continue;
    }
    std::int64_t term = l->term();
    try {
      auto p = l->store->write([&](store::Tx& tx) {
        return store::select_and_claim(tx, e->record, now, term);
      });
      if (p) {
        record(l->name, "claim", term, p->process_id);
        e->current = std::move(p);
        e->done_at = now + e->exec_time;
      }
    } catch (const store::StaleTermError& err) {
      record(l->name, "stale", term, err.what());
      l->stale_term(err.highest());
    } catch (const Error& err) {
      if (err.code() != Errc::kStorageFailure) throw;
    }
  }
}

void SimHarness::add_executor(const ExecutorRecord& record, Nanos exec_time,
                              Function fn) {
  auto e = std::make_unique<Executor>();
  e->record = record;
  e->exec_time = exec_time;
  e->fn = std::move(fn);
  e->rng.seed(options_.seed ^ std::hash<std::string>{}(record.executor_name));
  executors_.push_back(std::move(e));
}

void SimHarness::kill_executor(const std::string& name) {
  for (auto& e : executors_) {
    if (e->record.executor_name == name && e->alive) {
      e->alive = false;
      record("harness", "kill_executor", 0, name);
      return;
    }
  }
  throw Error(Errc::kUnknownExecutor, "no executor named " + name);
}

void SimHarness::step() {
  clock_.advance(millis(1));
  Nanos elapsed_ms = (clock_.now() - options_.start_time) / kNanosPerMilli;
  while (!faults_.empty() && faults_.front().at_ms <= elapsed_ms) {
    Fault f = faults_.front();
    faults_.erase(faults_.begin());
    apply(f);
  }
  deliver_due();
  tick_replicas();
  run_duties();
  run_executors();
}

void SimHarness::run_for(Nanos duration) {
  Nanos until = clock_.now() + duration;
  while (clock_.now() < until) step();
}

bool SimHarness::run_until(const std::function<bool()>& done, Nanos limit) {
  Nanos until = clock_.now() + limit;
  while (clock_.now() < until) {
    if (done()) return true;
    step();
  }
  return done();
}

bool SimHarness::election_safe() const {
  std::map<std::int64_t, std::set<std::string>> leaders;
  for (const auto& e : trace_) {
    if (e.kind == "leader") leaders[e.term].insert(e.node);
  }
  for (const auto& [term, names] : leaders) {
    if (names.size() > 1) return false;
  }
  return true;
}

bool SimHarness::claims_fenced() const {
  auto events = admin_->read([](store::Tx& tx) {
    return tx.audit_since(0, std::numeric_limits<std::int64_t>::max());
  });
  std::int64_t highest = 0;
  for (const auto& e : events) {
    if (e.action != "claim") continue;
    if (e.term < highest) return false;
    highest = e.term;
  }
  return true;
}

std::size_t SimHarness::count(const std::string& kind) const {
  return static_cast<std::size_t>(std::count_if(
      trace_.begin(), trace_.end(), [&](const TraceEvent& e) { return e.kind == kind; }));
}

Json harness_run(const Json& scenario, SimOptions options, Nanos duration) {
  auto faults = parse_scenario(scenario);
  SimHarness h(std::move(options));
  h.schedule(std::move(faults));
  h.run_for(duration);
  Json trace = Json::array();
  for (const auto& e : h.trace()) trace.push_back(to_json(e));
  return {{"trace", trace},
          {"electionsafe", h.election_safe()},
          {"claimsfenced", h.claims_fenced()}};
}

}  // namespace colonies::cluster
