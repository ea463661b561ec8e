#pragma once

// Deterministic multi-replica simulation: replicas are in-process nodes on a
// seeded message bus, time is virtual, and faults follow a script of
// {at_ms, action, target} entries. Every replica has its own connection to
// one shared database file.

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "colonies/cluster/duties.hpp"
#include "colonies/cluster/node.hpp"
#include "colonies/store/store.hpp"

namespace colonies::cluster {

struct SimOptions {
  int replicas = 3;
  std::uint64_t seed = 1;
  std::filesystem::path db;  // required
  Timing timing;
  Nanos scan_interval = millis(250);
  Nanos start_time = seconds(1'700'000'000);
  Nanos min_delay = millis(1);
  Nanos max_delay = millis(5);
  Nanos poll_interval = millis(20);  // simulated executor claim attempts
};

struct TraceEvent {
  Nanos at = 0;
  std::string node;
  std::string kind;
  std::int64_t term = 0;
  std::string detail;
};

Json to_json(const TraceEvent& e);

struct Fault {
  Nanos at_ms = 0;
  std::string action;  // kill restart partition heal partition_store heal_store kill_executor
  std::string target;  // replica name, "leader", or executor name
};

// Throws Error(kInvalidArgument) on malformed scripts.
std::vector<Fault> parse_scenario(const Json& j);

class SimHarness {
 public:
  explicit SimHarness(SimOptions options);
  ~SimHarness();

  VirtualClock& clock() { return clock_; }
  IdSource& ids() { return ids_; }
  // Separate connection for setup and inspection; never partitioned.
  store::Store& admin() { return *admin_; }
  std::string replica_name(int i) const;

  void schedule(std::vector<Fault> faults);
  void run_for(Nanos duration);
  // Runs until `done` holds or `limit` elapses; returns whether it held.
  bool run_until(const std::function<bool()>& done, Nanos limit);

  // Executors claim through whichever replica they reach, which routes to
  // the leader it believes in. `fn` computes the output of a process.
  using Function = std::function<Json(const Process&)>;
  void add_executor(const ExecutorRecord& record, Nanos exec_time, Function fn);
  void kill_executor(const std::string& name);

  std::optional<std::string> leader() const;
  const std::vector<TraceEvent>& trace() const { return trace_; }
  // At most one leader per term over the whole trace.
  bool election_safe() const;
  // Claims in audit order never go back to an older term.
  bool claims_fenced() const;
  std::size_t count(const std::string& kind) const;

 private:
  struct Replica;
  struct Executor;
  struct Pending {
    Nanos at;
    std::uint64_t order;
    Message msg;
  };

  void step();
  void apply(const Fault& f);
  void deliver_due();
  void tick_replicas();
  void run_duties();
  void run_executors();
  void post(const std::vector<Message>& out, const std::string& from);
  void note_role(Replica& r);
  void record(const std::string& node, const std::string& kind,
              std::int64_t term, const std::string& detail = {});
  Replica* find(const std::string& name);
  Replica* route(std::mt19937_64& rng);
  void boot(Replica& r);

  SimOptions options_;
  VirtualClock clock_;
  SeededIdSource ids_;
  std::mt19937_64 rng_;
  std::unique_ptr<store::Store> admin_;
  std::vector<std::unique_ptr<Replica>> replicas_;
  std::vector<std::unique_ptr<Executor>> executors_;
  std::vector<Pending> bus_;
  std::uint64_t order_ = 0;
  std::vector<Fault> faults_;
  std::vector<TraceEvent> trace_;
};

// Runs a fault script against a fresh harness for `duration` and returns
// the trace.
Json harness_run(const Json& scenario, SimOptions options, Nanos duration);

}  // namespace colonies::cluster
