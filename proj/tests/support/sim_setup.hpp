#pragma once

// Helpers for seeding a simulated cluster's shared store and checking its
// audit trail.

#include <limits>
#include <map>
#include <string>

#include "colonies/cluster/sim.hpp"
#include "colonies/store/queue.hpp"
#include "generators.hpp"

namespace simsetup {

using namespace colonies;

inline const std::string kColony(64, 'c');

inline void colony(cluster::SimHarness& h) {
  h.admin().write([](store::Tx& tx) { tx.insert_colony({kColony, "sim"}); });
}

inline ExecutorRecord executor(cluster::SimHarness& h, const std::string& name,
                               const std::string& type = "t") {
  ExecutorRecord e;
  e.executor_id = h.ids().next();
  e.executor_name = name;
  e.executor_type = type;
  e.colony_id = kColony;
  e.approved = true;
  h.admin().write([&](store::Tx& tx) { tx.insert_executor(e); });
  return e;
}

inline std::string submit(cluster::SimHarness& h, FunctionSpec s) {
  s.conditions.colony_id = kColony;
  Nanos now = h.clock().now();
  Process p = store::make_process(s, h.ids().next(), now, false);
  h.admin().write([&](store::Tx& tx) { store::insert_process(tx, p, now); });
  return p.process_id;
}

inline std::vector<store::AuditEvent> audit(store::Store& s) {
  return s.read([](store::Tx& tx) {
    return tx.audit_since(0, std::numeric_limits<std::int64_t>::max());
  });
}

// A claim while the process is already running is a double assignment.
// Resets, closes and failures end a running stint.
inline int double_claims(store::Store& s) {
  std::map<std::string, bool> running;
  int bad = 0;
  for (const auto& e : audit(s)) {
    if (e.action == "claim") {
      if (running[e.process_id]) ++bad;
      running[e.process_id] = true;
    } else if (e.state != ProcessState::kRunning) {
      running[e.process_id] = false;
    }
  }
  return bad;
}

inline std::int64_t count_state(store::Store& s, ProcessState st) {
  auto c = s.read([](store::Tx& tx) { return tx.count_states(kColony); });
  switch (st) {
    case ProcessState::kWaiting:
      return c.waiting;
    case ProcessState::kRunning:
      return c.running;
    case ProcessState::kSuccessful:
      return c.successful;
    default:
      return c.failed;
  }
}

}  // namespace simsetup
