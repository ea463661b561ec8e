#pragma once

// Work only the leader does: the failsafe reaper and the trigger scans.

#include "colonies/api/leadership.hpp"
#include "colonies/assign/wakeup.hpp"
#include "colonies/core/ids.hpp"
#include "colonies/lifecycle/reaper.hpp"
#include "colonies/store/store.hpp"

namespace colonies::cluster {

struct DutyReport {
  bool ran = false;
  lifecycle::ReapReport reaped;
  std::vector<std::string> cron_workflows;
  std::vector<std::string> generator_workflows;
};

class LeaderDuties {
 public:
  LeaderDuties(store::Store& store, const Clock& clock, IdSource& ids,
               api::Leadership& leadership, assign::WakeupHub* hub = nullptr);

  // One scan round. Followers only probe store health. A fenced (stale)
  // term or an unreachable store makes the leader stand down.
  DutyReport run_once();

 private:
  store::Store& store_;
  const Clock& clock_;
  IdSource& ids_;
  api::Leadership& leadership_;
  assign::WakeupHub* hub_;
  std::int64_t fenced_ = -1;
};

}  // namespace colonies::cluster
