#pragma once

// Cron and generator triggers. Definitions live in the store; the scans run
// on the leader and keep nothing in memory between ticks.

#include <string>
#include <vector>

#include "colonies/assign/wakeup.hpp"
#include "colonies/core/ids.hpp"
#include "colonies/store/store.hpp"

namespace colonies::triggers {

inline constexpr std::size_t kMaxPackBytes = 1 << 20;

// Next deadline after `now`. Interval crons stay on the grid anchored at
// `previous` (the missed ticks collapse into one firing).
Nanos next_deadline(const CronDef& c, Nanos previous, Nanos now);

// Validates schedule and template; sets id and next_deadline.
CronDef add_cron(store::Tx& tx, CronDef def, IdSource& ids, Nanos now);

// Submits the workflow of every due cron, one fenced transaction per cron.
// Returns the submitted workflow ids.
std::vector<std::string> cron_scan(store::Store& store, Nanos now,
                                   std::int64_t term, IdSource& ids,
                                   assign::WakeupHub* hub = nullptr);

GeneratorDef add_generator(store::Tx& tx, GeneratorDef def, IdSource& ids);

// Appends a pack and touches nothing else. Throws kUnknownGenerator,
// kPayloadTooLarge.
std::int64_t pack(store::Tx& tx, const std::string& generator_id,
                  const Json& payload, Nanos now);

// Fires a workflow per full batch of trigger_count packs (oldest first); the
// packs are consumed in the submitting transaction. With a timeout, a
// partial batch fires after that many seconds without a new pack.
std::vector<std::string> generator_scan(store::Store& store, Nanos now,
                                        std::int64_t term, IdSource& ids,
                                        assign::WakeupHub* hub = nullptr);

// Wakes assigners for the roots of a freshly submitted workflow.
void wake_roots(store::Store& store, const std::vector<std::string>& workflow_ids,
                assign::WakeupHub* hub);

}  // namespace colonies::triggers
