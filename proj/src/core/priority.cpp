#include "colonies/core/priority.hpp"

#include "colonies/core/error.hpp"

namespace colonies {

Nanos compute_priority_time(Nanos submission_time, std::int64_t priority) {
  if (submission_time <= 0) {
    throw Error(Errc::kInvalidArgument, "submission time must be positive");
  }
  if (priority < 0) {
    throw Error(Errc::kInvalidArgument, "priority must be non-negative");
  }
  // Saturate instead of overflowing for pathological priorities.
  if (priority >= submission_time / kPriorityStep + 1) return 0;
  Nanos shifted = submission_time - priority * kPriorityStep;
  return shifted < 0 ? 0 : shifted;
}

}  // namespace colonies
