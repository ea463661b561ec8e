#pragma once

#include <cstdint>

#include "colonies/core/clock.hpp"

namespace colonies {

// One day of nanoseconds per priority level.
inline constexpr Nanos kPriorityStep = 86'400LL * kNanosPerSecond;

// submission_time - priority * 86 400 * 10^9, clamped at 0. Queue order is
// ascending priority time. Throws Error(kInvalidArgument) when
// submission_time <= 0 or priority < 0.
Nanos compute_priority_time(Nanos submission_time, std::int64_t priority);

}  // namespace colonies
