#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>

namespace colonies {

// Nanoseconds since the Unix epoch. Every persisted timestamp uses this unit.
using Nanos = std::int64_t;

inline constexpr Nanos kNanosPerSecond = 1'000'000'000;
inline constexpr Nanos kNanosPerMilli = 1'000'000;

constexpr Nanos seconds(std::int64_t s) { return s * kNanosPerSecond; }
constexpr Nanos millis(std::int64_t ms) { return ms * kNanosPerMilli; }

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Nanos now() const = 0;
};

class SystemClock final : public Clock {
 public:
  Nanos now() const override {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  }
};

// Test clock; only moves when told to.
class VirtualClock final : public Clock {
 public:
  explicit VirtualClock(Nanos start) : now_(start) {}

  Nanos now() const override { return now_.load(); }
  void set(Nanos t) { now_.store(t); }
  void advance(Nanos delta) { now_.fetch_add(delta); }

 private:
  std::atomic<Nanos> now_;
};

}  // namespace colonies
