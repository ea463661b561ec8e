#pragma once

// Long-poll assignment. A request hangs until a matching process can be
// claimed or its timer runs out; nothing is ever pushed to an executor.

#include <atomic>
#include <chrono>
#include <functional>
#include <optional>

#include "colonies/assign/wakeup.hpp"
#include "colonies/core/clock.hpp"
#include "colonies/store/store.hpp"

namespace colonies::assign {

struct AssignOptions {
  Nanos max_timeout = seconds(600);
  std::size_t max_waiters = 10'000;
  // Re-scan period covering wakeups from other replicas.
  std::chrono::milliseconds rescan{500};
};

class Assigner {
 public:
  // `term` yields the election term claims are fenced with.
  Assigner(store::Store& store, const Clock& clock, WakeupHub& hub,
           std::function<std::int64_t()> term, AssignOptions options = {});

  // Throws kInvalidTimeout for timeout <= 0 and kTooManyWaiters when the
  // hanging-request cap is reached. Timeouts above the maximum are clamped.
  // Returns nullopt when the timer expires or `cancel` becomes true.
  std::optional<Process> assign(const ExecutorRecord& executor, Nanos timeout,
                                const std::atomic<bool>* cancel = nullptr);

  std::size_t waiting() const { return waiting_.load(); }
  const AssignOptions& options() const { return options_; }

 private:
  std::optional<Process> try_claim(const ExecutorRecord& executor);

  store::Store& store_;
  const Clock& clock_;
  WakeupHub& hub_;
  std::function<std::int64_t()> term_;
  AssignOptions options_;
  std::atomic<std::size_t> waiting_{0};
};

// Streams audit events of one process until it reaches a terminal state.
class Subscription {
 public:
  // Throws kNotFound.
  Subscription(store::Store& store, WakeupHub& hub, std::string process_id);

  // Next batch of events, waiting up to `timeout`. The first batch holds the
  // process's latest event, so a terminal process yields exactly one event.
  std::vector<store::AuditEvent> next(std::chrono::milliseconds timeout);
  bool done() const { return done_; }

 private:
  store::Store& store_;
  WakeupHub& hub_;
  std::string process_id_;
  std::int64_t after_ = 0;
  bool started_ = false;
  bool done_ = false;
};

}  // namespace colonies::assign
