#pragma once

// Failsafe scans: RUNNING processes past their deadline lose one retry,
// WAITING processes past their maximum wait time fail.

#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "colonies/assign/wakeup.hpp"
#include "colonies/store/store.hpp"

namespace colonies::lifecycle {

inline constexpr const char* kDeadlineExceeded = "deadline exceeded";
inline constexpr const char* kWaitExceeded = "max wait time exceeded";

struct ReapReport {
  std::vector<std::string> reset;   // back in the queue
  std::vector<std::string> failed;  // retry budget or wait time exhausted
  bool empty() const { return reset.empty() && failed.empty(); }
};

// One transaction per process, each fenced with `term`. Idempotent for a
// fixed `now`. Throws StaleTermError once another leader has taken over.
ReapReport reap_once(store::Store& store, Nanos now, std::int64_t term,
                     assign::WakeupHub* hub = nullptr);

// Test-harness registry of executors that can be killed without closing
// their process.
class ChaosMonkey {
 public:
  void enroll(const std::string& executor_name, std::function<void()> kill);
  void withdraw(const std::string& executor_name);
  // Throws kUnknownExecutor.
  void kill_executor_chaos(const std::string& executor_name);

 private:
  std::mutex mu_;
  std::map<std::string, std::function<void()>> victims_;
};

}  // namespace colonies::lifecycle
