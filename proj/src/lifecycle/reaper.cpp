#include "colonies/lifecycle/reaper.hpp"

#include <spdlog/spdlog.h>

#include "colonies/store/queue.hpp"
#include "colonies/workflow/workflow.hpp"

namespace colonies::lifecycle {
namespace {

void wake(assign::WakeupHub* hub, const Process& p) {
  if (hub == nullptr) return;
  hub->notify_process(p.process_id);
  if (p.state == ProcessState::kWaiting && !p.wait_for_parents) {
    hub->notify_queue(p.spec.conditions.colony_id, p.spec.conditions.executor_type);
  }
}

void log_event(Nanos now, const Process& p, const char* action,
               const char* reason) {
  spdlog::info(R"({{"time":{},"process_id":"{}","action":"{}","reason":"{}","retries":{}}})",
               now, p.process_id, action, reason, p.retries);
}

}  // namespace

ReapReport reap_once(store::Store& store, Nanos now, std::int64_t term,
                     assign::WakeupHub* hub) {
  ReapReport report;
  auto [running, waiting] = store.read([&](store::Tx& tx) {
    return std::make_pair(tx.expired_running(now), tx.expired_waiting(now));
  });

  for (const auto& id : running) {
    auto touched = store.write([&](store::Tx& tx) -> std::vector<Process> {
      tx.fence(term);
      auto p = tx.find_process(id);
      if (!p || p->state != ProcessState::kRunning || p->deadline == 0 ||
          p->deadline >= now) {
        return {};
      }
      Process r = store::reset_process(tx, id, kDeadlineExceeded, now, term);
      std::vector<Process> out{r};
      if (r.state == ProcessState::kFailed) {
        for (const auto& d : workflow::fail_cascade(tx, id, now, term)) {
          out.push_back(tx.get_process(d));
        }
      }
      return out;
    });
    if (touched.empty()) continue;
    const Process& r = touched.front();
    if (r.state == ProcessState::kFailed) {
      report.failed.push_back(id);
      log_event(now, r, "fail", kDeadlineExceeded);
    } else {
      report.reset.push_back(id);
      log_event(now, r, "reset", kDeadlineExceeded);
    }
    for (const auto& p : touched) wake(hub, p);
  }

  for (const auto& id : waiting) {
    auto touched = store.write([&](store::Tx& tx) -> std::vector<Process> {
      tx.fence(term);
      auto p = tx.find_process(id);
      if (!p || p->state != ProcessState::kWaiting || p->wait_for_parents ||
          p->spec.max_wait_time <= 0 ||
          p->queued_time + p->spec.max_wait_time * kNanosPerSecond >= now) {
        return {};
      }
      std::vector<Process> out{store::fail_waiting(tx, id, kWaitExceeded, now, term)};
      for (const auto& d : workflow::fail_cascade(tx, id, now, term)) {
        out.push_back(tx.get_process(d));
      }
      return out;
    });
    if (touched.empty()) continue;
    report.failed.push_back(id);
    log_event(now, touched.front(), "fail", kWaitExceeded);
    for (const auto& p : touched) wake(hub, p);
  }
  return report;
}

void ChaosMonkey::enroll(const std::string& executor_name,
                         std::function<void()> kill) {
  std::lock_guard lock(mu_);
  victims_[executor_name] = std::move(kill);
}

void ChaosMonkey::withdraw(const std::string& executor_name) {
  std::lock_guard lock(mu_);
  victims_.erase(executor_name);
}

void ChaosMonkey::kill_executor_chaos(const std::string& executor_name) {
  std::function<void()> kill;
  {
    std::lock_guard lock(mu_);
    auto it = victims_.find(executor_name);
    if (it == victims_.end()) {
      throw Error(Errc::kUnknownExecutor, "no executor named " + executor_name);
    }
    kill = std::move(it->second);
    victims_.erase(it);
  }
  kill();
}

}  // namespace colonies::lifecycle
