#include "colonies/assign/assign.hpp"

#include <algorithm>

#include "colonies/store/queue.hpp"

namespace colonies::assign {
namespace {

class WaiterSlot {
 public:
  WaiterSlot(std::atomic<std::size_t>& n, std::size_t cap) : n_(n) {
    if (n_.fetch_add(1) >= cap) {
      n_.fetch_sub(1);
      throw Error(Errc::kTooManyWaiters, "too many hanging assign requests");
    }
  }
  ~WaiterSlot() { n_.fetch_sub(1); }

 private:
  std::atomic<std::size_t>& n_;
};

}  // namespace

Assigner::Assigner(store::Store& store, const Clock& clock, WakeupHub& hub,
                   std::function<std::int64_t()> term, AssignOptions options)
    : store_(store),
      clock_(clock),
      hub_(hub),
      term_(std::move(term)),
      options_(options) {}

std::optional<Process> Assigner::try_claim(const ExecutorRecord& executor) {
  std::int64_t term = term_();
  return store_.write([&](store::Tx& tx) {
    return store::select_and_claim(tx, executor, clock_.now(), term);
  });
}

std::optional<Process> Assigner::assign(const ExecutorRecord& executor,
                                        Nanos timeout,
                                        const std::atomic<bool>* cancel) {
  if (timeout <= 0) {
    throw Error(Errc::kInvalidTimeout, "assign timeout must be positive");
  }
  timeout = std::min(timeout, options_.max_timeout);
  WaiterSlot slot(waiting_, options_.max_waiters);

  auto until = std::chrono::steady_clock::now() + std::chrono::nanoseconds(timeout);
  auto ticket =
      hub_.ticket(WakeupHub::queue_key(executor.colony_id, executor.executor_type));
  for (;;) {
    if (auto p = try_claim(executor)) return p;
    auto now = std::chrono::steady_clock::now();
    if (now >= until || (cancel != nullptr && cancel->load())) {
      return std::nullopt;
    }
    hub_.wait(ticket, std::min(until, now + options_.rescan));
  }
}

Subscription::Subscription(store::Store& store, WakeupHub& hub,
                           std::string process_id)
    : store_(store), hub_(hub), process_id_(std::move(process_id)) {
  bool exists = store_.read(
      [&](store::Tx& tx) { return tx.find_process(process_id_).has_value(); });
  if (!exists) throw Error(Errc::kNotFound, "process " + process_id_ + " not found");
}

std::vector<store::AuditEvent> Subscription::next(
    std::chrono::milliseconds timeout) {
  if (done_) return {};
  auto until = std::chrono::steady_clock::now() + timeout;
  auto ticket = hub_.ticket(WakeupHub::process_key(process_id_));
  for (;;) {
    auto events = store_.read([&](store::Tx& tx) {
      return tx.audit_for_process(process_id_, after_);
    });
    if (!started_) {
      started_ = true;
      if (!events.empty()) events.erase(events.begin(), events.end() - 1);
    }
    if (!events.empty()) {
      after_ = events.back().seq;
      for (std::size_t i = 0; i < events.size(); ++i) {
        if (is_terminal(events[i].state)) {
          events.resize(i + 1);
          done_ = true;
          break;
        }
      }
      return events;
    }
    auto now = std::chrono::steady_clock::now();
    if (now >= until) return {};
    hub_.wait(ticket, std::min(until, now + std::chrono::milliseconds(500)));
  }
}

}  // namespace colonies::assign
