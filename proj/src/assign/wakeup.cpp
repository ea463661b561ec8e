#include "colonies/assign/wakeup.hpp"

namespace colonies::assign {

WakeupHub::Ticket::Ticket(Ticket&& other) noexcept
    : hub_(other.hub_),
      key_(std::move(other.key_)),
      slot_(std::move(other.slot_)),
      seen_(other.seen_) {
  other.hub_ = nullptr;
}

WakeupHub::Ticket::~Ticket() {
  if (hub_ != nullptr) hub_->release(key_);
}

std::string WakeupHub::queue_key(const std::string& colony_id,
                                 const std::string& executor_type) {
  return "q/" + colony_id + "/" + executor_type;
}

std::string WakeupHub::process_key(const std::string& process_id) {
  return "p/" + process_id;
}

WakeupHub::Ticket WakeupHub::ticket(const std::string& key) {
  std::lock_guard lock(mu_);
  auto& slot = slots_[key];
  if (!slot) slot = std::make_shared<Slot>();
  slot->waiters += 1;
  return Ticket(this, key, slot, slot->generation);
}

bool WakeupHub::wait(Ticket& t, std::chrono::steady_clock::time_point until) {
  std::unique_lock lock(mu_);
  bool woke = t.slot_->cv.wait_until(
      lock, until, [&] { return t.slot_->generation != t.seen_; });
  t.seen_ = t.slot_->generation;
  return woke;
}

void WakeupHub::notify(const std::string& key) {
  std::lock_guard lock(mu_);
  auto it = slots_.find(key);
  if (it == slots_.end()) return;
  it->second->generation += 1;
  it->second->cv.notify_all();
}

void WakeupHub::notify_all() {
  std::lock_guard lock(mu_);
  for (auto& [key, slot] : slots_) {
    slot->generation += 1;
    slot->cv.notify_all();
  }
}

std::size_t WakeupHub::slots() const {
  std::lock_guard lock(mu_);
  return slots_.size();
}

void WakeupHub::release(const std::string& key) {
  std::lock_guard lock(mu_);
  auto it = slots_.find(key);
  if (it == slots_.end()) return;
  if (--it->second->waiters == 0) slots_.erase(it);
}

}  // namespace colonies::assign
