#pragma once

// Generation counters that hanging requests block on. Keys are
// (colony, executor type) for assigns and a process id for subscriptions,
// so a submit only wakes waiters that could take the work.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace colonies::assign {

class WakeupHub {
  struct Slot {
    std::condition_variable cv;
    std::uint64_t generation = 0;
    int waiters = 0;
  };

 public:
  // Taken before looking for work; a notify that lands between the lookup
  // and wait() is not lost.
  class Ticket {
   public:
    Ticket(Ticket&& other) noexcept;
    Ticket(const Ticket&) = delete;
    Ticket& operator=(const Ticket&) = delete;
    ~Ticket();

   private:
    friend class WakeupHub;
    Ticket(WakeupHub* hub, std::string key, std::shared_ptr<Slot> slot,
           std::uint64_t seen)
        : hub_(hub), key_(std::move(key)), slot_(std::move(slot)), seen_(seen) {}
    WakeupHub* hub_;
    std::string key_;
    std::shared_ptr<Slot> slot_;
    std::uint64_t seen_;
  };

  static std::string queue_key(const std::string& colony_id,
                               const std::string& executor_type);
  static std::string process_key(const std::string& process_id);

  Ticket ticket(const std::string& key);
  // True when notified since the ticket was taken (or since the last wait),
  // false on timeout.
  bool wait(Ticket& t, std::chrono::steady_clock::time_point until);
  void notify(const std::string& key);
  void notify_queue(const std::string& colony_id,
                    const std::string& executor_type) {
    notify(queue_key(colony_id, executor_type));
  }
  void notify_process(const std::string& process_id) {
    notify(process_key(process_id));
  }
  // Wakes every waiter (shutdown).
  void notify_all();

  std::size_t slots() const;

 private:
  void release(const std::string& key);

  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Slot>> slots_;
};

}  // namespace colonies::assign
