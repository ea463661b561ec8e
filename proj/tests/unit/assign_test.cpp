#include <gtest/gtest.h>

#include <future>
#include <set>
#include <thread>

#include "colonies/assign/assign.hpp"
#include "colonies/store/queue.hpp"
#include "../support/world.hpp"

using namespace colonies;
using namespace std::chrono_literals;
using world::kT0;

namespace {

struct Rig : world::World {
  VirtualClock clock{kT0};
  assign::WakeupHub hub;
  assign::Assigner assigner;
  explicit Rig(assign::AssignOptions o = {}, store::StoreOptions so = {})
      : world::World(so), assigner(store, clock, hub, [] { return 1; }, o) {}

  Process submit_and_wake(FunctionSpec s) {
    auto p = submit(std::move(s), clock.now());
    hub.notify_queue(colony, p.spec.conditions.executor_type);
    return p;
  }
};

Nanos ms(int n) { return millis(n); }

}  // namespace

TEST(WakeupHub, TicketSeesNotifyBeforeWait) {
  assign::WakeupHub hub;
  auto t = hub.ticket("k");
  hub.notify("k");
  EXPECT_TRUE(hub.wait(t, std::chrono::steady_clock::now() + 1ms));
  EXPECT_FALSE(hub.wait(t, std::chrono::steady_clock::now() + 1ms));
}

TEST(WakeupHub, SlotsReleasedWithTickets) {
  assign::WakeupHub hub;
  {
    auto a = hub.ticket("x");
    auto b = hub.ticket("y");
    EXPECT_EQ(hub.slots(), 2u);
  }
  EXPECT_EQ(hub.slots(), 0u);
}

TEST(Assign, ImmediateWhenWorkExists) {
  Rig r;
  auto e = r.executor("e", "t");
  auto p = r.submit(gen::spec(r.colony, "t"), kT0);
  auto got = r.assigner.assign(e, seconds(5));
  ASSERT_TRUE(got);
  EXPECT_EQ(got->process_id, p.process_id);
  EXPECT_EQ(got->state, ProcessState::kRunning);
}

TEST(Assign, TimesOutEmpty) {
  Rig r;
  auto e = r.executor("e", "t");
  auto start = std::chrono::steady_clock::now();
  EXPECT_FALSE(r.assigner.assign(e, ms(150)));
  auto took = std::chrono::steady_clock::now() - start;
  EXPECT_GE(took, 150ms);
  EXPECT_LT(took, 2s);
}

TEST(Assign, HangingRequestWakesOnSubmit) {
  Rig r;
  auto e = r.executor("e", "t");
  auto fut = std::async(std::launch::async, [&] { return r.assigner.assign(e, seconds(10)); });
  while (r.assigner.waiting() == 0) std::this_thread::sleep_for(1ms);
  auto start = std::chrono::steady_clock::now();
  auto p = r.submit_and_wake(gen::spec(r.colony, "t"));
  auto got = fut.get();
  ASSERT_TRUE(got);
  EXPECT_EQ(got->process_id, p.process_id);
  // Woken by the notify, well before the rescan period.
  EXPECT_LT(std::chrono::steady_clock::now() - start, 400ms);
}

TEST(Assign, OtherTypeDoesNotSatisfy) {
  Rig r;
  auto e = r.executor("e", "t");
  r.submit_and_wake(gen::spec(r.colony, "other"));
  EXPECT_FALSE(r.assigner.assign(e, ms(100)));
}

TEST(Assign, RescanCatchesUnnotifiedWork) {
  assign::AssignOptions o;
  o.rescan = 50ms;
  Rig r(o);
  auto e = r.executor("e", "t");
  auto fut = std::async(std::launch::async, [&] { return r.assigner.assign(e, seconds(5)); });
  while (r.assigner.waiting() == 0) std::this_thread::sleep_for(1ms);
  r.submit(gen::spec(r.colony, "t"), kT0);  // no notify, as from another replica
  EXPECT_TRUE(fut.get());
}

TEST(Assign, BadTimeoutAndCap) {
  assign::AssignOptions o;
  o.max_waiters = 1;
  o.max_timeout = ms(300);
  Rig r(o);
  auto e = r.executor("e", "t");
  auto code = [&](Nanos t) {
    try {
      r.assigner.assign(e, t);
    } catch (const Error& err) {
      return err.code();
    }
    return Errc::kInternal;
  };
  EXPECT_EQ(code(0), Errc::kInvalidTimeout);
  EXPECT_EQ(code(-1), Errc::kInvalidTimeout);

  auto start = std::chrono::steady_clock::now();
  auto fut = std::async(std::launch::async, [&] { return r.assigner.assign(e, seconds(600)); });
  while (r.assigner.waiting() == 0) std::this_thread::sleep_for(1ms);
  EXPECT_EQ(code(seconds(1)), Errc::kTooManyWaiters);
  EXPECT_FALSE(fut.get());
  // Clamped to max_timeout.
  EXPECT_LT(std::chrono::steady_clock::now() - start, 2s);
  EXPECT_EQ(r.assigner.waiting(), 0u);
}

TEST(Assign, CancelFlagReturnsEarly) {
  Rig r;
  auto e = r.executor("e", "t");
  std::atomic<bool> cancel{false};
  auto fut = std::async(std::launch::async, [&] { return r.assigner.assign(e, seconds(30), &cancel); });
  while (r.assigner.waiting() == 0) std::this_thread::sleep_for(1ms);
  cancel = true;
  r.hub.notify_all();
  EXPECT_EQ(fut.wait_for(5s), std::future_status::ready);
  EXPECT_FALSE(fut.get());
}

// N concurrent assigners over one file-backed store and one process: exactly
// one wins.
TEST(Assign, ClaimExclusivityHundredWay) {
  world::TempPath db("assign-excl");
  store::StoreOptions so;
  so.path = db.path.string();
  so.synchronous_full = false;
  Rig r({}, so);
  std::vector<ExecutorRecord> execs;
  for (int i = 0; i < 100; ++i) execs.push_back(r.executor("e" + std::to_string(i), "t"));
  auto p = r.submit(gen::spec(r.colony, "t"), kT0);
  std::atomic<int> wins{0};
  std::vector<std::thread> threads;
  std::atomic<bool> go{false};
  for (int i = 0; i < 100; ++i) {
    threads.emplace_back([&, i] {
      while (!go) std::this_thread::yield();
      if (auto got = r.assigner.assign(execs[i], ms(200))) {
        EXPECT_EQ(got->process_id, p.process_id);
        ++wins;
      }
    });
  }
  go = true;
  for (auto& t : threads) t.join();
  EXPECT_EQ(wins.load(), 1);
}

TEST(Assign, ManyProcessesEachClaimedOnce) {
  Rig r;
  std::vector<ExecutorRecord> execs;
  for (int i = 0; i < 8; ++i) execs.push_back(r.executor("e" + std::to_string(i), "t"));
  std::set<std::string> submitted;
  for (int i = 0; i < 200; ++i) submitted.insert(r.submit(gen::spec(r.colony, "t"), kT0).process_id);
  std::mutex mu;
  std::multiset<std::string> claimed;
  std::vector<std::thread> threads;
  for (auto& e : execs) {
    threads.emplace_back([&, e] {
      while (auto p = r.assigner.assign(e, ms(50))) {
        std::lock_guard lock(mu);
        claimed.insert(p->process_id);
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(claimed.size(), 200u);
  EXPECT_EQ(std::set<std::string>(claimed.begin(), claimed.end()), submitted);
}

TEST(Subscription, TerminalProcessYieldsOneEvent) {
  Rig r;
  auto e = r.executor("e", "t");
  auto p = r.submit(gen::spec(r.colony, "t"), kT0);
  auto c = r.claim(e, kT0);
  r.store.write([&](store::Tx& tx) {
    store::close_process(tx, p.process_id, e.executor_id, true, Json::array({1}), {}, kT0);
  });
  assign::Subscription sub(r.store, r.hub, p.process_id);
  auto ev = sub.next(100ms);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].state, ProcessState::kSuccessful);
  EXPECT_TRUE(sub.done());
  EXPECT_TRUE(sub.next(10ms).empty());
}

TEST(Subscription, StreamsTransitionsUntilTerminal) {
  Rig r;
  auto e = r.executor("e", "t");
  auto p = r.submit(gen::spec(r.colony, "t"), kT0);
  assign::Subscription sub(r.store, r.hub, p.process_id);
  auto first = sub.next(100ms);
  ASSERT_EQ(first.size(), 1u);
  EXPECT_EQ(first[0].action, "submit");

  auto fut = std::async(std::launch::async, [&] {
    std::vector<std::string> actions;
    while (!sub.done()) {
      for (const auto& ev : sub.next(2s)) actions.push_back(ev.action);
    }
    return actions;
  });
  std::this_thread::sleep_for(20ms);
  r.claim(e, kT0);
  r.hub.notify_process(p.process_id);
  r.store.write([&](store::Tx& tx) {
    store::close_process(tx, p.process_id, e.executor_id, true, Json::array(), {}, kT0);
  });
  r.hub.notify_process(p.process_id);
  ASSERT_EQ(fut.wait_for(5s), std::future_status::ready);
  auto actions = fut.get();
  ASSERT_FALSE(actions.empty());
  EXPECT_EQ(actions.back(), "close");
}

TEST(Subscription, UnknownProcess) {
  Rig r;
  EXPECT_THROW(assign::Subscription(r.store, r.hub, std::string(64, 'f')), Error);
}
