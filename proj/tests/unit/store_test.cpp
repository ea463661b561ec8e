#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <random>

#include "../support/world.hpp"

using namespace colonies;
using world::kT0;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::kInternal;
}

}  // namespace

TEST(Store, SchemaVersion) {
  store::Store s;
  EXPECT_EQ(s.schema_version(), 1);
}

TEST(Store, DuplicateColony) {
  world::World w;
  EXPECT_EQ(code_of([&] { w.store.write([&](store::Tx& tx) { tx.insert_colony({w.colony, "x"}); }); }),
            Errc::kDuplicateId);
}

TEST(Store, ExecutorCrud) {
  world::World w;
  auto e = w.executor("e1", "cloud", {"square"});
  auto got = w.store.read([&](store::Tx& tx) { return tx.find_executor(e.executor_id); });
  ASSERT_TRUE(got);
  EXPECT_EQ(*got, e);
  w.store.write([&](store::Tx& tx) { tx.delete_executor(e.executor_id); });
  EXPECT_FALSE(w.store.read([&](store::Tx& tx) { return tx.find_executor(e.executor_id); }));
}

TEST(Store, RollbackOnException) {
  world::World w;
  EXPECT_THROW(w.store.write([&](store::Tx& tx) {
    tx.insert_colony({std::string(64, 'd'), "x"});
    throw std::runtime_error("boom");
  }),
               std::runtime_error);
  EXPECT_FALSE(w.store.read([&](store::Tx& tx) { return tx.find_colony(std::string(64, 'd')); }));
}

TEST(Store, UpdateMissingProcessIsNotFound) {
  world::World w;
  Process p;
  p.process_id = "nope";
  EXPECT_EQ(code_of([&] { w.store.write([&](store::Tx& tx) { tx.update_process(p); }); }),
            Errc::kNotFound);
}

TEST(Store, FileRowsAreImmutable) {
  world::World w;
  FileMeta f;
  f.file_id = w.ids.next();
  f.colony_id = w.colony;
  f.label = "/a";
  f.name = "x";
  f.checksum = std::string(64, '0');
  f.revision = 1;
  w.store.write([&](store::Tx& tx) { tx.insert_file(f); });
  EXPECT_EQ(code_of([&] {
              w.store.write([&](store::Tx& tx) { tx.exec("UPDATE files SET size = 9"); });
            }),
            Errc::kInvalidTransition);
  EXPECT_EQ(code_of([&] { w.store.write([&](store::Tx& tx) { tx.exec("DELETE FROM files"); }); }),
            Errc::kInvalidTransition);
  EXPECT_EQ(*w.store.read([&](store::Tx& tx) { return tx.find_file(f.file_id); }), f);
}

TEST(Store, FenceRejectsOlderTerms) {
  world::World w;
  w.store.write([](store::Tx& tx) { tx.fence(3); });
  w.store.write([](store::Tx& tx) { tx.fence(3); });
  try {
    w.store.write([](store::Tx& tx) { tx.fence(2); });
    FAIL();
  } catch (const store::StaleTermError& e) {
    EXPECT_EQ(e.highest(), 3);
  }
  w.store.write([](store::Tx& tx) { tx.fence(5); });
  EXPECT_EQ(w.store.read([](store::Tx& tx) { return tx.fenced_term(); }), 5);
}

TEST(Store, UnavailableStoreFails) {
  world::World w;
  w.store.set_available(false);
  EXPECT_EQ(code_of([&] { w.store.read([](store::Tx& tx) { tx.list_colonies(); }); }),
            Errc::kStorageFailure);
  w.store.set_available(true);
  EXPECT_NO_THROW(w.store.read([](store::Tx& tx) { tx.list_colonies(); }));
}

TEST(Store, DumpLoadRoundTrip) {
  world::World w;
  auto e = w.executor("e", "t");
  for (int i = 0; i < 5; ++i) w.submit(gen::spec(w.colony, "t"), kT0 + i);
  w.claim(e, kT0 + 10);
  w.store.write([](store::Tx& tx) { tx.fence(4); });
  Json d = w.store.dump();
  store::Store other;
  other.load(d);
  EXPECT_EQ(other.dump().dump(), d.dump());
}

TEST(Store, SharedFileSeenByTwoConnections) {
  world::TempPath tmp("colonies-store");
  store::StoreOptions o;
  o.path = tmp.path.string();
  world::World w(o);
  store::Store second(o);
  auto p = w.submit(gen::spec(w.colony, "t"), kT0);
  EXPECT_TRUE(second.read([&](store::Tx& tx) { return tx.find_process(p.process_id); }));
}

// A child acknowledges a committed write and is then SIGKILLed; the row must
// be there when the parent reopens the file.
TEST(Store, AcknowledgedWriteSurvivesCrash) {
  world::TempPath tmp("colonies-crash");
  store::StoreOptions o;
  o.path = tmp.path.string();
  { world::World w(o); }
  int fds[2];
  ASSERT_EQ(::pipe(fds), 0);
  pid_t pid = ::fork();
  if (pid == 0) {
    ::close(fds[0]);
    store::Store s(o);
    SeededIdSource ids(5);
    auto spec = gen::spec(std::string(64, 'c'), "t");
    for (int i = 0; i < 20; ++i) {
      Process p = store::make_process(spec, ids.next(), kT0 + i, false);
      s.write([&](store::Tx& tx) { store::insert_process(tx, p, kT0 + i); });
      char ack = 1;
      if (::write(fds[1], &ack, 1) != 1) ::_exit(2);
    }
    for (;;) ::pause();
  }
  ::close(fds[1]);
  int acked = 0;
  char c;
  while (acked < 13 && ::read(fds[0], &c, 1) == 1) ++acked;
  ::kill(pid, SIGKILL);
  ::waitpid(pid, nullptr, 0);
  ::close(fds[0]);
  store::Store s(o);
  auto rows = s.read([](store::Tx& tx) {
    return tx.list_processes(std::string(64, 'c'), std::nullopt, 1000);
  });
  EXPECT_GE(static_cast<int>(rows.size()), acked);
}

TEST(Queue, InsertRequiresValidWaitingSpec) {
  world::World w;
  auto bad = gen::spec(w.colony, "");
  EXPECT_EQ(code_of([&] { w.submit(bad, kT0); }), Errc::kInvalidArgument);
  auto p = w.submit(gen::spec(w.colony, "t"), kT0);
  EXPECT_EQ(p.state, ProcessState::kWaiting);
  EXPECT_EQ(code_of([&] {
              w.store.write([&](store::Tx& tx) { store::insert_process(tx, p, kT0); });
            }),
            Errc::kDuplicateId);
}

TEST(Queue, ClaimSetsDeadlineAndAudits) {
  world::World w;
  auto e = w.executor("e", "t");
  auto spec = gen::spec(w.colony, "t");
  spec.max_exec_time = 200;
  auto p = w.submit(spec, kT0);
  auto got = w.claim(e, kT0 + 5, 7);
  ASSERT_TRUE(got);
  EXPECT_EQ(got->process_id, p.process_id);
  EXPECT_EQ(got->state, ProcessState::kRunning);
  EXPECT_EQ(got->assigned_executor, e.executor_id);
  EXPECT_EQ(got->deadline, kT0 + 5 + seconds(200));
  auto audit = w.store.read([&](store::Tx& tx) { return tx.audit_for_process(p.process_id, 0); });
  ASSERT_EQ(audit.size(), 2u);
  EXPECT_EQ(audit[1].action, "claim");
  EXPECT_EQ(audit[1].term, 7);
  EXPECT_FALSE(w.claim(e, kT0 + 6, 7));
}

TEST(Queue, TypeNameAndFunctionFilters) {
  world::World w;
  auto edge = w.executor("edge-1", "edge");
  auto cloud = w.executor("cloud-1", "cloud", {"square"});
  auto s1 = gen::spec(w.colony, "cloud", "sum");
  auto p1 = w.submit(s1, kT0);
  EXPECT_FALSE(w.claim(edge, kT0 + 1));   // wrong type
  EXPECT_FALSE(w.claim(cloud, kT0 + 1));  // function not registered
  auto s2 = gen::spec(w.colony, "cloud", "square");
  s2.conditions.executor_names = {"cloud-2"};
  w.submit(s2, kT0 + 1);
  EXPECT_FALSE(w.claim(cloud, kT0 + 2));  // named for someone else
  auto s3 = gen::spec(w.colony, "cloud", "square");
  auto p3 = w.submit(s3, kT0 + 2);
  auto got = w.claim(cloud, kT0 + 3);
  ASSERT_TRUE(got);
  EXPECT_EQ(got->process_id, p3.process_id);
  (void)p1;
}

// Claim order equals an offline sort by (priority time, process id).
TEST(Queue, ClaimOrderMatchesOfflineSortProperty) {
  std::mt19937_64 rng(17);
  for (int round = 0; round < 20; ++round) {
    world::World w;
    auto e = w.executor("e", "t");
    std::vector<Process> submitted;
    int n = 1 + static_cast<int>(rng() % 60);
    for (int i = 0; i < n; ++i) {
      auto spec = gen::spec(w.colony, "t");
      spec.priority = static_cast<int>(rng() % 11);
      Nanos t = kT0 + static_cast<Nanos>(rng() % (5 * 86'400LL)) * kNanosPerSecond;
      submitted.push_back(w.submit(spec, t));
    }
    std::sort(submitted.begin(), submitted.end(), [](const Process& a, const Process& b) {
      return std::tie(a.priority_time, a.process_id) < std::tie(b.priority_time, b.process_id);
    });
    for (const auto& want : submitted) {
      auto got = w.claim(e, kT0 + seconds(10 * 86'400));
      ASSERT_TRUE(got);
      ASSERT_EQ(got->process_id, want.process_id);
    }
    EXPECT_FALSE(w.claim(e, kT0 + seconds(10 * 86'400)));
  }
}

TEST(Queue, ResetKeepsPriorityTimeUntilBudgetExhausted) {
  world::World w;
  auto e = w.executor("e", "t");
  auto spec = gen::spec(w.colony, "t");
  spec.max_retries = 2;
  auto p = w.submit(spec, kT0);
  for (int attempt = 0; attempt < 3; ++attempt) {
    ASSERT_TRUE(w.claim(e, kT0 + attempt * 10 + 1));
    Process r = w.store.write([&](store::Tx& tx) {
      return store::reset_process(tx, p.process_id, "deadline exceeded", kT0 + attempt * 10 + 5, 1);
    });
    EXPECT_EQ(r.retries, attempt + 1);
    if (attempt < 2) {
      EXPECT_EQ(r.state, ProcessState::kWaiting);
      EXPECT_EQ(r.priority_time, p.priority_time);
      EXPECT_TRUE(r.assigned_executor.empty());
    } else {
      EXPECT_EQ(r.state, ProcessState::kFailed);
      EXPECT_FALSE(r.errors.empty());
    }
  }
  EXPECT_EQ(code_of([&] {
              w.store.write([&](store::Tx& tx) {
                store::reset_process(tx, p.process_id, "x", kT0 + 100, 1);
              });
            }),
            Errc::kNotRunning);
}

TEST(Queue, CloseChecks) {
  world::World w;
  auto e = w.executor("e", "t");
  auto other = w.executor("o", "t");
  auto p = w.submit(gen::spec(w.colony, "t"), kT0);
  auto close = [&](const std::string& pid, const std::string& caller, bool ok, Json out) {
    return w.store.write([&](store::Tx& tx) {
      return store::close_process(tx, pid, caller, ok, out, {}, kT0 + 9);
    });
  };
  EXPECT_EQ(code_of([&] { close("missing", e.executor_id, true, Json::array()); }), Errc::kNotFound);
  EXPECT_EQ(code_of([&] { close(p.process_id, e.executor_id, true, Json::array()); }),
            Errc::kNotRunning);
  w.claim(e, kT0 + 1);
  EXPECT_EQ(code_of([&] { close(p.process_id, other.executor_id, true, Json::array()); }),
            Errc::kNotAssignee);
  EXPECT_EQ(code_of([&] { close(p.process_id, e.executor_id, true, Json::object()); }),
            Errc::kInvalidArgument);
  Process done = close(p.process_id, e.executor_id, true, Json::array({"hello world"}));
  EXPECT_EQ(done.state, ProcessState::kSuccessful);
  EXPECT_EQ(done.output, Json::array({"hello world"}));
  EXPECT_EQ(done.end_time, kT0 + 9);
  // Terminal: a second close is refused.
  EXPECT_EQ(code_of([&] { close(p.process_id, e.executor_id, true, Json::array()); }),
            Errc::kNotRunning);
}

TEST(Queue, FailedCloseConsumesRetry) {
  world::World w;
  auto e = w.executor("e", "t");
  auto spec = gen::spec(w.colony, "t");
  spec.max_retries = 1;
  auto p = w.submit(spec, kT0);
  w.claim(e, kT0 + 1);
  auto r = w.store.write([&](store::Tx& tx) {
    return store::close_process(tx, p.process_id, e.executor_id, false, Json::array(), {"bad"}, kT0 + 2);
  });
  EXPECT_EQ(r.state, ProcessState::kWaiting);
  w.claim(e, kT0 + 3);
  r = w.store.write([&](store::Tx& tx) {
    return store::close_process(tx, p.process_id, e.executor_id, false, Json::array(), {"bad"}, kT0 + 4);
  });
  EXPECT_EQ(r.state, ProcessState::kFailed);
}

TEST(Queue, ExpiredScans) {
  world::World w;
  auto e = w.executor("e", "t");
  auto running = gen::spec(w.colony, "t");
  running.max_exec_time = 2;
  auto pr = w.submit(running, kT0);
  w.claim(e, kT0);
  auto waiting = gen::spec(w.colony, "other");
  waiting.max_wait_time = 3;
  auto pw = w.submit(waiting, kT0);
  auto run = [&](Nanos t) { return w.store.read([&](store::Tx& tx) { return store::expired_processes(tx, t); }); };
  auto wait = [&](Nanos t) { return w.store.read([&](store::Tx& tx) { return tx.expired_waiting(t); }); };
  EXPECT_TRUE(run(kT0 + seconds(1)).empty());
  EXPECT_TRUE(run(kT0 + seconds(2)).empty());
  EXPECT_EQ(run(kT0 + seconds(2) + 1), std::vector<std::string>{pr.process_id});
  EXPECT_TRUE(wait(kT0 + seconds(3)).empty());
  EXPECT_EQ(wait(kT0 + seconds(3) + 1), std::vector<std::string>{pw.process_id});
}

TEST(Queue, StaleTermClaimRejected) {
  world::World w;
  auto e = w.executor("e", "t");
  w.submit(gen::spec(w.colony, "t"), kT0);
  w.store.write([](store::Tx& tx) { tx.fence(9); });
  EXPECT_EQ(code_of([&] { w.claim(e, kT0 + 1, 8); }), Errc::kStaleTerm);
  EXPECT_TRUE(w.claim(e, kT0 + 1, 9));
}
