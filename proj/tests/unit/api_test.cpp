#include <gtest/gtest.h>

#include <random>

#include "colonies/api/envelope.hpp"
#include "colonies/api/handler.hpp"
#include "colonies/crypto/encoding.hpp"
#include "../support/generators.hpp"

using namespace colonies;
using crypto::PrivateKey;

namespace {

constexpr Nanos kNow = 1'700'000'000LL * kNanosPerSecond;

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::kInternal;
}

PrivateKey k(int i) { return PrivateKey::from_hex(std::string(62, '0') + (i < 16 ? "0" : "") + [&] {
  const char* h = "0123456789abcdef";
  std::string s;
  if (i >= 16) s += h[i / 16];
  s += h[i % 16];
  return s;
}()); }

struct Server {
  store::Store store;
  VirtualClock clock{kNow};
  SeededIdSource ids{1};
  assign::WakeupHub hub;
  api::StandaloneLeadership lead{1};
  PrivateKey owner = k(1);
  api::ApiHandler handler;

  explicit Server(store::StoreOptions o = {})
      : store(o), handler(store, clock, ids, hub, lead, owner.identity()) {}

  api::Reply call(const std::string& method, Json payload, const PrivateKey& key) {
    clock.advance(kNanosPerMilli);
    return handler.handle(api::make_envelope(method, std::move(payload), key, clock.now()).dump());
  }
  Json ok(const std::string& method, Json payload, const PrivateKey& key) {
    auto r = call(method, std::move(payload), key);
    EXPECT_EQ(r.status, 200) << method << " " << r.body.dump();
    return r.body;
  }
  std::string code(const std::string& method, Json payload, const PrivateKey& key) {
    auto r = call(method, std::move(payload), key);
    if (r.status == 200 || r.status == 204) return "ok";
    return r.body["error"]["code"];
  }
};

// Colony A with owner, approved and unapproved executors; colony B with an
// approved executor; a stranger.
struct Roles : Server {
  PrivateKey owner_a = k(2), exec_a = k(3), pending_a = k(4), owner_b = k(5), exec_b = k(6),
             stranger = k(7);
  std::string a = owner_a.identity().str(), b = owner_b.identity().str();

  Roles() {
    ok("addcolony", {{"colony", {{"colonyid", a}, {"name", "a"}}}}, owner);
    ok("addcolony", {{"colony", {{"colonyid", b}, {"name", "b"}}}}, owner);
    add_exec(exec_a, a, owner_a, true);
    add_exec(pending_a, a, owner_a, false);
    add_exec(exec_b, b, owner_b, true);
  }
  void add_exec(const PrivateKey& e, const std::string& colony, const PrivateKey& by, bool approve) {
    ExecutorRecord r;
    r.executor_id = e.identity().str();
    r.executor_name = "n" + r.executor_id.substr(0, 6);
    r.executor_type = "t";
    r.colony_id = colony;
    ok("addexecutor", {{"executor", to_json(r)}}, by);
    if (approve) ok("approveexecutor", {{"executorid", r.executor_id}}, by);
  }
  Json spec(const std::string& colony) {
    auto s = gen::spec(colony, "t");
    s.max_exec_time = 100;
    return to_json(s);
  }
};

}  // namespace

TEST(Envelope, RoundTripRecoversSigner) {
  auto key = k(9);
  auto env = api::make_envelope("getcolonies", Json::object(), key, kNow);
  auto auth = api::authenticate(env.dump(), kNow);
  EXPECT_EQ(auth.identity, key.identity());
  EXPECT_EQ(auth.payload["msgtype"], "getcolonies");
  EXPECT_EQ(auth.payload["timestamp"], kNow);
}

TEST(Envelope, ReplayWindowBoundaries) {
  auto key = k(9);
  for (int skew : {-301, -300, -299, 0, 299, 300, 301}) {
    auto body = api::make_envelope("x", Json::object(), key, kNow + seconds(skew)).dump();
    bool stale = std::abs(skew) > 300;
    EXPECT_EQ(code_of([&] { api::authenticate(body, kNow); }) == Errc::kStaleTimestamp, stale) << skew;
  }
  // Ten minutes later the same bytes are refused.
  auto body = api::make_envelope("x", Json::object(), key, kNow).dump();
  EXPECT_EQ(code_of([&] { api::authenticate(body, kNow + seconds(600)); }), Errc::kStaleTimestamp);
}

TEST(Envelope, TamperedPayloadRecoversSomeoneElse) {
  auto key = k(9);
  Json env = api::make_envelope("submitfuncspec", {{"spec", "a"}}, key, kNow);
  auto raw = crypto::base64_decode(env["payload"].get<std::string>());
  std::string bytes(raw.begin(), raw.end());
  bytes.replace(bytes.find("\"a\""), 3, "\"b\"");
  env["payload"] = crypto::base64_encode(crypto::as_bytes(bytes));
  Errc c = Errc::kInternal;
  try {
    auto auth = api::authenticate(env.dump(), kNow);
    EXPECT_NE(auth.identity, key.identity());
    return;
  } catch (const Error& e) {
    c = e.code();
  }
  EXPECT_EQ(c, Errc::kUnrecoverablePoint);
}

TEST(Envelope, MalformedInputs) {
  auto key = k(9);
  Json good = api::make_envelope("x", Json::object(), key, kNow);
  auto with = [&](auto mutate) {
    Json e = good;
    mutate(e);
    return code_of([&] { api::authenticate(e.dump(), kNow); });
  };
  EXPECT_EQ(code_of([&] { api::authenticate("not json", kNow); }), Errc::kMalformedEnvelope);
  EXPECT_EQ(code_of([&] { api::authenticate("[]", kNow); }), Errc::kMalformedEnvelope);
  EXPECT_EQ(with([](Json& e) { e.erase("signature"); }), Errc::kMalformedEnvelope);
  EXPECT_EQ(with([](Json& e) { e["extra"] = 1; }), Errc::kMalformedEnvelope);
  EXPECT_EQ(with([](Json& e) { e["payload"] = "!!!"; }), Errc::kMalformedEnvelope);
  EXPECT_EQ(with([](Json& e) { e["payloadtype"] = "y"; }), Errc::kMalformedEnvelope);
  EXPECT_EQ(with([](Json& e) { e["signature"] = "00"; }), Errc::kMalformedSignature);
  EXPECT_EQ(with([](Json& e) { e["signature"] = std::string(130, '0'); }), Errc::kMalformedSignature);
  auto signed_bytes = [&](const std::string& bytes) {
    Json e = {{"payloadtype", "x"},
              {"payload", crypto::base64_encode(crypto::as_bytes(bytes))},
              {"signature", crypto::sign(bytes, key).hex()}};
    return code_of([&] { api::authenticate(e.dump(), kNow); });
  };
  std::string ts = std::to_string(kNow);
  // Not canonical: whitespace, unsorted keys.
  EXPECT_EQ(signed_bytes("{\"msgtype\": \"x\",\"timestamp\":" + ts + "}"), Errc::kMalformedEnvelope);
  EXPECT_EQ(signed_bytes("{\"timestamp\":" + ts + ",\"msgtype\":\"x\"}"), Errc::kMalformedEnvelope);
  EXPECT_EQ(signed_bytes("{\"msgtype\":\"x\"}"), Errc::kMalformedEnvelope);
  EXPECT_EQ(signed_bytes("{\"msgtype\":\"x\",\"timestamp\":\"1\"}"), Errc::kMalformedEnvelope);
  EXPECT_EQ(signed_bytes("{\"msgtype\":\"x\",\"timestamp\":" + ts + "}"), Errc::kInternal);
}

TEST(Handler, UnknownMethodAndBadFields) {
  Roles r;
  EXPECT_EQ(r.code("nosuch", Json::object(), r.owner), "invalid-argument");
  EXPECT_EQ(r.code("getprocess", Json::object(), r.owner_a), "invalid-argument");
  EXPECT_EQ(r.code("getprocess", {{"processid", 5}}, r.owner_a), "invalid-argument");
  EXPECT_EQ(r.code("submitfuncspec", {{"spec", {{"funcname", "x"}, {"bogus", 1}}}}, r.owner_a),
            "invalid-argument");
  auto reply = r.handler.handle("garbage");
  EXPECT_EQ(reply.status, 400);
  EXPECT_EQ(reply.body["error"]["code"], "malformed-envelope");
}

TEST(Handler, AuthorizationMatrix) {
  Roles r;
  auto pid = r.ok("submitfuncspec", {{"spec", r.spec(r.a)}}, r.owner_a)["processid"].get<std::string>();
  std::string ea = r.exec_a.identity().str();

  struct Row {
    const char* what;
    std::function<std::string(const PrivateKey&)> call;
    std::vector<int> allowed;  // indices into `who`
  };
  std::vector<const PrivateKey*> who = {&r.owner, &r.owner_a, &r.exec_a, &r.pending_a,
                                        &r.owner_b, &r.exec_b, &r.stranger};
  int n = 0;
  std::mt19937_64 rng(n);
  std::vector<Row> rows = {
      {"addcolony",
       [&](const PrivateKey& key) {
         return r.code("addcolony", {{"colony", {{"colonyid", gen::hex64(rng)}, {"name", "z"}}}}, key);
       },
       {0}},
      {"getcolonies", [&](const PrivateKey& key) { return r.code("getcolonies", Json::object(), key); }, {0}},
      {"getcluster", [&](const PrivateKey& key) { return r.code("getcluster", Json::object(), key); }, {0}},
      {"addexecutor",
       [&](const PrivateKey& key) {
         ExecutorRecord e;
         e.executor_id = gen::hex64(rng);
         e.executor_name = "x" + std::to_string(++n);
         e.executor_type = "t";
         e.colony_id = r.a;
         return r.code("addexecutor", {{"executor", to_json(e)}}, key);
       },
       {1}},
      {"approveexecutor",
       [&](const PrivateKey& key) { return r.code("approveexecutor", {{"executorid", ea}}, key); },
       {1}},
      {"submitfuncspec",
       [&](const PrivateKey& key) { return r.code("submitfuncspec", {{"spec", r.spec(r.a)}}, key); },
       {1, 2}},
      {"getprocess",
       [&](const PrivateKey& key) { return r.code("getprocess", {{"processid", pid}}, key); },
       {1, 2}},
      {"getprocesses",
       [&](const PrivateKey& key) { return r.code("getprocesses", {{"colonyid", r.a}}, key); },
       {1, 2}},
      {"getstatistics",
       [&](const PrivateKey& key) { return r.code("getstatistics", {{"colonyid", r.a}}, key); },
       {1, 2}},
      // Only executors take work; the owner is not one.
      {"assign",
       [&](const PrivateKey& key) { return r.code("assign", {{"colonyid", r.a}, {"timeout", 0.01}}, key); },
       {2}},
  };
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < who.size(); ++i) {
      bool allow = std::find(row.allowed.begin(), row.allowed.end(), static_cast<int>(i)) != row.allowed.end();
      std::string got = row.call(*who[i]);
      if (allow) {
        EXPECT_EQ(got, "ok") << row.what << " as " << i;
      } else {
        EXPECT_EQ(got, "unauthorized") << row.what << " as " << i;
      }
    }
  }
}

TEST(Handler, CrossColonyAssignDenied) {
  Roles r;
  r.ok("submitfuncspec", {{"spec", r.spec(r.a)}}, r.owner_a);
  EXPECT_EQ(r.code("assign", {{"colonyid", r.a}, {"timeout", 0.01}}, r.exec_b), "unauthorized");
  EXPECT_EQ(r.code("submitfuncspec", {{"spec", r.spec(r.b)}}, r.exec_a), "unauthorized");
}

TEST(Handler, OnlyAssigneeCloses) {
  Roles r;
  r.add_exec(k(8), r.a, r.owner_a, true);
  auto pid = r.ok("submitfuncspec", {{"spec", r.spec(r.a)}}, r.owner_a)["processid"];
  auto got = r.ok("assign", {{"colonyid", r.a}, {"timeout", 1}}, r.exec_a);
  EXPECT_EQ(got["processid"], pid);
  EXPECT_EQ(r.code("close", {{"processid", pid}, {"out", Json::array()}}, k(8)), "not-assignee");
  EXPECT_EQ(r.code("close", {{"processid", pid}, {"out", Json::array()}}, r.owner_a), "not-assignee");
  EXPECT_EQ(r.code("close", {{"processid", pid}, {"out", Json::array()}}, r.exec_b), "unauthorized");
  EXPECT_EQ(r.code("close", {{"processid", pid}, {"out", Json::array({1})}}, r.exec_a), "ok");
}

TEST(Handler, RemovedOrRejectedExecutorLosesAccess) {
  Roles r;
  std::string ea = r.exec_a.identity().str();
  r.ok("rejectexecutor", {{"executorid", ea}}, r.owner_a);
  EXPECT_EQ(r.code("getprocesses", {{"colonyid", r.a}}, r.exec_a), "unauthorized");
  r.ok("approveexecutor", {{"executorid", ea}}, r.owner_a);
  EXPECT_EQ(r.code("getprocesses", {{"colonyid", r.a}}, r.exec_a), "ok");
  r.ok("removeexecutor", {{"executorid", ea}}, r.owner_a);
  EXPECT_EQ(r.code("getprocesses", {{"colonyid", r.a}}, r.exec_a), "unauthorized");
}

TEST(Handler, AddFunctionOnlyForSelf) {
  Roles r;
  std::string ea = r.exec_a.identity().str();
  auto payload = Json{{"executorid", ea}, {"colonyid", r.a}, {"funcname", "f"}};
  EXPECT_EQ(r.code("addfunction", payload, r.owner_a), "unauthorized");
  EXPECT_EQ(r.code("addfunction", payload, r.exec_b), "unauthorized");
  EXPECT_EQ(r.ok("addfunction", payload, r.exec_a)["functions"], Json::array({"f"}));
  EXPECT_EQ(r.ok("addfunction", payload, r.exec_a)["functions"], Json::array({"f"}));
}

// Identity-looking fields injected into payloads never change the outcome.
TEST(Handler, InjectedIdentityFieldsIgnored) {
  std::mt19937_64 rng(99);
  const char* fields[] = {"caller", "identity", "executorid", "ownerid", "signer"};
  for (int round = 0; round < 30; ++round) {
    Roles r;
    std::string owner_id = r.owner.identity().str(), oa = r.a;
    Json payload = {{"colonyid", r.a}};
    std::string f = fields[rng() % 5];
    payload[f] = (rng() % 2) ? owner_id : oa;
    // A stranger claiming to be someone still gets nothing.
    EXPECT_EQ(r.code("getprocesses", payload, r.stranger), "unauthorized") << f;
    EXPECT_EQ(r.code("getcolonies", {{f, owner_id}}, r.stranger), "unauthorized") << f;
  }
}

TEST(Handler, SubscribeAndForwarding) {
  Roles r;
  auto pid = r.ok("submitfuncspec", {{"spec", r.spec(r.a)}}, r.owner_a)["processid"];
  auto sub = r.call("subscribe", {{"processid", pid}}, r.owner_a);
  ASSERT_TRUE(sub.stream);
  EXPECT_EQ(sub.stream->next(std::chrono::milliseconds(10)).size(), 1u);
  EXPECT_EQ(r.code("subscribe", {{"processid", pid}}, r.exec_b), "unauthorized");
}

namespace {

struct FollowerLead final : api::Leadership {
  std::optional<std::string> url;
  bool is_leader() const override { return false; }
  std::int64_t term() const override { return 1; }
  std::optional<std::string> leader_url() const override { return url; }
  void stale_term(std::int64_t) override {}
  Json status() const override { return Json::object(); }
};

}  // namespace

TEST(Handler, FollowerForwardsAssignOnly) {
  store::Store store;
  VirtualClock clock(kNow);
  SeededIdSource ids(1);
  assign::WakeupHub hub;
  FollowerLead lead;
  auto owner = k(1), oa = k(2), ea = k(3);
  api::ApiHandler h(store, clock, ids, hub, lead, owner.identity());
  auto call = [&](const std::string& m, Json p, const PrivateKey& key) {
    return h.handle(api::make_envelope(m, std::move(p), key, kNow).dump());
  };
  std::string a = oa.identity().str();
  call("addcolony", {{"colony", {{"colonyid", a}, {"name", "a"}}}}, owner);
  ExecutorRecord e;
  e.executor_id = ea.identity().str();
  e.executor_name = "e";
  e.executor_type = "t";
  e.colony_id = a;
  call("addexecutor", {{"executor", to_json(e)}}, oa);
  call("approveexecutor", {{"executorid", e.executor_id}}, oa);
  // Submit is served locally.
  EXPECT_EQ(call("submitfuncspec", {{"spec", to_json(gen::spec(a, "t"))}}, oa).status, 200);
  auto none = call("assign", {{"colonyid", a}, {"timeout", 1}}, ea);
  EXPECT_EQ(none.body["error"]["code"], "leader-unknown");
  lead.url = "http://10.0.0.1:50080";
  auto fwd = call("assign", {{"colonyid", a}, {"timeout", 1}}, ea);
  EXPECT_EQ(fwd.forward_to, lead.url);
  // Authorization happens before forwarding.
  EXPECT_EQ(call("assign", {{"colonyid", a}, {"timeout", 1}}, k(11)).body["error"]["code"], "unauthorized");
}

// The same request trace served by one handler, or alternately by two
// handlers over one database file, leaves identical tables.
TEST(Handler, StatelessnessDifferential) {
  auto trace = [](std::vector<api::ApiHandler*> hs, VirtualClock& clock, IdSource&) {
    auto owner = k(1), oa = k(2), ea = k(3);
    std::string a = oa.identity().str();
    int i = 0;
    auto call = [&](const std::string& m, Json p, const PrivateKey& key) {
      clock.advance(kNanosPerMilli);
      return hs[static_cast<std::size_t>(i++) % hs.size()]->handle(
          api::make_envelope(m, std::move(p), key, clock.now()).dump());
    };
    call("addcolony", {{"colony", {{"colonyid", a}, {"name", "a"}}}}, owner);
    ExecutorRecord e;
    e.executor_id = ea.identity().str();
    e.executor_name = "e";
    e.executor_type = "t";
    e.colony_id = a;
    call("addexecutor", {{"executor", to_json(e)}}, oa);
    call("approveexecutor", {{"executorid", e.executor_id}}, oa);
    for (int j = 0; j < 6; ++j) {
      auto s = gen::spec(a, "t");
      s.priority = j % 3;
      call("submitfuncspec", {{"spec", to_json(s)}}, oa);
    }
    for (int j = 0; j < 4; ++j) {
      auto p = call("assign", {{"colonyid", a}, {"timeout", 1}}, ea).body;
      call("close", {{"processid", p["processid"]}, {"success", j % 2 == 0}, {"out", Json::array({j})}}, ea);
    }
  };

  auto run = [&](int servers) {
    struct Tmp {
      std::string path = "/tmp/colonies-diff-" + std::to_string(::getpid()) + "-" +
                         std::to_string(std::random_device{}());
      ~Tmp() {
        for (const char* s : {"", "-wal", "-shm"}) std::remove((path + s).c_str());
      }
    } tmp;
    store::StoreOptions o;
    o.path = tmp.path;
    o.synchronous_full = false;
    VirtualClock clock(kNow);
    SeededIdSource ids(5);
    assign::WakeupHub hub1, hub2;
    api::StandaloneLeadership lead(1);
    std::vector<std::unique_ptr<store::Store>> stores;
    std::vector<std::unique_ptr<api::ApiHandler>> handlers;
    std::vector<api::ApiHandler*> hs;
    for (int s = 0; s < servers; ++s) {
      stores.push_back(std::make_unique<store::Store>(o));
      handlers.push_back(std::make_unique<api::ApiHandler>(*stores.back(), clock, ids,
                                                           s ? hub2 : hub1, lead, k(1).identity()));
      hs.push_back(handlers.back().get());
    }
    trace(hs, clock, ids);
    return stores[0]->dump();
  };
  EXPECT_EQ(run(1), run(2));
}
