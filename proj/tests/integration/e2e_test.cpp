// Whole-system runs over loopback HTTP: server, signed client, reference
// executors and the CLI binary.

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "../support/live.hpp"
#include "../support/pipeline.hpp"
#include "colonies/api/envelope.hpp"

using namespace colonies;
using live::Live;
using live::Fleet;

namespace {

std::map<std::string, std::pair<Nanos, Nanos>> intervals(store::Store& s) {
  std::map<std::string, std::pair<Nanos, Nanos>> out;
  auto events = s.read([](store::Tx& tx) { return tx.audit_since(0, 1'000'000); });
  for (const auto& e : events) {
    if (e.action == "claim") out[e.process_id].first = e.time;
    if (e.action == "close") out[e.process_id].second = e.time;
  }
  return out;
}

}  // namespace

TEST(E2E, HelloworldByHand) {
  Live w;
  auto ek = crypto::PrivateKey::generate();
  client::Client c("127.0.0.1", w.port());

  ExecutorRecord e;
  e.executor_id = ek.identity().str();
  e.executor_name = "helloworld-executor";
  e.executor_type = "helloworld-executor";
  e.colony_id = w.colony();
  c.add_executor(e, w.keys.colony);
  c.approve_executor(e.executor_id, w.keys.colony);
  c.add_function(e.executor_id, w.colony(), "helloworld", ek);

  auto spec = w.spec("helloworld", "helloworld-executor");
  spec.max_exec_time = 100;
  spec.max_retries = 3;
  auto submitted = c.submit(spec, w.keys.colony);
  EXPECT_EQ(submitted.spec.max_exec_time, 100);
  EXPECT_EQ(submitted.spec.max_retries, 3);
  EXPECT_EQ(submitted.state, ProcessState::kWaiting);

  auto p = c.assign(w.colony(), 10, ek);
  ASSERT_TRUE(p);
  ASSERT_EQ(p->process_id, submitted.process_id);
  ASSERT_EQ(p->spec.func_name, "helloworld");
  c.close(p->process_id, Json::array({"hello world"}), ek);

  auto done = c.get_process(submitted.process_id, w.keys.colony);
  EXPECT_EQ(done.state, ProcessState::kSuccessful);
  EXPECT_EQ(done.output, Json::array({"hello world"}));
}

TEST(E2E, HelloworldThroughRuntime) {
  Live w;
  Fleet f;
  auto o = w.options("hw", "hw");
  o.functions = {"helloworld"};
  f.add(o, w.keys.colony);
  f.start();

  auto p = w.admin->submit(w.spec("helloworld", "hw"), w.keys.colony);
  std::vector<Json> events;
  w.admin->subscribe(p.process_id, w.keys.colony, [&](const Json& e) {
    events.push_back(e);
    return true;
  });
  ASSERT_FALSE(events.empty());
  EXPECT_EQ(events.back().at("state"), "successful");
  auto done = w.admin->get_process(p.process_id, w.keys.colony);
  EXPECT_EQ(done.output, Json::array({"hello world"}));
}

TEST(E2E, PipelineThroughExecutors) {
  Live w;
  Fleet f;
  f.add(w.options("e-edge", "edge"), w.keys.colony);
  for (const char* n : {"e-cloud-1", "e-cloud-2"}) {
    auto o = w.options(n, "cloud");
    o.exec_delay = std::chrono::milliseconds(300);
    f.add(o, w.keys.colony);
  }
  f.add(w.options("e-browser", "browser"), w.keys.colony);
  f.start();

  auto doc = w.admin->submit_workflow(w.colony(), pipeline::nodes(w.colony()), w.keys.colony);
  std::map<std::string, std::string> by_node;
  for (const auto& p : doc.at("processes")) {
    by_node[p.at("spec").at("nodename").get<std::string>()] = p.at("processid").get<std::string>();
  }
  ASSERT_EQ(by_node.size(), 4u);
  std::vector<std::string> ids = {by_node["gen"], by_node["square_a"], by_node["square_b"],
                                  by_node["sum"]};

  ASSERT_TRUE(live::eventually([&] {
    return w.admin->get_process(ids[3], w.keys.colony).state == ProcessState::kSuccessful;
  }));
  EXPECT_EQ(w.admin->get_process(ids[3], w.keys.colony).output, Json::array({13}));
  EXPECT_EQ(w.admin->get_process(ids[1], w.keys.colony).output, Json::array({4}));
  EXPECT_EQ(w.admin->get_process(ids[2], w.keys.colony).output, Json::array({9}));

  auto iv = intervals(w.server->store());
  // gen before both squares, both squares before sum
  EXPECT_LE(iv[ids[0]].second, iv[ids[1]].first);
  EXPECT_LE(iv[ids[0]].second, iv[ids[2]].first);
  EXPECT_LE(iv[ids[1]].second, iv[ids[3]].first);
  EXPECT_LE(iv[ids[2]].second, iv[ids[3]].first);
  // two idle cloud executors run the squares side by side
  EXPECT_LT(std::max(iv[ids[1]].first, iv[ids[2]].first),
            std::min(iv[ids[1]].second, iv[ids[2]].second));
}

TEST(E2E, RuntimeNeverSendsItsType) {
  Live w;
  Fleet f;
  auto& rt = f.add(w.options("quiet", "secret-type"), w.keys.colony);
  std::mutex mu;
  std::vector<Json> assigns;
  SystemClock clock;
  rt.client().set_wire_tap([&](const std::string& body) {
    auto a = api::authenticate(body, clock.now());
    if (a.payload_type != "assign") return;
    std::lock_guard lock(mu);
    assigns.push_back(a.payload);
  });
  f.start();
  auto p = w.admin->submit(w.spec("echo", "secret-type"), w.keys.colony);
  ASSERT_TRUE(live::eventually([&] {
    return w.admin->get_process(p.process_id, w.keys.colony).state == ProcessState::kSuccessful;
  }));
  f.stop();
  std::lock_guard lock(mu);
  ASSERT_FALSE(assigns.empty());
  for (const auto& a : assigns) {
    EXPECT_FALSE(a.contains("executortype")) << a.dump();
    EXPECT_EQ(a.dump().find("secret-type"), std::string::npos) << a.dump();
  }
}

TEST(E2E, StateSurvivesServerRestart) {
  Live w;
  auto ek = crypto::PrivateKey::generate();
  ExecutorRecord e{ek.identity().str(), "x", "t", w.colony()};
  w.admin->add_executor(e, w.keys.colony);
  w.admin->approve_executor(e.executor_id, w.keys.colony);

  std::vector<std::string> ids;
  for (int i = 0; i < 5; ++i) {
    ids.push_back(w.admin->submit(w.spec("echo", "t"), w.keys.colony).process_id);
  }
  auto running = w.admin->assign(w.colony(), 5, ek);
  ASSERT_TRUE(running);
  EXPECT_EQ(running->process_id, ids[0]);

  // Kill the server with one process mid-flight; a fresh one picks up the
  // same rows and the executor closes against it.
  w.stop();
  w.start();
  client::Client c("127.0.0.1", w.port());
  EXPECT_EQ(c.get_process(ids[0], w.keys.colony).state, ProcessState::kRunning);
  c.close(ids[0], Json::array({"after restart"}), ek);
  for (std::size_t i = 1; i < ids.size(); ++i) {
    auto p = c.assign(w.colony(), 5, ek);
    ASSERT_TRUE(p);
    EXPECT_EQ(p->process_id, ids[i]);  // queue order kept
    c.close(p->process_id, Json::array(), ek);
  }
  auto list = c.get_processes(w.colony(), ProcessState::kSuccessful, 100, w.keys.colony);
  EXPECT_EQ(list.size(), 5u);
}

TEST(E2E, KilledExecutorWorkIsRecovered) {
  Live w;
  Fleet f;
  auto o = w.options("doomed", "slow");
  o.exec_delay = std::chrono::seconds(30);
  auto& doomed = f.add(o, w.keys.colony);
  std::atomic<bool> got{false};
  doomed.on_lifecycle([&](const executor::Lifecycle& l) {
    if (l.kind == executor::Lifecycle::Kind::kAssigned) got = true;
  });
  f.start();

  auto spec = w.spec("echo", "slow");
  spec.args = {"survived"};
  spec.max_exec_time = 1;
  spec.max_retries = 2;
  auto p = w.admin->submit(spec, w.keys.colony);
  ASSERT_TRUE(live::eventually([&] { return got.load(); }));
  auto killed_at = std::chrono::steady_clock::now();
  doomed.kill();

  auto o2 = w.options("rescuer", "slow");
  f.add(o2, w.keys.colony);
  f.start();
  ASSERT_TRUE(live::eventually([&] {
    return w.admin->get_process(p.process_id, w.keys.colony).state == ProcessState::kSuccessful;
  }));
  auto took = std::chrono::steady_clock::now() - killed_at;
  auto done = w.admin->get_process(p.process_id, w.keys.colony);
  EXPECT_EQ(done.output, Json::array({"survived"}));
  EXPECT_EQ(done.retries, 1);
  EXPECT_NE(done.assigned_executor, doomed.executor_id());
  // max_exec_time + scan interval + 1 s
  EXPECT_LT(took, std::chrono::milliseconds(1000 + 100 + 1000));
}

// ---- CLI ----

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

class Cli {
 public:
  Cli(const Live& w, const std::filesystem::path& dir) : dir_(dir) {
    env_ = "COLONIES_SERVER_HOST=127.0.0.1 COLONIES_SERVER_PORT=" + std::to_string(w.port()) +
           " COLONIES_COLONY_ID=" + w.colony() + " ";
  }
  Run operator()(const std::string& args, const std::string& key_file = "") const {
    auto err = dir_ / "stderr.txt";
    std::string cmd = env_;
    if (!key_file.empty()) cmd += "COLONIES_PRVKEY_FILE=" + key_file + " ";
    cmd += std::string(COLONIES_CLI) + " " + args + " 2>" + err.string();
    Run r{0, "", ""};
    FILE* pipe = ::popen(cmd.c_str(), "r");
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    int status = ::pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(err);
    r.err.assign(std::istreambuf_iterator<char>(in), {});
    return r;
  }

 private:
  std::filesystem::path dir_;
  std::string env_;
};

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) {
    if (!l.empty()) out.push_back(l);
  }
  return out;
}

}  // namespace

struct CliTest : ::testing::Test {
  Live w;
  world::TempPath dir{"colonies-cli"};
  std::string colony_key;
  std::unique_ptr<Cli> cli;

  void SetUp() override {
    std::filesystem::create_directories(dir.path);
    colony_key = (dir.path / "colony.key").string();
    crypto::save_key(colony_key, w.keys.colony);
    cli = std::make_unique<Cli>(w, dir.path);
  }
};

TEST_F(CliTest, KeysNewAndId) {
  auto k = (dir.path / "fresh.key").string();
  auto r = (*cli)("keys new --out " + k);
  ASSERT_EQ(r.code, 0) << r.err;
  auto id = (*cli)("keys id", k);
  ASSERT_EQ(id.code, 0) << id.err;
  EXPECT_EQ(lines(id.out).at(0), crypto::load_key(k).identity().str());
}

TEST_F(CliTest, EmptyWaitingListExitsZero) {
  auto r = (*cli)("process ls --state waiting", colony_key);
  ASSERT_EQ(r.code, 0) << r.err;
  auto l = lines(r.out);
  ASSERT_EQ(l.size(), 1u);  // header only
  EXPECT_NE(l[0].find("PROCESSID"), std::string::npos);
  auto j = (*cli)("--output json process ls --state waiting", colony_key);
  ASSERT_EQ(j.code, 0);
  EXPECT_EQ(Json::parse(j.out), Json::array());
}

TEST_F(CliTest, WorkflowSubmitPrintsFourIds) {
  auto r = (*cli)("workflow submit " COLONIES_FIXTURES_DIR "/diamond.json", colony_key);
  ASSERT_EQ(r.code, 0) << r.err;
  auto ids = lines(r.out);
  ASSERT_EQ(ids.size(), 4u);
  std::set<std::string> uniq(ids.begin(), ids.end());
  EXPECT_EQ(uniq.size(), 4u);
  for (const auto& id : ids) {
    auto p = w.admin->get_process(id, w.keys.colony);
    EXPECT_EQ(p.spec.func_name, "echo");
  }
  auto waiting = (*cli)("--output json process ls --state waiting", colony_key);
  EXPECT_EQ(Json::parse(waiting.out).size(), 4u);
}

TEST_F(CliTest, ProcessGetAfterHelloworld) {
  Fleet f;
  f.add(w.options("hw", "hw"), w.keys.colony);
  f.start();
  auto spec_file = (dir.path / "hw.json").string();
  std::ofstream(spec_file) << to_json(w.spec("helloworld", "hw")).dump();
  auto sub = (*cli)("submit --spec " + spec_file, colony_key);
  ASSERT_EQ(sub.code, 0) << sub.err;
  std::string id = lines(sub.out).at(0);
  auto stream = (*cli)("--output json process subscribe " + id, colony_key);
  ASSERT_EQ(stream.code, 0) << stream.err;
  EXPECT_EQ(Json::parse(lines(stream.out).back()).at("state"), "successful");

  auto got = (*cli)("--output json process get " + id, colony_key);
  ASSERT_EQ(got.code, 0) << got.err;
  Json p = Json::parse(got.out);
  EXPECT_EQ(p.at("state"), "successful");
  EXPECT_EQ(p.at("out"), Json::array({"hello world"}));
  // json mode is the raw payload
  EXPECT_EQ(p, w.admin->call("getprocess", {{"processid", id}}, w.keys.colony));

  auto table = (*cli)("process get " + id, colony_key);
  EXPECT_NE(table.out.find("successful"), std::string::npos);
}

TEST_F(CliTest, ErrorsGoToStderrWithCode) {
  auto stranger = (dir.path / "stranger.key").string();
  crypto::save_key(stranger, crypto::PrivateKey::generate());
  auto r = (*cli)("process ls", stranger);
  EXPECT_NE(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(Json::parse(r.err).at("error").at("code"), "unauthorized");

  Cli down(w, dir.path);
  w.stop();
  auto refused = down("process ls", colony_key);
  EXPECT_NE(refused.code, 0);
  EXPECT_EQ(Json::parse(refused.err).at("error").at("code"), "connection-refused");
}
