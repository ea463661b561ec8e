#pragma once

// Reference executor: long-poll assign, run the named function, close with
// its output. One process at a time per instance; run more instances (each
// with its own key) for parallelism.

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>

#include "colonies/client/client.hpp"

namespace colonies::executor {

// Returns the process output (a JSON array). Throwing fails the process
// with the exception message.
using Function = std::function<Json(const Process&)>;

// Working directory of the process being run (empty without fs directives).
struct ExecContext {
  std::filesystem::path workdir;
};

// echo, helloworld, gen_nums, square, sum; execute only with allow_exec.
std::map<std::string, std::function<Json(const Process&, const ExecContext&)>>
builtin_functions(bool allow_exec);

struct RuntimeOptions {
  std::string host = "localhost";
  int port = 50080;
  std::string colony_id;
  std::string name;
  std::string type;
  // Functions advertised with addfunction. Empty: advertise none, so the
  // executor takes any process of its type.
  std::vector<std::string> functions;
  double poll_timeout_seconds = 10;
  // Extra sleep inside each execution (chaos tests kill during it).
  std::chrono::milliseconds exec_delay{0};
  bool allow_exec = false;
  std::filesystem::path fs_root;  // where fs mounts are materialized
  std::shared_ptr<metafs::Drivers> drivers;
};

struct Lifecycle {
  enum class Kind { kAssigned, kClosed, kFailed, kAbandoned };
  Kind kind;
  std::string process_id;
  std::string func_name;
  Nanos at;
};

class ExecutorRuntime {
 public:
  ExecutorRuntime(crypto::PrivateKey key, RuntimeOptions options, const Clock* clock = nullptr);

  // addexecutor + approveexecutor signed by the colony owner, then
  // addfunction for every advertised function signed by this executor.
  ExecutorRecord register_with(const crypto::PrivateKey& colony_key);

  void add_function(const std::string& name, Function fn);
  void on_lifecycle(std::function<void(const Lifecycle&)> cb) { observer_ = std::move(cb); }
  void set_exec_delay(std::chrono::milliseconds d) { options_.exec_delay = d; }

  // Loops until stop() or kill(). Assign timeouts and transport errors loop
  // silently (with a short backoff for the latter).
  void run();
  // One assign round trip; true when a process was handled.
  bool step();
  // Finish the current process, then leave run().
  void stop();
  // Crash: abandon the current process without closing it.
  void kill();
  bool killed() const { return killed_.load(); }

  const std::string& executor_id() const { return id_; }
  client::Client& client() { return client_; }

 private:
  Json execute(const Process& p, const ExecContext& ctx);
  // False when killed while waiting.
  bool pause(std::chrono::milliseconds d);
  void emit(Lifecycle::Kind kind, const Process& p);

  crypto::PrivateKey key_;
  std::string id_;
  RuntimeOptions options_;
  const Clock* clock_;
  SystemClock system_;
  client::Client client_;
  std::map<std::string, std::function<Json(const Process&, const ExecContext&)>> functions_;
  std::function<void(const Lifecycle&)> observer_;
  std::atomic<bool> stopping_{false};
  std::atomic<bool> killed_{false};
  std::atomic<bool> in_assign_{false};
  std::mutex mu_;
  std::condition_variable cv_;
};

}  // namespace colonies::executor
