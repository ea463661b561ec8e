// colonies-executor: the reference executor. --concurrency N runs N
// independent instances, each with its own key and registration.

#include <pthread.h>

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "colonies/core/error.hpp"
#include "colonies/executor/runtime.hpp"

using namespace colonies;

int main(int argc, char** argv) {
  CLI::App app{"colonies-executor: reference executor"};
  executor::RuntimeOptions base;
  std::string key_file, colony_key_file, functions, storage_dir, s3_endpoint, s3_bucket = "colonies";
  int concurrency = 1;
  std::int64_t delay_ms = 0;
  std::string host;
  int port = 0;

  app.add_option("--host", host, "server host (COLONIES_SERVER_HOST)");
  app.add_option("--port", port, "server port (COLONIES_SERVER_PORT)");
  app.add_option("--colony", base.colony_id, "colony id (COLONIES_COLONY_ID)");
  app.add_option("--key-file", key_file, "executor key (COLONIES_PRVKEY_FILE)");
  app.add_option("--register-with", colony_key_file,
                 "colony owner key; register and approve before running");
  app.add_option("--name", base.name, "executor name")->required();
  app.add_option("--type", base.type, "executor type")->required();
  app.add_option("--functions", functions, "comma-separated functions to advertise");
  app.add_option("--poll-timeout", base.poll_timeout_seconds, "assign long-poll seconds");
  app.add_option("--exec-delay-ms", delay_ms, "sleep inside each execution");
  app.add_flag("--allow-exec", base.allow_exec, "enable the unsandboxed execute function");
  app.add_option("--fs-root", base.fs_root, "workdir root for fs directives");
  app.add_option("--storage-dir", storage_dir, "local object directory");
  app.add_option("--s3-endpoint", s3_endpoint, "S3 endpoint");
  app.add_option("--s3-bucket", s3_bucket, "S3 bucket");
  app.add_option("--concurrency", concurrency, "independent instances")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  auto env = [](const char* name) -> std::string {
    const char* v = std::getenv(name);
    return v ? v : "";
  };
  base.host = !host.empty() ? host : (env("COLONIES_SERVER_HOST").empty() ? "localhost"
                                                                          : env("COLONIES_SERVER_HOST"));
  base.port = port != 0 ? port
                        : (env("COLONIES_SERVER_PORT").empty() ? 50080
                                                               : std::stoi(env("COLONIES_SERVER_PORT")));
  if (base.colony_id.empty()) base.colony_id = env("COLONIES_COLONY_ID");
  if (key_file.empty()) key_file = env("COLONIES_PRVKEY_FILE");
  base.exec_delay = std::chrono::milliseconds(delay_ms);
  for (std::size_t pos = 0; pos < functions.size();) {
    auto comma = functions.find(',', pos);
    if (comma == std::string::npos) comma = functions.size();
    if (comma > pos) base.functions.push_back(functions.substr(pos, comma - pos));
    pos = comma + 1;
  }
  if (!storage_dir.empty() || !s3_endpoint.empty()) {
    base.drivers = std::make_shared<metafs::Drivers>();
    if (!s3_endpoint.empty()) base.drivers->add(std::make_shared<metafs::S3Driver>(s3_endpoint, s3_bucket));
    if (!storage_dir.empty()) base.drivers->add(std::make_shared<metafs::LocalDirDriver>(storage_dir));
  }

  try {
    if (base.colony_id.empty()) throw Error(Errc::kInvalidArgument, "no colony id");
    if (concurrency > 1 && colony_key_file.empty()) {
      throw Error(Errc::kInvalidArgument, "--concurrency > 1 needs --register-with");
    }
    std::vector<std::unique_ptr<executor::ExecutorRuntime>> runtimes;
    for (int i = 0; i < concurrency; ++i) {
      auto key = (concurrency == 1 && !key_file.empty()) ? crypto::load_key(key_file)
                                                         : crypto::PrivateKey::generate();
      auto opts = base;
      if (concurrency > 1) opts.name += "-" + std::to_string(i);
      auto rt = std::make_unique<executor::ExecutorRuntime>(key, opts);
      if (!colony_key_file.empty()) {
        rt->register_with(crypto::load_key(colony_key_file));
      } else {
        for (const auto& fn : opts.functions) {
          rt->client().add_function(rt->executor_id(), opts.colony_id, fn, key);
        }
      }
      std::cerr << "executor " << rt->executor_id() << " ready\n";
      runtimes.push_back(std::move(rt));
    }

    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    std::thread([&runtimes, set] {
      int sig = 0;
      sigwait(&set, &sig);
      for (auto& rt : runtimes) rt->stop();
    }).detach();

    std::vector<std::thread> threads;
    for (auto& rt : runtimes) threads.emplace_back([&rt] { rt->run(); });
    for (auto& t : threads) t.join();
  } catch (const Error& e) {
    std::cerr << Json{{"error", {{"code", std::string(errc_name(e.code()))}, {"message", e.what()}}}}
                     .dump()
              << "\n";
    return 1;
  }
  return 0;
}
