#pragma once

// A complete server process: store, request handler, HTTP transport, and
// either a standalone leader or a cluster member, plus the scan loop.

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

#include "colonies/api/handler.hpp"
#include "colonies/api/http_server.hpp"
#include "colonies/cluster/duties.hpp"
#include "colonies/cluster/service.hpp"

namespace colonies::api {

struct ServerConfig {
  HttpOptions http;
  std::string store_path = "colonies.db";
  crypto::Identity server_owner;
  std::optional<cluster::ClusterConfig> cluster;
  std::chrono::milliseconds scan_interval{1000};
  HandlerOptions handler;
};

// Reads a JSON config file; missing keys keep their defaults.
//   {"host","port","store","serverid","threads","debugroutes","scaninterval_ms",
//    "maxwaiters","maxassigntimeout_s",
//    "cluster":{"self","members":[{"name","url"}],"heartbeat_ms",
//               "electionmin_ms","electionmax_ms","statefile"}}
ServerConfig load_server_config(const std::filesystem::path& file);
ServerConfig server_config_from_json(const Json& j);
// COLONIES_SERVER_HOST, COLONIES_SERVER_PORT, COLONIES_SERVER_ID (owner
// identity) and COLONIES_PRVKEY (owner key; its identity becomes the owner).
void apply_env_overrides(ServerConfig& config);

class ColoniesServer {
 public:
  // Throws Error(kInvalidArgument) when no server owner is configured.
  explicit ColoniesServer(ServerConfig config);
  ~ColoniesServer();

  void start();
  void stop();
  int port() const { return http_->port(); }
  store::Store& store() { return *store_; }
  Leadership& leadership() { return *leadership_; }
  // Blocks until stop() is called from elsewhere.
  void wait();

 private:
  void scan_loop();

  ServerConfig config_;
  SystemClock clock_;
  RandomIdSource ids_;
  std::unique_ptr<store::Store> store_;
  assign::WakeupHub hub_;
  std::unique_ptr<Leadership> leadership_;
  cluster::ClusterService* cluster_ = nullptr;
  std::unique_ptr<ApiHandler> handler_;
  std::unique_ptr<HttpServer> http_;
  std::unique_ptr<cluster::LeaderDuties> duties_;
  std::thread scanner_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::mutex stop_mu_;
  bool running_ = false;
  bool stopped_ = false;
};

}  // namespace colonies::api
