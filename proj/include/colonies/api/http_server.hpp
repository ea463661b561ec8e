#pragma once

// HTTP transport: POST /api (signed envelopes), POST /cluster (peer
// election traffic), GET /health. Follower replicas forward assigns to the
// leader; subscriptions stream one JSON event per line.

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "colonies/api/handler.hpp"

namespace httplib {
class Server;
}

namespace colonies::api {

struct HttpOptions {
  std::string host = "0.0.0.0";
  int port = 50080;  // 0 picks a free port
  std::size_t threads = 512;
  // Unsigned read-only GET /debug/... routes. Off unless asked for.
  bool debug_routes = false;
};

class HttpServer {
 public:
  // `cluster` handles /cluster bodies; null for a standalone server.
  HttpServer(ApiHandler& handler, HttpOptions options,
             std::function<Json(const Json&)> cluster = nullptr);
  ~HttpServer();

  // Binds and serves on a background thread. Throws Error(kInternal) when
  // the address cannot be bound.
  void start();
  void stop();
  int port() const { return port_; }

 private:
  ApiHandler& handler_;
  HttpOptions options_;
  std::function<Json(const Json&)> cluster_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::atomic<bool> stopping_{false};
  std::mutex stop_mu_;
  int port_ = 0;
};

}  // namespace colonies::api
