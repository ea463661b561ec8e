#pragma once

// Real servers on loopback: a ColoniesServer over a scratch store, the
// owner keys, and executor runtimes on threads.

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <memory>
#include <thread>
#include <vector>

#include "colonies/api/server.hpp"
#include "colonies/client/client.hpp"
#include "colonies/core/error.hpp"
#include "colonies/executor/runtime.hpp"
#include "world.hpp"

namespace live {

using namespace colonies;

// Asks the kernel for a free loopback port. Racy, but cluster members need
// their peers' URLs before anything binds.
inline int free_port() {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in a{};
  a.sin_family = AF_INET;
  a.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  a.sin_port = 0;
  ::bind(fd, reinterpret_cast<sockaddr*>(&a), sizeof a);
  socklen_t len = sizeof a;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&a), &len);
  int port = ntohs(a.sin_port);
  ::close(fd);
  return port;
}

struct Keys {
  crypto::PrivateKey server = crypto::PrivateKey::generate();
  crypto::PrivateKey colony = crypto::PrivateKey::generate();
  std::string colony_id() const { return colony.identity().str(); }
};

inline api::ServerConfig config(const std::filesystem::path& db, const Keys& k, int port = 0) {
  api::ServerConfig c;
  c.http.host = "127.0.0.1";
  c.http.port = port;
  c.http.threads = 256;
  c.store_path = db.string();
  c.server_owner = k.server.identity();
  c.scan_interval = std::chrono::milliseconds(100);
  c.handler.assign.rescan = std::chrono::milliseconds(100);
  return c;
}

// One standalone server with a colony already added.
struct Live {
  world::TempPath db{"colonies-live"};
  Keys keys;
  std::unique_ptr<api::ColoniesServer> server;
  std::unique_ptr<client::Client> admin;

  explicit Live(std::function<void(api::ServerConfig&)> tweak = nullptr) {
    start(tweak);
    admin->add_colony({keys.colony_id(), "live"}, keys.server);
  }
  ~Live() {
    if (server) server->stop();
  }

  void start(const std::function<void(api::ServerConfig&)>& tweak = nullptr) {
    auto c = config(db.path, keys);
    if (tweak) tweak(c);
    server = std::make_unique<api::ColoniesServer>(c);
    server->start();
    admin = std::make_unique<client::Client>("127.0.0.1", server->port());
  }
  void stop() {
    server->stop();
    server.reset();
  }
  int port() const { return server->port(); }
  std::string colony() const { return keys.colony_id(); }

  executor::RuntimeOptions options(const std::string& name, const std::string& type) const {
    executor::RuntimeOptions o;
    o.host = "127.0.0.1";
    o.port = port();
    o.colony_id = colony();
    o.name = name;
    o.type = type;
    o.poll_timeout_seconds = 1;
    return o;
  }

  FunctionSpec spec(const std::string& func, const std::string& type) const {
    FunctionSpec s;
    s.func_name = func;
    s.conditions.colony_id = colony();
    s.conditions.executor_type = type;
    return s;
  }
};

// Runtimes on their own threads; stops and joins on destruction.
class Fleet {
 public:
  ~Fleet() { stop(); }

  executor::ExecutorRuntime& add(executor::RuntimeOptions o, const crypto::PrivateKey& colony_key,
                                 const Clock* clock = nullptr) {
    auto rt = std::make_unique<executor::ExecutorRuntime>(crypto::PrivateKey::generate(),
                                                          std::move(o), clock);
    rt->register_with(colony_key);
    runtimes_.push_back(std::move(rt));
    return *runtimes_.back();
  }

  void start() {
    for (std::size_t i = threads_.size(); i < runtimes_.size(); ++i) {
      threads_.emplace_back([rt = runtimes_[i].get()] { rt->run(); });
    }
  }

  void stop() {
    for (auto& rt : runtimes_) rt->stop();
    for (auto& t : threads_) {
      if (t.joinable()) t.join();
    }
    threads_.clear();
  }

  std::size_t size() const { return runtimes_.size(); }
  executor::ExecutorRuntime& operator[](std::size_t i) { return *runtimes_[i]; }

 private:
  std::vector<std::unique_ptr<executor::ExecutorRuntime>> runtimes_;
  std::vector<std::thread> threads_;
};

// Polls `done` every 10 ms until it holds or `limit` passes.
inline bool eventually(const std::function<bool()>& done,
                       std::chrono::milliseconds limit = std::chrono::seconds(10)) {
  auto end = std::chrono::steady_clock::now() + limit;
  while (std::chrono::steady_clock::now() < end) {
    if (done()) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  return done();
}

}  // namespace live
