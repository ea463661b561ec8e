#pragma once

// A cluster node over HTTP: ticks the election state machine, ships its
// messages to peers (POST <peer>/cluster, replies come back in the response
// body) and persists the durable vote state.

#include <atomic>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include "colonies/api/leadership.hpp"
#include "colonies/cluster/node.hpp"

namespace colonies::cluster {

struct Peer {
  std::string name;
  std::string url;  // e.g. http://10.0.0.2:50080
};

struct ClusterConfig {
  std::string self;
  std::vector<Peer> members;  // includes self
  Timing timing;
  std::filesystem::path state_file;  // empty: keep votes in memory only
};

class ClusterService final : public api::Leadership {
 public:
  ClusterService(ClusterConfig config, const Clock& clock);
  ~ClusterService() override;

  void start();
  void stop();

  // Body of POST /cluster; returns the reply messages.
  Json handle(const Json& body);

  bool is_leader() const override;
  std::int64_t term() const override;
  std::optional<std::string> leader_url() const override;
  void stale_term(std::int64_t highest) override;
  void store_health(bool healthy) override;
  Json status() const override;

 private:
  void loop();
  void send(std::vector<Message> out);
  void deliver(std::vector<Message> replies);
  void persist();
  void sender(const std::string& peer);

  ClusterConfig config_;
  const Clock& clock_;
  mutable std::mutex mu_;
  std::unique_ptr<Node> node_;
  Durable saved_;

  struct Outbox {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<Message> queue;
  };
  std::map<std::string, std::unique_ptr<Outbox>> outboxes_;
  std::vector<std::thread> threads_;
  std::atomic<bool> running_{false};
};

Durable load_durable(const std::filesystem::path& file);

}  // namespace colonies::cluster
