#include "colonies/cluster/service.hpp"

#include <fstream>

#include <spdlog/spdlog.h>

#include "httplib.h"

#include "colonies/core/error.hpp"

namespace colonies::cluster {
namespace {

constexpr std::size_t kMaxQueued = 64;

std::uint64_t seed_for(const std::string& name, Nanos now) {
  return std::hash<std::string>{}(name) ^ static_cast<std::uint64_t>(now);
}

}  // namespace

Durable load_durable(const std::filesystem::path& file) {
  Durable d;
  if (file.empty() || !std::filesystem::exists(file)) return d;
  std::ifstream in(file);
  Json j = Json::parse(in, nullptr, false);
  if (j.is_object()) {
    d.term = j.value("term", std::int64_t{0});
    d.voted_for = j.value("votedfor", std::string());
  }
  return d;
}

ClusterService::ClusterService(ClusterConfig config, const Clock& clock)
    : config_(std::move(config)), clock_(clock) {
  std::vector<std::string> peers;
  bool found = false;
  for (const auto& m : config_.members) {
    if (m.name == config_.self) {
      found = true;
    } else {
      peers.push_back(m.name);
      outboxes_[m.name] = std::make_unique<Outbox>();
    }
  }
  if (!found) {
    throw Error(Errc::kInvalidArgument, "cluster members do not include " + config_.self);
  }
  saved_ = load_durable(config_.state_file);
  node_ = std::make_unique<Node>(config_.self, peers, config_.timing,
                                 seed_for(config_.self, clock_.now()), saved_);
}

ClusterService::~ClusterService() { stop(); }

void ClusterService::start() {
  if (running_.exchange(true)) return;
  threads_.emplace_back([this] { loop(); });
  for (auto& [peer, box] : outboxes_) {
    threads_.emplace_back([this, p = peer] { sender(p); });
  }
}

void ClusterService::stop() {
  if (!running_.exchange(false)) return;
  for (auto& [peer, box] : outboxes_) {
    std::lock_guard lock(box->mu);
    box->cv.notify_all();
  }
  for (auto& t : threads_) t.join();
  threads_.clear();
}

void ClusterService::persist() {
  const Durable& d = node_->durable();
  if (d.term == saved_.term && d.voted_for == saved_.voted_for) return;
  saved_ = d;
  if (config_.state_file.empty()) return;
  auto tmp = config_.state_file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << Json{{"term", d.term}, {"votedfor", d.voted_for}}.dump() << '\n';
    out.flush();
  }
  std::filesystem::rename(tmp, config_.state_file);
}

void ClusterService::send(std::vector<Message> out) {
  for (auto& m : out) {
    auto it = outboxes_.find(m.to);
    if (it == outboxes_.end()) continue;
    std::lock_guard lock(it->second->mu);
    if (it->second->queue.size() >= kMaxQueued) it->second->queue.pop_front();
    it->second->queue.push_back(std::move(m));
    it->second->cv.notify_one();
  }
}

void ClusterService::deliver(std::vector<Message> replies) {
  std::vector<Message> out;
  {
    std::lock_guard lock(mu_);
    for (const auto& m : replies) {
      auto more = node_->receive(m, clock_.now());
      out.insert(out.end(), more.begin(), more.end());
    }
    persist();
  }
  send(std::move(out));
}

void ClusterService::loop() {
  while (running_.load()) {
    std::vector<Message> out;
    {
      std::lock_guard lock(mu_);
      Role before = node_->role();
      out = node_->tick(clock_.now());
      persist();
      if (node_->role() != before) {
        spdlog::info("cluster: {} is now {} (term {})", config_.self,
                     role_name(node_->role()), node_->term());
      }
    }
    send(std::move(out));
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
}

void ClusterService::sender(const std::string& peer) {
  std::string url;
  for (const auto& m : config_.members) {
    if (m.name == peer) url = m.url;
  }
  httplib::Client cli(url);
  cli.set_connection_timeout(0, 100'000);
  cli.set_read_timeout(0, 500'000);
  cli.set_keep_alive(true);
  auto& box = *outboxes_.at(peer);
  while (running_.load()) {
    Message m;
    {
      std::unique_lock lock(box.mu);
      box.cv.wait(lock, [&] { return !box.queue.empty() || !running_.load(); });
      if (!running_.load()) return;
      m = std::move(box.queue.front());
      box.queue.pop_front();
    }
    auto res = cli.Post("/cluster", to_json(m).dump(), "application/json");
    if (!res || res->status != 200) continue;
    Json body = Json::parse(res->body, nullptr, false);
    if (!body.is_array()) continue;
    std::vector<Message> replies;
    try {
      for (const auto& r : body) replies.push_back(message_from_json(r));
    } catch (const std::exception&) {
      continue;
    }
    deliver(std::move(replies));
  }
}

Json ClusterService::handle(const Json& body) {
  Message m = message_from_json(body);
  std::vector<Message> replies;
  {
    std::lock_guard lock(mu_);
    replies = node_->receive(m, clock_.now());
    persist();
  }
  Json out = Json::array();
  std::vector<Message> other;
  for (auto& r : replies) {
    if (r.to == m.from) {
      out.push_back(to_json(r));
    } else {
      other.push_back(std::move(r));
    }
  }
  send(std::move(other));
  return out;
}

bool ClusterService::is_leader() const {
  std::lock_guard lock(mu_);
  return node_->role() == Role::kLeader;
}

std::int64_t ClusterService::term() const {
  std::lock_guard lock(mu_);
  return node_->term();
}

std::optional<std::string> ClusterService::leader_url() const {
  std::lock_guard lock(mu_);
  const auto& leader = node_->leader();
  if (!leader) return std::nullopt;
  for (const auto& m : config_.members) {
    if (m.name == *leader) return m.url;
  }
  return std::nullopt;
}

void ClusterService::stale_term(std::int64_t highest) {
  std::lock_guard lock(mu_);
  node_->observe_term(highest, clock_.now());
  persist();
}

void ClusterService::store_health(bool healthy) {
  std::lock_guard lock(mu_);
  if (node_->store_healthy() != healthy) {
    spdlog::warn("cluster: {} store {}", config_.self, healthy ? "reachable" : "unreachable");
  }
  node_->set_store_healthy(healthy, clock_.now());
}

Json ClusterService::status() const {
  std::lock_guard lock(mu_);
  Json members = Json::array();
  for (const auto& m : config_.members) members.push_back({{"name", m.name}, {"url", m.url}});
  return {{"name", config_.self},
          {"role", std::string(role_name(node_->role()))},
          {"term", node_->term()},
          {"leader", node_->leader().value_or("")},
          {"members", members}};
}

}  // namespace colonies::cluster
