#include "colonies/api/server.hpp"

#include <cstdlib>
#include <fstream>

#include <spdlog/spdlog.h>

namespace colonies::api {

ServerConfig server_config_from_json(const Json& j) {
  ServerConfig c;
  c.http.host = j.value("host", c.http.host);
  c.http.port = j.value("port", c.http.port);
  c.http.threads = j.value("threads", c.http.threads);
  c.http.debug_routes = j.value("debugroutes", false);
  c.store_path = j.value("store", c.store_path);
  if (j.contains("serverid")) {
    c.server_owner = crypto::Identity::from_hex(j.at("serverid").get<std::string>());
  }
  c.scan_interval = std::chrono::milliseconds(j.value("scaninterval_ms", 1000));
  c.handler.assign.max_waiters = j.value("maxwaiters", c.handler.assign.max_waiters);
  if (j.contains("maxassigntimeout_s")) {
    c.handler.assign.max_timeout = seconds(j.at("maxassigntimeout_s").get<std::int64_t>());
  }
  if (j.contains("cluster")) {
    const Json& cj = j.at("cluster");
    cluster::ClusterConfig cc;
    cc.self = cj.at("self").get<std::string>();
    for (const auto& m : cj.at("members")) {
      cc.members.push_back({m.at("name").get<std::string>(), m.at("url").get<std::string>()});
    }
    cc.timing.heartbeat = millis(cj.value("heartbeat_ms", 50));
    cc.timing.election_min = millis(cj.value("electionmin_ms", 150));
    cc.timing.election_max = millis(cj.value("electionmax_ms", 300));
    if (cc.timing.heartbeat >= cc.timing.election_min ||
        cc.timing.election_min > cc.timing.election_max) {
      throw Error(Errc::kInvalidArgument,
                  "cluster timing needs heartbeat < electionmin <= electionmax");
    }
    cc.state_file = cj.value("statefile", std::string());
    c.cluster = std::move(cc);
  }
  return c;
}

ServerConfig load_server_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::kNotFound, "cannot read " + file.string());
  return server_config_from_json(Json::parse(in));
}

void apply_env_overrides(ServerConfig& config) {
  if (const char* h = std::getenv("COLONIES_SERVER_HOST")) config.http.host = h;
  if (const char* p = std::getenv("COLONIES_SERVER_PORT")) config.http.port = std::stoi(p);
  if (const char* id = std::getenv("COLONIES_SERVER_ID")) {
    config.server_owner = crypto::Identity::from_hex(id);
  }
  if (const char* k = std::getenv("COLONIES_PRVKEY")) {
    config.server_owner = crypto::PrivateKey::from_hex(k).identity();
  }
}

ColoniesServer::ColoniesServer(ServerConfig config) : config_(std::move(config)) {
  if (config_.server_owner.empty()) {
    throw Error(Errc::kInvalidArgument, "no server owner identity configured");
  }
  store::StoreOptions so;
  so.path = config_.store_path;
  store_ = std::make_unique<store::Store>(so);

  if (config_.cluster) {
    auto svc = std::make_unique<cluster::ClusterService>(*config_.cluster, clock_);
    cluster_ = svc.get();
    leadership_ = std::move(svc);
  } else {
    std::int64_t term = std::max<std::int64_t>(
        1, store_->read([](store::Tx& tx) { return tx.fenced_term(); }));
    leadership_ = std::make_unique<StandaloneLeadership>(term);
  }
  handler_ = std::make_unique<ApiHandler>(*store_, clock_, ids_, hub_, *leadership_,
                                          config_.server_owner, config_.handler);
  std::function<Json(const Json&)> peer;
  if (cluster_) peer = [svc = cluster_](const Json& body) { return svc->handle(body); };
  http_ = std::make_unique<HttpServer>(*handler_, config_.http, std::move(peer));
  duties_ = std::make_unique<cluster::LeaderDuties>(*store_, clock_, ids_, *leadership_, &hub_);
}

ColoniesServer::~ColoniesServer() { stop(); }

void ColoniesServer::start() {
  {
    std::lock_guard lock(mu_);
    if (running_) return;
    running_ = true;
    stopped_ = false;
  }
  http_->start();
  if (cluster_) cluster_->start();
  scanner_ = std::thread([this] { scan_loop(); });
  spdlog::info(R"({{"event":"server-start","port":{},"cluster":{}}})", http_->port(),
               cluster_ != nullptr);
}

void ColoniesServer::stop() {
  std::lock_guard teardown(stop_mu_);
  {
    std::lock_guard lock(mu_);
    if (!running_) return;
    running_ = false;
  }
  cv_.notify_all();
  hub_.notify_all();
  if (scanner_.joinable()) scanner_.join();
  if (cluster_) cluster_->stop();
  http_->stop();
  {
    std::lock_guard lock(mu_);
    stopped_ = true;
  }
  cv_.notify_all();
}

void ColoniesServer::wait() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [this] { return stopped_; });
}

void ColoniesServer::scan_loop() {
  std::unique_lock lock(mu_);
  while (running_) {
    lock.unlock();
    try {
      duties_->run_once();
    } catch (const std::exception& e) {
      spdlog::warn(R"({{"event":"scan-error","message":"{}"}})", e.what());
    }
    lock.lock();
    cv_.wait_for(lock, config_.scan_interval, [this] { return !running_; });
  }
}

}  // namespace colonies::api
