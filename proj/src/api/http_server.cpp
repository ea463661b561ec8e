#include "colonies/api/http_server.hpp"

#include <spdlog/spdlog.h>

#include "httplib.h"

#include "colonies/core/error.hpp"

namespace colonies::api {
namespace {

constexpr const char* kJson = "application/json";

void forward(const std::string& leader, const std::string& body,
             httplib::Response& res) {
  httplib::Client cli(leader);
  cli.set_connection_timeout(2, 0);
  cli.set_read_timeout(std::chrono::seconds(620));
  auto r = cli.Post("/api", body, kJson);
  if (!r) {
    Reply e = Reply::error(Errc::kLeaderUnknown, "leader unreachable; retry");
    res.status = e.status;
    res.set_content(e.body.dump(), kJson);
    return;
  }
  res.status = r->status;
  if (!r->body.empty()) res.set_content(r->body, kJson);
}

}  // namespace

HttpServer::HttpServer(ApiHandler& handler, HttpOptions options,
                       std::function<Json(const Json&)> cluster)
    : handler_(handler), options_(std::move(options)), cluster_(std::move(cluster)) {}

HttpServer::~HttpServer() { stop(); }

void HttpServer::start() {
  server_ = std::make_unique<httplib::Server>();
  std::size_t threads = options_.threads;
  server_->new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  server_->set_read_timeout(std::chrono::seconds(30));
  server_->set_write_timeout(std::chrono::seconds(30));
  server_->set_keep_alive_max_count(1000);
  server_->set_keep_alive_timeout(30);

  server_->Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", kJson);
  });

  server_->Post("/api", [this](const httplib::Request& req, httplib::Response& res) {
    Reply reply = handler_.handle(req.body, &stopping_);
    if (reply.forward_to) {
      forward(*reply.forward_to, req.body, res);
      return;
    }
    if (reply.stream) {
      auto sub = reply.stream;
      res.status = 200;
      res.set_chunked_content_provider(
          "application/x-ndjson",
          [this, sub](std::size_t, httplib::DataSink& sink) {
            while (!sub->done() && !stopping_.load()) {
              if (!sink.is_writable()) return false;
              auto events = sub->next(std::chrono::milliseconds(1000));
              for (const auto& e : events) {
                std::string line = store::to_json(e).dump() + "\n";
                if (!sink.write(line.data(), line.size())) return false;
              }
            }
            sink.done();
            return true;
          });
      return;
    }
    res.status = reply.status;
    if (!reply.body.is_null()) res.set_content(reply.body.dump(), kJson);
  });

  server_->Post("/cluster", [this](const httplib::Request& req, httplib::Response& res) {
    if (!cluster_) {
      res.status = 404;
      return;
    }
    try {
      res.set_content(cluster_(Json::parse(req.body)).dump(), kJson);
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(Reply::error(Errc::kInvalidArgument, e.what()).body.dump(), kJson);
    }
  });

  if (options_.debug_routes) {
    server_->Get(R"(/debug/process/([0-9a-f]{64}))",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   auto p = handler_.store().read(
                       [&](store::Tx& tx) { return tx.find_process(req.matches[1]); });
                   if (!p) {
                     res.status = 404;
                     return;
                   }
                   res.set_content(to_json(*p).dump(), kJson);
                 });
    server_->Get(R"(/debug/colony/([0-9a-f]{64}))",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   auto c = handler_.store().read(
                       [&](store::Tx& tx) { return tx.find_colony(req.matches[1]); });
                   if (!c) {
                     res.status = 404;
                     return;
                   }
                   res.set_content(to_json(*c).dump(), kJson);
                 });
  }

  if (options_.port == 0) {
    port_ = server_->bind_to_any_port(options_.host);
  } else {
    port_ = server_->bind_to_port(options_.host, options_.port) ? options_.port : -1;
  }
  if (port_ < 0) {
    throw Error(Errc::kInternal, "cannot bind " + options_.host + ":" +
                                     std::to_string(options_.port));
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void HttpServer::stop() {
  std::lock_guard lock(stop_mu_);
  if (!server_) return;
  stopping_.store(true);
  server_->stop();
  if (thread_.joinable()) thread_.join();
  server_.reset();
}

}  // namespace colonies::api
