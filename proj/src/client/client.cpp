#include "colonies/client/client.hpp"

#include "colonies/api/envelope.hpp"
#include "colonies/core/error.hpp"
#include "httplib.h"

namespace colonies::client {
namespace {

Json parse_reply(int status, const std::string& body) {
  if (status == 204) return Json();
  Json j;
  try {
    j = Json::parse(body);
  } catch (const Json::exception&) {
    throw Error(Errc::kInternal, "unparseable response (HTTP " + std::to_string(status) + ")");
  }
  if (status >= 400 || (j.is_object() && j.contains("error") && j.size() == 1)) {
    const Json& e = j.at("error");
    throw Error(errc_from_name(e.value("code", "internal")), e.value("message", ""));
  }
  return j;
}

template <class T, class F>
std::vector<T> list_of(const Json& j, F from) {
  std::vector<T> out;
  for (const auto& item : j) out.push_back(from(item));
  return out;
}

}  // namespace

Client::Client(std::string host, int port, const Clock* clock)
    : host_(std::move(host)), port_(port), clock_(clock ? clock : &system_) {}

Client::~Client() = default;

std::shared_ptr<httplib::Client> Client::connect(std::chrono::seconds read_timeout) {
  auto c = std::make_shared<httplib::Client>(host_, port_);
  c->set_connection_timeout(5, 0);
  c->set_read_timeout(read_timeout);
  c->set_write_timeout(std::chrono::seconds(30));
  std::lock_guard lock(mu_);
  active_ = c;
  return c;
}

void Client::release(const std::shared_ptr<httplib::Client>& c) {
  std::lock_guard lock(mu_);
  if (active_ == c) active_.reset();
}

void Client::abort() {
  std::lock_guard lock(mu_);
  if (active_) active_->stop();
}

Json Client::call(const std::string& method, Json payload, const crypto::PrivateKey& key,
                  std::chrono::seconds read_timeout) {
  std::string body = api::make_envelope(method, std::move(payload), key, clock_->now()).dump();
  if (tap_) tap_(body);
  auto c = connect(read_timeout);
  auto res = c->Post("/api", body, "application/json");
  release(c);
  if (!res) {
    throw Error(Errc::kConnectionRefused, "cannot reach " + host_ + ":" +
                                              std::to_string(port_) + " (" +
                                              httplib::to_string(res.error()) + ")");
  }
  return parse_reply(res->status, res->body);
}

Colony Client::add_colony(const Colony& colony, const crypto::PrivateKey& key) {
  return colony_from_json(call("addcolony", {{"colony", to_json(colony)}}, key));
}

void Client::remove_colony(const std::string& colony_id, const crypto::PrivateKey& key) {
  call("removecolony", {{"colonyid", colony_id}}, key);
}

std::vector<Colony> Client::get_colonies(const crypto::PrivateKey& key) {
  return list_of<Colony>(call("getcolonies", Json::object(), key), colony_from_json);
}

ExecutorRecord Client::add_executor(const ExecutorRecord& e, const crypto::PrivateKey& key) {
  return executor_from_json(call("addexecutor", {{"executor", to_json(e)}}, key));
}

ExecutorRecord Client::approve_executor(const std::string& id, const crypto::PrivateKey& key) {
  return executor_from_json(call("approveexecutor", {{"executorid", id}}, key));
}

void Client::remove_executor(const std::string& id, const crypto::PrivateKey& key) {
  call("removeexecutor", {{"executorid", id}}, key);
}

std::vector<ExecutorRecord> Client::get_executors(const std::string& colony_id,
                                                  const crypto::PrivateKey& key) {
  return list_of<ExecutorRecord>(call("getexecutors", {{"colonyid", colony_id}}, key),
                                 executor_from_json);
}

ExecutorRecord Client::add_function(const std::string& executor_id,
                                    const std::string& colony_id,
                                    const std::string& func_name,
                                    const crypto::PrivateKey& key) {
  return executor_from_json(call(
      "addfunction",
      {{"executorid", executor_id}, {"colonyid", colony_id}, {"funcname", func_name}}, key));
}

Process Client::submit(const FunctionSpec& spec, const crypto::PrivateKey& key) {
  return process_from_json(call("submitfuncspec", {{"spec", to_json(spec)}}, key));
}

Json Client::submit_workflow(const std::string& colony_id,
                             const std::vector<FunctionSpec>& specs,
                             const crypto::PrivateKey& key) {
  return call("submitworkflow",
              {{"colonyid", colony_id}, {"specs", workflow_to_json(specs)}}, key);
}

Json Client::get_workflow(const std::string& workflow_id, const crypto::PrivateKey& key) {
  return call("getworkflow", {{"workflowid", workflow_id}}, key);
}

std::optional<Process> Client::assign(const std::string& colony_id, double timeout_seconds,
                                      const crypto::PrivateKey& key) {
  auto wait = std::chrono::seconds(static_cast<std::int64_t>(timeout_seconds) + 30);
  Json j = call("assign", {{"colonyid", colony_id}, {"timeout", timeout_seconds}}, key, wait);
  if (j.is_null()) return std::nullopt;
  return process_from_json(j);
}

Process Client::close(const std::string& process_id, const Json& output,
                      const crypto::PrivateKey& key) {
  return process_from_json(
      call("close", {{"processid", process_id}, {"success", true}, {"out", output}}, key));
}

Process Client::fail(const std::string& process_id, const std::vector<std::string>& errors,
                     const crypto::PrivateKey& key) {
  return process_from_json(
      call("close", {{"processid", process_id}, {"success", false}, {"errors", errors}}, key));
}

Process Client::get_process(const std::string& process_id, const crypto::PrivateKey& key) {
  return process_from_json(call("getprocess", {{"processid", process_id}}, key));
}

std::vector<Process> Client::get_processes(const std::string& colony_id,
                                           std::optional<ProcessState> state,
                                           std::int64_t count,
                                           const crypto::PrivateKey& key) {
  Json payload = {{"colonyid", colony_id}, {"count", count}};
  if (state) payload["state"] = std::string(state_name(*state));
  return list_of<Process>(call("getprocesses", payload, key), process_from_json);
}

Process Client::add_child(const std::string& parent_id, const FunctionSpec& spec,
                          bool insert_before, const crypto::PrivateKey& key) {
  return process_from_json(call(
      "addchild",
      {{"processid", parent_id}, {"spec", to_json(spec)}, {"insertbefore", insert_before}},
      key));
}

void Client::subscribe(const std::string& process_id, const crypto::PrivateKey& key,
                       const std::function<bool(const Json&)>& on_event) {
  Json env = api::make_envelope("subscribe", {{"processid", process_id}}, key, clock_->now());
  std::string body = env.dump();
  if (tap_) tap_(body);
  auto c = connect(std::chrono::seconds(3600));

  std::string buffer;
  std::string raw;  // the whole body, for error replies
  bool stopped = false;
  httplib::Request req;
  req.method = "POST";
  req.path = "/api";
  req.body = body;
  req.set_header("Content-Type", "application/json");
  req.content_receiver = [&](const char* data, std::size_t n, std::uint64_t, std::uint64_t) {
    buffer.append(data, n);
    if (raw.size() < 4096) raw.append(data, n);
    std::size_t pos;
    while ((pos = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, pos);
      buffer.erase(0, pos + 1);
      if (line.empty()) continue;
      if (!on_event(Json::parse(line))) {
        stopped = true;
        return false;
      }
    }
    return true;
  };
  auto res = c->send(req);
  release(c);
  if (stopped) return;
  if (!res) {
    throw Error(Errc::kConnectionRefused, "subscribe stream failed (" +
                                              httplib::to_string(res.error()) + ")");
  }
  if (res->status != 200) parse_reply(res->status, raw);
}

CronDef Client::add_cron(const CronDef& cron, const crypto::PrivateKey& key) {
  return cron_from_json(call("addcron", {{"cron", to_json(cron)}}, key));
}

std::vector<CronDef> Client::get_crons(const std::string& colony_id,
                                       const crypto::PrivateKey& key) {
  return list_of<CronDef>(call("getcrons", {{"colonyid", colony_id}}, key), cron_from_json);
}

GeneratorDef Client::add_generator(const GeneratorDef& g, const crypto::PrivateKey& key) {
  return generator_from_json(call("addgenerator", {{"generator", to_json(g)}}, key));
}

void Client::pack(const std::string& generator_id, const Json& payload,
                  const crypto::PrivateKey& key) {
  call("pack", {{"generatorid", generator_id}, {"payload", payload}}, key);
}

Json Client::statistics(const std::string& colony_id, const crypto::PrivateKey& key) {
  return call("getstatistics", {{"colonyid", colony_id}}, key);
}

Json Client::cluster_status(const crypto::PrivateKey& key) {
  return call("getcluster", Json::object(), key);
}

FileMeta ApiCatalog::add_file(const FileMeta& meta) {
  return file_from_json(client_.call("addfile", {{"file", to_json(meta)}}, key_));
}

FileMeta ApiCatalog::get_file(const std::string& file_id) {
  return file_from_json(client_.call("getfile", {{"fileid", file_id}}, key_));
}

std::vector<FileMeta> ApiCatalog::list_files(const std::string& colony_id,
                                             const std::string& label) {
  return list_of<FileMeta>(
      client_.call("getfiles", {{"colonyid", colony_id}, {"label", label}}, key_),
      file_from_json);
}

Snapshot ApiCatalog::create_snapshot(const std::string& colony_id, const std::string& label) {
  return snapshot_from_json(
      client_.call("createsnapshot", {{"colonyid", colony_id}, {"label", label}}, key_));
}

Snapshot ApiCatalog::get_snapshot(const std::string& snapshot_id) {
  return snapshot_from_json(client_.call("getsnapshot", {{"snapshotid", snapshot_id}}, key_));
}

void ApiCatalog::remove_snapshot(const std::string& snapshot_id) {
  client_.call("removesnapshot", {{"snapshotid", snapshot_id}}, key_);
}

}  // namespace colonies::client
