#pragma once

// The request sequence behind the golden wire corpus: the helloworld flow
// (register, approve, add function, submit, assign, close, query) plus a few
// rejected requests. Payload builders may read earlier responses by step
// name, since process ids come from the server.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "colonies/core/model.hpp"
#include "colonies/crypto/keys.hpp"

namespace corpus {

using colonies::Json;
using colonies::Nanos;

inline const std::string kServerKey(64, '1');
inline const std::string kColonyKey(64, '2');
inline const std::string kExecutorKey(64, '3');
inline constexpr Nanos kStart = 1'700'000'000'000'000'000LL;
inline constexpr std::uint64_t kIdSeed = 2024;

using Responses = std::map<std::string, Json>;

struct Step {
  std::string name;
  std::string method;
  std::string signer;  // server | colony | executor
  Nanos timestamp;
  Nanos server_time;
  std::function<Json(const Responses&)> payload;
};

inline std::string id_of(const std::string& hex) {
  return colonies::crypto::PrivateKey::from_hex(hex).identity().str();
}

inline colonies::ExecutorRecord executor() {
  colonies::ExecutorRecord e;
  e.executor_id = id_of(kExecutorKey);
  e.executor_name = "helloworld-executor";
  e.executor_type = "helloworld-executor";
  e.colony_id = id_of(kColonyKey);
  return e;
}

inline colonies::FunctionSpec helloworld() {
  colonies::FunctionSpec s;
  s.func_name = "helloworld";
  s.conditions.colony_id = id_of(kColonyKey);
  s.conditions.executor_type = "helloworld-executor";
  s.priority = 0;
  s.max_exec_time = 100;
  s.max_retries = 3;
  s.max_wait_time = -1;
  return s;
}

inline std::vector<Step> steps() {
  std::vector<Step> out;
  Nanos t = kStart;
  auto add = [&](std::string name, std::string method, std::string signer,
                 std::function<Json(const Responses&)> payload, Nanos skew = 0) {
    t += colonies::kNanosPerSecond;
    out.push_back({std::move(name), std::move(method), std::move(signer), t, t + skew,
                   std::move(payload)});
  };
  std::string colony = id_of(kColonyKey);
  auto pid = [](const Responses& r) { return r.at("submit").at("processid"); };

  add("add_colony", "addcolony", "server",
      [=](const Responses&) { return Json{{"colony", colonies::to_json(colonies::Colony{colony, "dev"})}}; });
  add("add_executor", "addexecutor", "colony",
      [](const Responses&) { return Json{{"executor", colonies::to_json(executor())}}; });
  add("approve_executor", "approveexecutor", "colony",
      [](const Responses&) { return Json{{"executorid", executor().executor_id}}; });
  add("add_function", "addfunction", "executor", [=](const Responses&) {
    return Json{{"executorid", executor().executor_id}, {"colonyid", colony}, {"funcname", "helloworld"}};
  });
  add("submit", "submitfuncspec", "colony",
      [](const Responses&) { return Json{{"spec", colonies::to_json(helloworld())}}; });
  add("assign", "assign", "executor",
      [=](const Responses&) { return Json{{"colonyid", colony}, {"timeout", 10.0}}; });
  add("close", "close", "executor", [=](const Responses& r) {
    return Json{{"processid", pid(r)}, {"success", true}, {"out", Json::array({"hello world"})}};
  });
  add("get_process", "getprocess", "colony",
      [=](const Responses& r) { return Json{{"processid", pid(r)}}; });
  add("get_processes", "getprocesses", "colony", [=](const Responses&) {
    return Json{{"colonyid", colony}, {"state", "successful"}, {"count", 10}};
  });
  add("statistics", "getstatistics", "colony",
      [=](const Responses&) { return Json{{"colonyid", colony}}; });
  // Rejections.
  add("close_again", "close", "executor", [=](const Responses& r) {
    return Json{{"processid", pid(r)}, {"success", true}, {"out", Json::array({"hello world"})}};
  });
  add("executor_adds_colony", "addcolony", "executor",
      [=](const Responses&) { return Json{{"colony", colonies::to_json(colonies::Colony{std::string(64, 'a'), "x"})}}; });
  add("assign_zero_timeout", "assign", "executor",
      [=](const Responses&) { return Json{{"colonyid", colony}, {"timeout", 0.0}}; });
  add("stale_timestamp", "getprocess", "colony",
      [=](const Responses& r) { return Json{{"processid", pid(r)}}; }, colonies::seconds(301));
  add("assign_empty", "assign", "executor",
      [=](const Responses&) { return Json{{"colonyid", colony}, {"timeout", 0.05}}; });
  return out;
}

inline const std::string& key_for(const std::string& signer) {
  if (signer == "server") return kServerKey;
  if (signer == "colony") return kColonyKey;
  return kExecutorKey;
}

}  // namespace corpus
