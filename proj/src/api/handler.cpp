#include "colonies/api/handler.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include <spdlog/spdlog.h>

#include "colonies/api/envelope.hpp"
#include "colonies/crypto/encoding.hpp"
#include "colonies/metafs/catalog.hpp"
#include "colonies/store/queue.hpp"
#include "colonies/triggers/triggers.hpp"
#include "colonies/workflow/workflow.hpp"

namespace colonies::api {
namespace {

[[noreturn]] void deny() {
  throw Error(Errc::kUnauthorized, "access denied");
}

// Typed access to request payload fields. Unknown fields are ignored: an
// identity asserted in the payload never matters.
class Args {
 public:
  explicit Args(const Json& j) : j_(j) {}

  const Json& raw(const std::string& key) const {
    if (!j_.contains(key) || j_.at(key).is_null()) missing(key);
    return j_.at(key);
  }
  bool has(const std::string& key) const {
    return j_.contains(key) && !j_.at(key).is_null();
  }
  std::string str(const std::string& key) const {
    const Json& v = raw(key);
    if (!v.is_string()) wrong(key, "string");
    return v.get<std::string>();
  }
  std::string str_or(const std::string& key, std::string fallback) const {
    return has(key) ? str(key) : fallback;
  }
  std::int64_t integer_or(const std::string& key, std::int64_t fallback) const {
    if (!has(key)) return fallback;
    const Json& v = raw(key);
    if (!v.is_number_integer()) wrong(key, "integer");
    return v.get<std::int64_t>();
  }
  bool boolean_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const Json& v = raw(key);
    if (!v.is_boolean()) wrong(key, "boolean");
    return v.get<bool>();
  }
  const Json& object(const std::string& key) const {
    const Json& v = raw(key);
    if (!v.is_object()) wrong(key, "object");
    return v;
  }
  const Json& array(const std::string& key) const {
    const Json& v = raw(key);
    if (!v.is_array()) wrong(key, "array");
    return v;
  }
  std::vector<std::string> strings_or_empty(const std::string& key) const {
    std::vector<std::string> out;
    if (!has(key)) return out;
    for (const auto& v : array(key)) {
      if (!v.is_string()) wrong(key, "array of strings");
      out.push_back(v.get<std::string>());
    }
    return out;
  }

 private:
  [[noreturn]] static void missing(const std::string& key) {
    throw Error(Errc::kInvalidArgument, "missing field " + key);
  }
  [[noreturn]] static void wrong(const std::string& key, const char* type) {
    throw Error(Errc::kInvalidArgument, "field " + key + " must be " + type);
  }
  const Json& j_;
};

Json list_json(const auto& items) {
  Json out = Json::array();
  for (const auto& item : items) out.push_back(to_json(item));
  return out;
}

}  // namespace

Reply Reply::error(Errc code, const std::string& message) {
  Reply r;
  r.status = http_status(code);
  r.body = {{"error", {{"code", std::string(errc_name(code))}, {"message", message}}}};
  return r;
}

struct ApiHandler::Call {
  ApiHandler& h;
  std::string caller;
  std::string type;
  Args args;
  Nanos now;
  const std::atomic<bool>* cancel;

  // Colony owner: the identity whose key the colony id was derived from.
  void require_owner(store::Tx& tx, const std::string& colony_id) const {
    if (caller != colony_id || !tx.find_colony(colony_id)) deny();
  }
  void require_server_owner() const {
    if (caller != h.server_owner_.str()) deny();
  }
  // Approved executors and the colony owner may manage processes.
  void require_member(store::Tx& tx, const std::string& colony_id) const {
    if (!tx.find_colony(colony_id)) deny();
    if (caller == colony_id) return;
    auto e = tx.find_executor(caller);
    if (!e || e->colony_id != colony_id || !e->approved) deny();
  }
  ExecutorRecord require_executor(store::Tx& tx, const std::string& colony_id) const {
    if (!tx.find_colony(colony_id)) deny();
    auto e = tx.find_executor(caller);
    if (!e || e->colony_id != colony_id || !e->approved) deny();
    return *e;
  }
  Process member_process(store::Tx& tx, const std::string& process_id) const {
    auto p = tx.find_process(process_id);
    if (!p) throw Error(Errc::kNotFound, "process " + process_id + " not found");
    require_member(tx, p->spec.conditions.colony_id);
    return *p;
  }
  template <class F>
  auto write(F&& f) {
    return h.store_.write(std::forward<F>(f));
  }
  template <class F>
  auto read(F&& f) {
    return h.store_.read(std::forward<F>(f));
  }
  void wake(const Process& p) const {
    h.hub_.notify_process(p.process_id);
    if (p.state == ProcessState::kWaiting && !p.wait_for_parents) {
      h.hub_.notify_queue(p.spec.conditions.colony_id,
                          p.spec.conditions.executor_type);
    }
  }
};

ApiHandler::ApiHandler(store::Store& store, const Clock& clock, IdSource& ids,
                       assign::WakeupHub& hub, Leadership& leadership,
                       crypto::Identity server_owner, HandlerOptions options)
    : store_(store),
      clock_(clock),
      ids_(ids),
      hub_(hub),
      leadership_(leadership),
      server_owner_(std::move(server_owner)),
      options_(options),
      assigner_(store, clock, hub, [this] { return leadership_.term(); },
                options.assign) {}

Reply ApiHandler::handle(const std::string& body, const std::atomic<bool>* cancel) {
  try {
    Nanos now = clock_.now();
    Authenticated auth = authenticate(body, now);
    Call call{*this, auth.identity.str(), auth.payload_type, Args(auth.payload),
              now, cancel};
    return dispatch(call);
  } catch (const store::StaleTermError& e) {
    leadership_.stale_term(e.highest());
    return Reply::error(e.code(), e.what());
  } catch (const Error& e) {
    return Reply::error(e.code(), e.what());
  } catch (const Json::exception& e) {
    return Reply::error(Errc::kInvalidArgument, e.what());
  } catch (const std::exception& e) {
    spdlog::error("request failed: {}", e.what());
    return Reply::error(Errc::kInternal, e.what());
  }
}

namespace {

Reply ok(Json body) {
  Reply r;
  r.body = std::move(body);
  return r;
}

}  // namespace

Reply ApiHandler::dispatch(Call& c) {
  static const std::map<std::string, std::function<Reply(Call&)>> methods = {
      // Colonies: server owner.
      {"addcolony",
       [](Call& c) {
         c.require_server_owner();
         Colony colony = colony_from_json(c.args.object("colony"));
         if (!crypto::is_lower_hex(colony.colony_id, 64)) {
           throw Error(Errc::kInvalidArgument, "colonyid must be 64 lowercase hex");
         }
         c.write([&](store::Tx& tx) { tx.insert_colony(colony); });
         return ok(to_json(colony));
       }},
      {"removecolony",
       [](Call& c) {
         c.require_server_owner();
         std::string id = c.args.str("colonyid");
         c.write([&](store::Tx& tx) {
           if (!tx.find_colony(id)) throw Error(Errc::kNotFound, "colony not found");
           tx.delete_colony(id);
         });
         return ok(Json::object());
       }},
      {"getcolonies",
       [](Call& c) {
         c.require_server_owner();
         return ok(list_json(c.read([](store::Tx& tx) { return tx.list_colonies(); })));
       }},
      {"getcolony",
       [](Call& c) {
         std::string id = c.args.str("colonyid");
         return ok(c.read([&](store::Tx& tx) {
           c.require_member(tx, id);
           return to_json(*tx.find_colony(id));
         }));
       }},

      // Executors: colony owner, except addfunction.
      {"addexecutor",
       [](Call& c) {
         ExecutorRecord e = executor_from_json(c.args.object("executor"));
         if (!crypto::is_lower_hex(e.executor_id, 64)) {
           throw Error(Errc::kInvalidArgument, "executorid must be 64 lowercase hex");
         }
         if (e.executor_type.empty() || e.executor_name.empty()) {
           throw Error(Errc::kInvalidArgument, "executor name and type are required");
         }
         e.approved = false;
         e.functions.clear();
         e.last_seen = 0;
         c.write([&](store::Tx& tx) {
           c.require_owner(tx, e.colony_id);
           tx.insert_executor(e);
         });
         return ok(to_json(e));
       }},
      {"approveexecutor",
       [](Call& c) {
         std::string id = c.args.str("executorid");
         return ok(c.write([&](store::Tx& tx) {
           auto e = tx.find_executor(id);
           if (!e) deny();
           c.require_owner(tx, e->colony_id);
           e->approved = true;
           tx.update_executor(*e);
           return to_json(*e);
         }));
       }},
      {"rejectexecutor",
       [](Call& c) {
         std::string id = c.args.str("executorid");
         return ok(c.write([&](store::Tx& tx) {
           auto e = tx.find_executor(id);
           if (!e) deny();
           c.require_owner(tx, e->colony_id);
           e->approved = false;
           tx.update_executor(*e);
           return to_json(*e);
         }));
       }},
      {"removeexecutor",
       [](Call& c) {
         std::string id = c.args.str("executorid");
         c.write([&](store::Tx& tx) {
           auto e = tx.find_executor(id);
           if (!e) deny();
           c.require_owner(tx, e->colony_id);
           tx.delete_executor(id);
         });
         return ok(Json::object());
       }},
      {"getexecutors",
       [](Call& c) {
         std::string colony = c.args.str("colonyid");
         return ok(c.read([&](store::Tx& tx) {
           c.require_member(tx, colony);
           return list_json(tx.list_executors(colony));
         }));
       }},
      {"getexecutor",
       [](Call& c) {
         std::string id = c.args.str("executorid");
         return ok(c.read([&](store::Tx& tx) {
           auto e = tx.find_executor(id);
           if (!e) deny();
           c.require_member(tx, e->colony_id);
           return to_json(*e);
         }));
       }},
      {"addfunction",
       [](Call& c) {
         std::string id = c.args.str("executorid");
         std::string colony = c.args.str("colonyid");
         std::string name = c.args.str("funcname");
         if (name.empty()) throw Error(Errc::kInvalidArgument, "funcname is empty");
         return ok(c.write([&](store::Tx& tx) {
           if (id != c.caller) deny();
           ExecutorRecord e = c.require_executor(tx, colony);
           if (std::find(e.functions.begin(), e.functions.end(), name) ==
               e.functions.end()) {
             e.functions.push_back(name);
             tx.update_executor(e);
           }
           return to_json(e);
         }));
       }},

      // Processes.
      {"submitfuncspec",
       [](Call& c) {
         FunctionSpec spec = spec_from_json(c.args.object("spec"));
         Process p = c.write([&](store::Tx& tx) {
           c.require_member(tx, spec.conditions.colony_id);
           metafs::pin_snapshots(tx, spec, c.h.ids_, c.now);
           Process p = store::make_process(spec, c.h.ids_.next(), c.now, false);
           store::insert_process(tx, p, c.now);
           return p;
         });
         c.wake(p);
         return ok(to_json(p));
       }},
      {"submitworkflow",
       [](Call& c) {
         std::string colony = c.args.str("colonyid");
         auto specs = workflow_from_json(c.args.array("specs"));
         auto [body, roots] = c.write([&](store::Tx& tx) {
           c.require_member(tx, colony);
           for (auto& s : specs) {
             s.conditions.colony_id = colony;
             metafs::pin_snapshots(tx, s, c.h.ids_, c.now);
           }
           auto sub = workflow::submit_workflow(tx, specs, colony, c.h.ids_, c.now);
           std::vector<Process> roots;
           for (const auto& id : sub.process_ids) {
             auto p = tx.get_process(id);
             if (!p.wait_for_parents) roots.push_back(p);
           }
           return std::make_pair(workflow::workflow_json(tx, sub.workflow_id), roots);
         });
         for (const auto& p : roots) c.wake(p);
         return ok(body);
       }},
      {"assign",
       [](Call& c) {
         std::string colony = c.args.str("colonyid");
         const Json& t = c.args.raw("timeout");
         if (!t.is_number()) throw Error(Errc::kInvalidTimeout, "timeout must be a number");
         double secs = t.get<double>();
         if (!(secs > 0) || !std::isfinite(secs)) {
           throw Error(Errc::kInvalidTimeout, "assign timeout must be positive");
         }
         ExecutorRecord e = c.read([&](store::Tx& tx) { return c.require_executor(tx, colony); });
         if (!c.h.leadership_.is_leader()) {
           auto url = c.h.leadership_.leader_url();
           if (!url) throw Error(Errc::kLeaderUnknown, "no leader elected; retry");
           Reply r;
           r.forward_to = *url;
           return r;
         }
         Nanos timeout = static_cast<Nanos>(
             std::min(secs, 1e9) * static_cast<double>(kNanosPerSecond));
         auto p = c.h.assigner_.assign(e, std::max<Nanos>(timeout, 1), c.cancel);
         if (!p) {
           Reply r;
           r.status = 204;
           return r;
         }
         c.h.hub_.notify_process(p->process_id);
         return ok(to_json(*p));
       }},
      {"close",
       [](Call& c) {
         std::string id = c.args.str("processid");
         bool success = c.args.boolean_or("success", true);
         Json out = c.args.has("out") ? c.args.array("out") : Json::array();
         auto errors = c.args.strings_or_empty("errors");
         auto touched = c.write([&](store::Tx& tx) {
           c.member_process(tx, id);
           Process p = store::close_process(tx, id, c.caller, success, out, errors, c.now);
           std::vector<Process> touched{p};
           for (auto& r : workflow::after_transition(tx, p, c.now, 0)) {
             touched.push_back(std::move(r));
           }
           return touched;
         });
         for (const auto& p : touched) c.wake(p);
         return ok(to_json(touched.front()));
       }},
      {"getprocess",
       [](Call& c) {
         std::string id = c.args.str("processid");
         return ok(c.read([&](store::Tx& tx) { return to_json(c.member_process(tx, id)); }));
       }},
      {"getprocesses",
       [](Call& c) {
         std::string colony = c.args.str("colonyid");
         std::optional<ProcessState> state;
         if (c.args.has("state")) state = state_from_name(c.args.str("state"));
         std::int64_t count = c.args.integer_or("count", 100);
         if (count <= 0) throw Error(Errc::kInvalidArgument, "count must be positive");
         count = std::min(count, c.h.options_.max_list);
         return ok(c.read([&](store::Tx& tx) {
           c.require_member(tx, colony);
           return list_json(tx.list_processes(colony, state, count));
         }));
       }},
      {"getworkflow",
       [](Call& c) {
         std::string id = c.args.str("workflowid");
         return ok(c.read([&](store::Tx& tx) {
           auto w = tx.find_workflow(id);
           if (!w) throw Error(Errc::kNotFound, "workflow " + id + " not found");
           c.require_member(tx, w->colony_id);
           return workflow::workflow_json(tx, id);
         }));
       }},
      {"addchild",
       [](Call& c) {
         std::string id = c.args.str("processid");
         FunctionSpec spec = spec_from_json(c.args.object("spec"));
         bool before = c.args.boolean_or("insertbefore", false);
         return ok(c.write([&](store::Tx& tx) {
           Process parent = c.member_process(tx, id);
           spec.conditions.colony_id = parent.spec.conditions.colony_id;
           metafs::pin_snapshots(tx, spec, c.h.ids_, c.now);
           return to_json(
               workflow::add_child(tx, id, c.caller, spec, before, c.h.ids_, c.now));
         }));
       }},
      {"subscribe",
       [](Call& c) {
         std::string id = c.args.str("processid");
         c.read([&](store::Tx& tx) { c.member_process(tx, id); });
         Reply r;
         r.stream = std::make_shared<assign::Subscription>(c.h.store_, c.h.hub_, id);
         return r;
       }},

      // Triggers.
      {"addcron",
       [](Call& c) {
         CronDef def = cron_from_json(c.args.object("cron"));
         return ok(c.write([&](store::Tx& tx) {
           c.require_member(tx, def.colony_id);
           return to_json(triggers::add_cron(tx, def, c.h.ids_, c.now));
         }));
       }},
      {"getcrons",
       [](Call& c) {
         std::string colony = c.args.str("colonyid");
         return ok(c.read([&](store::Tx& tx) {
           c.require_member(tx, colony);
           return list_json(tx.list_crons(colony));
         }));
       }},
      {"getcron",
       [](Call& c) {
         std::string id = c.args.str("cronid");
         return ok(c.read([&](store::Tx& tx) {
           auto cron = tx.find_cron(id);
           if (!cron) throw Error(Errc::kNotFound, "cron " + id + " not found");
           c.require_member(tx, cron->colony_id);
           return to_json(*cron);
         }));
       }},
      {"removecron",
       [](Call& c) {
         std::string id = c.args.str("cronid");
         c.write([&](store::Tx& tx) {
           auto cron = tx.find_cron(id);
           if (!cron) throw Error(Errc::kNotFound, "cron " + id + " not found");
           c.require_member(tx, cron->colony_id);
           tx.delete_cron(id);
         });
         return ok(Json::object());
       }},
      {"addgenerator",
       [](Call& c) {
         GeneratorDef def = generator_from_json(c.args.object("generator"));
         return ok(c.write([&](store::Tx& tx) {
           c.require_member(tx, def.colony_id);
           return to_json(triggers::add_generator(tx, def, c.h.ids_));
         }));
       }},
      {"getgenerators",
       [](Call& c) {
         std::string colony = c.args.str("colonyid");
         return ok(c.read([&](store::Tx& tx) {
           c.require_member(tx, colony);
           return list_json(tx.list_generators(colony));
         }));
       }},
      {"getgenerator",
       [](Call& c) {
         std::string id = c.args.str("generatorid");
         return ok(c.read([&](store::Tx& tx) {
           auto g = tx.find_generator(id);
           if (!g) throw Error(Errc::kUnknownGenerator, "generator " + id + " not found");
           c.require_member(tx, g->colony_id);
           Json j = to_json(*g);
           j["pending"] = tx.count_unconsumed(id);
           return j;
         }));
       }},
      {"removegenerator",
       [](Call& c) {
         std::string id = c.args.str("generatorid");
         c.write([&](store::Tx& tx) {
           auto g = tx.find_generator(id);
           if (!g) throw Error(Errc::kUnknownGenerator, "generator " + id + " not found");
           c.require_member(tx, g->colony_id);
           tx.delete_generator(id);
         });
         return ok(Json::object());
       }},
      {"pack",
       [](Call& c) {
         std::string id = c.args.str("generatorid");
         const Json& payload = c.args.raw("payload");
         c.write([&](store::Tx& tx) {
           auto g = tx.find_generator(id);
           if (!g) throw Error(Errc::kUnknownGenerator, "generator " + id + " not found");
           c.require_member(tx, g->colony_id);
           triggers::pack(tx, id, payload, c.now);
         });
         return ok(Json::object());
       }},

      // CFS.
      {"addfile",
       [](Call& c) {
         FileMeta meta = file_from_json(c.args.object("file"));
         return ok(c.write([&](store::Tx& tx) {
           c.require_member(tx, meta.colony_id);
           return to_json(metafs::register_file(tx, meta, c.h.ids_, c.now));
         }));
       }},
      {"getfile",
       [](Call& c) {
         return ok(c.read([&](store::Tx& tx) {
           if (c.args.has("fileid")) {
             auto f = tx.find_file(c.args.str("fileid"));
             if (!f) throw Error(Errc::kNotFound, "file not found");
             c.require_member(tx, f->colony_id);
             return to_json(*f);
           }
           std::string colony = c.args.str("colonyid");
           c.require_member(tx, colony);
           std::string label = metafs::normalize_label(c.args.str("label"));
           std::string name = c.args.str("name");
           auto revs = tx.file_revisions(colony, label, name);
           std::int64_t want = c.args.integer_or("revision", 0);
           for (auto it = revs.rbegin(); it != revs.rend(); ++it) {
             if (want == 0 ? !it->tombstone : it->revision == want) return to_json(*it);
             if (want == 0) break;
           }
           throw Error(Errc::kNotFound, "no file " + label + "/" + name);
         }));
       }},
      {"getfilerevisions",
       [](Call& c) {
         std::string colony = c.args.str("colonyid");
         std::string label = metafs::normalize_label(c.args.str("label"));
         std::string name = c.args.str("name");
         return ok(c.read([&](store::Tx& tx) {
           c.require_member(tx, colony);
           return list_json(tx.file_revisions(colony, label, name));
         }));
       }},
      {"getfiles",
       [](Call& c) {
         std::string colony = c.args.str("colonyid");
         std::string label = metafs::normalize_label(c.args.str_or("label", "/"));
         return ok(c.read([&](store::Tx& tx) {
           c.require_member(tx, colony);
           return list_json(tx.files_under(colony, label));
         }));
       }},
      {"getlabels",
       [](Call& c) {
         std::string colony = c.args.str("colonyid");
         return ok(c.read([&](store::Tx& tx) {
           c.require_member(tx, colony);
           Json out = Json::array();
           for (const auto& l : tx.list_labels(colony)) out.push_back(l);
           return out;
         }));
       }},
      {"removefile",
       [](Call& c) {
         std::string colony = c.args.str("colonyid");
         return ok(c.write([&](store::Tx& tx) {
           c.require_member(tx, colony);
           return to_json(metafs::remove_file(tx, colony, c.args.str("label"),
                                              c.args.str("name"), c.h.ids_, c.now));
         }));
       }},
      {"createsnapshot",
       [](Call& c) {
         std::string colony = c.args.str("colonyid");
         std::string label = c.args.str("label");
         return ok(c.write([&](store::Tx& tx) {
           c.require_member(tx, colony);
           return to_json(metafs::create_snapshot(tx, colony, label, c.h.ids_, c.now));
         }));
       }},
      {"getsnapshot",
       [](Call& c) {
         std::string id = c.args.str("snapshotid");
         return ok(c.read([&](store::Tx& tx) {
           Snapshot s = metafs::get_snapshot(tx, id);
           c.require_member(tx, s.colony_id);
           return to_json(s);
         }));
       }},
      {"getsnapshots",
       [](Call& c) {
         std::string colony = c.args.str("colonyid");
         return ok(c.read([&](store::Tx& tx) {
           c.require_member(tx, colony);
           return list_json(tx.list_snapshots(colony));
         }));
       }},
      {"removesnapshot",
       [](Call& c) {
         std::string id = c.args.str("snapshotid");
         c.write([&](store::Tx& tx) {
           Snapshot s = metafs::get_snapshot(tx, id);
           c.require_member(tx, s.colony_id);
           tx.delete_snapshot(id);
         });
         return ok(Json::object());
       }},

      // Monitoring.
      {"getstatistics",
       [](Call& c) {
         std::string colony = c.args.str("colonyid");
         return ok(c.read([&](store::Tx& tx) {
           c.require_member(tx, colony);
           auto s = tx.count_states(colony);
           return Json{{"waiting", s.waiting},
                       {"running", s.running},
                       {"successful", s.successful},
                       {"failed", s.failed},
                       {"executors",
                        static_cast<std::int64_t>(tx.list_executors(colony).size())}};
         }));
       }},
      {"getcluster",
       [](Call& c) {
         c.require_server_owner();
         return ok(c.h.leadership_.status());
       }},
  };

  auto it = methods.find(c.type);
  if (it == methods.end()) {
    throw Error(Errc::kInvalidArgument, "unknown payload type " + c.type);
  }
  return it->second(c);
}

}  // namespace colonies::api
