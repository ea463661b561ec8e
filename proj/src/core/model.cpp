#include "colonies/core/model.hpp"

#include <set>
#include <utility>

#include "colonies/core/error.hpp"

namespace colonies {
namespace {

[[noreturn]] void bad(const std::string& what) {
  throw Error(Errc::kInvalidArgument, what);
}

// Reads a JSON object field by field and rejects keys nobody asked for.
class Fields {
 public:
  Fields(const Json& j, std::string what) : j_(j), what_(std::move(what)) {
    if (!j_.is_object()) bad(what_ + ": expected a JSON object");
  }

  bool has(const std::string& key) {
    known_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  std::string str(const std::string& key, std::string fallback = {}) {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_string()) bad(what_ + "." + key + ": expected string");
    return v.get<std::string>();
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback = 0) {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_number_integer()) bad(what_ + "." + key + ": expected integer");
    return v.get<std::int64_t>();
  }

  std::optional<std::int64_t> opt_integer(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return integer(key);
  }

  std::optional<std::string> opt_str(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return str(key);
  }

  bool boolean(const std::string& key, bool fallback = false) {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_boolean()) bad(what_ + "." + key + ": expected boolean");
    return v.get<bool>();
  }

  std::vector<std::string> strings(const std::string& key) {
    std::vector<std::string> out;
    if (!has(key)) return out;
    const Json& v = j_.at(key);
    if (!v.is_array()) bad(what_ + "." + key + ": expected array");
    for (const auto& item : v) {
      if (!item.is_string()) bad(what_ + "." + key + ": expected strings");
      out.push_back(item.get<std::string>());
    }
    return out;
  }

  const Json& array(const std::string& key) {
    static const Json kEmpty = Json::array();
    if (!has(key)) return kEmpty;
    const Json& v = j_.at(key);
    if (!v.is_array()) bad(what_ + "." + key + ": expected array");
    return v;
  }

  const Json& object(const std::string& key) {
    static const Json kEmpty = Json::object();
    if (!has(key)) return kEmpty;
    const Json& v = j_.at(key);
    if (!v.is_object()) bad(what_ + "." + key + ": expected object");
    return v;
  }

  // Raw value of any type, or null when absent.
  Json any(const std::string& key) {
    if (!has(key)) return nullptr;
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!known_.contains(key)) bad(what_ + ": unknown field \"" + key + "\"");
    }
  }

 private:
  const Json& j_;
  std::string what_;
  std::set<std::string> known_;
};

Json strings_json(const std::vector<std::string>& v) {
  Json out = Json::array();
  for (const auto& s : v) out.push_back(s);
  return out;
}

std::vector<FunctionSpec> specs_from(const Json& j, const std::string& what) {
  if (!j.is_array()) bad(what + ": expected array of function specs");
  std::vector<FunctionSpec> out;
  for (const auto& node : j) out.push_back(spec_from_json(node));
  return out;
}

}  // namespace

std::string_view state_name(ProcessState s) {
  switch (s) {
    case ProcessState::kWaiting:
      return "waiting";
    case ProcessState::kRunning:
      return "running";
    case ProcessState::kSuccessful:
      return "successful";
    case ProcessState::kFailed:
      return "failed";
  }
  return "waiting";
}

ProcessState state_from_name(std::string_view name) {
  if (name == "waiting") return ProcessState::kWaiting;
  if (name == "running") return ProcessState::kRunning;
  if (name == "successful") return ProcessState::kSuccessful;
  if (name == "failed") return ProcessState::kFailed;
  bad("unknown process state \"" + std::string(name) + "\"");
}

bool is_terminal(ProcessState s) {
  return s == ProcessState::kSuccessful || s == ProcessState::kFailed;
}

bool transition_allowed(ProcessState from, ProcessState to) {
  using S = ProcessState;
  switch (from) {
    case S::kWaiting:
      return to == S::kRunning || to == S::kFailed;
    case S::kRunning:
      return to == S::kSuccessful || to == S::kFailed || to == S::kWaiting;
    default:
      return false;
  }
}

Json to_json(const Conditions& c) {
  Json j = {{"colonyid", c.colony_id},
            {"executortype", c.executor_type},
            {"executornames", strings_json(c.executor_names)},
            {"dependencies", strings_json(c.dependencies)}};
  if (c.nodes) j["nodes"] = *c.nodes;
  if (c.processes_per_node) j["processes-per-node"] = *c.processes_per_node;
  if (c.mem) j["mem"] = *c.mem;
  if (c.cpu) j["cpu"] = *c.cpu;
  if (c.walltime) j["walltime"] = *c.walltime;
  if (c.gpu_count) j["gpu"] = {{"count", *c.gpu_count}};
  return j;
}

Conditions conditions_from_json(const Json& j) {
  Fields f(j, "conditions");
  Conditions c;
  c.colony_id = f.str("colonyid");
  c.executor_type = f.str("executortype");
  c.executor_names = f.strings("executornames");
  c.dependencies = f.strings("dependencies");
  c.nodes = f.opt_integer("nodes");
  c.processes_per_node = f.opt_integer("processes-per-node");
  c.mem = f.opt_str("mem");
  c.cpu = f.opt_str("cpu");
  c.walltime = f.opt_integer("walltime");
  if (f.has("gpu")) {
    Fields gpu(f.object("gpu"), "conditions.gpu");
    c.gpu_count = gpu.integer("count");
    gpu.finish();
  }
  f.finish();
  return c;
}

Json to_json(const FsDirectives& fs) {
  Json snaps = Json::array();
  for (const auto& s : fs.snapshots) {
    snaps.push_back({{"snapshotid", s.snapshot_id},
                     {"label", s.label},
                     {"dir", s.dir},
                     {"keepfiles", s.keep_files},
                     {"keepsnapshot", s.keep_snapshot}});
  }
  Json dirs = Json::array();
  for (const auto& d : fs.dirs) {
    dirs.push_back({{"label", d.label},
                    {"dir", d.dir},
                    {"keepfiles", d.keep_files},
                    {"onlychanged", d.only_changed}});
  }
  return {{"mount", fs.mount}, {"snapshots", snaps}, {"dirs", dirs}};
}

FsDirectives fs_from_json(const Json& j) {
  Fields f(j, "fs");
  FsDirectives fs;
  fs.mount = f.str("mount");
  for (const auto& item : f.array("snapshots")) {
    Fields s(item, "fs.snapshots[]");
    SnapshotDirective d;
    d.snapshot_id = s.str("snapshotid");
    d.label = s.str("label");
    d.dir = s.str("dir");
    d.keep_files = s.boolean("keepfiles");
    // "keepsnaphot" is a historical misspelling still found in the wild.
    d.keep_snapshot = s.boolean("keepsnapshot", s.boolean("keepsnaphot"));
    s.finish();
    fs.snapshots.push_back(std::move(d));
  }
  for (const auto& item : f.array("dirs")) {
    Fields s(item, "fs.dirs[]");
    SyncDirDirective d;
    d.label = s.str("label");
    d.dir = s.str("dir");
    d.keep_files = s.boolean("keepfiles");
    d.only_changed = s.boolean("onlychanged");
    s.finish();
    fs.dirs.push_back(std::move(d));
  }
  f.finish();
  return fs;
}

Json to_json(const FunctionSpec& spec) {
  Json j = {{"nodename", spec.node_name},
            {"funcname", spec.func_name},
            {"args", spec.args},
            {"kwargs", spec.kwargs},
            {"conditions", to_json(spec.conditions)},
            {"priority", spec.priority},
            {"maxwaittime", spec.max_wait_time},
            {"maxexectime", spec.max_exec_time},
            {"maxretries", spec.max_retries}};
  if (spec.fs) j["fs"] = to_json(*spec.fs);
  return j;
}

FunctionSpec spec_from_json(const Json& j) {
  Fields f(j, "spec");
  FunctionSpec spec;
  spec.node_name = f.str("nodename");
  spec.func_name = f.str("funcname");
  spec.args = f.array("args");
  spec.kwargs = f.object("kwargs");
  spec.conditions = conditions_from_json(f.object("conditions"));
  spec.priority = static_cast<int>(f.integer("priority", 0));
  spec.max_wait_time = f.integer("maxwaittime", kUnbounded);
  spec.max_exec_time = f.integer("maxexectime", kUnbounded);
  spec.max_retries = static_cast<int>(f.integer("maxretries", 0));
  if (f.has("fs")) spec.fs = fs_from_json(f.object("fs"));
  f.finish();
  return spec;
}

void validate_spec(const FunctionSpec& spec) {
  if (spec.func_name.empty()) bad("funcname must not be empty");
  if (spec.conditions.executor_type.empty()) {
    bad("conditions.executortype must not be empty");
  }
  if (spec.priority < 0 || spec.priority > kMaxPriority) {
    bad("priority must be in [0, " + std::to_string(kMaxPriority) + "]");
  }
  if (spec.max_retries < 0) bad("maxretries must be >= 0");
  if (spec.max_exec_time < kUnbounded) bad("maxexectime must be >= -1");
  if (spec.max_wait_time < kUnbounded) bad("maxwaittime must be >= -1");
  if (!spec.args.is_array()) bad("args must be an array");
  if (!spec.kwargs.is_object()) bad("kwargs must be an object");
  if (spec.fs && spec.fs->mount.empty()) bad("fs.mount must not be empty");
}

Json to_json(const Process& p) {
  return {{"processid", p.process_id},
          {"spec", to_json(p.spec)},
          {"state", std::string(state_name(p.state))},
          {"waitforparents", p.wait_for_parents},
          {"assignedexecutorid", p.assigned_executor},
          {"submissiontime", p.submission_time},
          {"prioritytime", p.priority_time},
          {"queuedtime", p.queued_time},
          {"starttime", p.start_time},
          {"endtime", p.end_time},
          {"deadline", p.deadline},
          {"retries", p.retries},
          {"in", p.input},
          {"out", p.output},
          {"errors", strings_json(p.errors)},
          {"parents", strings_json(p.parents)},
          {"children", strings_json(p.children)},
          {"workflowid", p.workflow_id}};
}

Process process_from_json(const Json& j) {
  Fields f(j, "process");
  Process p;
  p.process_id = f.str("processid");
  p.spec = spec_from_json(f.object("spec"));
  p.state = state_from_name(f.str("state", "waiting"));
  p.wait_for_parents = f.boolean("waitforparents");
  p.assigned_executor = f.str("assignedexecutorid");
  p.submission_time = f.integer("submissiontime");
  p.priority_time = f.integer("prioritytime");
  p.queued_time = f.integer("queuedtime");
  p.start_time = f.integer("starttime");
  p.end_time = f.integer("endtime");
  p.deadline = f.integer("deadline");
  p.retries = static_cast<int>(f.integer("retries"));
  p.input = f.array("in");
  p.output = f.array("out");
  p.errors = f.strings("errors");
  p.parents = f.strings("parents");
  p.children = f.strings("children");
  p.workflow_id = f.str("workflowid");
  f.finish();
  return p;
}

Json to_json(const Colony& c) {
  return {{"colonyid", c.colony_id}, {"name", c.name}};
}

Colony colony_from_json(const Json& j) {
  Fields f(j, "colony");
  Colony c{f.str("colonyid"), f.str("name")};
  f.finish();
  return c;
}

Json to_json(const ExecutorRecord& e) {
  return {{"executorid", e.executor_id},
          {"executorname", e.executor_name},
          {"executortype", e.executor_type},
          {"colonyid", e.colony_id},
          {"approved", e.approved},
          {"functions", strings_json(e.functions)},
          {"lastseen", e.last_seen}};
}

ExecutorRecord executor_from_json(const Json& j) {
  Fields f(j, "executor");
  ExecutorRecord e;
  e.executor_id = f.str("executorid");
  e.executor_name = f.str("executorname");
  e.executor_type = f.str("executortype");
  e.colony_id = f.str("colonyid");
  e.approved = f.boolean("approved");
  e.functions = f.strings("functions");
  e.last_seen = f.integer("lastseen");
  f.finish();
  return e;
}

Json workflow_to_json(const std::vector<FunctionSpec>& nodes) {
  Json out = Json::array();
  for (const auto& n : nodes) out.push_back(to_json(n));
  return out;
}

std::vector<FunctionSpec> workflow_from_json(const Json& j) {
  return specs_from(j, "workflow");
}

Json to_json(const CronDef& c) {
  return {{"cronid", c.cron_id},
          {"colonyid", c.colony_id},
          {"name", c.name},
          {"interval", c.interval},
          {"cronexpr", c.cron_expr},
          {"workflow", workflow_to_json(c.workflow)},
          {"nextdeadline", c.next_deadline},
          {"lastrun", c.last_run}};
}

CronDef cron_from_json(const Json& j) {
  Fields f(j, "cron");
  CronDef c;
  c.cron_id = f.str("cronid");
  c.colony_id = f.str("colonyid");
  c.name = f.str("name");
  c.interval = f.integer("interval");
  c.cron_expr = f.str("cronexpr");
  c.workflow = specs_from(f.array("workflow"), "cron.workflow");
  c.next_deadline = f.integer("nextdeadline");
  c.last_run = f.integer("lastrun");
  f.finish();
  return c;
}

Json to_json(const GeneratorDef& g) {
  return {{"generatorid", g.generator_id},
          {"colonyid", g.colony_id},
          {"name", g.name},
          {"workflow", workflow_to_json(g.workflow)},
          {"triggercount", g.trigger_count},
          {"timeout", g.timeout}};
}

GeneratorDef generator_from_json(const Json& j) {
  Fields f(j, "generator");
  GeneratorDef g;
  g.generator_id = f.str("generatorid");
  g.colony_id = f.str("colonyid");
  g.name = f.str("name");
  g.workflow = specs_from(f.array("workflow"), "generator.workflow");
  g.trigger_count = f.integer("triggercount");
  g.timeout = f.integer("timeout", kUnbounded);
  f.finish();
  return g;
}

Json to_json(const StorageRef& r) {
  return {{"protocol", r.protocol}, {"server", r.server}, {"key", r.key}};
}

StorageRef storage_ref_from_json(const Json& j) {
  Fields f(j, "storage");
  StorageRef r{f.str("protocol"), f.str("server"), f.str("key")};
  f.finish();
  return r;
}

Json to_json(const FileMeta& m) {
  return {{"fileid", m.file_id},
          {"colonyid", m.colony_id},
          {"label", m.label},
          {"name", m.name},
          {"checksum", m.checksum},
          {"size", m.size},
          {"storage", to_json(m.storage)},
          {"credentials", m.credentials_ref},
          {"added", m.added},
          {"revision", m.revision},
          {"tombstone", m.tombstone}};
}

FileMeta file_from_json(const Json& j) {
  Fields f(j, "file");
  FileMeta m;
  m.file_id = f.str("fileid");
  m.colony_id = f.str("colonyid");
  m.label = f.str("label");
  m.name = f.str("name");
  m.checksum = f.str("checksum");
  m.size = f.integer("size");
  m.storage = storage_ref_from_json(f.object("storage"));
  m.credentials_ref = f.str("credentials");
  m.added = f.integer("added");
  m.revision = f.integer("revision");
  m.tombstone = f.boolean("tombstone");
  f.finish();
  return m;
}

Json to_json(const Snapshot& s) {
  Json files = Json::array();
  for (const auto& e : s.files) {
    files.push_back({{"fileid", e.file_id},
                     {"revision", e.revision},
                     {"label", e.label},
                     {"name", e.name}});
  }
  return {{"snapshotid", s.snapshot_id},
          {"colonyid", s.colony_id},
          {"label", s.label},
          {"files", files},
          {"created", s.created}};
}

Snapshot snapshot_from_json(const Json& j) {
  Fields f(j, "snapshot");
  Snapshot s;
  s.snapshot_id = f.str("snapshotid");
  s.colony_id = f.str("colonyid");
  s.label = f.str("label");
  for (const auto& item : f.array("files")) {
    Fields e(item, "snapshot.files[]");
    s.files.push_back(
        {e.str("fileid"), e.integer("revision"), e.str("label"), e.str("name")});
    e.finish();
  }
  s.created = f.integer("created");
  f.finish();
  return s;
}

std::string canonical(const Json& j) {
  try {
    return j.dump();
  } catch (const Json::exception& e) {
    bad(std::string("cannot serialize JSON: ") + e.what());
  }
}

}  // namespace colonies
