#pragma once

// Domain vocabulary shared by every module. Field names on the wire follow
// the function-specification JSON format ("funcname", "maxexectime", ...).
// Parsing is strict: unknown keys are rejected with Errc::kInvalidArgument.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "colonies/core/clock.hpp"

namespace colonies {

using Json = nlohmann::json;

// Resource hints are opaque to the broker: stored and passed through only.
struct Conditions {
  std::string colony_id;
  std::string executor_type;
  std::vector<std::string> executor_names;
  std::vector<std::string> dependencies;
  std::optional<std::int64_t> nodes;
  std::optional<std::int64_t> processes_per_node;
  std::optional<std::string> mem;
  std::optional<std::string> cpu;
  std::optional<std::int64_t> walltime;
  std::optional<std::int64_t> gpu_count;

  bool operator==(const Conditions&) const = default;
};

struct SnapshotDirective {
  std::string snapshot_id;
  std::string label;
  std::string dir;
  bool keep_files = false;
  bool keep_snapshot = false;

  bool operator==(const SnapshotDirective&) const = default;
};

// Directory uploaded to CFS after the function returns.
struct SyncDirDirective {
  std::string label;
  std::string dir;
  bool keep_files = false;
  bool only_changed = false;

  bool operator==(const SyncDirDirective&) const = default;
};

struct FsDirectives {
  std::string mount;
  std::vector<SnapshotDirective> snapshots;
  std::vector<SyncDirDirective> dirs;

  bool operator==(const FsDirectives&) const = default;
};

inline constexpr std::int64_t kUnbounded = -1;
inline constexpr int kMaxPriority = 10;

struct FunctionSpec {
  std::string node_name;
  std::string func_name;
  Json args = Json::array();
  Json kwargs = Json::object();
  Conditions conditions;
  int priority = 0;
  std::int64_t max_wait_time = kUnbounded;  // seconds
  std::int64_t max_exec_time = kUnbounded;  // seconds
  int max_retries = 0;
  std::optional<FsDirectives> fs;

  bool operator==(const FunctionSpec&) const = default;
};

enum class ProcessState { kWaiting, kRunning, kSuccessful, kFailed };

std::string_view state_name(ProcessState s);
// Accepts "waiting", "running", "successful", "failed".
ProcessState state_from_name(std::string_view name);
bool is_terminal(ProcessState s);
// WAITING->RUNNING, RUNNING->{SUCCESSFUL,FAILED,WAITING}; gated or queued
// WAITING processes may also be failed by the reaper or an upstream failure.
bool transition_allowed(ProcessState from, ProcessState to);

struct Process {
  std::string process_id;
  FunctionSpec spec;
  ProcessState state = ProcessState::kWaiting;
  bool wait_for_parents = false;
  std::string assigned_executor;  // empty when unassigned
  Nanos submission_time = 0;
  Nanos priority_time = 0;
  Nanos queued_time = 0;  // when the process last became assignable
  Nanos start_time = 0;
  Nanos end_time = 0;
  Nanos deadline = 0;  // 0: no execution deadline
  int retries = 0;
  Json input = Json::array();
  Json output = Json::array();
  std::vector<std::string> errors;
  std::vector<std::string> parents;
  std::vector<std::string> children;
  std::string workflow_id;

  bool operator==(const Process&) const = default;
};

struct WorkflowGraph {
  std::string workflow_id;
  std::string colony_id;
  std::vector<FunctionSpec> nodes;
};

struct Colony {
  std::string colony_id;
  std::string name;

  bool operator==(const Colony&) const = default;
};

struct ExecutorRecord {
  std::string executor_id;
  std::string executor_name;
  std::string executor_type;
  std::string colony_id;
  bool approved = false;
  std::vector<std::string> functions;
  Nanos last_seen = 0;

  bool operator==(const ExecutorRecord&) const = default;
};

struct CronDef {
  std::string cron_id;
  std::string colony_id;
  std::string name;
  std::int64_t interval = 0;  // seconds; 0 when cron_expr is used
  std::string cron_expr;
  std::vector<FunctionSpec> workflow;
  Nanos next_deadline = 0;
  Nanos last_run = 0;

  bool operator==(const CronDef&) const = default;
};

struct GeneratorDef {
  std::string generator_id;
  std::string colony_id;
  std::string name;
  std::vector<FunctionSpec> workflow;
  std::int64_t trigger_count = 0;
  std::int64_t timeout = kUnbounded;  // seconds of inactivity before a partial batch fires

  bool operator==(const GeneratorDef&) const = default;
};

struct PackRow {
  std::int64_t seq = 0;
  std::string generator_id;
  Json payload;
  Nanos arrival = 0;
  bool consumed = false;
};

struct StorageRef {
  std::string protocol;
  std::string server;
  std::string key;

  bool operator==(const StorageRef&) const = default;
};

struct FileMeta {
  std::string file_id;
  std::string colony_id;
  std::string label;
  std::string name;
  std::string checksum;  // SHA3-256 hex of the content
  std::int64_t size = 0;
  StorageRef storage;
  std::string credentials_ref;
  Nanos added = 0;
  std::int64_t revision = 0;
  bool tombstone = false;

  bool operator==(const FileMeta&) const = default;
};

struct SnapshotEntry {
  std::string file_id;
  std::int64_t revision = 0;
  std::string label;
  std::string name;

  bool operator==(const SnapshotEntry&) const = default;
};

struct Snapshot {
  std::string snapshot_id;
  std::string colony_id;
  std::string label;
  std::vector<SnapshotEntry> files;
  Nanos created = 0;

  bool operator==(const Snapshot&) const = default;
};

// JSON codecs. from_json_* throw Error(kInvalidArgument) on unknown or
// mistyped fields.
Json to_json(const Conditions& c);
Json to_json(const FsDirectives& fs);
Json to_json(const FunctionSpec& spec);
Json to_json(const Process& p);
Json to_json(const Colony& c);
Json to_json(const ExecutorRecord& e);
Json to_json(const CronDef& c);
Json to_json(const GeneratorDef& g);
Json to_json(const StorageRef& r);
Json to_json(const FileMeta& f);
Json to_json(const Snapshot& s);
Json workflow_to_json(const std::vector<FunctionSpec>& nodes);

Conditions conditions_from_json(const Json& j);
FsDirectives fs_from_json(const Json& j);
FunctionSpec spec_from_json(const Json& j);
Process process_from_json(const Json& j);
Colony colony_from_json(const Json& j);
ExecutorRecord executor_from_json(const Json& j);
CronDef cron_from_json(const Json& j);
GeneratorDef generator_from_json(const Json& j);
StorageRef storage_ref_from_json(const Json& j);
FileMeta file_from_json(const Json& j);
Snapshot snapshot_from_json(const Json& j);
// Accepts the bare node list format (a JSON array of specs).
std::vector<FunctionSpec> workflow_from_json(const Json& j);

// Checks the invariants a submitted spec must satisfy (nonempty executor
// type, priority range, retry and time bounds).
void validate_spec(const FunctionSpec& spec);

// Sorted keys, no insignificant whitespace, UTF-8. Signatures are computed
// over these bytes, so every SDK must reproduce them exactly.
std::string canonical(const Json& j);

}  // namespace colonies
