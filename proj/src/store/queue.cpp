#include "colonies/store/queue.hpp"

#include <algorithm>

#include "colonies/core/priority.hpp"

namespace colonies::store {
namespace {

constexpr std::int64_t kClaimPage = 64;

void audit(Tx& tx, const Process& p, const std::string& action, Nanos now,
           std::int64_t term, const std::string& executor,
           const std::string& reason = {}) {
  AuditEvent e;
  e.time = now;
  e.process_id = p.process_id;
  e.action = action;
  e.state = p.state;
  e.executor_id = executor;
  e.term = term;
  e.reason = reason;
  e.retries = p.retries;
  tx.append_audit(e);
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

// Shared by reset and failed close.
void consume_retry(Process& p, const std::string& reason, Nanos now) {
  p.retries += 1;
  p.assigned_executor.clear();
  p.deadline = 0;
  if (!reason.empty()) p.errors.push_back(reason);
  if (p.retries <= p.spec.max_retries) {
    p.state = ProcessState::kWaiting;
    p.start_time = 0;
    p.queued_time = now;
  } else {
    p.state = ProcessState::kFailed;
    p.end_time = now;
  }
}

}  // namespace

Process make_process(const FunctionSpec& spec, std::string process_id,
                     Nanos now, bool gated) {
  Process p;
  p.process_id = std::move(process_id);
  p.spec = spec;
  p.state = ProcessState::kWaiting;
  p.wait_for_parents = gated;
  p.submission_time = now;
  p.priority_time = compute_priority_time(now, spec.priority);
  p.queued_time = now;
  return p;
}

void insert_process(Tx& tx, const Process& p, Nanos now) {
  validate_spec(p.spec);
  if (p.state != ProcessState::kWaiting) {
    throw Error(Errc::kInvalidTransition, "new processes must be waiting");
  }
  tx.insert_process(p);
  audit(tx, p, "submit", now, 0, {});
}

std::optional<Process> select_and_claim(Tx& tx, const ExecutorRecord& executor,
                                        Nanos now, std::int64_t term) {
  tx.fence(term);
  for (std::int64_t offset = 0;; offset += kClaimPage) {
    auto page = tx.claim_candidates(executor.colony_id, executor.executor_type,
                                    kClaimPage, offset);
    for (const auto& c : page) {
      if (!c.executor_names.empty() &&
          !contains(c.executor_names, executor.executor_name)) {
        continue;
      }
      if (!executor.functions.empty() &&
          !contains(executor.functions, c.func_name)) {
        continue;
      }
      Process p = tx.get_process(c.process_id);
      p.state = ProcessState::kRunning;
      p.assigned_executor = executor.executor_id;
      p.start_time = now;
      p.deadline = p.spec.max_exec_time > 0
                       ? now + p.spec.max_exec_time * kNanosPerSecond
                       : 0;
      tx.update_process(p);
      auto rec = tx.find_executor(executor.executor_id);
      if (rec) {
        rec->last_seen = now;
        tx.update_executor(*rec);
      }
      audit(tx, p, "claim", now, term, executor.executor_id);
      return p;
    }
    if (static_cast<std::int64_t>(page.size()) < kClaimPage) return std::nullopt;
  }
}

Process reset_process(Tx& tx, const std::string& process_id,
                      const std::string& reason, Nanos now, std::int64_t term) {
  Process p = tx.get_process(process_id);
  if (p.state != ProcessState::kRunning) {
    throw Error(Errc::kNotRunning, "process " + process_id + " is not running");
  }
  std::string previous = p.assigned_executor;
  consume_retry(p, reason, now);
  tx.update_process(p);
  audit(tx, p, p.state == ProcessState::kFailed ? "fail" : "reset", now, term,
        previous, reason);
  return p;
}

Process close_process(Tx& tx, const std::string& process_id,
                      const std::string& caller, bool success,
                      const Json& output, const std::vector<std::string>& errors,
                      Nanos now) {
  auto found = tx.find_process(process_id);
  if (!found) throw Error(Errc::kNotFound, "process " + process_id + " not found");
  Process p = std::move(*found);
  if (p.state != ProcessState::kRunning) {
    throw Error(Errc::kNotRunning, "process " + process_id + " is not running");
  }
  if (p.assigned_executor != caller) {
    throw Error(Errc::kNotAssignee,
                "only the assigned executor may close process " + process_id);
  }
  if (!output.is_array()) {
    throw Error(Errc::kInvalidArgument, "output must be a JSON array");
  }
  if (success) {
    p.state = ProcessState::kSuccessful;
    p.output = output;
    p.end_time = now;
    p.deadline = 0;
    tx.update_process(p);
    audit(tx, p, "close", now, 0, caller);
    return p;
  }
  std::string reason = "executor reported failure";
  for (const auto& e : errors) p.errors.push_back(e);
  if (!errors.empty()) reason = errors.back();
  p.output = output;
  consume_retry(p, {}, now);
  tx.update_process(p);
  audit(tx, p, p.state == ProcessState::kFailed ? "fail" : "reset", now, 0,
        caller, reason);
  return p;
}

Process fail_waiting(Tx& tx, const std::string& process_id,
                     const std::string& reason, Nanos now, std::int64_t term) {
  Process p = tx.get_process(process_id);
  if (p.state != ProcessState::kWaiting) {
    throw Error(Errc::kInvalidTransition,
                "process " + process_id + " is not waiting");
  }
  p.state = ProcessState::kFailed;
  p.end_time = now;
  p.errors.push_back(reason);
  tx.update_process(p);
  audit(tx, p, "fail", now, term, {}, reason);
  return p;
}

std::vector<std::string> expired_processes(Tx& tx, Nanos now) {
  return tx.expired_running(now);
}

}  // namespace colonies::store
