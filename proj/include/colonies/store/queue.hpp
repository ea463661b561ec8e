#pragma once

// Process-queue operations on top of the row API. Each function runs inside
// the caller's transaction and appends the matching audit event.

#include <optional>
#include <string>
#include <vector>

#include "colonies/store/store.hpp"

namespace colonies::store {

// A fresh WAITING process for `spec`, with its priority time computed from
// `now`. Gated processes (workflow children) get wait_for_parents = true.
Process make_process(const FunctionSpec& spec, std::string process_id,
                     Nanos now, bool gated);

// Validates the function spec and inserts the row. Throws kDuplicateId.
void insert_process(Tx& tx, const Process& p, Nanos now);

// Claims the assignable WAITING process with the smallest priority time that
// matches the executor's colony, type, name filter and registered functions.
// The claim is fenced with `term`.
std::optional<Process> select_and_claim(Tx& tx, const ExecutorRecord& executor,
                                        Nanos now, std::int64_t term);

// Consumes one retry of a RUNNING process: back to WAITING with its original
// priority time while budget remains, FAILED with `reason` otherwise.
Process reset_process(Tx& tx, const std::string& process_id,
                      const std::string& reason, Nanos now, std::int64_t term);

// Only the assignee may close. A failed close consumes a retry like a reset.
Process close_process(Tx& tx, const std::string& process_id,
                      const std::string& caller, bool success,
                      const Json& output, const std::vector<std::string>& errors,
                      Nanos now);

// FAILs a WAITING process (wait expiry, upstream failure).
Process fail_waiting(Tx& tx, const std::string& process_id,
                     const std::string& reason, Nanos now, std::int64_t term);

std::vector<std::string> expired_processes(Tx& tx, Nanos now);

}  // namespace colonies::store
