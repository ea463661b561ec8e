#pragma once

// DAG workflows materialized as gated processes. All functions run inside
// the caller's transaction.

#include <string>
#include <vector>

#include "colonies/core/ids.hpp"
#include "colonies/store/store.hpp"

namespace colonies::workflow {

struct Submitted {
  std::string workflow_id;
  std::vector<std::string> process_ids;  // in node declaration order
};

// One process per node. Roots are assignable at once and receive
// `root_input`; every other node waits for its parents. `colony_id`
// overrides the colony named in the node specs.
Submitted submit_workflow(store::Tx& tx, const std::vector<FunctionSpec>& nodes,
                          const std::string& colony_id, IdSource& ids,
                          Nanos now, const Json& root_input = Json::array());

// Opens the gate of every child of `closed` whose parents have all
// succeeded. The child input is the concatenation of the parent outputs in
// dependency-list order. Returns the released processes.
std::vector<Process> release_children(store::Tx& tx, const Process& closed,
                                      Nanos now);

// Adds a child below a RUNNING parent. Only the assignee may do this. With
// insert_before the new node takes over the parent's existing children.
Process add_child(store::Tx& tx, const std::string& parent_id,
                  const std::string& caller, FunctionSpec spec,
                  bool insert_before, IdSource& ids, Nanos now);

// FAILs every non-terminal WAITING descendant of `failed` with
// "upstream failure". Returns their ids.
std::vector<std::string> fail_cascade(store::Tx& tx, const std::string& failed,
                                      Nanos now, std::int64_t term);

// Release or cascade, depending on the state `p` has just reached. Returns
// the processes that became assignable.
std::vector<Process> after_transition(store::Tx& tx, const Process& p,
                                      Nanos now, std::int64_t term);

enum class Status { kInProgress, kSuccessful, kFailed };
std::string_view status_name(Status s);

// Derived on every call, never stored.
Status workflow_status(store::Tx& tx, const std::string& workflow_id);

Json workflow_json(store::Tx& tx, const std::string& workflow_id);

}  // namespace colonies::workflow
