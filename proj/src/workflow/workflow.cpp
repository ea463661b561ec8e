#include "colonies/workflow/workflow.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

#include "colonies/core/dag.hpp"
#include "colonies/store/queue.hpp"

namespace colonies::workflow {
namespace {

constexpr const char* kUpstreamFailure = "upstream failure";

void audit_release(store::Tx& tx, const Process& p, Nanos now) {
  store::AuditEvent e;
  e.time = now;
  e.process_id = p.process_id;
  e.action = "release";
  e.state = p.state;
  e.retries = p.retries;
  tx.append_audit(e);
}

}  // namespace

Submitted submit_workflow(store::Tx& tx, const std::vector<FunctionSpec>& nodes,
                          const std::string& colony_id, IdSource& ids,
                          Nanos now, const Json& root_input) {
  validate_workflow(nodes);
  if (!root_input.is_array()) {
    throw Error(Errc::kInvalidArgument, "workflow input must be an array");
  }
  Submitted out;
  out.workflow_id = ids.next();

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < nodes.size(); ++i) index[nodes[i].node_name] = i;

  std::vector<Process> procs;
  procs.reserve(nodes.size());
  for (const auto& node : nodes) {
    FunctionSpec spec = node;
    spec.conditions.colony_id = colony_id;
    bool root = spec.conditions.dependencies.empty();
    Process p = store::make_process(spec, ids.next(), now, !root);
    p.workflow_id = out.workflow_id;
    if (root) p.input = root_input;
    procs.push_back(std::move(p));
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (const auto& dep : nodes[i].conditions.dependencies) {
      auto& parent = procs[index.at(dep)];
      procs[i].parents.push_back(parent.process_id);
      parent.children.push_back(procs[i].process_id);
    }
  }

  tx.insert_workflow({out.workflow_id, colony_id, now,
                      canonical(workflow_to_json(nodes))});
  for (std::size_t i = 0; i < procs.size(); ++i) {
    store::insert_process(tx, procs[i], now);
    tx.insert_dependency({procs[i].process_id, out.workflow_id,
                          nodes[i].node_name, nodes[i].conditions.dependencies});
    out.process_ids.push_back(procs[i].process_id);
  }
  return out;
}

std::vector<Process> release_children(store::Tx& tx, const Process& closed,
                                      Nanos now) {
  std::vector<Process> released;
  for (const auto& child_id : closed.children) {
    Process child = tx.get_process(child_id);
    if (!child.wait_for_parents || child.state != ProcessState::kWaiting) {
      continue;
    }
    Json input = Json::array();
    bool ready = true;
    for (const auto& parent_id : child.parents) {
      Process parent = parent_id == closed.process_id
                           ? closed
                           : tx.get_process(parent_id);
      if (parent.state != ProcessState::kSuccessful) {
        ready = false;
        break;
      }
      for (const auto& v : parent.output) input.push_back(v);
    }
    if (!ready) continue;
    child.wait_for_parents = false;
    child.input = std::move(input);
    child.queued_time = now;
    tx.update_process(child);
    audit_release(tx, child, now);
    released.push_back(std::move(child));
  }
  return released;
}

Process add_child(store::Tx& tx, const std::string& parent_id,
                  const std::string& caller, FunctionSpec spec,
                  bool insert_before, IdSource& ids, Nanos now) {
  Process parent = tx.get_process(parent_id);
  if (is_terminal(parent.state)) {
    throw Error(Errc::kParentTerminal,
                "process " + parent_id + " has already finished");
  }
  if (parent.state != ProcessState::kRunning ||
      parent.assigned_executor != caller) {
    throw Error(Errc::kNotAssignee,
                "only the assigned executor may add children to " + parent_id);
  }

  if (parent.workflow_id.empty()) {
    parent.workflow_id = ids.next();
    tx.insert_workflow({parent.workflow_id, parent.spec.conditions.colony_id,
                        parent.submission_time,
                        canonical(workflow_to_json({parent.spec}))});
  }
  auto parent_dep = tx.find_dependency(parent_id);
  if (!parent_dep) {
    std::string name = parent.spec.node_name.empty() ? parent_id
                                                     : parent.spec.node_name;
    parent_dep = store::DependencyRow{parent_id, parent.workflow_id, name, {}};
    tx.insert_dependency(*parent_dep);
  }

  std::set<std::string> taken;
  for (const auto& id : tx.workflow_processes(parent.workflow_id)) {
    if (auto d = tx.find_dependency(id)) taken.insert(d->node_name);
  }
  std::string child_id = ids.next();
  if (spec.node_name.empty()) spec.node_name = child_id;
  if (taken.count(spec.node_name) != 0) {
    throw Error(Errc::kDuplicateNodeName,
                "node " + spec.node_name + " already exists in the workflow");
  }
  spec.conditions.colony_id = parent.spec.conditions.colony_id;
  spec.conditions.dependencies = {parent_dep->node_name};

  Process child = store::make_process(spec, child_id, now, true);
  child.workflow_id = parent.workflow_id;
  child.parents = {parent_id};

  if (insert_before) {
    for (const auto& grandchild_id : parent.children) {
      Process g = tx.get_process(grandchild_id);
      std::replace(g.parents.begin(), g.parents.end(), parent_id, child_id);
      tx.update_process(g);
      if (auto d = tx.find_dependency(grandchild_id)) {
        std::replace(d->dependencies.begin(), d->dependencies.end(),
                     parent_dep->node_name, spec.node_name);
        tx.update_dependency(*d);
      }
    }
    child.children = parent.children;
    parent.children = {child_id};
  } else {
    parent.children.push_back(child_id);
  }

  store::insert_process(tx, child, now);
  tx.insert_dependency({child_id, child.workflow_id, spec.node_name,
                        spec.conditions.dependencies});
  tx.update_process(parent);
  return child;
}

std::vector<std::string> fail_cascade(store::Tx& tx, const std::string& failed,
                                      Nanos now, std::int64_t term) {
  std::vector<std::string> out;
  std::set<std::string> seen{failed};
  std::deque<std::string> queue;
  for (const auto& c : tx.get_process(failed).children) queue.push_back(c);
  while (!queue.empty()) {
    std::string id = queue.front();
    queue.pop_front();
    if (!seen.insert(id).second) continue;
    Process p = tx.get_process(id);
    if (p.state == ProcessState::kWaiting) {
      store::fail_waiting(tx, id, kUpstreamFailure, now, term);
      out.push_back(id);
    }
    for (const auto& c : p.children) queue.push_back(c);
  }
  return out;
}

std::vector<Process> after_transition(store::Tx& tx, const Process& p,
                                      Nanos now, std::int64_t term) {
  if (p.state == ProcessState::kSuccessful) {
    return release_children(tx, p, now);
  }
  if (p.state == ProcessState::kFailed) fail_cascade(tx, p.process_id, now, term);
  return {};
}

std::string_view status_name(Status s) {
  switch (s) {
    case Status::kSuccessful:
      return "successful";
    case Status::kFailed:
      return "failed";
    default:
      return "running";
  }
}

Status workflow_status(store::Tx& tx, const std::string& workflow_id) {
  auto ids = tx.workflow_processes(workflow_id);
  if (ids.empty()) throw Error(Errc::kNotFound, "workflow " + workflow_id + " not found");
  bool all_done = true;
  for (const auto& id : ids) {
    auto state = tx.get_process(id).state;
    if (state == ProcessState::kFailed) return Status::kFailed;
    if (state != ProcessState::kSuccessful) all_done = false;
  }
  return all_done ? Status::kSuccessful : Status::kInProgress;
}

Json workflow_json(store::Tx& tx, const std::string& workflow_id) {
  auto row = tx.find_workflow(workflow_id);
  if (!row) throw Error(Errc::kNotFound, "workflow " + workflow_id + " not found");
  Json procs = Json::array();
  for (const auto& id : tx.workflow_processes(workflow_id)) {
    procs.push_back(to_json(tx.get_process(id)));
  }
  return {{"workflowid", row->workflow_id},
          {"colonyid", row->colony_id},
          {"submissiontime", row->submission_time},
          {"state", std::string(status_name(workflow_status(tx, workflow_id)))},
          {"processes", std::move(procs)}};
}

}  // namespace colonies::workflow
