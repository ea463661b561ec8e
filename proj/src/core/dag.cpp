#include "colonies/core/dag.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>

#include "colonies/core/error.hpp"

namespace colonies {
namespace {

using Index = std::map<std::string, std::size_t>;

Index index_nodes(const std::vector<FunctionSpec>& nodes) {
  Index index;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& name = nodes[i].node_name;
    if (name.empty()) {
      throw Error(Errc::kInvalidArgument,
                  "workflow node " + std::to_string(i) + " has no nodename");
    }
    if (!index.emplace(name, i).second) {
      throw Error(Errc::kDuplicateNodeName, "duplicate node name \"" + name + "\"");
    }
  }
  return index;
}

// DFS with white/grey/black coloring; returns one cycle if any.
std::vector<std::string> find_cycle(const std::vector<FunctionSpec>& nodes,
                                    const Index& index) {
  enum Color { kWhite, kGrey, kBlack };
  std::vector<Color> color(nodes.size(), kWhite);
  std::vector<std::size_t> stack;
  std::vector<std::string> cycle;

  auto visit = [&](auto&& self, std::size_t u) -> bool {
    color[u] = kGrey;
    stack.push_back(u);
    for (const auto& dep : nodes[u].conditions.dependencies) {
      std::size_t v = index.at(dep);
      if (color[v] == kGrey) {
        auto it = std::find(stack.begin(), stack.end(), v);
        for (; it != stack.end(); ++it) cycle.push_back(nodes[*it].node_name);
        cycle.push_back(nodes[v].node_name);
        return true;
      }
      if (color[v] == kWhite && self(self, v)) return true;
    }
    stack.pop_back();
    color[u] = kBlack;
    return false;
  };

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (color[i] == kWhite && visit(visit, i)) break;
  }
  return cycle;
}

}  // namespace

void validate_workflow(const std::vector<FunctionSpec>& nodes) {
  if (nodes.empty()) {
    throw Error(Errc::kInvalidArgument, "workflow has no nodes");
  }
  Index index = index_nodes(nodes);
  for (const auto& node : nodes) {
    std::set<std::string> seen;
    for (const auto& dep : node.conditions.dependencies) {
      if (!index.contains(dep)) {
        throw Error(Errc::kUnknownDependency, "node \"" + node.node_name +
                                                  "\" depends on unknown node \"" +
                                                  dep + "\"");
      }
      if (!seen.insert(dep).second) {
        throw Error(Errc::kInvalidArgument, "node \"" + node.node_name +
                                                "\" lists dependency \"" + dep +
                                                "\" twice");
      }
    }
  }
  auto cycle = find_cycle(nodes, index);
  if (!cycle.empty()) {
    std::string text;
    for (std::size_t i = 0; i < cycle.size(); ++i) {
      if (i) text += " -> ";
      text += cycle[i];
    }
    throw Error(Errc::kCycleDetected, "cycle detected: " + text);
  }
}

std::vector<std::size_t> topological_order(
    const std::vector<FunctionSpec>& nodes) {
  Index index;
  for (std::size_t i = 0; i < nodes.size(); ++i) index[nodes[i].node_name] = i;
  std::vector<std::size_t> indegree(nodes.size(), 0);
  std::vector<std::vector<std::size_t>> children(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (const auto& dep : nodes[i].conditions.dependencies) {
      children[index.at(dep)].push_back(i);
      ++indegree[i];
    }
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>>
      ready;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (indegree[i] == 0) ready.push(i);
  }
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    std::size_t u = ready.top();
    ready.pop();
    order.push_back(u);
    for (auto v : children[u]) {
      if (--indegree[v] == 0) ready.push(v);
    }
  }
  return order;
}

}  // namespace colonies
