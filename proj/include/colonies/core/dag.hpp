#pragma once

#include <string>
#include <vector>

#include "colonies/core/model.hpp"

namespace colonies {

// Accepts iff node names are unique and nonempty, every dependency names a
// node of the graph and the graph is acyclic. Throws Error with
// kDuplicateNodeName, kUnknownDependency or kCycleDetected (the message
// lists one cycle as "a -> b -> a"). kInvalidArgument for an empty graph.
void validate_workflow(const std::vector<FunctionSpec>& nodes);

// Kahn order (ties broken by declaration order); indices into `nodes`.
// Precondition: validate_workflow passed.
std::vector<std::size_t> topological_order(
    const std::vector<FunctionSpec>& nodes);

}  // namespace colonies
