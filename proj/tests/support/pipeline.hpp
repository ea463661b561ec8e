#pragma once

// The four-node gen_nums -> square, square -> sum pipeline, one executor
// type per stage.

#include <vector>

#include "colonies/core/model.hpp"

namespace pipeline {

inline std::vector<colonies::FunctionSpec> nodes(const std::string& colony) {
  auto node = [&](const char* name, const char* func, const char* type,
                  std::vector<std::string> deps) {
    colonies::FunctionSpec s;
    s.node_name = name;
    s.func_name = func;
    s.conditions.colony_id = colony;
    s.conditions.executor_type = type;
    s.conditions.dependencies = std::move(deps);
    s.priority = 1;
    s.max_exec_time = 200;
    s.max_retries = 5;
    return s;
  };
  auto f1 = node("gen", "gen_nums", "edge", {});
  auto f2 = node("square_a", "square", "cloud", {"gen"});
  f2.kwargs = {{"index", 0}};
  auto f3 = node("square_b", "square", "cloud", {"gen"});
  f3.kwargs = {{"index", 1}};
  auto f4 = node("sum", "sum", "browser", {"square_a", "square_b"});
  return {f1, f2, f3, f4};
}

}  // namespace pipeline
