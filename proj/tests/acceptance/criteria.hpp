#pragma once

#include <chrono>
#include <sstream>
#include <string>
#include <vector>

namespace acceptance {

// Collects failed checks; the criterion passes when none failed.
struct Verdict {
  std::vector<std::string> failures;
  std::ostringstream note;

  bool check(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
    return ok;
  }
  bool pass() const { return failures.empty(); }
};

inline double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Verdict criterion1();  // pipeline through three executor types
Verdict criterion2();  // exclusivity under contention
Verdict criterion3();  // failsafe recovery
Verdict criterion4();  // leader failover, triggers exactly once
Verdict criterion5();  // zero trust
Verdict criterion6();  // statelessness differential
Verdict criterion7();  // CFS immutability and snapshot isolation
Verdict criterion8();  // priority formula and pop order

}  // namespace acceptance
