// Runs acceptance criteria 1-8 (or the ones named on the command line) and
// prints one PASS/FAIL line each. Exit status is nonzero if any failed.

#include <spdlog/spdlog.h>

#include <cstdlib>
#include <exception>
#include <functional>
#include <iostream>
#include <set>

#include "criteria.hpp"

int main(int argc, char** argv) {
  using namespace acceptance;
  spdlog::set_level(spdlog::level::err);
  std::vector<std::function<Verdict()>> all = {criterion1, criterion2, criterion3, criterion4,
                                               criterion5, criterion6, criterion7, criterion8};
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (int n = 1; n <= static_cast<int>(all.size()); ++n) {
    if (!only.empty() && !only.count(n)) continue;
    auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = all[n - 1]();
    } catch (const std::exception& e) {
      v.failures.push_back(std::string("threw: ") + e.what());
    }
    std::cout << "criterion " << n << ": " << (v.pass() ? "PASS" : "FAIL") << "  ("
              << since(t0) << " s) " << v.note.str();
    for (const auto& f : v.failures) std::cout << "\n    failed: " << f;
    std::cout << std::endl;
    if (!v.pass()) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
