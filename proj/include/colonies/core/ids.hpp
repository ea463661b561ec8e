#pragma once

#include <cstdint>
#include <mutex>
#include <random>
#include <string>

namespace colonies {

// Source of 64-hex-char record ids (processes, workflows, crons, files, ...).
// All ids share the identity namespace: SHA3-256 over 32 random bytes.
class IdSource {
 public:
  virtual ~IdSource() = default;
  virtual std::string next() = 0;
};

class RandomIdSource final : public IdSource {
 public:
  std::string next() override;
};

// Reproducible ids for tests and simulation. Thread-safe.
class SeededIdSource final : public IdSource {
 public:
  explicit SeededIdSource(std::uint64_t seed) : rng_(seed) {}
  std::string next() override;

 private:
  std::mutex mu_;
  std::mt19937_64 rng_;
};

}  // namespace colonies
