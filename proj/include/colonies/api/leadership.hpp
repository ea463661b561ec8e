#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "colonies/core/model.hpp"

namespace colonies::api {

// What the request handler needs to know about cluster leadership.
class Leadership {
 public:
  virtual ~Leadership() = default;
  virtual bool is_leader() const = 0;
  // Term stamped on claims and scans.
  virtual std::int64_t term() const = 0;
  // Base URL of the current leader's API, when known.
  virtual std::optional<std::string> leader_url() const = 0;
  // The store has seen a newer term; stop acting as leader.
  virtual void stale_term(std::int64_t highest) = 0;
  // Reported by the scan loop after each store round trip.
  virtual void store_health(bool /*healthy*/) {}
  virtual Json status() const = 0;
};

// A lone server: always the leader, at a fixed term.
class StandaloneLeadership final : public Leadership {
 public:
  explicit StandaloneLeadership(std::int64_t term) : term_(term) {}
  bool is_leader() const override { return true; }
  std::int64_t term() const override { return term_; }
  std::optional<std::string> leader_url() const override { return std::nullopt; }
  void stale_term(std::int64_t) override {}
  Json status() const override {
    return {{"role", "leader"}, {"term", term_}, {"leader", "self"},
            {"members", Json::array()}};
  }

 private:
  std::int64_t term_;
};

}  // namespace colonies::api
