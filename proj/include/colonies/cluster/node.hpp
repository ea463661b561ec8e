#pragma once

// Raft leader election without a replicated log: the shared store holds all
// state, so replicas only need to agree on who serves assigns and runs the
// scans. The node is a pure state machine; the owner feeds it time and
// messages and delivers what it returns.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "colonies/core/clock.hpp"
#include "colonies/core/model.hpp"

namespace colonies::cluster {

enum class Role { kFollower, kCandidate, kLeader };
std::string_view role_name(Role r);

struct Timing {
  Nanos heartbeat = millis(50);
  Nanos election_min = millis(150);
  Nanos election_max = millis(300);
};

struct Message {
  enum class Kind { kVoteRequest, kVoteReply, kHeartbeat, kHeartbeatReply };
  Kind kind = Kind::kHeartbeat;
  std::string from;
  std::string to;
  std::int64_t term = 0;
  bool ok = false;  // vote granted / heartbeat accepted
};

Json to_json(const Message& m);
Message message_from_json(const Json& j);

// Must survive restarts for election safety.
struct Durable {
  std::int64_t term = 0;
  std::string voted_for;
};

class Node {
 public:
  Node(std::string name, std::vector<std::string> peers, Timing timing,
       std::uint64_t seed, Durable durable = {});

  std::vector<Message> tick(Nanos now);
  std::vector<Message> receive(const Message& m, Nanos now);

  // The store reported a newer term: adopt it and stand down.
  void observe_term(std::int64_t term, Nanos now);
  // While unhealthy the node neither leads nor stands for election.
  void set_store_healthy(bool healthy, Nanos now);

  const std::string& name() const { return name_; }
  Role role() const { return role_; }
  std::int64_t term() const { return durable_.term; }
  const std::optional<std::string>& leader() const { return leader_; }
  const Durable& durable() const { return durable_; }
  bool store_healthy() const { return store_healthy_; }
  std::size_t quorum() const { return (peers_.size() + 1) / 2 + 1; }

 private:
  void become_follower(std::int64_t term, Nanos now);
  std::vector<Message> start_election(Nanos now);
  std::vector<Message> become_leader(Nanos now);
  std::vector<Message> heartbeats(Nanos now);
  void reset_election_deadline(Nanos now);
  void set_term(std::int64_t term);

  std::string name_;
  std::vector<std::string> peers_;
  Timing timing_;
  std::mt19937_64 rng_;
  Durable durable_;
  Role role_ = Role::kFollower;
  std::optional<std::string> leader_;
  Nanos election_deadline_ = -1;
  Nanos next_heartbeat_ = 0;
  std::map<std::string, bool> votes_;
  std::map<std::string, Nanos> last_ack_;
  Nanos leader_since_ = 0;
  bool store_healthy_ = true;
};

}  // namespace colonies::cluster
