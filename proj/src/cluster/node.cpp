#include "colonies/cluster/node.hpp"

#include "colonies/core/error.hpp"

namespace colonies::cluster {

std::string_view role_name(Role r) {
  switch (r) {
    case Role::kLeader:
      return "leader";
    case Role::kCandidate:
      return "candidate";
    default:
      return "follower";
  }
}

namespace {

std::string_view kind_name(Message::Kind k) {
  switch (k) {
    case Message::Kind::kVoteRequest:
      return "vote";
    case Message::Kind::kVoteReply:
      return "votereply";
    case Message::Kind::kHeartbeat:
      return "heartbeat";
    default:
      return "heartbeatreply";
  }
}

}  // namespace

Json to_json(const Message& m) {
  return {{"kind", std::string(kind_name(m.kind))},
          {"from", m.from},
          {"to", m.to},
          {"term", m.term},
          {"ok", m.ok}};
}

Message message_from_json(const Json& j) {
  Message m;
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "vote") {
    m.kind = Message::Kind::kVoteRequest;
  } else if (kind == "votereply") {
    m.kind = Message::Kind::kVoteReply;
  } else if (kind == "heartbeat") {
    m.kind = Message::Kind::kHeartbeat;
  } else if (kind == "heartbeatreply") {
    m.kind = Message::Kind::kHeartbeatReply;
  } else {
    throw Error(Errc::kInvalidArgument, "unknown cluster message " + kind);
  }
  m.from = j.at("from").get<std::string>();
  m.to = j.at("to").get<std::string>();
  m.term = j.at("term").get<std::int64_t>();
  m.ok = j.at("ok").get<bool>();
  return m;
}

Node::Node(std::string name, std::vector<std::string> peers, Timing timing,
           std::uint64_t seed, Durable durable)
    : name_(std::move(name)),
      peers_(std::move(peers)),
      timing_(timing),
      rng_(seed),
      durable_(std::move(durable)) {
  if (timing_.heartbeat >= timing_.election_min ||
      timing_.election_min > timing_.election_max) {
    throw Error(Errc::kInvalidArgument,
                "heartbeat must be shorter than the election timeout");
  }
}

void Node::reset_election_deadline(Nanos now) {
  std::uniform_int_distribution<Nanos> d(timing_.election_min, timing_.election_max);
  election_deadline_ = now + d(rng_);
}

void Node::set_term(std::int64_t term) {
  if (term > durable_.term) {
    durable_.term = term;
    durable_.voted_for.clear();
  }
}

void Node::become_follower(std::int64_t term, Nanos now) {
  set_term(term);
  if (role_ != Role::kFollower) leader_.reset();
  role_ = Role::kFollower;
  reset_election_deadline(now);
}

std::vector<Message> Node::start_election(Nanos now) {
  role_ = Role::kCandidate;
  leader_.reset();
  durable_.term += 1;
  durable_.voted_for = name_;
  votes_.clear();
  votes_[name_] = true;
  reset_election_deadline(now);
  if (votes_.size() >= quorum()) return become_leader(now);
  std::vector<Message> out;
  for (const auto& p : peers_) {
    out.push_back({Message::Kind::kVoteRequest, name_, p, durable_.term, false});
  }
  return out;
}

std::vector<Message> Node::become_leader(Nanos now) {
  role_ = Role::kLeader;
  leader_ = name_;
  leader_since_ = now;
  last_ack_.clear();
  next_heartbeat_ = now;
  return heartbeats(now);
}

std::vector<Message> Node::heartbeats(Nanos now) {
  std::vector<Message> out;
  for (const auto& p : peers_) {
    out.push_back({Message::Kind::kHeartbeat, name_, p, durable_.term, false});
  }
  next_heartbeat_ = now + timing_.heartbeat;
  return out;
}

std::vector<Message> Node::tick(Nanos now) {
  if (election_deadline_ < 0) reset_election_deadline(now);
  // Nobody to wait for.
  if (peers_.empty() && role_ != Role::kLeader && store_healthy_) {
    return start_election(now);
  }
  if (role_ == Role::kLeader) {
    // Check quorum: a leader cut off from a majority stands down so that a
    // reachable replica can take over.
    std::size_t fresh = 1;
    for (const auto& [peer, at] : last_ack_) {
      if (now - at <= timing_.election_max) ++fresh;
    }
    if (fresh < quorum() && now - leader_since_ > timing_.election_max) {
      become_follower(durable_.term, now);
      return {};
    }
    if (now >= next_heartbeat_) return heartbeats(now);
    return {};
  }
  if (now >= election_deadline_) {
    if (!store_healthy_) {
      reset_election_deadline(now);
      return {};
    }
    return start_election(now);
  }
  return {};
}

std::vector<Message> Node::receive(const Message& m, Nanos now) {
  if (m.to != name_) return {};
  if (m.term > durable_.term) become_follower(m.term, now);

  switch (m.kind) {
    case Message::Kind::kVoteRequest: {
      bool grant = m.term == durable_.term && store_healthy_ &&
                   (durable_.voted_for.empty() || durable_.voted_for == m.from) &&
                   role_ != Role::kLeader;
      if (grant) {
        durable_.voted_for = m.from;
        reset_election_deadline(now);
      }
      return {{Message::Kind::kVoteReply, name_, m.from, durable_.term, grant}};
    }
    case Message::Kind::kVoteReply:
      if (role_ == Role::kCandidate && m.term == durable_.term && m.ok) {
        votes_[m.from] = true;
        if (votes_.size() >= quorum()) return become_leader(now);
      }
      return {};
    case Message::Kind::kHeartbeat: {
      if (m.term < durable_.term) {
        return {{Message::Kind::kHeartbeatReply, name_, m.from, durable_.term, false}};
      }
      if (role_ != Role::kFollower) become_follower(m.term, now);
      leader_ = m.from;
      reset_election_deadline(now);
      return {{Message::Kind::kHeartbeatReply, name_, m.from, durable_.term, true}};
    }
    case Message::Kind::kHeartbeatReply:
      if (role_ == Role::kLeader && m.term == durable_.term && m.ok) {
        last_ack_[m.from] = now;
      }
      return {};
  }
  return {};
}

void Node::observe_term(std::int64_t term, Nanos now) {
  if (term >= durable_.term) {
    // Our claim was fenced: somebody led at `term` already. Move past it.
    become_follower(term, now);
  }
}

void Node::set_store_healthy(bool healthy, Nanos now) {
  store_healthy_ = healthy;
  if (!healthy && role_ != Role::kFollower) become_follower(durable_.term, now);
}

}  // namespace colonies::cluster
