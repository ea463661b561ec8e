#pragma once

// Signed request envelope:
//   {"payloadtype": <method>, "payload": base64(canonical JSON),
//    "signature": hex(r || s || v)}
// The signature covers exactly the decoded payload bytes. The payload
// repeats the method as "msgtype" and carries a "timestamp" in ns.

#include <string>

#include "colonies/core/model.hpp"
#include "colonies/crypto/keys.hpp"

namespace colonies::api {

inline constexpr Nanos kReplayWindow = seconds(300);

// Adds msgtype and timestamp to `payload`, then signs it.
Json make_envelope(const std::string& payload_type, Json payload,
                   const crypto::PrivateKey& key, Nanos now);

struct Authenticated {
  crypto::Identity identity;
  std::string payload_type;
  Json payload;
};

// Throws kMalformedEnvelope, kMalformedSignature, kUnrecoverablePoint or
// kStaleTimestamp. The identity comes only from signature recovery.
Authenticated authenticate(const std::string& body, Nanos now);

}  // namespace colonies::api
