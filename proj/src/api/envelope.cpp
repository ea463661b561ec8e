#include "colonies/api/envelope.hpp"

#include "colonies/core/error.hpp"
#include "colonies/crypto/encoding.hpp"

namespace colonies::api {
namespace {

[[noreturn]] void malformed(const std::string& why) {
  throw Error(Errc::kMalformedEnvelope, "malformed envelope: " + why);
}

}  // namespace

Json make_envelope(const std::string& payload_type, Json payload,
                   const crypto::PrivateKey& key, Nanos now) {
  payload["msgtype"] = payload_type;
  payload["timestamp"] = now;
  std::string bytes = canonical(payload);
  return {{"payloadtype", payload_type},
          {"payload", crypto::base64_encode(crypto::as_bytes(bytes))},
          {"signature", crypto::sign(bytes, key).hex()}};
}

Authenticated authenticate(const std::string& body, Nanos now) {
  Json env = Json::parse(body, nullptr, false);
  if (env.is_discarded() || !env.is_object()) malformed("not a JSON object");
  if (env.size() != 3) malformed("unexpected fields");
  for (const char* key : {"payloadtype", "payload", "signature"}) {
    if (!env.contains(key) || !env[key].is_string()) {
      malformed(std::string("missing ") + key);
    }
  }
  Authenticated out;
  out.payload_type = env["payloadtype"].get<std::string>();

  crypto::Bytes raw;
  try {
    raw = crypto::base64_decode(env["payload"].get<std::string>());
  } catch (const Error&) {
    malformed("payload is not base64");
  }
  std::string bytes(raw.begin(), raw.end());
  auto sig = crypto::Signature::from_hex(env["signature"].get<std::string>());

  out.payload = Json::parse(bytes, nullptr, false);
  if (out.payload.is_discarded() || !out.payload.is_object()) {
    malformed("payload is not a JSON object");
  }
  if (canonical(out.payload) != bytes) malformed("payload is not canonical JSON");
  if (!out.payload.contains("msgtype") || out.payload["msgtype"] != out.payload_type) {
    malformed("msgtype does not match payloadtype");
  }
  if (!out.payload.contains("timestamp") ||
      !out.payload["timestamp"].is_number_integer()) {
    malformed("missing timestamp");
  }

  out.identity = crypto::recover(std::string_view(bytes), sig);

  Nanos ts = out.payload["timestamp"].get<Nanos>();
  if (ts < now - kReplayWindow || ts > now + kReplayWindow) {
    throw Error(Errc::kStaleTimestamp, "request timestamp outside the replay window");
  }
  return out;
}

}  // namespace colonies::api
