#include "colonies/core/error.hpp"

#include <array>
#include <utility>

namespace colonies {
namespace {

constexpr std::array<std::pair<Errc, std::string_view>, 33> kNames{{
    {Errc::kInvalidArgument, "invalid-argument"},
    {Errc::kNotFound, "not-found"},
    {Errc::kUnauthorized, "unauthorized"},
    {Errc::kBadSignature, "bad-signature"},
    {Errc::kStaleTimestamp, "stale-timestamp"},
    {Errc::kMalformedEnvelope, "malformed-envelope"},
    {Errc::kMalformedSignature, "malformed-signature"},
    {Errc::kUnrecoverablePoint, "unrecoverable-point"},
    {Errc::kDuplicateId, "duplicate-id"},
    {Errc::kNotAssignee, "not-assignee"},
    {Errc::kNotRunning, "not-running"},
    {Errc::kParentTerminal, "parent-terminal"},
    {Errc::kInvalidTransition, "invalid-transition"},
    {Errc::kCycleDetected, "cycle-detected"},
    {Errc::kUnknownDependency, "unknown-dependency"},
    {Errc::kDuplicateNodeName, "duplicate-node-name"},
    {Errc::kInvalidTimeout, "invalid-timeout"},
    {Errc::kInvalidSchedule, "invalid-schedule"},
    {Errc::kUnknownGenerator, "unknown-generator"},
    {Errc::kMalformedChecksum, "malformed-checksum"},
    {Errc::kUnknownLabel, "unknown-label"},
    {Errc::kUnknownSnapshot, "unknown-snapshot"},
    {Errc::kChecksumMismatch, "checksum-mismatch"},
    {Errc::kStorageUnreachable, "storage-unreachable"},
    {Errc::kStorageFailure, "storage-failure"},
    {Errc::kStaleTerm, "stale-term"},
    {Errc::kLeaderUnknown, "leader-unknown"},
    {Errc::kTooManyWaiters, "too-many-waiters"},
    {Errc::kPayloadTooLarge, "payload-too-large"},
    {Errc::kUnknownExecutor, "unknown-executor"},
    {Errc::kRandomnessFailure, "randomness-failure"},
    {Errc::kConnectionRefused, "connection-refused"},
    {Errc::kInternal, "internal"},
}};

}  // namespace

std::string_view errc_name(Errc code) {
  for (const auto& [c, name] : kNames) {
    if (c == code) return name;
  }
  return "internal";
}

Errc errc_from_name(std::string_view name) {
  for (const auto& [c, n] : kNames) {
    if (n == name) return c;
  }
  return Errc::kInternal;
}

int http_status(Errc code) {
  switch (code) {
    case Errc::kUnauthorized:
    case Errc::kBadSignature:
    case Errc::kStaleTimestamp:
    case Errc::kMalformedSignature:
    case Errc::kUnrecoverablePoint:
      return 403;
    case Errc::kNotFound:
    case Errc::kUnknownGenerator:
    case Errc::kUnknownLabel:
    case Errc::kUnknownSnapshot:
    case Errc::kUnknownExecutor:
      return 404;
    case Errc::kDuplicateId:
    case Errc::kNotAssignee:
    case Errc::kNotRunning:
    case Errc::kParentTerminal:
    case Errc::kInvalidTransition:
    case Errc::kStaleTerm:
      return 409;
    case Errc::kPayloadTooLarge:
      return 413;
    case Errc::kLeaderUnknown:
    case Errc::kTooManyWaiters:
    case Errc::kStorageFailure:
    case Errc::kStorageUnreachable:
    case Errc::kConnectionRefused:
      return 503;
    case Errc::kInternal:
    case Errc::kRandomnessFailure:
      return 500;
    default:
      return 400;
  }
}

}  // namespace colonies
