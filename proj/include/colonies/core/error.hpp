#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace colonies {

// Domain error codes. The string names are part of the wire protocol
// ({"error":{"code":...,"message":...}}) and must stay stable.
enum class Errc {
  kInvalidArgument,
  kNotFound,
  kUnauthorized,
  kBadSignature,
  kStaleTimestamp,
  kMalformedEnvelope,
  kMalformedSignature,
  kUnrecoverablePoint,
  kDuplicateId,
  kNotAssignee,
  kNotRunning,
  kParentTerminal,
  kInvalidTransition,
  kCycleDetected,
  kUnknownDependency,
  kDuplicateNodeName,
  kInvalidTimeout,
  kInvalidSchedule,
  kUnknownGenerator,
  kMalformedChecksum,
  kUnknownLabel,
  kUnknownSnapshot,
  kChecksumMismatch,
  kStorageUnreachable,
  kStorageFailure,
  kStaleTerm,
  kLeaderUnknown,
  kTooManyWaiters,
  kPayloadTooLarge,
  kUnknownExecutor,
  kRandomnessFailure,
  kConnectionRefused,
  kInternal,
};

std::string_view errc_name(Errc code);
// Unknown names map to kInternal.
Errc errc_from_name(std::string_view name);
int http_status(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace colonies
