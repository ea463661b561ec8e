#pragma once

// Recoverable secp256k1 signatures and identity derivation.
//
// A principal is never looked up by public key: the server recovers the
// signer's public key from (message, signature) and hashes it into a 64-hex
// identity. Messages are hashed with SHA3-256 before signing; nonces follow
// RFC 6979 (HMAC-SHA256), so signatures are deterministic.

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace colonies::crypto {

using PublicKey = std::array<std::uint8_t, 65>;  // 0x04 || X || Y

class Identity {
 public:
  Identity() = default;
  // Throws Error(kInvalidArgument) unless exactly 64 lowercase hex chars.
  static Identity from_hex(std::string_view hex);

  const std::string& str() const noexcept { return hex_; }
  bool empty() const noexcept { return hex_.empty(); }

  auto operator<=>(const Identity&) const = default;

 private:
  explicit Identity(std::string hex) : hex_(std::move(hex)) {}
  std::string hex_;

  friend Identity derive_identity(const PublicKey& pub);
};

class PrivateKey {
 public:
  // Uses the OpenSSL CSPRNG; throws Error(kRandomnessFailure).
  static PrivateKey generate();
  // Throws Error(kInvalidArgument) for zero, >= curve order, or bad hex.
  static PrivateKey from_hex(std::string_view hex);

  PrivateKey(const PrivateKey&) = default;
  PrivateKey& operator=(const PrivateKey&) = default;
  ~PrivateKey();

  std::string hex() const;
  PublicKey public_key() const;
  Identity identity() const;
  const std::array<std::uint8_t, 32>& scalar() const noexcept { return scalar_; }

 private:
  explicit PrivateKey(const std::array<std::uint8_t, 32>& scalar)
      : scalar_(scalar) {}
  std::array<std::uint8_t, 32> scalar_{};
};

struct Signature {
  std::array<std::uint8_t, 32> r{};
  std::array<std::uint8_t, 32> s{};
  std::uint8_t recovery_id = 0;  // 0..3

  // 130 hex chars: r || s || recovery_id.
  std::string hex() const;
  // Throws Error(kMalformedSignature).
  static Signature from_hex(std::string_view hex);

  bool operator==(const Signature&) const = default;
};

// SHA3-256 over the lowercase hex text of the uncompressed public key.
Identity derive_identity(const PublicKey& pub);

Signature sign(std::span<const std::uint8_t> msg, const PrivateKey& key);
Signature sign(std::string_view msg, const PrivateKey& key);

// Throws Error(kMalformedSignature) when r or s is outside [1, n) or the
// recovery id is out of range, Error(kUnrecoverablePoint) when no curve point
// matches.
PublicKey recover_public_key(std::span<const std::uint8_t> msg,
                             const Signature& sig);
Identity recover(std::span<const std::uint8_t> msg, const Signature& sig);
Identity recover(std::string_view msg, const Signature& sig);

bool is_low_s(const Signature& sig);

// Key files: a single lowercase hex line, mode 0600.
void save_key(const std::filesystem::path& path, const PrivateKey& key);
PrivateKey load_key(const std::filesystem::path& path);

}  // namespace colonies::crypto
