#include "colonies/crypto/hash.hpp"

#include <openssl/evp.h>

#include <memory>

#include "colonies/core/error.hpp"
#include "colonies/crypto/encoding.hpp"

namespace colonies::crypto {

Digest sha3_256(std::span<const std::uint8_t> data) {
  Digest out{};
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              EVP_MD_CTX_free);
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha3_256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1 || len != 32) {
    throw Error(Errc::kInternal, "sha3-256 digest failed");
  }
  return out;
}

Digest sha3_256(std::string_view data) { return sha3_256(as_bytes(data)); }

std::string sha3_256_hex(std::span<const std::uint8_t> data) {
  return to_hex(sha3_256(data));
}

std::string sha3_256_hex(std::string_view data) {
  return to_hex(sha3_256(data));
}

}  // namespace colonies::crypto
