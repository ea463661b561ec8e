#include "colonies/core/ids.hpp"

#include <openssl/rand.h>

#include <array>

#include "colonies/core/error.hpp"
#include "colonies/crypto/hash.hpp"

namespace colonies {

std::string RandomIdSource::next() {
  std::array<std::uint8_t, 32> seed{};
  if (RAND_bytes(seed.data(), static_cast<int>(seed.size())) != 1) {
    throw Error(Errc::kRandomnessFailure, "RAND_bytes failed");
  }
  return crypto::sha3_256_hex(seed);
}

std::string SeededIdSource::next() {
  std::array<std::uint8_t, 32> seed{};
  {
    std::lock_guard lock(mu_);
    for (std::size_t i = 0; i < seed.size(); i += 8) {
      auto v = rng_();
      for (std::size_t j = 0; j < 8; ++j) {
        seed[i + j] = static_cast<std::uint8_t>(v >> (8 * j));
      }
    }
  }
  return crypto::sha3_256_hex(seed);
}

}  // namespace colonies
