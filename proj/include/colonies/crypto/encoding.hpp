#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace colonies::crypto {

using Bytes = std::vector<std::uint8_t>;

std::string to_hex(std::span<const std::uint8_t> bytes);
// Accepts upper or lower case; throws Error(kInvalidArgument) on bad input.
Bytes from_hex(std::string_view hex);
bool is_lower_hex(std::string_view s, std::size_t expected_len);

std::string base64_encode(std::span<const std::uint8_t> bytes);
// Strict RFC 4648 with padding; throws Error(kInvalidArgument).
Bytes base64_decode(std::string_view text);

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace colonies::crypto
