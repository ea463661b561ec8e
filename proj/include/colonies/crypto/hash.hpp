#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace colonies::crypto {

using Digest = std::array<std::uint8_t, 32>;

Digest sha3_256(std::span<const std::uint8_t> data);
Digest sha3_256(std::string_view data);
std::string sha3_256_hex(std::span<const std::uint8_t> data);
std::string sha3_256_hex(std::string_view data);

}  // namespace colonies::crypto
