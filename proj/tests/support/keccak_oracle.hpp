#pragma once

// Straight-from-the-permutation SHA3-256, slow and obvious. Used only to
// check the library digest.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace oracle {

inline void keccak_f(std::array<std::uint64_t, 25>& a) {
  static const std::uint64_t rc[24] = {
      0x0000000000000001ULL, 0x0000000000008082ULL, 0x800000000000808aULL,
      0x8000000080008000ULL, 0x000000000000808bULL, 0x0000000080000001ULL,
      0x8000000080008081ULL, 0x8000000000008009ULL, 0x000000000000008aULL,
      0x0000000000000088ULL, 0x0000000080008009ULL, 0x000000008000000aULL,
      0x000000008000808bULL, 0x800000000000008bULL, 0x8000000000008089ULL,
      0x8000000000008003ULL, 0x8000000000008002ULL, 0x8000000000000080ULL,
      0x000000000000800aULL, 0x800000008000000aULL, 0x8000000080008081ULL,
      0x8000000000008080ULL, 0x0000000080000001ULL, 0x8000000080008008ULL};
  // rotation offsets r[x][y]
  static const int rot[5][5] = {{0, 36, 3, 41, 18},
                                {1, 44, 10, 45, 2},
                                {62, 6, 43, 15, 61},
                                {28, 55, 25, 21, 56},
                                {27, 20, 39, 8, 14}};
  auto rotl = [](std::uint64_t v, int n) { return n == 0 ? v : (v << n) | (v >> (64 - n)); };
  auto at = [&](int x, int y) -> std::uint64_t& { return a[x + 5 * y]; };
  for (int round = 0; round < 24; ++round) {
    std::uint64_t c[5], d[5];
    for (int x = 0; x < 5; ++x) c[x] = at(x, 0) ^ at(x, 1) ^ at(x, 2) ^ at(x, 3) ^ at(x, 4);
    for (int x = 0; x < 5; ++x) d[x] = c[(x + 4) % 5] ^ rotl(c[(x + 1) % 5], 1);
    for (int x = 0; x < 5; ++x)
      for (int y = 0; y < 5; ++y) at(x, y) ^= d[x];
    std::uint64_t b[5][5];
    for (int x = 0; x < 5; ++x)
      for (int y = 0; y < 5; ++y) b[y][(2 * x + 3 * y) % 5] = rotl(at(x, y), rot[x][y]);
    for (int x = 0; x < 5; ++x)
      for (int y = 0; y < 5; ++y)
        at(x, y) = b[x][y] ^ (~b[(x + 1) % 5][y] & b[(x + 2) % 5][y]);
    a[0] ^= rc[round];
  }
}

inline std::array<std::uint8_t, 32> sha3_256(const std::vector<std::uint8_t>& msg) {
  constexpr std::size_t rate = 136;
  std::vector<std::uint8_t> m = msg;
  m.push_back(0x06);
  while (m.size() % rate != 0) m.push_back(0);
  m.back() |= 0x80;
  std::array<std::uint64_t, 25> s{};
  for (std::size_t off = 0; off < m.size(); off += rate) {
    for (std::size_t i = 0; i < rate / 8; ++i) {
      std::uint64_t lane = 0;
      for (int b = 0; b < 8; ++b) lane |= std::uint64_t(m[off + 8 * i + b]) << (8 * b);
      s[i] ^= lane;
    }
    keccak_f(s);
  }
  std::array<std::uint8_t, 32> out{};
  for (int i = 0; i < 32; ++i) out[i] = static_cast<std::uint8_t>(s[i / 8] >> (8 * (i % 8)));
  return out;
}

inline std::array<std::uint8_t, 32> sha3_256(const std::string& s) {
  return sha3_256(std::vector<std::uint8_t>(s.begin(), s.end()));
}

}  // namespace oracle
