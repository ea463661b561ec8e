#pragma once

// Textbook secp256k1 in affine coordinates over arbitrary-precision
// integers, RFC 6979 nonces with a hand-rolled HMAC. Slow; tests only.

#include <openssl/evp.h>

#include <array>
#include <boost/multiprecision/cpp_int.hpp>
#include <optional>
#include <string>
#include <vector>

#include "keccak_oracle.hpp"

namespace oracle {

using boost::multiprecision::cpp_int;
using Bytes = std::vector<std::uint8_t>;

inline const cpp_int& P() {
  static const cpp_int v(
      "0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F");
  return v;
}
inline const cpp_int& N() {
  static const cpp_int v(
      "0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141");
  return v;
}

struct Pt {
  cpp_int x, y;
  bool inf = false;
};

inline cpp_int mod(cpp_int a, const cpp_int& m) {
  a %= m;
  if (a < 0) a += m;
  return a;
}

inline cpp_int inv(const cpp_int& a, const cpp_int& m) { return powm(mod(a, m), m - 2, m); }

inline Pt G() {
  return {cpp_int("0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798"),
          cpp_int("0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8"), false};
}

inline Pt add(const Pt& a, const Pt& b) {
  if (a.inf) return b;
  if (b.inf) return a;
  cpp_int l;
  if (a.x == b.x) {
    if (mod(a.y + b.y, P()) == 0) return {0, 0, true};
    l = mod(3 * a.x * a.x * inv(2 * a.y, P()), P());
  } else {
    l = mod((b.y - a.y) * inv(b.x - a.x, P()), P());
  }
  cpp_int x = mod(l * l - a.x - b.x, P());
  cpp_int y = mod(l * (a.x - x) - a.y, P());
  return {x, y, false};
}

inline Pt mul(cpp_int k, Pt p) {
  Pt r{0, 0, true};
  while (k > 0) {
    if (k & 1) r = add(r, p);
    p = add(p, p);
    k >>= 1;
  }
  return r;
}

inline cpp_int from_bytes(const std::uint8_t* b, std::size_t n) {
  cpp_int v = 0;
  for (std::size_t i = 0; i < n; ++i) v = (v << 8) | b[i];
  return v;
}

inline Bytes to_bytes32(cpp_int v) {
  Bytes out(32);
  for (int i = 31; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(static_cast<unsigned>(v & 0xff));
    v >>= 8;
  }
  return out;
}

inline std::string hex(const Bytes& b) {
  static const char* d = "0123456789abcdef";
  std::string s;
  for (auto c : b) {
    s += d[c >> 4];
    s += d[c & 15];
  }
  return s;
}

inline Bytes sha256(const Bytes& in) {
  Bytes out(32);
  unsigned len = 0;
  EVP_Digest(in.data(), in.size(), out.data(), &len, EVP_sha256(), nullptr);
  return out;
}

inline Bytes hmac(const Bytes& key, const Bytes& msg) {
  Bytes k = key.size() > 64 ? sha256(key) : key;
  k.resize(64, 0);
  Bytes ipad(k), opad(k);
  for (auto& c : ipad) c ^= 0x36;
  for (auto& c : opad) c ^= 0x5c;
  ipad.insert(ipad.end(), msg.begin(), msg.end());
  Bytes inner = sha256(ipad);
  opad.insert(opad.end(), inner.begin(), inner.end());
  return sha256(opad);
}

inline Bytes cat(std::initializer_list<Bytes> parts) {
  Bytes out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

struct Sig {
  cpp_int r, s;
  int v;
};

inline cpp_int digest_int(const Bytes& msg) {
  auto h = sha3_256(msg);
  return from_bytes(h.data(), 32);
}

inline Sig sign(const Bytes& msg, const cpp_int& d) {
  cpp_int e = digest_int(msg);
  Bytes x = to_bytes32(d);
  Bytes h1 = to_bytes32(mod(e, N()));
  Bytes V(32, 0x01), K(32, 0x00);
  K = hmac(K, cat({V, {0x00}, x, h1}));
  V = hmac(K, V);
  K = hmac(K, cat({V, {0x01}, x, h1}));
  V = hmac(K, V);
  for (;;) {
    V = hmac(K, V);
    cpp_int k = from_bytes(V.data(), 32);
    if (k >= 1 && k < N()) {
      Pt R = mul(k, G());
      cpp_int r = mod(R.x, N());
      cpp_int s = mod(inv(k, N()) * (e + r * d), N());
      if (r != 0 && s != 0) {
        int v = static_cast<int>(R.y & 1) | (R.x >= N() ? 2 : 0);
        if (s > N() / 2) {
          s = N() - s;
          v ^= 1;
        }
        return {r, s, v};
      }
    }
    K = hmac(K, cat({V, {0x00}}));
    V = hmac(K, V);
  }
}

inline std::optional<Pt> recover(const Bytes& msg, const Sig& sig) {
  if (sig.r <= 0 || sig.r >= N() || sig.s <= 0 || sig.s >= N()) return std::nullopt;
  cpp_int x = sig.r + ((sig.v & 2) ? N() : cpp_int(0));
  if (x >= P()) return std::nullopt;
  cpp_int alpha = mod(x * x * x + 7, P());
  cpp_int beta = powm(alpha, (P() + 1) / 4, P());
  if (mod(beta * beta, P()) != alpha) return std::nullopt;
  cpp_int y = ((beta & 1) == (sig.v & 1)) ? beta : P() - beta;
  Pt R{x, y, false};
  cpp_int e = digest_int(msg);
  cpp_int rinv = inv(sig.r, N());
  Pt sR = mul(mod(sig.s * rinv, N()), R);
  Pt eG = mul(mod(-e * rinv, N()), G());
  Pt q = add(sR, eG);
  if (q.inf) return std::nullopt;
  return q;
}

inline Bytes uncompressed(const Pt& p) {
  Bytes out{0x04};
  Bytes x = to_bytes32(p.x), y = to_bytes32(p.y);
  out.insert(out.end(), x.begin(), x.end());
  out.insert(out.end(), y.begin(), y.end());
  return out;
}

// Identity: SHA3-256 over the hex text of the uncompressed public key.
inline std::string identity(const Pt& pub) {
  auto h = sha3_256(hex(uncompressed(pub)));
  return hex(Bytes(h.begin(), h.end()));
}

}  // namespace oracle
