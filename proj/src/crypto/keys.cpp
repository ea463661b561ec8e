#include "colonies/crypto/keys.hpp"

#include <openssl/bn.h>
#include <openssl/crypto.h>
#include <openssl/ec.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/obj_mac.h>
#include <openssl/err.h>
#include <openssl/rand.h>

#include <fstream>
#include <memory>
#include <sstream>

#include "colonies/core/error.hpp"
#include "colonies/crypto/encoding.hpp"
#include "colonies/crypto/hash.hpp"

namespace colonies::crypto {
namespace {

struct BnDeleter {
  void operator()(BIGNUM* b) const { BN_clear_free(b); }
};
struct BnCtxDeleter {
  void operator()(BN_CTX* c) const { BN_CTX_free(c); }
};
struct PointDeleter {
  void operator()(EC_POINT* p) const { EC_POINT_free(p); }
};
struct GroupDeleter {
  void operator()(EC_GROUP* g) const { EC_GROUP_free(g); }
};

using Bn = std::unique_ptr<BIGNUM, BnDeleter>;
using BnCtx = std::unique_ptr<BN_CTX, BnCtxDeleter>;
using Point = std::unique_ptr<EC_POINT, PointDeleter>;
using Group = std::unique_ptr<EC_GROUP, GroupDeleter>;

void check(int rc, const char* what) {
  if (rc != 1) throw Error(Errc::kInternal, std::string("openssl: ") + what);
}

Bn new_bn() {
  Bn b(BN_new());
  if (!b) throw Error(Errc::kInternal, "BN_new failed");
  return b;
}

Bn bn_from(std::span<const std::uint8_t> bytes) {
  Bn b(BN_bin2bn(bytes.data(), static_cast<int>(bytes.size()), nullptr));
  if (!b) throw Error(Errc::kInternal, "BN_bin2bn failed");
  return b;
}

std::array<std::uint8_t, 32> bn_to32(const BIGNUM* b) {
  std::array<std::uint8_t, 32> out{};
  check(BN_bn2binpad(b, out.data(), 32) == 32 ? 1 : 0, "BN_bn2binpad");
  return out;
}

// Curve parameters, built once and shared read-only.
struct Curve {
  Group group;
  Bn order;
  Bn half_order;
  Bn field;

  Curve() {
    group.reset(EC_GROUP_new_by_curve_name(NID_secp256k1));
    if (!group) throw Error(Errc::kInternal, "secp256k1 unavailable");
    order.reset(BN_dup(EC_GROUP_get0_order(group.get())));
    half_order = new_bn();
    check(BN_rshift1(half_order.get(), order.get()), "BN_rshift1");
    field = new_bn();
    BnCtx ctx(BN_CTX_new());
    check(EC_GROUP_get_curve(group.get(), field.get(), nullptr, nullptr,
                             ctx.get()),
          "EC_GROUP_get_curve");
  }
};

const Curve& curve() {
  static const Curve c;
  return c;
}

bool scalar_in_range(const BIGNUM* v) {
  return !BN_is_zero(v) && !BN_is_negative(v) &&
         BN_cmp(v, curve().order.get()) < 0;
}

PublicKey encode_point(const EC_POINT* p, BN_CTX* ctx) {
  PublicKey out{};
  std::size_t n = EC_POINT_point2oct(curve().group.get(), p,
                                     POINT_CONVERSION_UNCOMPRESSED, out.data(),
                                     out.size(), ctx);
  if (n != out.size()) throw Error(Errc::kInternal, "point encoding failed");
  return out;
}

using Hmac = std::array<std::uint8_t, 32>;

Hmac hmac_sha256(std::span<const std::uint8_t> key,
                 std::span<const std::uint8_t> data) {
  Hmac out{};
  unsigned int len = 0;
  if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(),
           data.size(), out.data(), &len) == nullptr ||
      len != out.size()) {
    throw Error(Errc::kInternal, "HMAC-SHA256 failed");
  }
  return out;
}

// RFC 6979 deterministic nonce generator with HMAC-SHA256. qlen == hlen == 256,
// so bits2octets reduces to a single conditional subtraction of n.
class NonceGenerator {
 public:
  NonceGenerator(const std::array<std::uint8_t, 32>& secret,
                 const Digest& digest) {
    Bn h = bn_from(digest);
    if (BN_cmp(h.get(), curve().order.get()) >= 0) {
      check(BN_sub(h.get(), h.get(), curve().order.get()), "BN_sub");
    }
    auto h_octets = bn_to32(h.get());
    v_.fill(0x01);
    k_.fill(0x00);
    step(0x00, secret, h_octets);
    step(0x01, secret, h_octets);
  }

  Bn next() {
    while (true) {
      v_ = hmac_sha256(k_, v_);
      Bn candidate = bn_from(v_);
      bool ok = scalar_in_range(candidate.get());
      // Prepare state for any subsequent draw.
      std::array<std::uint8_t, 33> buf{};
      std::copy(v_.begin(), v_.end(), buf.begin());
      buf[32] = 0x00;
      k_ = hmac_sha256(k_, buf);
      v_ = hmac_sha256(k_, v_);
      if (ok) return candidate;
    }
  }

 private:
  void step(std::uint8_t tag, const std::array<std::uint8_t, 32>& secret,
            const std::array<std::uint8_t, 32>& h) {
    std::array<std::uint8_t, 97> buf{};
    std::copy(v_.begin(), v_.end(), buf.begin());
    buf[32] = tag;
    std::copy(secret.begin(), secret.end(), buf.begin() + 33);
    std::copy(h.begin(), h.end(), buf.begin() + 65);
    k_ = hmac_sha256(k_, buf);
    v_ = hmac_sha256(k_, v_);
  }

  Hmac k_{};
  Hmac v_{};
};

}  // namespace

Identity Identity::from_hex(std::string_view hex) {
  if (!is_lower_hex(hex, 64)) {
    throw Error(Errc::kInvalidArgument,
                "identity must be 64 lowercase hex characters");
  }
  return Identity(std::string(hex));
}

PrivateKey PrivateKey::generate() {
  std::array<std::uint8_t, 32> scalar{};
  while (true) {
    if (RAND_priv_bytes(scalar.data(), static_cast<int>(scalar.size())) != 1) {
      throw Error(Errc::kRandomnessFailure, "RAND_priv_bytes failed");
    }
    Bn v = bn_from(scalar);
    if (scalar_in_range(v.get())) return PrivateKey(scalar);
  }
}

PrivateKey PrivateKey::from_hex(std::string_view hex) {
  if (hex.size() != 64) {
    throw Error(Errc::kInvalidArgument, "private key must be 64 hex chars");
  }
  Bytes raw = crypto::from_hex(hex);
  std::array<std::uint8_t, 32> scalar{};
  std::copy(raw.begin(), raw.end(), scalar.begin());
  Bn v = bn_from(scalar);
  if (!scalar_in_range(v.get())) {
    throw Error(Errc::kInvalidArgument, "private key outside [1, n)");
  }
  return PrivateKey(scalar);
}

PrivateKey::~PrivateKey() { OPENSSL_cleanse(scalar_.data(), scalar_.size()); }

std::string PrivateKey::hex() const { return to_hex(scalar_); }

PublicKey PrivateKey::public_key() const {
  const auto& c = curve();
  BnCtx ctx(BN_CTX_new());
  Bn d = bn_from(scalar_);
  Point q(EC_POINT_new(c.group.get()));
  check(EC_POINT_mul(c.group.get(), q.get(), d.get(), nullptr, nullptr,
                     ctx.get()),
        "EC_POINT_mul");
  return encode_point(q.get(), ctx.get());
}

Identity PrivateKey::identity() const { return derive_identity(public_key()); }

std::string Signature::hex() const {
  Bytes raw(r.begin(), r.end());
  raw.insert(raw.end(), s.begin(), s.end());
  raw.push_back(recovery_id);
  return to_hex(raw);
}

Signature Signature::from_hex(std::string_view hex) {
  if (hex.size() != 130) {
    throw Error(Errc::kMalformedSignature, "signature must be 130 hex chars");
  }
  Bytes raw;
  try {
    raw = crypto::from_hex(hex);
  } catch (const Error&) {
    throw Error(Errc::kMalformedSignature, "signature is not hex");
  }
  Signature sig;
  std::copy(raw.begin(), raw.begin() + 32, sig.r.begin());
  std::copy(raw.begin() + 32, raw.begin() + 64, sig.s.begin());
  sig.recovery_id = raw[64];
  if (sig.recovery_id > 3) {
    throw Error(Errc::kMalformedSignature, "recovery id out of range");
  }
  return sig;
}

Identity derive_identity(const PublicKey& pub) {
  return Identity(sha3_256_hex(to_hex(pub)));
}

Signature sign(std::span<const std::uint8_t> msg, const PrivateKey& key) {
  const auto& c = curve();
  BnCtx ctx(BN_CTX_new());
  Digest digest = sha3_256(msg);
  Bn e = bn_from(digest);
  Bn d = bn_from(key.scalar());
  NonceGenerator nonces(key.scalar(), digest);

  while (true) {
    Bn k = nonces.next();
    Point big_r(EC_POINT_new(c.group.get()));
    check(EC_POINT_mul(c.group.get(), big_r.get(), k.get(), nullptr, nullptr,
                       ctx.get()),
          "EC_POINT_mul");
    Bn rx = new_bn();
    Bn ry = new_bn();
    check(EC_POINT_get_affine_coordinates(c.group.get(), big_r.get(), rx.get(),
                                          ry.get(), ctx.get()),
          "get_affine_coordinates");

    Bn r = new_bn();
    check(BN_nnmod(r.get(), rx.get(), c.order.get(), ctx.get()), "BN_nnmod");
    if (BN_is_zero(r.get())) continue;

    std::uint8_t recid = BN_is_odd(ry.get()) ? 1 : 0;
    if (BN_cmp(rx.get(), c.order.get()) >= 0) recid |= 2;

    // s = k^-1 (e + r d) mod n
    Bn rd = new_bn();
    check(BN_mod_mul(rd.get(), r.get(), d.get(), c.order.get(), ctx.get()),
          "BN_mod_mul");
    Bn sum = new_bn();
    check(BN_mod_add(sum.get(), e.get(), rd.get(), c.order.get(), ctx.get()),
          "BN_mod_add");
    Bn kinv(BN_mod_inverse(nullptr, k.get(), c.order.get(), ctx.get()));
    if (!kinv) throw Error(Errc::kInternal, "BN_mod_inverse failed");
    Bn s = new_bn();
    check(BN_mod_mul(s.get(), kinv.get(), sum.get(), c.order.get(), ctx.get()),
          "BN_mod_mul");
    if (BN_is_zero(s.get())) continue;

    if (BN_cmp(s.get(), c.half_order.get()) > 0) {
      check(BN_sub(s.get(), c.order.get(), s.get()), "BN_sub");
      recid ^= 1;
    }

    Signature sig;
    sig.r = bn_to32(r.get());
    sig.s = bn_to32(s.get());
    sig.recovery_id = recid;
    return sig;
  }
}

Signature sign(std::string_view msg, const PrivateKey& key) {
  return sign(as_bytes(msg), key);
}

PublicKey recover_public_key(std::span<const std::uint8_t> msg,
                             const Signature& sig) {
  const auto& c = curve();
  if (sig.recovery_id > 3) {
    throw Error(Errc::kMalformedSignature, "recovery id out of range");
  }
  BnCtx ctx(BN_CTX_new());
  Bn r = bn_from(sig.r);
  Bn s = bn_from(sig.s);
  if (!scalar_in_range(r.get()) || !scalar_in_range(s.get())) {
    throw Error(Errc::kMalformedSignature, "signature scalar outside [1, n)");
  }

  // R.x = r + j*n for j = recid >> 1; must be a field element.
  Bn x(BN_dup(r.get()));
  if (sig.recovery_id & 2) {
    check(BN_add(x.get(), x.get(), c.order.get()), "BN_add");
  }
  if (BN_cmp(x.get(), c.field.get()) >= 0) {
    throw Error(Errc::kUnrecoverablePoint, "R.x outside field");
  }
  Point big_r(EC_POINT_new(c.group.get()));
  if (EC_POINT_set_compressed_coordinates(c.group.get(), big_r.get(), x.get(),
                                          sig.recovery_id & 1,
                                          ctx.get()) != 1) {
    ERR_clear_error();
    throw Error(Errc::kUnrecoverablePoint, "no curve point for R.x");
  }

  // Q = r^-1 (s R - e G)
  Digest digest = sha3_256(msg);
  Bn e = bn_from(digest);
  Bn rinv(BN_mod_inverse(nullptr, r.get(), c.order.get(), ctx.get()));
  if (!rinv) throw Error(Errc::kInternal, "BN_mod_inverse failed");
  Bn u1 = new_bn();
  Bn neg_e = new_bn();
  check(BN_mod_sub(neg_e.get(), c.order.get(), e.get(), c.order.get(),
                   ctx.get()),
        "BN_mod_sub");
  check(BN_mod_mul(u1.get(), neg_e.get(), rinv.get(), c.order.get(), ctx.get()),
        "BN_mod_mul");
  Bn u2 = new_bn();
  check(BN_mod_mul(u2.get(), s.get(), rinv.get(), c.order.get(), ctx.get()),
        "BN_mod_mul");

  Point q(EC_POINT_new(c.group.get()));
  check(EC_POINT_mul(c.group.get(), q.get(), u1.get(), big_r.get(), u2.get(),
                     ctx.get()),
        "EC_POINT_mul");
  if (EC_POINT_is_at_infinity(c.group.get(), q.get())) {
    throw Error(Errc::kUnrecoverablePoint, "recovered point at infinity");
  }
  return encode_point(q.get(), ctx.get());
}

Identity recover(std::span<const std::uint8_t> msg, const Signature& sig) {
  return derive_identity(recover_public_key(msg, sig));
}

Identity recover(std::string_view msg, const Signature& sig) {
  return recover(as_bytes(msg), sig);
}

bool is_low_s(const Signature& sig) {
  Bn s = bn_from(sig.s);
  return BN_cmp(s.get(), curve().half_order.get()) <= 0;
}

void save_key(const std::filesystem::path& path, const PrivateKey& key) {
  {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
      throw Error(Errc::kInvalidArgument, "cannot write key file " +
                                              path.string());
    }
    out << key.hex();
  }
  std::filesystem::permissions(path,
                               std::filesystem::perms::owner_read |
                                   std::filesystem::perms::owner_write,
                               std::filesystem::perm_options::replace);
}

PrivateKey load_key(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::kInvalidArgument, "cannot read key file " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) {
    text.pop_back();
  }
  return PrivateKey::from_hex(text);
}

}  // namespace colonies::crypto
