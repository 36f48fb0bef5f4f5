#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include <openssl/bn.h>
#include <openssl/core_names.h>
#include <openssl/ec.h>
#include <openssl/ecdsa.h>
#include <openssl/evp.h>
#include <openssl/kdf.h>
#include <openssl/obj_mac.h>
#include <openssl/param_build.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

#include "sudp/bytes.hpp"
#include "sudp/errors.hpp"

namespace sudp {

// ---------------------------------------------------------------------------
// Profile constants: SHA-256 / HKDF-SHA-256 / AES-256-GCM / AES-KW (RFC 3394)
// / ES256 (P-256, raw 64-byte r||s) / DHKEM(P-256, HKDF-SHA256).
// ---------------------------------------------------------------------------

inline constexpr std::size_t kDigestLen = 32;
inline constexpr std::size_t kKeyLen = 32;
inline constexpr std::size_t kWrappedLen = 40;  // AES-KW of a 32-byte key
inline constexpr std::size_t kNonceLen = 12;
inline constexpr std::size_t kTagLen = 16;
inline constexpr std::size_t kSigLen = 64;
inline constexpr std::size_t kPointLen = 65;  // uncompressed P-256 point

struct Digest {
  std::array<std::uint8_t, kDigestLen> bytes{};

  BytesView view() const { return BytesView(bytes.data(), bytes.size()); }
  auto operator<=>(const Digest&) const = default;
};

struct Signature {
  std::array<std::uint8_t, kSigLen> bytes{};

  BytesView view() const { return BytesView(bytes.data(), bytes.size()); }
  auto operator<=>(const Signature&) const = default;
};

// ---------------------------------------------------------------------------
// Domain separation label registry
// ---------------------------------------------------------------------------

enum class DomainLabel { user, wrap, state, bind, deliver, deliver_ad, xd_enc };

inline std::string_view label_bytes(DomainLabel l) {
  switch (l) {
    case DomainLabel::user: return "SUDP-v1/user";
    case DomainLabel::wrap: return "SUDP-v1/wrap";
    case DomainLabel::state: return "SUDP-v1/state";
    case DomainLabel::bind: return "SUDP-v1/bind";
    case DomainLabel::deliver: return "SUDP-v1/deliver";
    case DomainLabel::deliver_ad: return "SUDP-v1/deliver-ad";
    case DomainLabel::xd_enc: return "SUDP-v1/xd-enc";
  }
  fail(Err::invalid_kdf_info, "unregistered label");
}

inline BytesView label_view(DomainLabel l) {
  const std::string_view s = label_bytes(l);
  return BytesView(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
}

inline constexpr std::array<DomainLabel, 7> kAllLabels = {
    DomainLabel::user,    DomainLabel::wrap,       DomainLabel::state,
    DomainLabel::bind,    DomainLabel::deliver,    DomainLabel::deliver_ad,
    DomainLabel::xd_enc};

/// Labels that name KDF derivation contexts. bind/state/deliver-ad appear
/// only as hash or AEAD-AD context and are rejected by kdf().
inline constexpr std::array<DomainLabel, 4> kKdfLabels = {
    DomainLabel::user, DomainLabel::wrap, DomainLabel::deliver, DomainLabel::xd_enc};

// ---------------------------------------------------------------------------
// Key material
// ---------------------------------------------------------------------------

enum class KeyRole { state, wrap, delivery, channel, intermediate, prf_output };

inline std::string_view role_name(KeyRole r) {
  switch (r) {
    case KeyRole::state: return "state";
    case KeyRole::wrap: return "wrap";
    case KeyRole::delivery: return "delivery";
    case KeyRole::channel: return "channel";
    case KeyRole::intermediate: return "intermediate";
    case KeyRole::prf_output: return "prf-output";
  }
  return "?";
}

/// 32 bytes of key material with an immutable role tag; zeroized on
/// destruction. Default construction yields an all-zero placeholder, usable
/// only as a slot to assign real material into.
class SymmetricKey {
 public:
  SymmetricKey() : bytes_{}, role_(KeyRole::intermediate) {}

  SymmetricKey(BytesView bytes, KeyRole role) : role_(role) {
    if (bytes.size() != kKeyLen) fail(Err::invalid_length, "key must be 32 bytes");
    std::memcpy(bytes_.data(), bytes.data(), kKeyLen);
  }

  SymmetricKey(const SymmetricKey& other) : bytes_(other.bytes_), role_(other.role_) {}
  SymmetricKey& operator=(const SymmetricKey& other) {
    if (this != &other) {
      zeroize(bytes_.data(), bytes_.size());
      bytes_ = other.bytes_;
      role_ = other.role_;
    }
    return *this;
  }
  SymmetricKey(SymmetricKey&& other) noexcept : bytes_(other.bytes_), role_(other.role_) {
    zeroize(other.bytes_.data(), other.bytes_.size());
  }
  SymmetricKey& operator=(SymmetricKey&& other) noexcept {
    if (this != &other) {
      zeroize(bytes_.data(), bytes_.size());
      bytes_ = other.bytes_;
      role_ = other.role_;
      zeroize(other.bytes_.data(), other.bytes_.size());
    }
    return *this;
  }
  ~SymmetricKey() { zeroize(bytes_.data(), bytes_.size()); }

  BytesView view() const { return BytesView(bytes_.data(), bytes_.size()); }
  KeyRole role() const { return role_; }

  bool ct_eq(const SymmetricKey& other) const { return ct_equal(view(), other.view()); }

 private:
  std::array<std::uint8_t, kKeyLen> bytes_;
  KeyRole role_;
};

struct WrappedKey {
  std::array<std::uint8_t, kWrappedLen> bytes{};

  BytesView view() const { return BytesView(bytes.data(), bytes.size()); }
  auto operator<=>(const WrappedKey&) const = default;

  static WrappedKey from(BytesView v) {
    if (v.size() != kWrappedLen) fail(Err::invalid_length, "wrapped key must be 40 bytes");
    WrappedKey w;
    std::memcpy(w.bytes.data(), v.data(), kWrappedLen);
    return w;
  }
};

// ---------------------------------------------------------------------------
// Randomness & hashing
// ---------------------------------------------------------------------------

inline Bytes csprng(std::size_t n) {
  if (n == 0) fail(Err::invalid_length, "csprng requires n > 0");
  Bytes out(n);
  if (RAND_bytes(out.data(), static_cast<int>(n)) != 1)
    fail(Err::entropy_failure, "OS entropy source unavailable");
  return out;
}

inline SymmetricKey random_key(KeyRole role) { return SymmetricKey(csprng(kKeyLen), role); }

inline Digest hash(BytesView data) {
  Digest d;
  SHA256(data.data(), data.size(), d.bytes.data());
  return d;
}

inline Bytes hmac_sha256(BytesView key, BytesView data) {
  Bytes out(kDigestLen);
  std::size_t out_len = out.size();
  if (EVP_Q_mac(nullptr, "HMAC", nullptr, "SHA256", nullptr, key.data(), key.size(),
                data.data(), data.size(), out.data(), out.size(), &out_len) == nullptr ||
      out_len != kDigestLen)
    fail(Err::entropy_failure, "hmac failure");
  return out;
}

// ---------------------------------------------------------------------------
// HKDF-SHA-256
// ---------------------------------------------------------------------------

namespace detail {

struct KdfDeleter {
  void operator()(EVP_KDF* p) const { EVP_KDF_free(p); }
  void operator()(EVP_KDF_CTX* p) const { EVP_KDF_CTX_free(p); }
};

inline Bytes hkdf_stage(int mode, BytesView keyarg, BytesView saltarg, BytesView infoarg,
                        std::size_t out_len) {
  std::unique_ptr<EVP_KDF, KdfDeleter> kdf(EVP_KDF_fetch(nullptr, "HKDF", nullptr));
  if (!kdf) fail(Err::entropy_failure, "HKDF unavailable");
  std::unique_ptr<EVP_KDF_CTX, KdfDeleter> ctx(EVP_KDF_CTX_new(kdf.get()));
  if (!ctx) fail(Err::entropy_failure, "HKDF ctx");
  OSSL_PARAM params[6];
  std::size_t i = 0;
  char digest[] = "SHA256";
  params[i++] = OSSL_PARAM_construct_utf8_string(OSSL_KDF_PARAM_DIGEST, digest, 0);
  params[i++] = OSSL_PARAM_construct_int(OSSL_KDF_PARAM_MODE, &mode);
  params[i++] = OSSL_PARAM_construct_octet_string(
      OSSL_KDF_PARAM_KEY, const_cast<std::uint8_t*>(keyarg.data()), keyarg.size());
  if (!saltarg.empty())
    params[i++] = OSSL_PARAM_construct_octet_string(
        OSSL_KDF_PARAM_SALT, const_cast<std::uint8_t*>(saltarg.data()), saltarg.size());
  if (!infoarg.empty())
    params[i++] = OSSL_PARAM_construct_octet_string(
        OSSL_KDF_PARAM_INFO, const_cast<std::uint8_t*>(infoarg.data()), infoarg.size());
  params[i] = OSSL_PARAM_construct_end();
  Bytes out(out_len);
  if (EVP_KDF_derive(ctx.get(), out.data(), out.size(), params) != 1)
    fail(Err::entropy_failure, "HKDF derive");
  return out;
}

}  // namespace detail

/// Raw two-stage HKDF (RFC 5869). Absent salt behaves as the all-zero salt
/// of the extract stage. The labeled kdf() below is the protocol surface;
/// this is exposed for the DHKEM construction and the vector suite.
inline Bytes hkdf_sha256(BytesView ikm, BytesView salt, BytesView info, std::size_t out_len) {
  Bytes prk = detail::hkdf_stage(EVP_KDF_HKDF_MODE_EXTRACT_ONLY, ikm, salt, {}, kDigestLen);
  Bytes okm = detail::hkdf_stage(EVP_KDF_HKDF_MODE_EXPAND_ONLY, prk, {}, info, out_len);
  zeroize(prk);
  return okm;
}

inline KeyRole role_for_kdf_label(DomainLabel l) {
  switch (l) {
    case DomainLabel::user: return KeyRole::intermediate;
    case DomainLabel::wrap: return KeyRole::wrap;
    case DomainLabel::deliver: return KeyRole::delivery;
    case DomainLabel::xd_enc: return KeyRole::channel;
    default: fail(Err::invalid_kdf_info, "label is not a KDF context");
  }
}

/// Returns the registered KDF label framed at the head of `info`, or rejects.
inline DomainLabel parse_kdf_label(BytesView info) {
  if (info.size() < 4) fail(Err::invalid_kdf_info, "missing label frame");
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len = (len << 8) | info[static_cast<std::size_t>(i)];
  if (len > info.size() - 4) fail(Err::invalid_kdf_info, "truncated label frame");
  const BytesView head = info.subspan(4, len);
  for (DomainLabel l : kKdfLabels) {
    const BytesView want = label_view(l);
    if (head.size() == want.size() &&
        std::memcmp(head.data(), want.data(), want.size()) == 0)
      return l;
  }
  fail(Err::invalid_kdf_info, "info does not begin with a registered KDF label");
}

/// Domain-separated HKDF. `info` must begin with one length-framed registered
/// KDF label; the output role is fixed by that label.
inline SymmetricKey kdf(BytesView ikm, std::optional<BytesView> salt, BytesView info) {
  const DomainLabel label = parse_kdf_label(info);
  Bytes okm = hkdf_sha256(ikm, salt.value_or(BytesView{}), info, kKeyLen);
  SymmetricKey key(okm, role_for_kdf_label(label));
  zeroize(okm);
  return key;
}

// ---------------------------------------------------------------------------
// AEAD: AES-256-GCM
// ---------------------------------------------------------------------------

namespace detail {
struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;

inline void require_aead_role(const SymmetricKey& key) {
  switch (key.role()) {
    case KeyRole::state:
    case KeyRole::delivery:
    case KeyRole::channel: return;
    default: fail(Err::invalid_role, "key role not usable for AEAD");
  }
}
}  // namespace detail

/// Returns ciphertext || 16-byte tag.
inline Bytes aead_seal(const SymmetricKey& key, BytesView nonce, BytesView plaintext,
                       BytesView ad) {
  detail::require_aead_role(key);
  if (nonce.size() != kNonceLen) fail(Err::invalid_length, "nonce must be 12 bytes");
  detail::CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx) fail(Err::aead_failure, "ctx");
  if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.view().data(),
                         nonce.data()) != 1)
    fail(Err::aead_failure, "init");
  int len = 0;
  if (!ad.empty() &&
      EVP_EncryptUpdate(ctx.get(), nullptr, &len, ad.data(), static_cast<int>(ad.size())) != 1)
    fail(Err::aead_failure, "ad");
  Bytes out(plaintext.size() + kTagLen);
  if (!plaintext.empty() &&
      EVP_EncryptUpdate(ctx.get(), out.data(), &len, plaintext.data(),
                        static_cast<int>(plaintext.size())) != 1)
    fail(Err::aead_failure, "update");
  int fin = 0;
  if (EVP_EncryptFinal_ex(ctx.get(), out.data() + plaintext.size(), &fin) != 1)
    fail(Err::aead_failure, "final");
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTagLen,
                          out.data() + plaintext.size()) != 1)
    fail(Err::aead_failure, "tag");
  return out;
}

/// Opaque authentication failure: the caller cannot distinguish ciphertext
/// from AD tampering.
inline Bytes aead_open(const SymmetricKey& key, BytesView nonce, BytesView ciphertext,
                       BytesView ad) {
  detail::require_aead_role(key);
  if (nonce.size() != kNonceLen) fail(Err::invalid_length, "nonce must be 12 bytes");
  if (ciphertext.size() < kTagLen) fail(Err::aead_failure);
  const std::size_t pt_len = ciphertext.size() - kTagLen;
  detail::CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx) fail(Err::aead_failure, "ctx");
  if (EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.view().data(),
                         nonce.data()) != 1)
    fail(Err::aead_failure, "init");
  int len = 0;
  if (!ad.empty() &&
      EVP_DecryptUpdate(ctx.get(), nullptr, &len, ad.data(), static_cast<int>(ad.size())) != 1)
    fail(Err::aead_failure);
  Bytes out(pt_len);
  if (pt_len > 0 && EVP_DecryptUpdate(ctx.get(), out.data(), &len, ciphertext.data(),
                                      static_cast<int>(pt_len)) != 1)
    fail(Err::aead_failure);
  std::array<std::uint8_t, kTagLen> tag;
  std::memcpy(tag.data(), ciphertext.data() + pt_len, kTagLen);
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTagLen, tag.data()) != 1)
    fail(Err::aead_failure);
  int fin = 0;
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + pt_len, &fin) != 1) {
    zeroize(out);
    fail(Err::aead_failure);
  }
  return out;
}

/// Nonce-carrying AEAD container; every seal draws a fresh random nonce.
struct AeadBox {
  std::array<std::uint8_t, kNonceLen> nonce{};
  Bytes ct;

  auto operator<=>(const AeadBox&) const = default;
};

inline AeadBox seal_box(const SymmetricKey& key, BytesView plaintext, BytesView ad) {
  AeadBox box;
  Bytes n = csprng(kNonceLen);
  std::memcpy(box.nonce.data(), n.data(), kNonceLen);
  box.ct = aead_seal(key, BytesView(box.nonce.data(), box.nonce.size()), plaintext, ad);
  return box;
}

inline Bytes open_box(const SymmetricKey& key, const AeadBox& box, BytesView ad) {
  return aead_open(key, BytesView(box.nonce.data(), box.nonce.size()), box.ct, ad);
}

// ---------------------------------------------------------------------------
// Key wrap: AES-KW (RFC 3394), 32-byte keys, 40-byte wrapped output
// ---------------------------------------------------------------------------

inline WrappedKey wrap(const SymmetricKey& kek, const SymmetricKey& key) {
  if (kek.role() != KeyRole::wrap) fail(Err::invalid_role, "kek must have wrap role");
  detail::CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx) fail(Err::wrap_integrity_failure, "ctx");
  EVP_CIPHER_CTX_set_flags(ctx.get(), EVP_CIPHER_CTX_FLAG_WRAP_ALLOW);
  if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_wrap(), nullptr, kek.view().data(), nullptr) != 1)
    fail(Err::wrap_integrity_failure, "init");
  Bytes out(kWrappedLen + 8);
  int len = 0;
  if (EVP_EncryptUpdate(ctx.get(), out.data(), &len, key.view().data(),
                        static_cast<int>(kKeyLen)) != 1)
    fail(Err::wrap_integrity_failure, "update");
  int fin = 0;
  if (EVP_EncryptFinal_ex(ctx.get(), out.data() + len, &fin) != 1)
    fail(Err::wrap_integrity_failure, "final");
  if (len + fin != static_cast<int>(kWrappedLen)) fail(Err::invalid_length, "wrap output size");
  return WrappedKey::from(BytesView(out.data(), kWrappedLen));
}

inline SymmetricKey unwrap(const SymmetricKey& kek, const WrappedKey& wrapped) {
  if (kek.role() != KeyRole::wrap) fail(Err::invalid_role, "kek must have wrap role");
  detail::CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx) fail(Err::wrap_integrity_failure, "ctx");
  EVP_CIPHER_CTX_set_flags(ctx.get(), EVP_CIPHER_CTX_FLAG_WRAP_ALLOW);
  if (EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_wrap(), nullptr, kek.view().data(), nullptr) != 1)
    fail(Err::wrap_integrity_failure, "init");
  Bytes out(kWrappedLen);
  int len = 0;
  if (EVP_DecryptUpdate(ctx.get(), out.data(), &len, wrapped.view().data(),
                        static_cast<int>(kWrappedLen)) != 1) {
    zeroize(out);
    fail(Err::wrap_integrity_failure);
  }
  int fin = 0;
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &fin) != 1) {
    zeroize(out);
    fail(Err::wrap_integrity_failure);
  }
  if (len + fin != static_cast<int>(kKeyLen)) {
    zeroize(out);
    fail(Err::wrap_integrity_failure);
  }
  SymmetricKey k(BytesView(out.data(), kKeyLen), KeyRole::state);
  zeroize(out);
  return k;
}

// ---------------------------------------------------------------------------
// P-256 keys (signatures, ECDH, KEM)
// ---------------------------------------------------------------------------

namespace detail {
struct PkeyDeleter {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
  void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
  void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
  void operator()(BIGNUM* p) const { BN_clear_free(p); }
  void operator()(EC_GROUP* p) const { EC_GROUP_free(p); }
  void operator()(EC_POINT* p) const { EC_POINT_free(p); }
  void operator()(ECDSA_SIG* p) const { ECDSA_SIG_free(p); }
  void operator()(OSSL_PARAM_BLD* p) const { OSSL_PARAM_BLD_free(p); }
  void operator()(OSSL_PARAM* p) const { OSSL_PARAM_free(p); }
};
template <typename T>
using Ossl = std::unique_ptr<T, PkeyDeleter>;
}  // namespace detail

/// Shared EVP_PKEY handle (refcounted, treated as immutable once built).
class EvpKey {
 public:
  EvpKey() = default;
  explicit EvpKey(EVP_PKEY* owned) : p_(owned, detail::PkeyDeleter{}) {}

  EVP_PKEY* get() const { return p_.get(); }
  explicit operator bool() const { return static_cast<bool>(p_); }

 private:
  std::shared_ptr<EVP_PKEY> p_;
};

namespace detail {

inline EvpKey p256_generate() {
  EVP_PKEY* raw = EVP_PKEY_Q_keygen(nullptr, nullptr, "EC", "P-256");
  if (raw == nullptr) fail(Err::entropy_failure, "P-256 keygen");
  return EvpKey(raw);
}

inline Bytes p256_public_bytes(const EvpKey& key) {
  Bytes buf(kPointLen);
  std::size_t written = 0;
  if (EVP_PKEY_get_octet_string_param(key.get(), OSSL_PKEY_PARAM_ENCODED_PUBLIC_KEY,
                                      buf.data(), buf.size(), &written) != 1 ||
      written != kPointLen)
    fail(Err::invalid_length, "public point export");
  return buf;
}

inline EvpKey p256_from_public(BytesView point) {
  if (point.size() != kPointLen || point[0] != 0x04)
    fail(Err::decode_failure, "expected uncompressed P-256 point");
  Ossl<OSSL_PARAM_BLD> bld(OSSL_PARAM_BLD_new());
  if (!bld || OSSL_PARAM_BLD_push_utf8_string(bld.get(), OSSL_PKEY_PARAM_GROUP_NAME,
                                              "prime256v1", 0) != 1 ||
      OSSL_PARAM_BLD_push_octet_string(bld.get(), OSSL_PKEY_PARAM_PUB_KEY, point.data(),
                                       point.size()) != 1)
    fail(Err::decode_failure, "param build");
  Ossl<OSSL_PARAM> params(OSSL_PARAM_BLD_to_param(bld.get()));
  Ossl<EVP_PKEY_CTX> ctx(EVP_PKEY_CTX_new_from_name(nullptr, "EC", nullptr));
  EVP_PKEY* raw = nullptr;
  if (!params || !ctx || EVP_PKEY_fromdata_init(ctx.get()) != 1 ||
      EVP_PKEY_fromdata(ctx.get(), &raw, EVP_PKEY_PUBLIC_KEY, params.get()) != 1)
    fail(Err::decode_failure, "invalid public point");
  return EvpKey(raw);
}

inline EvpKey p256_from_private_scalar(BytesView scalar32) {
  if (scalar32.size() != 32) fail(Err::invalid_length, "scalar must be 32 bytes");
  Ossl<BIGNUM> d(BN_bin2bn(scalar32.data(), static_cast<int>(scalar32.size()), nullptr));
  Ossl<EC_GROUP> group(EC_GROUP_new_by_curve_name(NID_X9_62_prime256v1));
  Ossl<EC_POINT> pub(EC_POINT_new(group.get()));
  if (!d || !group || !pub ||
      EC_POINT_mul(group.get(), pub.get(), d.get(), nullptr, nullptr, nullptr) != 1)
    fail(Err::decode_failure, "scalar mult");
  Bytes point(kPointLen);
  if (EC_POINT_point2oct(group.get(), pub.get(), POINT_CONVERSION_UNCOMPRESSED, point.data(),
                         point.size(), nullptr) != kPointLen)
    fail(Err::decode_failure, "point encode");
  Ossl<OSSL_PARAM_BLD> bld(OSSL_PARAM_BLD_new());
  if (!bld || OSSL_PARAM_BLD_push_utf8_string(bld.get(), OSSL_PKEY_PARAM_GROUP_NAME,
                                              "prime256v1", 0) != 1 ||
      OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_PRIV_KEY, d.get()) != 1 ||
      OSSL_PARAM_BLD_push_octet_string(bld.get(), OSSL_PKEY_PARAM_PUB_KEY, point.data(),
                                       point.size()) != 1)
    fail(Err::decode_failure, "param build");
  Ossl<OSSL_PARAM> params(OSSL_PARAM_BLD_to_param(bld.get()));
  Ossl<EVP_PKEY_CTX> ctx(EVP_PKEY_CTX_new_from_name(nullptr, "EC", nullptr));
  EVP_PKEY* raw = nullptr;
  if (!params || !ctx || EVP_PKEY_fromdata_init(ctx.get()) != 1 ||
      EVP_PKEY_fromdata(ctx.get(), &raw, EVP_PKEY_KEYPAIR, params.get()) != 1)
    fail(Err::decode_failure, "invalid private scalar");
  return EvpKey(raw);
}

inline Bytes p256_private_scalar(const EvpKey& key) {
  BIGNUM* d = nullptr;
  if (EVP_PKEY_get_bn_param(key.get(), OSSL_PKEY_PARAM_PRIV_KEY, &d) != 1)
    fail(Err::decode_failure, "private scalar export");
  Ossl<BIGNUM> owned(d);
  Bytes out(32);
  if (BN_bn2binpad(d, out.data(), 32) != 32) fail(Err::decode_failure, "scalar pad");
  return out;
}

}  // namespace detail

struct SigKeyPair {
  Bytes public_key;  // uncompressed SEC1 point, 65 bytes
  EvpKey private_key;

  static SigKeyPair generate() {
    SigKeyPair kp;
    kp.private_key = detail::p256_generate();
    kp.public_key = detail::p256_public_bytes(kp.private_key);
    return kp;
  }
};

/// ES256 over the message (SHA-256 inside), serialized as raw r||s.
inline Signature sign(const EvpKey& sk, BytesView message) {
  detail::Ossl<EVP_MD_CTX> md(EVP_MD_CTX_new());
  if (!md || EVP_DigestSignInit(md.get(), nullptr, EVP_sha256(), nullptr, sk.get()) != 1)
    fail(Err::entropy_failure, "sign init");
  std::size_t der_len = 0;
  if (EVP_DigestSign(md.get(), nullptr, &der_len, message.data(), message.size()) != 1)
    fail(Err::entropy_failure, "sign size");
  Bytes der(der_len);
  if (EVP_DigestSign(md.get(), der.data(), &der_len, message.data(), message.size()) != 1)
    fail(Err::entropy_failure, "sign");
  const std::uint8_t* p = der.data();
  detail::Ossl<ECDSA_SIG> sig(d2i_ECDSA_SIG(nullptr, &p, static_cast<long>(der_len)));
  if (!sig) fail(Err::entropy_failure, "sig decode");
  Signature out;
  if (BN_bn2binpad(ECDSA_SIG_get0_r(sig.get()), out.bytes.data(), 32) != 32 ||
      BN_bn2binpad(ECDSA_SIG_get0_s(sig.get()), out.bytes.data() + 32, 32) != 32)
    fail(Err::entropy_failure, "sig encode");
  return out;
}

/// Returns false (never throws) on malformed or non-verifying signatures.
inline bool verify(BytesView public_key, BytesView message, const Signature& sig) noexcept {
  try {
    EvpKey pk = detail::p256_from_public(public_key);
    detail::Ossl<ECDSA_SIG> es(ECDSA_SIG_new());
    BIGNUM* r = BN_bin2bn(sig.bytes.data(), 32, nullptr);
    BIGNUM* s = BN_bin2bn(sig.bytes.data() + 32, 32, nullptr);
    if (!es || r == nullptr || s == nullptr || ECDSA_SIG_set0(es.get(), r, s) != 1) {
      BN_free(r);
      BN_free(s);
      return false;
    }
    int der_len = i2d_ECDSA_SIG(es.get(), nullptr);
    if (der_len <= 0) return false;
    Bytes der(static_cast<std::size_t>(der_len));
    std::uint8_t* p = der.data();
    i2d_ECDSA_SIG(es.get(), &p);
    detail::Ossl<EVP_MD_CTX> md(EVP_MD_CTX_new());
    if (!md ||
        EVP_DigestVerifyInit(md.get(), nullptr, EVP_sha256(), nullptr, pk.get()) != 1)
      return false;
    return EVP_DigestVerify(md.get(), der.data(), der.size(), message.data(),
                            message.size()) == 1;
  } catch (...) {
    return false;
  }
}

// ---------------------------------------------------------------------------
// ECDH and DHKEM(P-256, HKDF-SHA256) per RFC 9180 §4.1
// ---------------------------------------------------------------------------

struct EcKeyPair {
  Bytes public_key;  // uncompressed, 65 bytes
  EvpKey private_key;

  static EcKeyPair generate() {
    EcKeyPair kp;
    kp.private_key = detail::p256_generate();
    kp.public_key = detail::p256_public_bytes(kp.private_key);
    return kp;
  }

  static EcKeyPair from_private_scalar(BytesView scalar32) {
    EcKeyPair kp;
    kp.private_key = detail::p256_from_private_scalar(scalar32);
    kp.public_key = detail::p256_public_bytes(kp.private_key);
    return kp;
  }
};

using KemKeyPair = EcKeyPair;

struct KemCiphertext {
  Bytes enc;  // ephemeral public point, 65 bytes

  auto operator<=>(const KemCiphertext&) const = default;
};

/// Raw ECDH: x-coordinate of the shared point (32 bytes).
inline Bytes ecdh_x(const EvpKey& sk, BytesView peer_public) {
  EvpKey peer = detail::p256_from_public(peer_public);
  detail::Ossl<EVP_PKEY_CTX> ctx(EVP_PKEY_CTX_new(sk.get(), nullptr));
  std::size_t len = 0;
  if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1 ||
      EVP_PKEY_derive_set_peer(ctx.get(), peer.get()) != 1 ||
      EVP_PKEY_derive(ctx.get(), nullptr, &len) != 1)
    fail(Err::decap_failure, "ecdh init");
  Bytes out(len);
  if (EVP_PKEY_derive(ctx.get(), out.data(), &len) != 1 || len != 32)
    fail(Err::decap_failure, "ecdh derive");
  out.resize(32);
  return out;
}

namespace detail {

inline Bytes dhkem_suite_id() {
  Bytes id = to_bytes(std::string_view("KEM"));
  id.push_back(0x00);
  id.push_back(0x10);  // DHKEM(P-256, HKDF-SHA256)
  return id;
}

inline Bytes labeled_extract(BytesView salt, std::string_view label, BytesView ikm) {
  Bytes labeled = to_bytes(std::string_view("HPKE-v1"));
  const Bytes suite = dhkem_suite_id();
  labeled.insert(labeled.end(), suite.begin(), suite.end());
  labeled.insert(labeled.end(), label.begin(), label.end());
  labeled.insert(labeled.end(), ikm.begin(), ikm.end());
  return hkdf_stage(EVP_KDF_HKDF_MODE_EXTRACT_ONLY, labeled, salt, {}, kDigestLen);
}

inline Bytes labeled_expand(BytesView prk, std::string_view label, BytesView info,
                            std::size_t out_len) {
  Bytes labeled{static_cast<std::uint8_t>(out_len >> 8), static_cast<std::uint8_t>(out_len)};
  const Bytes version = to_bytes(std::string_view("HPKE-v1"));
  labeled.insert(labeled.end(), version.begin(), version.end());
  const Bytes suite = dhkem_suite_id();
  labeled.insert(labeled.end(), suite.begin(), suite.end());
  labeled.insert(labeled.end(), label.begin(), label.end());
  labeled.insert(labeled.end(), info.begin(), info.end());
  return hkdf_stage(EVP_KDF_HKDF_MODE_EXPAND_ONLY, prk, {}, labeled, out_len);
}

inline Bytes dhkem_shared(BytesView dh, BytesView enc, BytesView pk_recipient) {
  Bytes kem_context = to_bytes(enc);
  kem_context.insert(kem_context.end(), pk_recipient.begin(), pk_recipient.end());
  Bytes eae_prk = labeled_extract({}, "eae_prk", dh);
  Bytes ss = labeled_expand(eae_prk, "shared_secret", kem_context, kKeyLen);
  zeroize(eae_prk);
  return ss;
}

}  // namespace detail

/// DHKEM Encap with a caller-fixed ephemeral key; the randomized encap() and
/// the vector suite both route through this.
inline std::pair<Bytes, KemCiphertext> dhkem_encap_with_ephemeral(const EcKeyPair& eph,
                                                                  BytesView pk_recipient) {
  Bytes dh = ecdh_x(eph.private_key, pk_recipient);
  KemCiphertext ct{eph.public_key};
  Bytes ss = detail::dhkem_shared(dh, ct.enc, pk_recipient);
  zeroize(dh);
  return {std::move(ss), std::move(ct)};
}

inline Bytes dhkem_decap(const EvpKey& sk_recipient, BytesView own_public,
                         const KemCiphertext& ct) {
  Bytes dh = ecdh_x(sk_recipient, ct.enc);
  Bytes ss = detail::dhkem_shared(dh, ct.enc, own_public);
  zeroize(dh);
  return ss;
}

/// KEM encapsulation for III.2 delivery: DHKEM shared secret, then the
/// operation-bound delivery-key derivation.
inline std::pair<SymmetricKey, KemCiphertext> encap(BytesView pk_recipient,
                                                    const Digest& op_hash) {
  EcKeyPair eph = EcKeyPair::generate();
  auto [ss, ct] = dhkem_encap_with_ephemeral(eph, pk_recipient);
  const Bytes info = frame({label_view(DomainLabel::deliver), op_hash.view()});
  SymmetricKey k_d = kdf(ss, std::nullopt, info);
  zeroize(ss);
  return {std::move(k_d), std::move(ct)};
}

inline SymmetricKey decap(const EvpKey& sk_recipient, BytesView own_public,
                          const KemCiphertext& ct, const Digest& op_hash) {
  Bytes ss;
  try {
    ss = dhkem_decap(sk_recipient, own_public, ct);
  } catch (const Error&) {
    fail(Err::decap_failure);
  }
  const Bytes info = frame({label_view(DomainLabel::deliver), op_hash.view()});
  SymmetricKey k_d = kdf(ss, std::nullopt, info);
  zeroize(ss);
  return k_d;
}

}  // namespace sudp
