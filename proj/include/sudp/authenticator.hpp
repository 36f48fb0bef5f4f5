#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "sudp/bytes.hpp"
#include "sudp/cbor.hpp"
#include "sudp/crypto.hpp"
#include "sudp/errors.hpp"
#include "sudp/ids.hpp"

namespace sudp {

/// One approve/decline answer for a rendered operation, supplied by a
/// scripted harness source or the interactive CLI prompt.
struct GestureDecision {
  bool approve = false;
};

/// Callable asked to approve a rendered operation text.
using DecisionSource = std::function<GestureDecision(const std::string& rendered)>;

inline DecisionSource always_approve() {
  return [](const std::string&) { return GestureDecision{true}; };
}

inline DecisionSource always_decline() {
  return [](const std::string&) { return GestureDecision{false}; };
}

/// Software stand-in for a per-credential tamper-resistant module: holds
/// non-extractable PRF and signing keys, and answers only under an approved
/// user-verification gesture. The PRF is HMAC-SHA-256 under the internal
/// key, mirroring the hmac-secret construction behind authenticator PRF
/// extensions. No API path returns the PRF key or the signing secret.
class Authenticator {
 public:
  Authenticator() = default;

  struct GestureResult {
    Signature sig;
    SymmetricKey y;
  };

  std::pair<CredentialId, Bytes> enroll() {
    std::unique_lock lock(mu_);
    Credential c;
    c.cid = CredentialId::from(csprng(16));
    const Bytes prf = csprng(32);
    std::memcpy(c.prf_key.data(), prf.data(), 32);
    c.keys = SigKeyPair::generate();
    const CredentialId cid = c.cid;
    const Bytes pk = c.keys.public_key;
    creds_.emplace(cid, std::move(c));
    return {cid, pk};
  }

  /// One user-verified ceremony: a signature over the challenge and the PRF
  /// evaluation on the salt, produced atomically. Declined gestures yield an
  /// error and no cryptographic output of either kind.
  GestureResult gesture(const CredentialId& cid, const Digest& challenge,
                        BytesView prf_salt, const GestureDecision& decision) const {
    std::shared_lock lock(mu_);
    const Credential& c = find(cid);
    if (!decision.approve) fail(Err::gesture_declined);
    if (prf_salt.size() != 32) fail(Err::invalid_length, "prf salt must be 32 bytes");
    if (fault_drop_prf_) fail(Err::prf_output_absent);
    Signature sig = sign(c.keys.private_key, challenge.view());
    SymmetricKey y = prf_eval(c, prf_salt);
    return GestureResult{sig, std::move(y)};
  }

  /// Setup-time derivation: the PRF half of a ceremony, no signature.
  SymmetricKey gesture_prf_only(const CredentialId& cid, BytesView prf_salt,
                                const GestureDecision& decision) const {
    std::shared_lock lock(mu_);
    const Credential& c = find(cid);
    if (!decision.approve) fail(Err::gesture_declined);
    if (prf_salt.size() != 32) fail(Err::invalid_length, "prf salt must be 32 bytes");
    if (fault_drop_prf_) fail(Err::prf_output_absent);
    return prf_eval(c, prf_salt);
  }

  Bytes public_key(const CredentialId& cid) const {
    std::shared_lock lock(mu_);
    return find(cid).keys.public_key;
  }

  std::vector<CredentialId> credential_ids() const {
    std::shared_lock lock(mu_);
    std::vector<CredentialId> out;
    for (const auto& [cid, c] : creds_) {
      (void)c;
      out.push_back(cid);
    }
    return out;
  }

  /// Fault injection: simulates an assertion response lacking the PRF
  /// output, which the profile must reject. Unreachable with a healthy
  /// software authenticator.
  void inject_missing_prf_fault(bool on) { fault_drop_prf_ = on; }

  /// Test-fixture persistence, AEAD-sealed under a harness-supplied key.
  /// Explicitly outside the security model; the plaintext never leaves this
  /// call unencrypted.
  Bytes export_encrypted(const SymmetricKey& fixture_key) const {
    std::shared_lock lock(mu_);
    cbor::Writer w;
    w.map(2);
    w.uint(0);
    w.uint(kFixtureVersion);
    w.uint(1);
    w.array(creds_.size());
    for (const auto& [cid, c] : creds_) {
      w.array(4);
      w.bstr(cid.view());
      w.bstr(BytesView(c.prf_key.data(), c.prf_key.size()));
      w.bstr(detail::p256_private_scalar(c.keys.private_key));
      w.bstr(c.keys.public_key);
    }
    Bytes plain = w.take();
    const Bytes ad = to_bytes(std::string_view("sudp-authenticator-fixture"));
    AeadBox box = seal_box(fixture_key, plain, ad);
    zeroize(plain);
    cbor::Writer out;
    out.array(2);
    out.bstr(BytesView(box.nonce.data(), box.nonce.size()));
    out.bstr(box.ct);
    return out.take();
  }

  static Authenticator import_encrypted(BytesView fixture, const SymmetricKey& fixture_key) {
    cbor::Reader outer(fixture);
    if (outer.array() != 2) fail(Err::decode_failure, "fixture arity");
    const Bytes nonce = outer.bstr();
    const Bytes ct = outer.bstr();
    outer.expect_end();
    const Bytes ad = to_bytes(std::string_view("sudp-authenticator-fixture"));
    Bytes plain = aead_open(fixture_key, nonce, ct, ad);
    cbor::Reader r(plain);
    std::map<CredentialId, Credential> creds;
    if (r.map() != 2) fail(Err::decode_failure, "fixture map arity");
    cbor::require_key(r, 0);
    if (r.uint() != kFixtureVersion) fail(Err::version_mismatch, "fixture version");
    cbor::require_key(r, 1);
    const std::size_t n = r.array();
    for (std::size_t i = 0; i < n; ++i) {
      if (r.array() != 4) fail(Err::decode_failure, "fixture cred arity");
      Credential c;
      c.cid = CredentialId::from(r.bstr());
      const Bytes prf = r.bstr();
      if (prf.size() != 32) fail(Err::decode_failure, "prf key size");
      std::memcpy(c.prf_key.data(), prf.data(), 32);
      Bytes scalar = r.bstr();
      c.keys.private_key = detail::p256_from_private_scalar(scalar);
      zeroize(scalar);
      c.keys.public_key = r.bstr();
      creds.emplace(c.cid, std::move(c));
    }
    r.expect_end();
    zeroize(plain);
    return Authenticator(std::move(creds));
  }

 private:
  struct Credential {
    CredentialId cid;
    std::array<std::uint8_t, 32> prf_key{};
    SigKeyPair keys;
    bool uv_required = true;

    ~Credential() { zeroize(prf_key.data(), prf_key.size()); }
  };

  static constexpr std::uint64_t kFixtureVersion = 1;

  explicit Authenticator(std::map<CredentialId, Credential> creds)
      : creds_(std::move(creds)) {}

  const Credential& find(const CredentialId& cid) const {
    const auto it = creds_.find(cid);
    if (it == creds_.end()) fail(Err::unknown_cid);
    return it->second;
  }

  static SymmetricKey prf_eval(const Credential& c, BytesView salt) {
    Bytes y = hmac_sha256(BytesView(c.prf_key.data(), c.prf_key.size()), salt);
    SymmetricKey out(y, KeyRole::prf_output);
    zeroize(y);
    return out;
  }

  mutable std::shared_mutex mu_;
  std::map<CredentialId, Credential> creds_;
  bool fault_drop_prf_ = false;
};

}  // namespace sudp
