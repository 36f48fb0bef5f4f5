#pragma once

#include <utility>

#include "sudp/cbor.hpp"
#include "sudp/crypto.hpp"
#include "sudp/grant.hpp"

namespace sudp {

// Cross-device transport for the U→T grant leg when no shared session
// exists: ephemeral ECDH, session key bound to the freshness token, AEAD
// envelope with channel-binding associated data. Transport-only — the grant
// inside is the unchanged Phase II artifact.

/// Custodian's side of an offer: ephemeral public key plus a signature over
/// (pk_t ∥ r) under the long-term custodian identity key provisioned to the
/// authorizer at registration.
struct XdOffer {
  Bytes pk_t;
  Signature sig;
};

struct XdEnvelope {
  Bytes pk_u;
  AeadBox ct;
};

inline Bytes encode_envelope(const XdEnvelope& e) {
  cbor::Writer w;
  w.map(4);
  w.uint(0);
  w.uint(kWireVersion);
  w.uint(1);
  w.bstr(e.pk_u);
  w.uint(2);
  w.bstr(BytesView(e.ct.nonce.data(), e.ct.nonce.size()));
  w.uint(3);
  w.bstr(e.ct.ct);
  return w.take();
}

inline XdEnvelope decode_envelope(BytesView bytes) {
  cbor::Reader r(bytes);
  if (r.map() != 4) fail(Err::decode_failure, "envelope arity");
  cbor::require_key(r, 0);
  if (r.uint() != kWireVersion) fail(Err::version_mismatch, "envelope version");
  cbor::require_key(r, 1);
  XdEnvelope e;
  e.pk_u = r.bstr();
  if (e.pk_u.size() != kPointLen) fail(Err::decode_failure, "pk_u size");
  cbor::require_key(r, 2);
  const Bytes nonce = r.bstr();
  if (nonce.size() != kNonceLen) fail(Err::decode_failure, "nonce size");
  std::memcpy(e.ct.nonce.data(), nonce.data(), kNonceLen);
  cbor::require_key(r, 3);
  e.ct.ct = r.bstr();
  r.expect_end();
  return e;
}

namespace detail {

inline SymmetricKey xd_session_key(BytesView shared, BytesView r, BytesView pk_u,
                                   BytesView pk_t) {
  const Bytes info = frame({label_view(DomainLabel::xd_enc), pk_u, pk_t});
  return kdf(shared, r, info);
}

inline Digest xd_channel_ad(BytesView pk_u, BytesView pk_t, BytesView r) {
  return hash(frame({pk_u, pk_t, r}));
}

}  // namespace detail

inline XdOffer make_xd_offer(const SigKeyPair& identity, const EcKeyPair& ephemeral,
                             BytesView r) {
  return XdOffer{ephemeral.public_key,
                 sign(identity.private_key, frame({ephemeral.public_key, r}))};
}

/// Authorizer side. Verifying the offer signature against the provisioned
/// custodian identity is the precondition — with an unauthenticated pk_t an
/// active adversary substitutes its own key and reads u*. Hard reject, no
/// fallback. The ephemeral secret is discarded after sealing.
inline XdEnvelope xd_seal(const Grant& g, const XdOffer& offer, BytesView custodian_identity,
                          BytesView r) {
  Signature expected = offer.sig;
  if (offer.pk_t.size() != kPointLen ||
      !verify(custodian_identity, frame({offer.pk_t, r}), expected))
    fail(Err::pk_authenticity_failure);
  const EcKeyPair eph = EcKeyPair::generate();
  Bytes shared = ecdh_x(eph.private_key, offer.pk_t);
  const SymmetricKey k_xd = detail::xd_session_key(shared, r, eph.public_key, offer.pk_t);
  zeroize(shared);
  const Digest ad = detail::xd_channel_ad(eph.public_key, offer.pk_t, r);
  Bytes plain = encode_grant(g);
  XdEnvelope env{eph.public_key, seal_box(k_xd, plain, ad.view())};
  zeroize(plain);
  return env;
}

/// Custodian side: rederive the session key from the retained offer
/// ephemeral, authenticate the same channel-binding ad, decode the grant.
inline Grant xd_open(const XdEnvelope& env, const EcKeyPair& retained, BytesView r) {
  Bytes shared = ecdh_x(retained.private_key, env.pk_u);
  const SymmetricKey k_xd =
      detail::xd_session_key(shared, r, env.pk_u, retained.public_key);
  zeroize(shared);
  const Digest ad = detail::xd_channel_ad(env.pk_u, retained.public_key, r);
  Bytes plain = open_box(k_xd, env.ct, ad.view());
  Grant g = decode_grant(plain);
  zeroize(plain);
  return g;
}

}  // namespace sudp
