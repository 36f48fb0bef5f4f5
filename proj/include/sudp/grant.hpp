#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "sudp/cbor.hpp"
#include "sudp/crypto.hpp"
#include "sudp/ids.hpp"
#include "sudp/operation.hpp"

namespace sudp {

inline constexpr std::uint64_t kWireVersion = 1;

/// Rotation material accompanying a rotation-class grant: the next-epoch
/// intermediate and its salt. The salt is also committed inside
/// o.act.scope so β covers it.
struct GrantOpt {
  SymmetricKey u_next;
  std::array<std::uint8_t, 32> eta_next{};
};

/// G = (o, r, cid*, u*, σ*, opt) — the user-signed artifact sent U→T over the
/// confidential leg. u* (and opt.u_next) are the only secret fields.
struct Grant {
  Operation o;
  std::array<std::uint8_t, 32> r{};
  CredentialId cid;
  SymmetricKey u_star;
  Signature sigma;
  std::optional<GrantOpt> opt;
};

inline Bytes encode_grant(const Grant& g) {
  cbor::Writer w;
  w.map(g.opt ? 7 : 6);
  w.uint(0);
  w.uint(kWireVersion);
  w.uint(1);
  w.raw(canonical_serialize(g.o));
  w.uint(2);
  w.bstr(BytesView(g.r.data(), g.r.size()));
  w.uint(3);
  w.bstr(g.cid.view());
  w.uint(4);
  w.bstr(g.u_star.view());
  w.uint(5);
  w.bstr(g.sigma.view());
  if (g.opt) {
    w.uint(6);
    w.array(2);
    w.bstr(g.opt->u_next.view());
    w.bstr(BytesView(g.opt->eta_next.data(), g.opt->eta_next.size()));
  }
  return w.take();
}

inline Grant decode_grant(BytesView bytes) {
  cbor::Reader r(bytes);
  const std::size_t n = r.map();
  if (n != 6 && n != 7) fail(Err::decode_failure, "grant map arity");
  cbor::require_key(r, 0);
  if (r.uint() != kWireVersion) fail(Err::version_mismatch, "grant wire version");
  cbor::require_key(r, 1);
  Operation o = decode_operation_from(r);
  cbor::require_key(r, 2);
  const Bytes rb = r.bstr();
  if (rb.size() != 32) fail(Err::decode_failure, "freshness token size");
  cbor::require_key(r, 3);
  const CredentialId cid = CredentialId::from(r.bstr());
  cbor::require_key(r, 4);
  const Bytes ub = r.bstr();
  if (ub.size() != kKeyLen) fail(Err::decode_failure, "u* size");
  cbor::require_key(r, 5);
  const Bytes sb = r.bstr();
  if (sb.size() != kSigLen) fail(Err::decode_failure, "signature size");
  std::optional<GrantOpt> opt;
  if (n == 7) {
    cbor::require_key(r, 6);
    if (r.array() != 2) fail(Err::decode_failure, "opt arity");
    const Bytes un = r.bstr();
    if (un.size() != kKeyLen) fail(Err::decode_failure, "u_next size");
    const Bytes en = r.bstr();
    if (en.size() != 32) fail(Err::decode_failure, "eta_next size");
    GrantOpt go{SymmetricKey(un, KeyRole::intermediate), {}};
    std::memcpy(go.eta_next.data(), en.data(), 32);
    opt.emplace(std::move(go));
  }
  r.expect_end();
  Grant g{std::move(o), {}, cid, SymmetricKey(ub, KeyRole::intermediate), Signature{},
          std::move(opt)};
  std::memcpy(g.r.data(), rb.data(), 32);
  std::memcpy(g.sigma.bytes.data(), sb.data(), kSigLen);
  return g;
}

/// Hand-off tuple relayed R→U: the proposed operation, the freshness token,
/// and the enrolled (cid, η) pairs. Public material only.
struct HandoffTuple {
  Operation o;
  std::array<std::uint8_t, 32> r{};
  std::vector<std::pair<CredentialId, std::array<std::uint8_t, 32>>> creds;
};

inline Bytes encode_handoff(const HandoffTuple& h) {
  cbor::Writer w;
  w.map(4);
  w.uint(0);
  w.uint(kWireVersion);
  w.uint(1);
  w.raw(canonical_serialize(h.o));
  w.uint(2);
  w.bstr(BytesView(h.r.data(), h.r.size()));
  w.uint(3);
  w.array(h.creds.size());
  for (const auto& [cid, eta] : h.creds) {
    w.array(2);
    w.bstr(cid.view());
    w.bstr(BytesView(eta.data(), eta.size()));
  }
  return w.take();
}

inline HandoffTuple decode_handoff(BytesView bytes) {
  cbor::Reader r(bytes);
  if (r.map() != 4) fail(Err::decode_failure, "handoff map arity");
  cbor::require_key(r, 0);
  if (r.uint() != kWireVersion) fail(Err::version_mismatch, "handoff wire version");
  cbor::require_key(r, 1);
  HandoffTuple h;
  h.o = decode_operation_from(r);
  cbor::require_key(r, 2);
  const Bytes rb = r.bstr();
  if (rb.size() != 32) fail(Err::decode_failure, "freshness token size");
  std::memcpy(h.r.data(), rb.data(), 32);
  cbor::require_key(r, 3);
  const std::size_t n = r.array();
  for (std::size_t i = 0; i < n; ++i) {
    if (r.array() != 2) fail(Err::decode_failure, "cred pair arity");
    const CredentialId cid = CredentialId::from(r.bstr());
    const Bytes eta = r.bstr();
    if (eta.size() != 32) fail(Err::decode_failure, "eta size");
    std::array<std::uint8_t, 32> ea{};
    std::memcpy(ea.data(), eta.data(), 32);
    h.creds.emplace_back(cid, ea);
  }
  r.expect_end();
  return h;
}

}  // namespace sudp
