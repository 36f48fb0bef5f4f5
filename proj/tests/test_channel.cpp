#include <catch_amalgamated.hpp>

#include "sudp/world.hpp"

using namespace sudp;
using harness::World;
using harness::WorldConfig;

namespace {

Err code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Err::invalid_length;
}

}  // namespace

TEST_CASE("offers are fresh per token and verify under the identity key", "[channel]") {
  World w(WorldConfig{});
  const Bytes r1 = csprng(32);
  const Bytes r2 = csprng(32);
  const XdOffer o1 = w.custodian->xd_offer(r1);
  const XdOffer o2 = w.custodian->xd_offer(r2);
  CHECK(o1.pk_t != o2.pk_t);
  CHECK(verify(w.custodian->identity_public_key(), frame({o1.pk_t, r1}), o1.sig));
  // the signature binds pk_t to its own r
  CHECK_FALSE(verify(w.custodian->identity_public_key(), frame({o1.pk_t, r2}), o1.sig));
}

TEST_CASE("cross-device transport is redemption-transparent", "[channel]") {
  WorldConfig cfg;
  cfg.credentials = 2;
  World w(cfg);
  const Bytes in_process = w.run_use_flow("api-token", 0, false);
  const Bytes cross_device = w.run_use_flow("api-token", 1, true);
  CHECK(to_string(in_process).starts_with("OK api-token"));
  CHECK(to_string(cross_device).starts_with("OK api-token"));
}

TEST_CASE("substituted custodian key without a valid signature hard-rejects", "[channel]") {
  World w(WorldConfig{});
  World::FlowHandles f = w.start_flow(w.propose_use("api-token"));
  w.grant(f, 0);

  CrossDeviceChannel ch(*w.custodian, w.custodian->identity_public_key());
  ch.set_offer_mutator([](XdOffer& offer) {
    offer.pk_t = EcKeyPair::generate().public_key;  // MITM key, no valid sig
  });
  CHECK(code_of([&] { ch.deliver(f.grant); }) == Err::pk_authenticity_failure);

  // nothing was transmitted: the token is still live, honest delivery works
  CrossDeviceChannel honest(*w.custodian, w.custodian->identity_public_key());
  CHECK_NOTHROW(honest.deliver(f.grant));
}

TEST_CASE("envelope replay fails redemption step 1", "[channel]") {
  World w(WorldConfig{});
  World::FlowHandles f = w.start_flow(w.propose_use("api-token"));
  w.grant(f, 0);
  CrossDeviceChannel ch(*w.custodian, w.custodian->identity_public_key());
  const RhoId rho = ch.deliver(f.grant);
  CHECK_NOTHROW(w.custodian->consume(rho));
  CHECK(code_of([&] { ch.replay_last(BytesView(f.grant.r.data(), f.grant.r.size())); }) ==
        Err::unknown_or_expired_freshness);
}

TEST_CASE("envelope bound to a different ephemeral key fails to open", "[channel]") {
  World w(WorldConfig{});
  World::FlowHandles f = w.start_flow(w.propose_use("api-token"));
  w.grant(f, 0);
  const BytesView r(f.grant.r.data(), f.grant.r.size());

  const XdOffer offer = w.custodian->xd_offer(r);
  XdEnvelope env = xd_seal(f.grant, offer, w.custodian->identity_public_key(), r);
  env.pk_u = EcKeyPair::generate().public_key;
  CHECK(code_of([&] { w.custodian->redeem_envelope(env, r); }) == Err::aead_failure);
}

TEST_CASE("passive observation of the envelope leaks no derivation material", "[channel]") {
  World w(WorldConfig{});
  World::FlowHandles f = w.start_flow(w.propose_use("api-token"));
  w.grant(f, 0);

  Bytes observed;
  CrossDeviceChannel ch(*w.custodian, w.custodian->identity_public_key());
  ch.set_observer([&](const CrossDeviceChannel::Observed& obs) {
    observed.insert(observed.end(), obs.offer.pk_t.begin(), obs.offer.pk_t.end());
    observed.insert(observed.end(), obs.offer.sig.bytes.begin(), obs.offer.sig.bytes.end());
    observed.insert(observed.end(), obs.envelope.pk_u.begin(), obs.envelope.pk_u.end());
    observed.insert(observed.end(), obs.envelope.ct.nonce.begin(),
                    obs.envelope.ct.nonce.end());
    observed.insert(observed.end(), obs.envelope.ct.ct.begin(), obs.envelope.ct.ct.end());
  });
  const RhoId rho = ch.deliver(f.grant);
  w.custodian->consume(rho);

  REQUIRE_FALSE(observed.empty());
  CHECK_FALSE(contains_bytes(observed, f.grant.u_star.view()));
  for (const auto& [label, needle] : w.scan_needles()) {
    INFO(label);
    CHECK_FALSE(contains_bytes(observed, needle));
  }
}

TEST_CASE("envelope wire encoding round-trips and rejects tampering", "[channel]") {
  World w(WorldConfig{});
  World::FlowHandles f = w.start_flow(w.propose_use("api-token"));
  w.grant(f, 0);
  const BytesView r(f.grant.r.data(), f.grant.r.size());
  const XdOffer offer = w.custodian->xd_offer(r);
  const XdEnvelope env = xd_seal(f.grant, offer, w.custodian->identity_public_key(), r);

  const Bytes wire = encode_envelope(env);
  const XdEnvelope back = decode_envelope(wire);
  CHECK(back.pk_u == env.pk_u);
  CHECK(back.ct == env.ct);

  Bytes cut(wire.begin(), wire.end() - 4);
  CHECK_THROWS_AS(decode_envelope(cut), Error);

  CHECK_NOTHROW(w.custodian->redeem_envelope(back, r));
}
