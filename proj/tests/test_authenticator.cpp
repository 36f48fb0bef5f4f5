#include <catch_amalgamated.hpp>

#include "sudp/authenticator.hpp"

using namespace sudp;

TEST_CASE("enrollments are fresh and verifiable", "[authenticator]") {
  Authenticator auth;
  auto [cid1, pk1] = auth.enroll();
  auto [cid2, pk2] = auth.enroll();
  CHECK_FALSE(cid1 == cid2);
  CHECK(pk1 != pk2);

  const Digest challenge = hash(csprng(16));
  const Bytes salt = csprng(32);
  auto res = auth.gesture(cid1, challenge, salt, GestureDecision{true});
  CHECK(verify(pk1, challenge.view(), res.sig));
  CHECK_FALSE(verify(pk2, challenge.view(), res.sig));
}

TEST_CASE("prf is deterministic per salt and distinct across salts", "[authenticator]") {
  Authenticator auth;
  auto [cid, pk] = auth.enroll();
  (void)pk;
  const Digest challenge = hash(csprng(16));
  const Bytes salt = csprng(32);

  auto a = auth.gesture(cid, challenge, salt, GestureDecision{true});
  auto b = auth.gesture(cid, challenge, salt, GestureDecision{true});
  CHECK(a.y.ct_eq(b.y));
  CHECK(a.y.role() == KeyRole::prf_output);

  // prf-only half of the ceremony agrees with the full gesture
  SymmetricKey y2 = auth.gesture_prf_only(cid, salt, GestureDecision{true});
  CHECK(a.y.ct_eq(y2));

  for (int i = 0; i < 50; ++i) {
    SymmetricKey other = auth.gesture_prf_only(cid, csprng(32), GestureDecision{true});
    CHECK_FALSE(a.y.ct_eq(other));
  }
}

TEST_CASE("declined gestures produce no output of either kind", "[authenticator]") {
  Authenticator auth;
  auto [cid, pk] = auth.enroll();
  (void)pk;
  const Digest challenge = hash(csprng(16));
  CHECK_THROWS_MATCHES(auth.gesture(cid, challenge, csprng(32), GestureDecision{false}),
                       Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Err::gesture_declined;
                       }));
  CHECK_THROWS_AS(auth.gesture_prf_only(cid, csprng(32), GestureDecision{false}), Error);
}

TEST_CASE("unknown credentials are rejected", "[authenticator]") {
  Authenticator auth;
  auth.enroll();
  const CredentialId ghost = CredentialId::from(csprng(16));
  CHECK_THROWS_MATCHES(auth.gesture_prf_only(ghost, csprng(32), GestureDecision{true}),
                       Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Err::unknown_cid;
                       }));
}

TEST_CASE("missing prf output is rejected via fault injection", "[authenticator]") {
  Authenticator auth;
  auto [cid, pk] = auth.enroll();
  (void)pk;
  auth.inject_missing_prf_fault(true);
  CHECK_THROWS_MATCHES(auth.gesture_prf_only(cid, csprng(32), GestureDecision{true}),
                       Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Err::prf_output_absent;
                       }));
  auth.inject_missing_prf_fault(false);
  CHECK_NOTHROW(auth.gesture_prf_only(cid, csprng(32), GestureDecision{true}));
}

TEST_CASE("encrypted store export reveals no prf key bytes", "[authenticator]") {
  Authenticator auth;
  auto [cid, pk] = auth.enroll();
  (void)pk;

  // learn the prf key indirectly: y = HMAC(prf_key, salt) is all we may see,
  // so plant a recognizable salt and capture y as our scan needle; then also
  // scan for y itself (present only if the box leaked plaintext).
  const Bytes salt = csprng(32);
  const SymmetricKey y = auth.gesture_prf_only(cid, salt, GestureDecision{true});

  const SymmetricKey fixture_key = random_key(KeyRole::state);
  const Bytes fixture = auth.export_encrypted(fixture_key);
  CHECK_FALSE(contains_bytes(fixture, y.view()));

  Authenticator back = Authenticator::import_encrypted(fixture, fixture_key);
  const SymmetricKey y2 = back.gesture_prf_only(cid, salt, GestureDecision{true});
  CHECK(y.ct_eq(y2));
  CHECK(back.public_key(cid) == auth.public_key(cid));

  // wrong fixture key fails to open
  CHECK_THROWS_AS(Authenticator::import_encrypted(fixture, random_key(KeyRole::state)),
                  Error);
}
