#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <string>

#include "sudp/crypto.hpp"
#include "sudp/vectors.hpp"

using namespace sudp;

TEST_CASE("published and derived vectors all match", "[crypto][vectors]") {
  for (const auto& r : run_vector_checks()) {
    INFO(r.name);
    CHECK(r.pass);
  }
}

TEST_CASE("hash determinism and distinctness", "[crypto]") {
  for (int i = 0; i < 64; ++i) {
    const Bytes x = csprng(48);
    CHECK(hash(x) == hash(x));
  }
  std::set<std::string> seen;
  for (int i = 0; i < 256; ++i) {
    seen.insert(hex(hash(csprng(32)).view()));
  }
  CHECK(seen.size() == 256);
}

TEST_CASE("domain labels are distinct and unambiguous once framed", "[crypto]") {
  // "SUDP-v1/deliver" is a prefix of "SUDP-v1/deliver-ad", but every
  // concatenation in the protocol length-frames its components, so the
  // framed encodings can never be prefixes of one another.
  for (DomainLabel a : kAllLabels) {
    for (DomainLabel b : kAllLabels) {
      if (a == b) continue;
      CHECK(label_bytes(a) != label_bytes(b));
      const Bytes fa = frame({label_view(a)});
      const Bytes fb = frame({label_view(b)});
      const bool prefix =
          fb.size() >= fa.size() && std::equal(fa.begin(), fa.end(), fb.begin());
      CHECK_FALSE(prefix);
    }
  }
}

TEST_CASE("kdf requires a registered label and separates domains", "[crypto]") {
  const Bytes ikm = csprng(32);
  const Bytes salt = csprng(32);
  const Bytes cid = csprng(16);

  const Bytes info_user = frame({label_view(DomainLabel::user), cid});
  const Bytes info_wrap = frame({label_view(DomainLabel::wrap), cid});

  SymmetricKey a = kdf(ikm, salt, info_user);
  SymmetricKey b = kdf(ikm, salt, info_wrap);
  SymmetricKey a2 = kdf(ikm, salt, info_user);
  CHECK(a.ct_eq(a2));
  CHECK_FALSE(a.ct_eq(b));
  CHECK(a.role() == KeyRole::intermediate);
  CHECK(b.role() == KeyRole::wrap);

  // unframed info
  CHECK_THROWS_MATCHES(kdf(ikm, salt, cid), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Err::invalid_kdf_info;
                       }));
  // framed but unregistered
  const Bytes bogus = frame({to_bytes(std::string_view("SUDP-v1/other")), cid});
  CHECK_THROWS_AS(kdf(ikm, salt, bogus), Error);
  // hash-only labels are not KDF contexts
  const Bytes bind_info = frame({label_view(DomainLabel::bind), cid});
  CHECK_THROWS_AS(kdf(ikm, salt, bind_info), Error);
}

TEST_CASE("kdf absent salt equals zero-salt extract", "[crypto]") {
  const Bytes ikm = csprng(32);
  const Bytes info = frame({label_view(DomainLabel::user), csprng(16)});
  SymmetricKey no_salt = kdf(ikm, std::nullopt, info);
  const Bytes zeros(32, 0);
  SymmetricKey zero_salt = kdf(ikm, BytesView(zeros), info);
  CHECK(no_salt.ct_eq(zero_salt));
}

TEST_CASE("aead round-trip and tamper rejection", "[crypto]") {
  for (int i = 0; i < 32; ++i) {
    SymmetricKey key = random_key(KeyRole::state);
    const Bytes nonce = csprng(12);
    const Bytes pt = csprng(64);
    const Bytes ad = csprng(24);
    Bytes ct = aead_seal(key, nonce, pt, ad);
    CHECK(aead_open(key, nonce, ct, ad) == pt);

    Bytes bad_ad = ad;
    bad_ad[static_cast<std::size_t>(i) % bad_ad.size()] ^= 0x01;
    CHECK_THROWS_MATCHES(aead_open(key, nonce, ct, bad_ad), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == Err::aead_failure;
                         }));

    Bytes bad_ct = ct;
    bad_ct[static_cast<std::size_t>(i * 7) % bad_ct.size()] ^= 0x01;
    CHECK_THROWS_AS(aead_open(key, nonce, bad_ct, ad), Error);
  }
}

TEST_CASE("aead empty plaintext round-trips", "[crypto]") {
  SymmetricKey key = random_key(KeyRole::state);
  const Bytes nonce = csprng(12);
  Bytes ct = aead_seal(key, nonce, {}, {});
  CHECK(ct.size() == kTagLen);
  CHECK(aead_open(key, nonce, ct, {}).empty());
}

TEST_CASE("aead rejects non-encryption key roles", "[crypto]") {
  SymmetricKey k = random_key(KeyRole::wrap);
  CHECK_THROWS_MATCHES(aead_seal(k, csprng(12), csprng(8), {}), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Err::invalid_role;
                       }));
}

TEST_CASE("wrap/unwrap round-trip; foreign keks fail integrity", "[crypto]") {
  SymmetricKey kek = random_key(KeyRole::wrap);
  SymmetricKey k = random_key(KeyRole::state);
  WrappedKey w = wrap(kek, k);
  CHECK(unwrap(kek, w).ct_eq(k));

  for (int i = 0; i < 64; ++i) {
    SymmetricKey other = random_key(KeyRole::wrap);
    CHECK_THROWS_MATCHES(unwrap(other, w), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == Err::wrap_integrity_failure;
                         }));
  }

  WrappedKey corrupted = w;
  corrupted.bytes[17] ^= 0x80;
  CHECK_THROWS_AS(unwrap(kek, corrupted), Error);

  SymmetricKey not_a_kek = random_key(KeyRole::state);
  CHECK_THROWS_MATCHES(wrap(not_a_kek, k), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Err::invalid_role;
                       }));
}

TEST_CASE("sign/verify behaviour", "[crypto]") {
  SigKeyPair kp = SigKeyPair::generate();
  const Bytes msg = csprng(32);
  Signature sig = sign(kp.private_key, msg);
  CHECK(verify(kp.public_key, msg, sig));

  Bytes flipped = msg;
  flipped[5] ^= 0x01;
  CHECK_FALSE(verify(kp.public_key, flipped, sig));

  for (int i = 0; i < 16; ++i) {
    SigKeyPair other = SigKeyPair::generate();
    CHECK_FALSE(verify(other.public_key, msg, sig));
  }

  Signature zero{};
  CHECK_FALSE(verify(kp.public_key, msg, zero));
  Bytes junk_pk = csprng(65);
  junk_pk[0] = 0x04;
  CHECK_FALSE(verify(junk_pk, msg, sig));
}

TEST_CASE("encap/decap agreement and operation binding", "[crypto]") {
  KemKeyPair rcp = KemKeyPair::generate();
  Digest op_hash = hash(csprng(40));
  auto [k_d, ct] = encap(rcp.public_key, op_hash);
  SymmetricKey k_d2 = decap(rcp.private_key, rcp.public_key, ct, op_hash);
  CHECK(k_d.ct_eq(k_d2));

  // derivation binds the operation hash
  Digest other_hash = hash(csprng(40));
  SymmetricKey k_other = decap(rcp.private_key, rcp.public_key, ct, other_hash);
  CHECK_FALSE(k_d.ct_eq(k_other));

  // the wrong recipient never recovers the delivery key
  for (int i = 0; i < 16; ++i) {
    KemKeyPair wrong = KemKeyPair::generate();
    SymmetricKey k_wrong = decap(wrong.private_key, wrong.public_key, ct, op_hash);
    CHECK_FALSE(k_d.ct_eq(k_wrong));
  }
}

TEST_CASE("csprng lengths, freshness, monobit smoke test", "[crypto]") {
  CHECK(csprng(32).size() == 32);
  CHECK_FALSE(csprng(32) == csprng(32));
  CHECK_THROWS_AS(csprng(0), Error);

  // FIPS-style monobit scaled to 1 MiB: |z| = |2*ones - n| / sqrt(n) < 3.89.
  const Bytes draw = csprng(1 << 20);
  std::uint64_t ones = 0;
  for (std::uint8_t b : draw) ones += static_cast<std::uint64_t>(__builtin_popcount(b));
  const double n = 8.0 * static_cast<double>(draw.size());
  const double z = std::abs(2.0 * static_cast<double>(ones) - n) / std::sqrt(n);
  CHECK(z < 3.89);
}

TEST_CASE("symmetric keys enforce length and preserve role", "[crypto]") {
  CHECK_THROWS_MATCHES(SymmetricKey(csprng(16), KeyRole::state), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Err::invalid_length;
                       }));
  SymmetricKey k = random_key(KeyRole::intermediate);
  SymmetricKey copy = k;
  CHECK(copy.role() == KeyRole::intermediate);
  CHECK(copy.ct_eq(k));
}

TEST_CASE("length-prefixed framing is unambiguous", "[crypto]") {
  const Bytes a = to_bytes(std::string_view("ab"));
  const Bytes b = to_bytes(std::string_view("c"));
  const Bytes a2 = to_bytes(std::string_view("a"));
  const Bytes b2 = to_bytes(std::string_view("bc"));
  CHECK(frame({a, b}) != frame({a2, b2}));
  CHECK(frame({a, b}) != frame({to_bytes(std::string_view("abc"))}));
}
