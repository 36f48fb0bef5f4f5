#pragma once

#include <string>
#include <vector>

#include "sudp/bytes.hpp"
#include "sudp/crypto.hpp"

namespace sudp {

struct VectorResult {
  std::string name;
  bool pass = false;
};

// Known-answer checks for the primitive profile. SHA-256, HKDF (RFC 5869),
// HMAC (RFC 4231), AES-256-GCM (GCM spec test cases 15/16), and AES-KW
// (RFC 3394 §4.6) use the published vectors. The ES256 and DHKEM(P-256)
// entries are fixed-key known-answer values computed with an independent
// implementation (python-cryptography) and frozen here.
inline std::vector<VectorResult> run_vector_checks() {
  std::vector<VectorResult> results;
  auto check = [&](const std::string& name, bool ok) {
    results.push_back({name, ok});
  };

  // SHA-256
  check("sha256 empty",
        hex(hash({}).view()) ==
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  {
    const Bytes abc = to_bytes(std::string_view("abc"));
    check("sha256 abc",
          hex(hash(abc).view()) ==
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  }

  // HKDF-SHA-256, RFC 5869 test case 1
  {
    const Bytes ikm = from_hex("0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b");
    const Bytes salt = from_hex("000102030405060708090a0b0c");
    const Bytes info = from_hex("f0f1f2f3f4f5f6f7f8f9");
    const Bytes okm = hkdf_sha256(ikm, salt, info, 42);
    check("hkdf rfc5869 tc1",
          hex(okm) ==
              "3cb25f25faacd57a90434f64d0362f2a2d2d0a90cf1a5a4c5db02d56ecc4c5bf"
              "34007208d5b887185865");
  }
  // RFC 5869 test case 3 (zero-length salt and info)
  {
    const Bytes ikm = from_hex("0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b");
    const Bytes okm = hkdf_sha256(ikm, {}, {}, 42);
    check("hkdf rfc5869 tc3",
          hex(okm) ==
              "8da4e775a563c18f715f802a063c5a31b8a11f5c5ee1879ec3454e5f3c738d2d"
              "9d201395faa4b61a96c8");
  }

  // HMAC-SHA-256, RFC 4231 test case 2
  {
    const Bytes key = to_bytes(std::string_view("Jefe"));
    const Bytes data = to_bytes(std::string_view("what do ya want for nothing?"));
    check("hmac rfc4231 tc2",
          hex(hmac_sha256(key, data)) ==
              "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
  }

  // AES-256-GCM, GCM spec test case 15 (no AAD) and 16 (with AAD)
  {
    const SymmetricKey key(
        from_hex("feffe9928665731c6d6a8f9467308308feffe9928665731c6d6a8f9467308308"),
        KeyRole::state);
    const Bytes iv = from_hex("cafebabefacedbaddecaf888");
    const Bytes pt15 = from_hex(
        "d9313225f88406e5a55909c5aff5269a86a7a9531534f7da2e4c303d8a318a72"
        "1c3c0c95956809532fcf0e2449a6b525b16aedf5aa0de657ba637b391aafd255");
    check("aes-256-gcm tc15",
          hex(aead_seal(key, iv, pt15, {})) ==
              "522dc1f099567d07f47f37a32a84427d643a8cdcbfe5c0c97598a2bd2555d1aa"
              "8cb08e48590dbb3da7b08b1056828838c5f61e6393ba7a0abcc9f662898015ad"
              "b094dac5d93471bdec1a502270e3cc6c");
    const Bytes pt16(pt15.begin(), pt15.begin() + 60);
    const Bytes aad = from_hex("feedfacedeadbeeffeedfacedeadbeefabaddad2");
    check("aes-256-gcm tc16",
          hex(aead_seal(key, iv, pt16, aad)) ==
              "522dc1f099567d07f47f37a32a84427d643a8cdcbfe5c0c97598a2bd2555d1aa"
              "8cb08e48590dbb3da7b08b1056828838c5f61e6393ba7a0abcc9f662"
              "76fc6ece0f4e1768cddf8853bb2d551b");
  }

  // AES-KW, RFC 3394 §4.6: 256-bit key data under a 256-bit KEK
  {
    const SymmetricKey kek(
        from_hex("000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f"),
        KeyRole::wrap);
    const SymmetricKey kd(
        from_hex("00112233445566778899aabbccddeeff000102030405060708090a0b0c0d0e0f"),
        KeyRole::state);
    const WrappedKey w = wrap(kek, kd);
    check("aes-kw rfc3394 4.6",
          hex(w.view()) ==
              "28c9f404c4b810f4cbccb35cfb87f8263f5786e2d80ed326cbc7f0e71a99f43b"
              "fb988b9b7a02dd21");
    bool round = false;
    try {
      round = unwrap(kek, w).ct_eq(kd);
    } catch (...) {
    }
    check("aes-kw rfc3394 4.6 unwrap", round);
  }

  // ES256 verification known-answer (derived, independent implementation)
  {
    const Bytes pk = from_hex(
        "041f7b7cb2f6ee6fb85ea9cebe0c0b32b460dfcda5404e027813cf3850c69a07"
        "5fde64e8e74d3724aa1cb8220b40d126b588a62572919335a0d71301910bc50e62");
    const Bytes msg = to_bytes(std::string_view("sudp es256 known-answer message"));
    const Bytes raw = from_hex(
        "6099449196fd5974d6da5d9b37a17a87a02c57b6ab079f1bc98e796c98b57432"
        "75d933438f05a236e87bb1c8263b6f3e933bc574136f185e215e2bde0b840a15");
    Signature sig;
    std::memcpy(sig.bytes.data(), raw.data(), kSigLen);
    check("es256 verify kat", verify(pk, msg, sig));
    Signature bad = sig;
    bad.bytes[10] ^= 0x01;
    check("es256 reject tampered", !verify(pk, msg, bad));
  }

  // DHKEM(P-256, HKDF-SHA256) known-answer (derived, independent
  // implementation of RFC 9180 §4.1)
  {
    const Bytes sk_e =
        from_hex("40ce20ffb6978de18b63ea64c8f60fb29d550b0ac4524ab36cb354f20d6ee80d");
    const Bytes sk_r =
        from_hex("81ecf31f542392196d9bbab9bcb4312e2a17e6c7d97a392e7334e501428d4068");
    const EcKeyPair eph = EcKeyPair::from_private_scalar(sk_e);
    const EcKeyPair rcp = EcKeyPair::from_private_scalar(sk_r);
    check("dhkem pkE",
          hex(eph.public_key) ==
              "04c2d12937a878c2bfa52e3792110fcea51c1ec3c80bbff61f57ed90e9a442c6"
              "7d0ae6d46e93d034f8b1ce5c4f05efdb415bb7a5d416a4b4acd1860f6012d37eed");
    check("dhkem pkR",
          hex(rcp.public_key) ==
              "04e4bb3416d04464572343bf020ba780bf10e202b338185a425d86367aa37aaa"
              "9287bb3e388de1139a09306a776240e3a9faa33da09019f016ebad96a9a2a654c7");
    auto [ss, ct] = dhkem_encap_with_ephemeral(eph, rcp.public_key);
    check("dhkem enc", ct.enc == eph.public_key);
    check("dhkem shared secret",
          hex(ss) == "5faac270e37253d66ee4f7b568fc318dde47a36991ec2a27b3d35a97b86cb5e0");
    const Bytes ss2 = dhkem_decap(rcp.private_key, rcp.public_key, ct);
    check("dhkem decap agreement", ct_equal(ss, ss2));
  }

  return results;
}

inline bool all_vectors_pass(const std::vector<VectorResult>& rs) {
  for (const auto& r : rs)
    if (!r.pass) return false;
  return !rs.empty();
}

}  // namespace sudp
