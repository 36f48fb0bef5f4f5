#include <catch_amalgamated.hpp>

#include "sudp/operation.hpp"
#include "test_util.hpp"

using namespace sudp;

TEST_CASE("op_hash equality and sensitivity", "[operation]") {
  Operation a = testutil::random_operation();
  Operation b = a;
  CHECK(op_hash(a) == op_hash(b));
  if (!b.scope.empty()) {
    b.scope.begin()->second[0] ^= 0x01;
  } else {
    b.scope.emplace("k", Bytes{0x00});
  }
  CHECK_FALSE(op_hash(a) == op_hash(b));
}

TEST_CASE("binding commits freshness, credential, and operation", "[operation]") {
  const Operation o = testutil::random_operation();
  const Bytes r = csprng(32);
  const CredentialId cid = CredentialId::from(csprng(16));

  const Binding base = compute_binding(r, cid, o);
  CHECK(base == compute_binding(r, cid, o));

  // both roles compute β from the same decoded descriptor
  const Operation redecoded = decode_operation(canonical_serialize(o));
  CHECK(base == compute_binding(r, cid, redecoded));

  CHECK_FALSE(base == compute_binding(csprng(32), cid, o));
  CHECK_FALSE(base == compute_binding(r, CredentialId::from(csprng(16)), o));

  for (int i = 0; i < 50; ++i) {
    Operation mut = o;
    switch (testutil::rand_below(5)) {
      case 0: mut.expiry ^= 1; break;
      case 1: mut.target += "x"; break;
      case 2: mut.redeemer += "y"; break;
      case 3: mut.scope.emplace(testutil::rand_ident(6), csprng(4)); break;
      default:
        if (!mut.scope.empty())
          mut.scope.begin()->second.push_back(0x00);
        else
          mut.expiry += 2;
    }
    CHECK_FALSE(base == compute_binding(r, cid, mut));
  }
}

TEST_CASE("render is deterministic and complete", "[operation]") {
  for (int i = 0; i < 20; ++i) {
    const Operation o = testutil::random_operation();
    const std::string text = render(o);
    CHECK(text == render(o));
    CHECK(text.find(op_type_name(o.op_type)) != std::string::npos);
    CHECK(text.find(o.target) != std::string::npos);
    CHECK(text.find(o.redeemer) != std::string::npos);
    CHECK(text.find(std::to_string(o.expiry)) != std::string::npos);
    for (const auto& [k, v] : o.scope) {
      (void)v;
      CHECK(text.find(k) != std::string::npos);
    }
    CHECK(text.find("recipient") != std::string::npos);
  }
}

TEST_CASE("renderings differ when the recipient differs", "[operation]") {
  for (int i = 0; i < 20; ++i) {
    Operation a = testutil::random_operation();
    a.op_type = OpType::exportt;
    a.recipient = KemKeyPair::generate().public_key;
    Operation b = a;
    b.recipient = KemKeyPair::generate().public_key;
    CHECK(render(a) != render(b));
  }
}

TEST_CASE("full-value rendering exposes entire scope values", "[operation]") {
  Operation o;
  o.op_type = OpType::use;
  o.target = "t";
  o.redeemer = "T";
  o.expiry = 9;
  const Bytes big = csprng(32);
  o.scope.emplace("blob", big);
  const std::string brief = render(o);
  const std::string full = render(o, true);
  CHECK(brief.find(hex8(big)) != std::string::npos);
  CHECK(brief.find(hex(big)) == std::string::npos);
  CHECK(full.find(hex(big)) != std::string::npos);
}

TEST_CASE("compile_http builds the committed scope and freezes the body", "[operation]") {
  ShadowStore shadows;
  HttpCallTemplate tpl;
  tpl.method = "GET";
  tpl.url = "https://api.acme.example/repos/acme/widgets?page=2";
  const Operation o = compile_http(tpl, "api-token", "custodian-main", 1000, shadows);

  CHECK(o.op_type == OpType::use);
  CHECK(to_string(o.scope.at("method")) == "GET");
  CHECK(to_string(o.scope.at("host")) == "api.acme.example");
  CHECK(to_string(o.scope.at("path")) == "/repos/acme/widgets?page=2");
  // empty body commits the hash of empty input
  CHECK(hex(o.scope.at("body_hash")) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(shadows.get(op_hash(o)).has_value());

  const Operation o2 = compile_http(tpl, "api-token", "custodian-main", 1000, shadows);
  CHECK(op_hash(o) == op_hash(o2));
}

TEST_CASE("compile_http rejects authority headers and bad urls", "[operation]") {
  ShadowStore shadows;
  HttpCallTemplate tpl;
  tpl.method = "POST";
  tpl.url = "https://api.acme.example/v1/send";
  tpl.headers.emplace_back("Authorization", "Bearer leaked");
  CHECK_THROWS_MATCHES(compile_http(tpl, "t", "T", 1, shadows), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Err::authority_header_present;
                       }));
  tpl.headers = {{"X-API-Key", "leaked"}};
  CHECK_THROWS_AS(compile_http(tpl, "t", "T", 1, shadows), Error);

  tpl.headers.clear();
  tpl.url = "not a url";
  CHECK_THROWS_MATCHES(compile_http(tpl, "t", "T", 1, shadows), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Err::malformed_url;
                       }));
  tpl.url = "ftp://host/x";
  CHECK_THROWS_AS(compile_http(tpl, "t", "T", 1, shadows), Error);
  tpl.url = "https:///path-only";
  CHECK_THROWS_AS(compile_http(tpl, "t", "T", 1, shadows), Error);
}

TEST_CASE("execution mapping replays only the frozen call", "[operation]") {
  ShadowStore shadows;
  HttpCallTemplate tpl;
  tpl.method = "POST";
  tpl.url = "https://api.acme.example/v1/items";
  tpl.body = to_bytes(std::string_view("{\"name\":\"widget\"}"));
  tpl.headers.emplace_back("Content-Type", "application/json");
  const Operation o = compile_http(tpl, "api-token", "custodian-main", 1000, shadows);

  const NativeCall call = execution_mapping(o, shadows);
  CHECK(call.method == "POST");
  CHECK(call.host == "api.acme.example");
  CHECK(call.path == "/v1/items");
  CHECK(call.body == tpl.body);
  // the authority slot is empty until the custodian fills it
  CHECK(call.authority.empty());

  // post-approval body substitution is caught by the committed hash
  shadows.erase(op_hash(o));
  shadows.put(op_hash(o), to_bytes(std::string_view("{\"name\":\"evil\"}")), 1000);
  CHECK_THROWS_MATCHES(execution_mapping(o, shadows), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Err::shadow_hash_mismatch;
                       }));

  shadows.erase(op_hash(o));
  CHECK_THROWS_MATCHES(execution_mapping(o, shadows), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Err::missing_shadow;
                       }));
}

TEST_CASE("shadow store is insert-once and prunes by expiry", "[operation]") {
  ShadowStore shadows;
  const Digest k = hash(csprng(8));
  CHECK(shadows.put(k, Bytes{1, 2, 3}, 100));
  CHECK_FALSE(shadows.put(k, Bytes{9, 9, 9}, 100));
  CHECK(shadows.get(k).value() == Bytes{1, 2, 3});
  shadows.prune_expired(50);
  CHECK(shadows.size() == 1);
  shadows.prune_expired(101);
  CHECK(shadows.size() == 0);
}
