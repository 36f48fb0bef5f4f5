#pragma once

#include <cctype>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sudp/bytes.hpp"
#include "sudp/cbor.hpp"
#include "sudp/crypto.hpp"
#include "sudp/errors.hpp"
#include "sudp/ids.hpp"

namespace sudp {

// ---------------------------------------------------------------------------
// Canonical operation descriptor o = (act, bind, valid)
// ---------------------------------------------------------------------------

enum class OpType : std::uint8_t {
  use = 0,
  exportt = 1,
  write = 2,
  rotate = 3,
  enroll = 4,
  revoke = 5,
};

inline std::string_view op_type_name(OpType t) {
  switch (t) {
    case OpType::use: return "use";
    case OpType::exportt: return "export";
    case OpType::write: return "write";
    case OpType::rotate: return "rotate";
    case OpType::enroll: return "enroll";
    case OpType::revoke: return "revoke";
  }
  return "?";
}

/// write/rotate/enroll/revoke mutate protected state and are coupled to key
/// rotation (III.3).
inline bool rotation_class(OpType t) {
  return t == OpType::write || t == OpType::rotate || t == OpType::enroll ||
         t == OpType::revoke;
}

/// Reserved scope keys the roles use for committed side material.
namespace scope_key {
inline constexpr std::string_view method = "method";
inline constexpr std::string_view host = "host";
inline constexpr std::string_view path = "path";
inline constexpr std::string_view body_hash = "body_hash";
inline constexpr std::string_view eta_next = "eta_next";
inline constexpr std::string_view new_secret = "new_secret";
inline constexpr std::string_view enroll_cid = "enroll_cid";
inline constexpr std::string_view enroll_pk = "enroll_pk";
inline constexpr std::string_view enroll_eta = "enroll_eta";
inline constexpr std::string_view enroll_u = "enroll_u";
inline constexpr std::string_view revoke_cid = "revoke_cid";
}  // namespace scope_key

struct Operation {
  OpType op_type = OpType::use;
  std::string target;                  // protected entry identifier
  std::map<std::string, Bytes> scope;  // canonical constraints, byte-valued
  std::string redeemer;                // custodian identifier
  std::optional<Bytes> recipient;      // KEM public key, present iff export
  std::uint64_t expiry = 0;            // unix seconds

  bool operator==(const Operation&) const = default;
};

inline void validate_operation(const Operation& o) {
  if (o.target.empty()) fail(Err::invalid_operation, "empty target");
  if (o.redeemer.empty()) fail(Err::invalid_operation, "empty redeemer");
  const bool is_export = o.op_type == OpType::exportt;
  if (is_export && !o.recipient) fail(Err::invalid_operation, "export requires recipient");
  if (!is_export && o.recipient) fail(Err::invalid_operation, "recipient only on export");
  if (o.recipient && o.recipient->size() != kPointLen)
    fail(Err::invalid_operation, "recipient must be an uncompressed P-256 point");
  for (const auto& [k, v] : o.scope) {
    if (k.empty()) fail(Err::invalid_operation, "empty scope key");
    (void)v;
  }
}

inline constexpr std::uint64_t kOpSchemaVersion = 1;

/// Deterministic CBOR, integer-keyed fixed schema:
///   {0: version, 1: {0: type, 1: target, 2: scope}, 2: {0: redeemer
///   [,1: recipient]}, 3: {0: expiry}}
/// Scope is a text-keyed map in canonical (encoded-key) order. Both the
/// authorizer and the custodian call this same function, so H(o) agrees
/// across roles by construction.
inline Bytes canonical_serialize(const Operation& o) {
  validate_operation(o);
  cbor::Writer w;
  w.map(4);
  w.uint(0);
  w.uint(kOpSchemaVersion);
  w.uint(1);
  {
    w.map(3);
    w.uint(0);
    w.uint(static_cast<std::uint64_t>(o.op_type));
    w.uint(1);
    w.tstr(o.target);
    w.uint(2);
    std::vector<std::pair<Bytes, Bytes>> entries;
    entries.reserve(o.scope.size());
    for (const auto& [k, v] : o.scope) {
      cbor::Writer kw, vw;
      kw.tstr(k);
      vw.bstr(v);
      entries.emplace_back(kw.take(), vw.take());
    }
    cbor::put_sorted_map(w, std::move(entries));
  }
  w.uint(2);
  {
    w.map(o.recipient ? 2 : 1);
    w.uint(0);
    w.tstr(o.redeemer);
    if (o.recipient) {
      w.uint(1);
      w.bstr(*o.recipient);
    }
  }
  w.uint(3);
  {
    w.map(1);
    w.uint(0);
    w.uint(o.expiry);
  }
  return w.take();
}

inline Operation decode_operation_from(cbor::Reader& r) {
  Operation o;
  if (r.map() != 4) fail(Err::decode_failure, "operation map arity");
  cbor::require_key(r, 0);
  if (r.uint() != kOpSchemaVersion) fail(Err::version_mismatch, "operation schema version");
  cbor::require_key(r, 1);
  {
    if (r.map() != 3) fail(Err::decode_failure, "act map arity");
    cbor::require_key(r, 0);
    const std::uint64_t t = r.uint();
    if (t > static_cast<std::uint64_t>(OpType::revoke))
      fail(Err::decode_failure, "unknown operation type");
    o.op_type = static_cast<OpType>(t);
    cbor::require_key(r, 1);
    o.target = r.tstr();
    cbor::require_key(r, 2);
    const std::size_t n = r.map();
    Bytes prev_key;
    for (std::size_t i = 0; i < n; ++i) {
      Bytes raw_key = r.raw_item();
      if (i > 0 && !(prev_key < raw_key))
        fail(Err::non_canonical, "scope keys unsorted or duplicate");
      cbor::Reader kr(raw_key);
      const std::string key = kr.tstr();
      o.scope.emplace(key, r.bstr());
      prev_key = std::move(raw_key);
    }
  }
  cbor::require_key(r, 2);
  {
    const std::size_t n = r.map();
    if (n != 1 && n != 2) fail(Err::decode_failure, "bind map arity");
    cbor::require_key(r, 0);
    o.redeemer = r.tstr();
    if (n == 2) {
      cbor::require_key(r, 1);
      o.recipient = r.bstr();
    }
  }
  cbor::require_key(r, 3);
  {
    if (r.map() != 1) fail(Err::decode_failure, "valid map arity");
    cbor::require_key(r, 0);
    o.expiry = r.uint();
  }
  validate_operation(o);
  return o;
}

inline Operation decode_operation(BytesView bytes) {
  cbor::Reader r(bytes);
  Operation o = decode_operation_from(r);
  r.expect_end();
  return o;
}

inline Digest op_hash(const Operation& o) { return hash(canonical_serialize(o)); }

// ---------------------------------------------------------------------------
// Binding β = H(DS_bind ∥ r ∥ cid ∥ H(o)), length-framed
// ---------------------------------------------------------------------------

struct Binding {
  Digest beta;

  auto operator<=>(const Binding&) const = default;
};

inline Binding compute_binding(BytesView r, const CredentialId& cid, const Operation& o) {
  if (r.size() != 32) fail(Err::invalid_length, "freshness token must be 32 bytes");
  const Digest oh = op_hash(o);
  return Binding{hash(frame({label_view(DomainLabel::bind), r, cid.view(), oh.view()}))};
}

// ---------------------------------------------------------------------------
// Trusted rendering
// ---------------------------------------------------------------------------

namespace detail {

inline bool printable_ascii(BytesView v) {
  if (v.empty() || v.size() > 64) return false;
  for (std::uint8_t b : v)
    if (b < 0x20 || b > 0x7e) return false;
  return true;
}

inline std::string render_value(BytesView v, bool full) {
  if (printable_ascii(v)) return "\"" + to_string(v) + "\"";
  if (full || v.size() <= 8) return "0x" + hex(v) + " (" + std::to_string(v.size()) + " bytes)";
  return "0x" + hex8(v) + "… (" + std::to_string(v.size()) + " bytes)";
}

}  // namespace detail

/// Deterministic, complete text form of o shown to the authorizer before the
/// gesture. Every authority-relevant field appears; long byte values are
/// shown as first-8-bytes hex with total length, or in full when
/// `full_values` is set.
inline std::string render(const Operation& o, bool full_values = false) {
  std::ostringstream out;
  out << "operation class: " << op_type_name(o.op_type) << "\n";
  out << "target:          " << o.target << "\n";
  out << "scope:\n";
  if (o.scope.empty()) out << "  (empty)\n";
  for (const auto& [k, v] : o.scope)
    out << "  " << k << " = " << detail::render_value(v, full_values) << "\n";
  out << "redeemer:        " << o.redeemer << "\n";
  out << "recipient:       ";
  if (o.recipient) {
    out << "fingerprint " << hex8(hash(*o.recipient).view()) << "… ("
        << o.recipient->size() << "-byte key)";
  } else {
    out << "(none)";
  }
  out << "\n";
  out << "expiry:          " << o.expiry << " (unix seconds)\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// HTTP adapter: compile + deterministic execution mapping
// ---------------------------------------------------------------------------

struct HttpCallTemplate {
  std::string method;
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  Bytes body;
};

/// The exact native call the custodian will perform; the authority slot is
/// empty until the custodian injects the secret.
struct NativeCall {
  std::string method;
  std::string host;
  std::string path;
  Bytes body;
  Bytes authority;
};

/// Commit-before-approval store for frozen request bodies, content-addressed
/// by operation hash. Insert-once per hash; pruned on redemption or expiry.
class ShadowStore {
 public:
  bool put(const Digest& key, Bytes body, std::uint64_t expiry) {
    std::lock_guard lock(mu_);
    return shadows_.emplace(key, Entry{std::move(body), expiry}).second;
  }

  std::optional<Bytes> get(const Digest& key) const {
    std::lock_guard lock(mu_);
    const auto it = shadows_.find(key);
    if (it == shadows_.end()) return std::nullopt;
    return it->second.body;
  }

  void erase(const Digest& key) {
    std::lock_guard lock(mu_);
    shadows_.erase(key);
  }

  void prune_expired(std::uint64_t now) {
    std::lock_guard lock(mu_);
    for (auto it = shadows_.begin(); it != shadows_.end();) {
      if (it->second.expiry < now)
        it = shadows_.erase(it);
      else
        ++it;
    }
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return shadows_.size();
  }

 private:
  struct Entry {
    Bytes body;
    std::uint64_t expiry;
  };
  mutable std::mutex mu_;
  std::map<Digest, Entry> shadows_;
};

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace detail

/// Compiles a proposed HTTP call into a canonical use operation. Templates
/// carrying caller-supplied authority headers are rejected outright: the
/// custodian selects the authority, never the requester. The body is frozen
/// into the shadow store under the resulting operation hash.
inline Operation compile_http(const HttpCallTemplate& tpl, std::string target,
                              std::string redeemer, std::uint64_t expiry,
                              ShadowStore& shadows) {
  for (const auto& [name, value] : tpl.headers) {
    (void)value;
    const std::string n = detail::lower(name);
    if (n == "authorization" || n == "x-api-key" || n == "proxy-authorization")
      fail(Err::authority_header_present, n);
  }
  std::string_view url = tpl.url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) fail(Err::malformed_url, "missing scheme");
  const std::string_view scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") fail(Err::malformed_url, "unsupported scheme");
  std::string_view rest = url.substr(scheme_end + 3);
  const auto slash = rest.find('/');
  const std::string host(slash == std::string_view::npos ? rest : rest.substr(0, slash));
  const std::string path(slash == std::string_view::npos ? std::string_view("/")
                                                         : rest.substr(slash));
  if (host.empty()) fail(Err::malformed_url, "empty host");
  if (tpl.method.empty()) fail(Err::malformed_url, "empty method");

  Operation o;
  o.op_type = OpType::use;
  o.target = std::move(target);
  o.redeemer = std::move(redeemer);
  o.expiry = expiry;
  o.scope.emplace(scope_key::method, to_bytes(std::string_view(tpl.method)));
  o.scope.emplace(scope_key::host, to_bytes(std::string_view(host)));
  o.scope.emplace(scope_key::path, to_bytes(std::string_view(path)));
  o.scope.emplace(scope_key::body_hash, to_bytes(hash(tpl.body).view()));
  shadows.put(op_hash(o), tpl.body, expiry);
  return o;
}

/// Reconstructs the exact native call from the accepted descriptor and the
/// frozen shadow. Rejects when the shadow is missing or its body no longer
/// matches the committed hash: nothing the requester supplied after approval
/// can reach the call.
inline NativeCall execution_mapping(const Operation& o, const ShadowStore& shadows) {
  if (o.op_type != OpType::use) fail(Err::invalid_operation, "execution mapping is for use ops");
  const auto need = [&](std::string_view key) -> const Bytes& {
    const auto it = o.scope.find(std::string(key));
    if (it == o.scope.end()) fail(Err::invalid_operation, "scope missing " + std::string(key));
    return it->second;
  };
  const Bytes& committed_hash = need(scope_key::body_hash);
  const auto shadow = shadows.get(op_hash(o));
  if (!shadow) fail(Err::missing_shadow);
  if (!ct_equal(hash(*shadow).view(), committed_hash)) fail(Err::shadow_hash_mismatch);
  NativeCall call;
  call.method = to_string(need(scope_key::method));
  call.host = to_string(need(scope_key::host));
  call.path = to_string(need(scope_key::path));
  call.body = *shadow;
  return call;
}

}  // namespace sudp
