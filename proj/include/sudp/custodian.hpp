#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

#include <json.hpp>

#include "sudp/bytes.hpp"
#include "sudp/cbor.hpp"
#include "sudp/channel.hpp"
#include "sudp/crypto.hpp"
#include "sudp/errors.hpp"
#include "sudp/grant.hpp"
#include "sudp/ids.hpp"
#include "sudp/operation.hpp"

namespace sudp {

// ---------------------------------------------------------------------------
// Persistent state Σ and plaintext state M
// ---------------------------------------------------------------------------

struct SealedEntry {
  CredentialId cid;
  std::array<std::uint8_t, 32> eta{};
  WrappedKey wrapped;
  // State version under which this entry's wrapping key was derived. Peer
  // rewraps replace `wrapped` but keep (eta, wrap_ver); only the owning
  // credential's own rotation advances them.
  std::uint64_t wrap_ver = 0;
};

struct SealedState {
  std::uint64_t ver = 0;
  AeadBox c;
  std::vector<SealedEntry> entries;       // sorted by cid
  std::map<CredentialId, Bytes> reg;      // cid -> verification key

  const SealedEntry* find_entry(const CredentialId& cid) const {
    for (const auto& e : entries)
      if (e.cid == cid) return &e;
    return nullptr;
  }
};

inline constexpr std::uint64_t kStateSchemaVersion = 1;

inline Bytes state_ad(std::uint64_t ver) {
  return frame({label_view(DomainLabel::state), be64(ver)});
}

inline Bytes encode_sealed_state(const SealedState& s) {
  cbor::Writer w;
  w.map(6);
  w.uint(0);
  w.uint(kStateSchemaVersion);
  w.uint(1);
  w.uint(s.ver);
  w.uint(2);
  w.bstr(BytesView(s.c.nonce.data(), s.c.nonce.size()));
  w.uint(3);
  w.bstr(s.c.ct);
  w.uint(4);
  w.array(s.entries.size());
  for (const auto& e : s.entries) {
    w.array(4);
    w.bstr(e.cid.view());
    w.bstr(BytesView(e.eta.data(), e.eta.size()));
    w.bstr(e.wrapped.view());
    w.uint(e.wrap_ver);
  }
  w.uint(5);
  w.array(s.reg.size());
  for (const auto& [cid, pk] : s.reg) {
    w.array(2);
    w.bstr(cid.view());
    w.bstr(pk);
  }
  return w.take();
}

inline SealedState decode_sealed_state(BytesView bytes) {
  SealedState s;
  try {
    cbor::Reader r(bytes);
    if (r.map() != 6) fail(Err::corrupt_state, "state map arity");
    cbor::require_key(r, 0);
    if (r.uint() != kStateSchemaVersion) fail(Err::version_mismatch, "state schema version");
    cbor::require_key(r, 1);
    s.ver = r.uint();
    cbor::require_key(r, 2);
    const Bytes nonce = r.bstr();
    if (nonce.size() != kNonceLen) fail(Err::corrupt_state, "nonce size");
    std::memcpy(s.c.nonce.data(), nonce.data(), kNonceLen);
    cbor::require_key(r, 3);
    s.c.ct = r.bstr();
    cbor::require_key(r, 4);
    const std::size_t n = r.array();
    for (std::size_t i = 0; i < n; ++i) {
      if (r.array() != 4) fail(Err::corrupt_state, "entry arity");
      SealedEntry e;
      e.cid = CredentialId::from(r.bstr());
      const Bytes eta = r.bstr();
      if (eta.size() != 32) fail(Err::corrupt_state, "eta size");
      std::memcpy(e.eta.data(), eta.data(), 32);
      e.wrapped = WrappedKey::from(r.bstr());
      e.wrap_ver = r.uint();
      if (e.wrap_ver > s.ver) fail(Err::corrupt_state, "entry version ahead of state");
      s.entries.push_back(e);
    }
    cbor::require_key(r, 5);
    const std::size_t m = r.array();
    for (std::size_t i = 0; i < m; ++i) {
      if (r.array() != 2) fail(Err::corrupt_state, "reg arity");
      const CredentialId cid = CredentialId::from(r.bstr());
      s.reg.emplace(cid, r.bstr());
    }
    r.expect_end();
  } catch (const Error& e) {
    if (e.code() == Err::version_mismatch) throw;
    fail(Err::corrupt_state, std::string(e.what()));
  }
  // every entry cid registered, one entry per registered credential
  if (s.entries.size() != s.reg.size()) fail(Err::corrupt_state, "entry/reg mismatch");
  for (std::size_t i = 0; i < s.entries.size(); ++i) {
    if (i > 0 && !(s.entries[i - 1].cid < s.entries[i].cid))
      fail(Err::corrupt_state, "entries unsorted");
    if (s.reg.find(s.entries[i].cid) == s.reg.end())
      fail(Err::corrupt_state, "entry cid unregistered");
  }
  return s;
}

/// Plaintext protected state M: the secret map plus the in-state peer map of
/// every credential's wrapping key.
struct ProtectedState {
  std::map<std::string, Bytes> secrets;
  std::map<CredentialId, SymmetricKey> peer;

  ~ProtectedState() {
    for (auto& [k, v] : secrets) {
      (void)k;
      zeroize(v);
    }
  }
};

inline Bytes encode_protected(const ProtectedState& m) {
  cbor::Writer w;
  w.map(2);
  w.uint(0);
  {
    std::vector<std::pair<Bytes, Bytes>> entries;
    for (const auto& [k, v] : m.secrets) {
      cbor::Writer kw, vw;
      kw.tstr(k);
      vw.bstr(v);
      entries.emplace_back(kw.take(), vw.take());
    }
    cbor::put_sorted_map(w, std::move(entries));
  }
  w.uint(1);
  w.array(m.peer.size());
  for (const auto& [cid, wkey] : m.peer) {
    w.array(2);
    w.bstr(cid.view());
    w.bstr(wkey.view());
  }
  return w.take();
}

inline ProtectedState decode_protected(BytesView bytes) {
  cbor::Reader r(bytes);
  ProtectedState m;
  if (r.map() != 2) fail(Err::decrypt_failure, "protected map arity");
  cbor::require_key(r, 0);
  const std::size_t n = r.map();
  for (std::size_t i = 0; i < n; ++i) {
    const std::string key = r.tstr();
    m.secrets.emplace(key, r.bstr());
  }
  cbor::require_key(r, 1);
  const std::size_t p = r.array();
  for (std::size_t i = 0; i < p; ++i) {
    if (r.array() != 2) fail(Err::decrypt_failure, "peer arity");
    const CredentialId cid = CredentialId::from(r.bstr());
    m.peer.emplace(cid, SymmetricKey(r.bstr(), KeyRole::wrap));
  }
  r.expect_end();
  return m;
}

// ---------------------------------------------------------------------------
// Redemption artifacts
// ---------------------------------------------------------------------------

struct RedeemedGrant {
  Operation o;
  CredentialId cid;
  SymmetricKey u_star;
  std::optional<GrantOpt> opt;
  bool consumed = false;
};

using RhoId = std::uint64_t;

struct UseResult {
  Bytes response;
};

struct DeliveryArtifact {
  KemCiphertext ct_d;
  AeadBox delta;
};

struct CommitReceipt {
  std::uint64_t new_ver = 0;
};

using ConsumeResult = std::variant<UseResult, DeliveryArtifact, CommitReceipt>;

/// Recipient-side opening of a delivery artifact: requires the matching
/// KEM secret and the exact operation that authorized the export.
inline Bytes open_delivery(const EvpKey& sk_recipient, BytesView recipient_public,
                           const DeliveryArtifact& pi, const Operation& o) {
  const Digest oh = op_hash(o);
  const SymmetricKey k_d = decap(sk_recipient, recipient_public, pi.ct_d, oh);
  const Bytes ad = frame({label_view(DomainLabel::deliver_ad), oh.view()});
  return open_box(k_d, pi.delta, ad);
}

// ---------------------------------------------------------------------------
// Supporting infrastructure
// ---------------------------------------------------------------------------

using Clock = std::function<std::int64_t()>;
using Policy = std::function<bool(const CredentialId&, const Operation&)>;

inline Clock system_clock() {
  return [] {
    return static_cast<std::int64_t>(
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
  };
}

inline Policy allow_all_policy() {
  return [](const CredentialId&, const Operation&) { return true; };
}

/// Bounded single-use pool of freshness tokens.
class FreshnessPool {
 public:
  FreshnessPool(std::size_t capacity, std::int64_t ttl) : capacity_(capacity), ttl_(ttl) {}

  std::array<std::uint8_t, 32> issue(std::int64_t now) {
    sweep(now);
    if (outstanding_.size() >= capacity_) fail(Err::pool_exhausted);
    const Bytes rb = csprng(32);
    std::array<std::uint8_t, 32> r{};
    std::memcpy(r.data(), rb.data(), 32);
    outstanding_.emplace(to_bytes(BytesView(r.data(), r.size())), now);
    return r;
  }

  /// Removes r from the pool; absent or expired tokens reject. Removal
  /// happens regardless, so a token can never be spent twice.
  void consume(BytesView r, std::int64_t now) {
    const auto it = outstanding_.find(to_bytes(r));
    if (it == outstanding_.end()) fail(Err::unknown_or_expired_freshness);
    const std::int64_t issued = it->second;
    outstanding_.erase(it);
    if (now > issued + ttl_) fail(Err::unknown_or_expired_freshness, "expired");
  }

  std::size_t size() const { return outstanding_.size(); }

 private:
  void sweep(std::int64_t now) {
    for (auto it = outstanding_.begin(); it != outstanding_.end();) {
      if (now > it->second + ttl_)
        it = outstanding_.erase(it);
      else
        ++it;
    }
  }

  std::map<Bytes, std::int64_t> outstanding_;
  std::size_t capacity_;
  std::int64_t ttl_;
};

/// Append-only audit log: JSON-lines on disk (when a path is set) plus an
/// in-memory copy the property suites assert ordering on. Records carry
/// verdicts and short public prefixes only, never key material.
class EventLog {
 public:
  void set_path(std::filesystem::path p) { path_ = std::move(p); }

  void append(nlohmann::json rec) {
    rec["seq"] = seq_++;
    if (!path_.empty()) {
      std::ofstream out(path_, std::ios::app);
      out << rec.dump() << "\n";
    }
    records_.push_back(std::move(rec));
  }

  const std::vector<nlohmann::json>& records() const { return records_; }

 private:
  std::filesystem::path path_;
  std::vector<nlohmann::json> records_;
  std::uint64_t seq_ = 0;
};

/// Harness tap capturing derived key material for non-exposure scans and
/// the rotation capture scripts. Null in ordinary operation.
struct KeyTrace {
  std::vector<std::pair<std::string, Bytes>> values;

  void add(std::string label, BytesView v) {
    values.emplace_back(std::move(label), to_bytes(v));
  }
};

/// All transient buffers a consume touches, wiped in place before the call
/// returns and kept introspectable for the zeroization audit.
class TransientArena {
 public:
  void track(std::string label, BytesView v) {
    bufs_.emplace_back(std::move(label), to_bytes(v));
  }

  void wipe() {
    for (auto& [label, b] : bufs_) {
      (void)label;
      if (!b.empty()) zeroize(b.data(), b.size());
    }
  }

  void reset() { bufs_.clear(); }

  const std::vector<std::pair<std::string, Bytes>>& buffers() const { return bufs_; }

 private:
  std::vector<std::pair<std::string, Bytes>> bufs_;
};

/// Minimal surface the custodian needs from the execution environment.
class EnvironmentIface {
 public:
  virtual ~EnvironmentIface() = default;
  virtual Bytes execute(const NativeCall& call) = 0;
};

enum class CrashPoint { none, before_staging, after_staging, after_rename, after_zeroize };

inline std::optional<CrashPoint> crash_point_from_name(std::string_view s) {
  if (s == "before-staging") return CrashPoint::before_staging;
  if (s == "after-staging") return CrashPoint::after_staging;
  if (s == "after-rename") return CrashPoint::after_rename;
  if (s == "after-zeroize") return CrashPoint::after_zeroize;
  if (s == "none") return CrashPoint::none;
  return std::nullopt;
}

struct CustodianConfig {
  std::filesystem::path state_path;
  std::filesystem::path audit_path;  // optional JSON-lines event log
  std::string redeemer_id = "custodian-main";
  std::int64_t freshness_ttl = 300;
  std::size_t pool_capacity = 1024;
  Clock clock = system_clock();
};

/// User-side half of the Phase I ceremony for one credential: given the
/// fresh salt, perform the gesture and return the derivation intermediate.
struct SetupParticipant {
  CredentialId cid;
  Bytes public_key;
  std::function<SymmetricKey(BytesView eta)> derive_u;
};

// ---------------------------------------------------------------------------
// Custodian
// ---------------------------------------------------------------------------

class Custodian {
 public:
  Custodian(CustodianConfig cfg, EnvironmentIface* env, ShadowStore* shadows,
            Policy policy = allow_all_policy())
      : cfg_(std::move(cfg)),
        env_(env),
        shadows_(shadows),
        policy_(std::move(policy)),
        pool_(cfg_.pool_capacity, cfg_.freshness_ttl),
        identity_(SigKeyPair::generate()) {
    if (!cfg_.audit_path.empty()) log_.set_path(cfg_.audit_path);
  }

  // ----- Phase I -----

  /// Joint setup ceremony: fresh state key, per-credential salt + wrapping
  /// key via each participant's gesture, peer map sealed inside M, initial
  /// Σ committed to disk.
  void setup(const std::map<std::string, Bytes>& initial_secrets,
             const std::vector<SetupParticipant>& participants) {
    std::lock_guard lock(mu_);
    if (participants.empty()) fail(Err::invalid_operation, "setup needs a credential");
    const std::uint64_t ver = 1;
    SymmetricKey k = random_key(KeyRole::state);
    ProtectedState m;
    m.secrets = initial_secrets;
    SealedState s;
    s.ver = ver;
    for (const auto& p : participants) {
      SealedEntry e;
      e.cid = p.cid;
      const Bytes eta = csprng(32);
      std::memcpy(e.eta.data(), eta.data(), 32);
      SymmetricKey u = p.derive_u(eta);
      SymmetricKey w = derive_wrap_key(u, eta, p.cid, ver);
      trace("setup.u", u.view());
      trace("setup.W", w.view());
      e.wrapped = wrap(w, k);
      e.wrap_ver = ver;
      s.entries.push_back(e);
      s.reg.emplace(p.cid, p.public_key);
      m.peer.emplace(p.cid, std::move(w));
    }
    sort_entries(s.entries);
    trace("setup.K", k.view());
    Bytes plain = encode_protected(m);
    s.c = seal_box(k, plain, state_ad(ver));
    zeroize(plain);
    persist(s, CrashPoint::none);
    state_ = std::move(s);
    log_.append({{"event", "setup"},
                 {"verdict", "ok"},
                 {"ver", ver},
                 {"credentials", participants.size()}});
  }

  /// Loads Σ from the committed path. A stale staging remnant from an
  /// interrupted commit is discarded: the committed file wins.
  void load() {
    std::lock_guard lock(mu_);
    const std::filesystem::path staging = staging_path();
    if (!std::filesystem::exists(cfg_.state_path)) fail(Err::corrupt_state, "no committed state");
    std::error_code ec;
    std::filesystem::remove(staging, ec);
    std::ifstream in(cfg_.state_path, std::ios::binary);
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    state_ = decode_sealed_state(data);
    log_.append({{"event", "load"}, {"verdict", "ok"}, {"ver", state_.ver}});
  }

  // ----- Phase II -----

  /// II.1: issue a freshness token and the public hand-off material.
  std::pair<std::array<std::uint8_t, 32>, HandoffTuple> issue_freshness(
      const Operation& proposal) {
    std::lock_guard lock(mu_);
    const std::int64_t now = cfg_.clock();
    if (shadows_ != nullptr) shadows_->prune_expired(static_cast<std::uint64_t>(now));
    const auto r = pool_.issue(now);
    HandoffTuple h;
    h.o = proposal;
    h.r = r;
    for (const auto& e : state_.entries) h.creds.emplace_back(e.cid, e.eta);
    log_.append({{"event", "issue"},
                 {"verdict", "ok"},
                 {"r8", hex8(BytesView(r.data(), r.size()))},
                 {"op8", hex8(op_hash(proposal).view())}});
    return {r, std::move(h)};
  }

  /// II.3: the five-step redemption sequence, in order. The freshness token
  /// is consumed first, so it is spent even when a later step rejects.
  RhoId redeem(const Grant& g) {
    std::lock_guard lock(mu_);
    const std::int64_t now = cfg_.clock();
    nlohmann::json rec{{"event", "redeem"},
                       {"r8", hex8(BytesView(g.r.data(), g.r.size()))},
                       {"cid8", hex8(g.cid.view())}};
    try {
      // 1. consume r
      pool_.consume(BytesView(g.r.data(), g.r.size()), now);
      // 2. recompute β' from the received o and cid
      const Binding beta = compute_binding(BytesView(g.r.data(), g.r.size()), g.cid, g.o);
      rec["beta8"] = hex8(beta.beta.view());
      rec["op8"] = hex8(op_hash(g.o).view());
      // 3. verify σ* under Reg[cid*]
      const auto reg_it = state_.reg.find(g.cid);
      if (reg_it == state_.reg.end()) fail(Err::unknown_credential);
      if (!verify(reg_it->second, beta.beta.view(), g.sigma)) fail(Err::signature_invalid);
      // 4. policy admissibility of the committed o
      if (!policy_(g.cid, g.o)) fail(Err::policy_denied);
      // 5. operation expiry
      if (static_cast<std::int64_t>(g.o.expiry) <= now) fail(Err::expired_operation);

      const RhoId id = next_rho_++;
      rhos_.emplace(id, RedeemedGrant{g.o, g.cid, g.u_star, g.opt, false});
      rec["verdict"] = "ok";
      rec["rho"] = id;
      log_.append(std::move(rec));
      return id;
    } catch (const Error& e) {
      rec["verdict"] = std::string(e.name());
      log_.append(std::move(rec));
      throw;
    }
  }

  RhoId redeem_bytes(BytesView grant_bytes) { return redeem(decode_grant(grant_bytes)); }

  // ----- Phase III -----

  /// III.0 access plus dispatch on the operation class. The redeemed grant
  /// transitions to consumed on entry — including every abort path — and
  /// all transient key material is wiped before returning.
  ConsumeResult consume(RhoId id) {
    std::lock_guard lock(mu_);
    const auto it = rhos_.find(id);
    if (it == rhos_.end() || it->second.consumed) fail(Err::rho_consumed);
    RedeemedGrant& rho = it->second;
    rho.consumed = true;  // consumed whether or not anything below succeeds

    transients_.reset();
    nlohmann::json rec{{"event", "consume"},
                       {"rho", id},
                       {"op8", hex8(op_hash(rho.o).view())},
                       {"class", std::string(op_type_name(rho.o.op_type))}};
    try {
      // III.0: derive W*, unwrap K, decrypt M
      const SealedEntry* entry = state_.find_entry(rho.cid);
      if (entry == nullptr) fail(Err::unknown_credential);
      SymmetricKey w_star = derive_wrap_key(rho.u_star, entry->eta, rho.cid, entry->wrap_ver);
      transients_.track("u*", rho.u_star.view());
      transients_.track("W*", w_star.view());
      trace("consume.W*", w_star.view());
      SymmetricKey k = [&] {
        try {
          return unwrap(w_star, entry->wrapped);
        } catch (const Error&) {
          fail(Err::unwrap_failure);
        }
      }();
      transients_.track("K", k.view());
      trace("consume.K", k.view());
      Bytes plain = [&] {
        try {
          return open_box(k, state_.c, state_ad(state_.ver));
        } catch (const Error&) {
          fail(Err::decrypt_failure);
        }
      }();
      transients_.track("M", plain);
      ProtectedState m = decode_protected(plain);
      zeroize(plain);
      for (const auto& [cid, wkey] : m.peer) {
        transients_.track("peer.W", wkey.view());
        trace("consume.peer.W." + hex8(cid.view()), wkey.view());
      }

      ConsumeResult result = [&]() -> ConsumeResult {
        switch (rho.o.op_type) {
          case OpType::use: return consume_use(rho, m);
          case OpType::exportt: return consume_export(rho, m);
          default: return consume_lifecycle(rho, m);
        }
      }();
      transients_.wipe();
      rec["verdict"] = "ok";
      log_.append(std::move(rec));
      return result;
    } catch (const Error& e) {
      transients_.wipe();
      rec["verdict"] = std::string(e.name());
      log_.append(std::move(rec));
      throw;
    }
  }

  // ----- Cross-device channel (custodian side) -----

  /// One offer per outstanding freshness token: fresh ephemeral pair,
  /// signature binding pk_t to r under the long-term identity key.
  XdOffer xd_offer(BytesView r) {
    std::lock_guard lock(mu_);
    EcKeyPair eph = EcKeyPair::generate();
    XdOffer offer = make_xd_offer(identity_, eph, r);
    xd_retained_[to_bytes(r)] = std::move(eph);
    return offer;
  }

  RhoId redeem_envelope(const XdEnvelope& env, BytesView r) {
    EcKeyPair retained;
    {
      std::lock_guard lock(mu_);
      const auto it = xd_retained_.find(to_bytes(r));
      if (it == xd_retained_.end()) fail(Err::channel_failure, "no offer for this token");
      retained = it->second;
    }
    const Grant g = xd_open(env, retained, r);
    return redeem(g);
  }

  // ----- Introspection -----

  const SealedState& sealed_state() const { return state_; }
  const EventLog& event_log() const { return log_; }
  const Bytes& identity_public_key() const { return identity_.public_key; }
  const std::string& redeemer_id() const { return cfg_.redeemer_id; }
  std::int64_t now() const { return cfg_.clock(); }
  std::size_t pool_size() const { return pool_.size(); }

  void set_crash_point(CrashPoint p) { crash_point_ = p; }
  void set_key_trace(KeyTrace* t) { key_trace_ = t; }
  const TransientArena& transient_buffers() const { return transients_; }

 private:
  static SymmetricKey derive_wrap_key(const SymmetricKey& u, BytesView eta,
                                      const CredentialId& cid, std::uint64_t ver) {
    const Bytes info = frame({label_view(DomainLabel::wrap), cid.view(), be64(ver)});
    return kdf(u.view(), eta, info);
  }

  static void sort_entries(std::vector<SealedEntry>& entries) {
    std::sort(entries.begin(), entries.end(),
              [](const SealedEntry& a, const SealedEntry& b) { return a.cid < b.cid; });
  }

  void trace(std::string label, BytesView v) {
    if (key_trace_ != nullptr) key_trace_->add(std::move(label), v);
  }

  // III.1: spend the secret inside the custodian; only the environment
  // response leaves, and it is scanned for the injected secret first.
  ConsumeResult consume_use(RedeemedGrant& rho, ProtectedState& m) {
    const auto sec = m.secrets.find(rho.o.target);
    if (sec == m.secrets.end()) fail(Err::unknown_target);
    NativeCall call = execution_mapping(rho.o, *shadows_);
    call.authority = sec->second;
    transients_.track("s_o", sec->second);
    Bytes response = [&] {
      try {
        return env_->execute(call);
      } catch (const Error& e) {
        if (e.code() == Err::authority_rejected) fail(Err::environment_rejection);
        throw;
      }
    }();
    zeroize(call.authority);
    if (sec->second.size() >= 16 && contains_bytes(response, sec->second))
      fail(Err::release_nonconformant);
    shadows_->erase(op_hash(rho.o));
    return UseResult{std::move(response)};
  }

  // III.2: recipient-sealed export; KDF info and AEAD ad both bind H(o).
  ConsumeResult consume_export(RedeemedGrant& rho, ProtectedState& m) {
    if (!rho.o.recipient) fail(Err::missing_recipient);
    const auto sec = m.secrets.find(rho.o.target);
    if (sec == m.secrets.end()) fail(Err::unknown_target);
    const Digest oh = op_hash(rho.o);
    auto [k_d, ct_d] = encap(*rho.o.recipient, oh);
    transients_.track("k_d", k_d.view());
    const Bytes ad = frame({label_view(DomainLabel::deliver_ad), oh.view()});
    DeliveryArtifact pi{std::move(ct_d), seal_box(k_d, sec->second, ad)};
    return pi;
  }

  // III.3: state update with atomic commit and peer-map rewrap.
  ConsumeResult consume_lifecycle(RedeemedGrant& rho, ProtectedState& m) {
    if (!rho.opt) fail(Err::missing_opt);
    const auto committed = rho.o.scope.find(std::string(scope_key::eta_next));
    if (committed == rho.o.scope.end() ||
        !ct_equal(committed->second,
                  BytesView(rho.opt->eta_next.data(), rho.opt->eta_next.size())))
      fail(Err::opt_commitment_mismatch);

    const std::uint64_t new_ver = state_.ver + 1;
    bool acting_revoked = false;
    std::optional<CredentialId> revoke_target;
    std::optional<SealedEntry> enroll_entry;
    std::optional<std::pair<CredentialId, Bytes>> enroll_reg;

    // apply the operation to M
    switch (rho.o.op_type) {
      case OpType::write: {
        const auto v = rho.o.scope.find(std::string(scope_key::new_secret));
        if (v == rho.o.scope.end()) fail(Err::invalid_operation, "write missing new_secret");
        m.secrets[rho.o.target] = v->second;
        break;
      }
      case OpType::rotate:
        break;  // M' = M
      case OpType::enroll: {
        const auto gs = [&](std::string_view key) -> const Bytes& {
          const auto it = rho.o.scope.find(std::string(key));
          if (it == rho.o.scope.end()) fail(Err::enrollment_material_malformed, std::string(key));
          return it->second;
        };
        const Bytes& cid_b = gs(scope_key::enroll_cid);
        const Bytes& pk_b = gs(scope_key::enroll_pk);
        const Bytes& eta_b = gs(scope_key::enroll_eta);
        const Bytes& u_b = gs(scope_key::enroll_u);
        if (cid_b.size() != 16 || pk_b.size() != kPointLen || eta_b.size() != 32 ||
            u_b.size() != kKeyLen)
          fail(Err::enrollment_material_malformed, "field sizes");
        const CredentialId new_cid = CredentialId::from(cid_b);
        if (state_.reg.count(new_cid) != 0)
          fail(Err::enrollment_material_malformed, "credential already enrolled");
        const SymmetricKey u_plus(u_b, KeyRole::intermediate);
        SymmetricKey w_plus = derive_wrap_key(u_plus, eta_b, new_cid, new_ver);
        transients_.track("W+", w_plus.view());
        SealedEntry e;
        e.cid = new_cid;
        std::memcpy(e.eta.data(), eta_b.data(), 32);
        e.wrap_ver = new_ver;
        enroll_entry = e;  // wrapped filled in below once K' exists
        enroll_reg = {new_cid, pk_b};
        m.peer.emplace(new_cid, std::move(w_plus));
        break;
      }
      case OpType::revoke: {
        const auto v = rho.o.scope.find(std::string(scope_key::revoke_cid));
        if (v == rho.o.scope.end() || v->second.size() != 16)
          fail(Err::invalid_operation, "revoke missing revoke_cid");
        const CredentialId target = CredentialId::from(v->second);
        if (state_.reg.count(target) == 0) fail(Err::unknown_credential);
        if (state_.reg.size() == 1) fail(Err::revoking_last_credential);
        m.peer.erase(target);
        if (target == rho.cid) acting_revoked = true;
        revoke_target = target;
        break;
      }
      default:
        fail(Err::invalid_operation, "not a lifecycle class");
    }

    // fresh epoch: new K, acting credential rewrapped under next-salt
    // material, every peer rewrapped via the in-state peer map
    SymmetricKey k_new = random_key(KeyRole::state);
    transients_.track("K'", k_new.view());
    trace("lifecycle.K'", k_new.view());

    std::vector<SealedEntry> new_entries;
    std::map<CredentialId, Bytes> new_reg = state_.reg;
    if (revoke_target) new_reg.erase(*revoke_target);
    if (enroll_reg) new_reg.emplace(enroll_reg->first, enroll_reg->second);

    for (const auto& old : state_.entries) {
      if (revoke_target && old.cid == *revoke_target) continue;
      if (old.cid == rho.cid) {
        if (acting_revoked) continue;
        SymmetricKey w_new =
            derive_wrap_key(rho.opt->u_next,
                            BytesView(rho.opt->eta_next.data(), rho.opt->eta_next.size()),
                            rho.cid, new_ver);
        transients_.track("W*new", w_new.view());
        trace("lifecycle.W*new", w_new.view());
        SealedEntry e;
        e.cid = rho.cid;
        e.eta = rho.opt->eta_next;
        e.wrapped = wrap(w_new, k_new);
        e.wrap_ver = new_ver;
        new_entries.push_back(e);
        auto peer_it = m.peer.find(rho.cid);
        if (peer_it == m.peer.end()) fail(Err::decrypt_failure, "peer map missing acting");
        peer_it->second = std::move(w_new);
      } else {
        const auto peer_it = m.peer.find(old.cid);
        if (peer_it == m.peer.end()) fail(Err::decrypt_failure, "peer map incomplete");
        SealedEntry e = old;
        e.wrapped = wrap(peer_it->second, k_new);
        new_entries.push_back(e);
      }
    }
    if (enroll_entry) {
      enroll_entry->wrapped = wrap(m.peer.at(enroll_entry->cid), k_new);
      new_entries.push_back(*enroll_entry);
    }
    sort_entries(new_entries);

    SealedState next;
    next.ver = new_ver;
    next.entries = std::move(new_entries);
    next.reg = std::move(new_reg);
    Bytes plain = encode_protected(m);
    transients_.track("M'", plain);
    next.c = seal_box(k_new, plain, state_ad(new_ver));
    zeroize(plain);

    // durable staging, then atomic rename over the committed path, then
    // retirement of the old epoch's transients
    persist(next, crash_point_);
    state_ = std::move(next);
    transients_.wipe();
    if (crash_point_ == CrashPoint::after_zeroize) fail(Err::crash_injected, "after-zeroize");
    return CommitReceipt{new_ver};
  }

  std::filesystem::path staging_path() const {
    return cfg_.state_path.string() + ".staging";
  }

  void persist(const SealedState& s, CrashPoint crash) {
    if (crash == CrashPoint::before_staging) fail(Err::crash_injected, "before-staging");
    const Bytes data = encode_sealed_state(s);
    const std::filesystem::path staging = staging_path();
    {
      const int fd = ::open(staging.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
      if (fd < 0) fail(Err::persistence_failure, "open staging");
      std::size_t off = 0;
      while (off < data.size()) {
        const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
        if (n <= 0) {
          ::close(fd);
          fail(Err::persistence_failure, "write staging");
        }
        off += static_cast<std::size_t>(n);
      }
      if (::fsync(fd) != 0) {
        ::close(fd);
        fail(Err::persistence_failure, "fsync staging");
      }
      ::close(fd);
    }
    if (crash == CrashPoint::after_staging) fail(Err::crash_injected, "after-staging");
    std::error_code ec;
    std::filesystem::rename(staging, cfg_.state_path, ec);
    if (ec) fail(Err::persistence_failure, "rename");
    if (crash == CrashPoint::after_rename) fail(Err::crash_injected, "after-rename");
  }

  CustodianConfig cfg_;
  EnvironmentIface* env_;
  ShadowStore* shadows_;
  Policy policy_;

  mutable std::mutex mu_;
  SealedState state_;
  FreshnessPool pool_;
  std::map<RhoId, RedeemedGrant> rhos_;
  RhoId next_rho_ = 1;
  EventLog log_;
  SigKeyPair identity_;
  std::map<Bytes, EcKeyPair> xd_retained_;

  CrashPoint crash_point_ = CrashPoint::none;
  KeyTrace* key_trace_ = nullptr;
  TransientArena transients_;
};

}  // namespace sudp
