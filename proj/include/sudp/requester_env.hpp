#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "sudp/custodian.hpp"
#include "sudp/grant.hpp"
#include "sudp/operation.hpp"

namespace sudp {

/// Append-only record of every byte sequence the requester sends or
/// receives. The non-exposure suites scan it for planted key material.
class Transcript {
 public:
  void append(std::string label, BytesView data) {
    std::lock_guard lock(mu_);
    entries_.emplace_back(std::move(label), to_bytes(data));
  }

  bool contains(BytesView needle) const {
    std::lock_guard lock(mu_);
    for (const auto& [label, data] : entries_) {
      (void)label;
      if (contains_bytes(data, needle)) return true;
    }
    // also scan across the concatenation, in case a value straddles entries
    Bytes all;
    for (const auto& [label, data] : entries_) {
      (void)label;
      all.insert(all.end(), data.begin(), data.end());
    }
    return contains_bytes(all, needle);
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

  std::vector<std::string> labels() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& [label, data] : entries_) {
      (void)data;
      out.push_back(label);
    }
    return out;
  }

 private:
  mutable std::mutex mu_;
  std::vector<std::pair<std::string, Bytes>> entries_;
};

/// Simulated authority-gated environment: executes a native call only when
/// the authority slot carries the target's current secret. Supports
/// rotation with revocation of retired secrets. Deterministic responses.
class Environment : public EnvironmentIface {
 public:
  void register_target(const std::string& name, std::string host, Bytes secret) {
    std::lock_guard lock(mu_);
    targets_[name] = Target{std::move(host), std::move(secret), 1, {}};
  }

  Bytes execute(const NativeCall& call) override {
    std::lock_guard lock(mu_);
    const Target* target = nullptr;
    std::string target_name;
    for (const auto& [name, t] : targets_) {
      if (t.host == call.host) {
        target = &t;
        target_name = name;
        break;
      }
    }
    if (target == nullptr) fail(Err::authority_rejected, "unknown host");
    if (call.authority.empty()) fail(Err::authority_rejected, "no authority presented");
    for (const auto& revoked : target->revoked)
      if (ct_equal(call.authority, revoked)) fail(Err::authority_rejected, "revoked secret");
    if (!ct_equal(call.authority, target->secret))
      fail(Err::authority_rejected, "wrong secret");
    const std::string resp = "OK " + target_name + " epoch=" + std::to_string(target->epoch) +
                             " " + call.method + " " + call.path + " body=" +
                             hex8(hash(call.body).view());
    return to_bytes(std::string_view(resp));
  }

  /// Installs a fresh secret and revokes the prior one.
  int rotate(const std::string& name) {
    std::lock_guard lock(mu_);
    Target& t = find(name);
    t.revoked.push_back(t.secret);
    t.secret = csprng(32);
    return ++t.epoch;
  }

  /// Installs a caller-chosen secret as current, revoking the displaced
  /// one. Used to model epoch restoration in the forward-secrecy suites.
  int install_secret(const std::string& name, Bytes secret) {
    std::lock_guard lock(mu_);
    Target& t = find(name);
    t.revoked.push_back(t.secret);
    std::erase_if(t.revoked, [&](const Bytes& r) { return ct_equal(r, secret); });
    t.secret = std::move(secret);
    return ++t.epoch;
  }

  /// The service console surface: the user's trusted client may read the
  /// current secret (e.g. after a rotation) to stage a protected-state
  /// write. Never exposed to the requester.
  Bytes current_secret(const std::string& name) const {
    std::lock_guard lock(mu_);
    return find_const(name).secret;
  }

  int epoch(const std::string& name) const {
    std::lock_guard lock(mu_);
    return find_const(name).epoch;
  }

  std::string host_of(const std::string& name) const {
    std::lock_guard lock(mu_);
    return find_const(name).host;
  }

 private:
  struct Target {
    std::string host;
    Bytes secret;
    int epoch = 1;
    std::vector<Bytes> revoked;
  };

  Target& find(const std::string& name) {
    const auto it = targets_.find(name);
    if (it == targets_.end()) fail(Err::unknown_target, name);
    return it->second;
  }

  const Target& find_const(const std::string& name) const {
    const auto it = targets_.find(name);
    if (it == targets_.end()) fail(Err::unknown_target, name);
    return it->second;
  }

  mutable std::mutex mu_;
  std::map<std::string, Target> targets_;
};

using HandoffMutation = std::function<void(HandoffTuple&)>;

/// The requester R: proposes operations, relays the public hand-off, and
/// receives results. Adversarial behaviour is injected through hooks so the
/// same role code serves honest and attack scenarios. Everything R touches
/// lands in its transcript.
class Requester {
 public:
  Requester(ShadowStore& shadows, std::string redeemer)
      : shadows_(shadows), redeemer_(std::move(redeemer)) {}

  Operation propose_http(const HttpCallTemplate& tpl, const std::string& target,
                         std::uint64_t expiry) {
    Operation o = compile_http(tpl, target, redeemer_, expiry, shadows_);
    transcript_.append("propose", canonical_serialize(o));
    return o;
  }

  Operation propose_export(const std::string& target, Bytes recipient, std::uint64_t expiry) {
    Operation o;
    o.op_type = OpType::exportt;
    o.target = target;
    o.redeemer = redeemer_;
    o.recipient = std::move(recipient);
    o.expiry = expiry;
    transcript_.append("propose", canonical_serialize(o));
    return o;
  }

  /// Lifecycle proposals (write/rotate/enroll/revoke). The authority-
  /// relevant user inputs are added later by the authorizer; the proposal
  /// carries only public fields.
  Operation propose_lifecycle(OpType type, const std::string& target, std::uint64_t expiry,
                              std::map<std::string, Bytes> extra_scope = {}) {
    if (!rotation_class(type)) fail(Err::invalid_operation, "not a lifecycle class");
    Operation o;
    o.op_type = type;
    o.target = target;
    o.redeemer = redeemer_;
    o.expiry = expiry;
    o.scope = std::move(extra_scope);
    transcript_.append("propose", canonical_serialize(o));
    return o;
  }

  /// Relays the hand-off tuple to the authorizer, applying any adversarial
  /// mutation. Tampering is not an error here; it surfaces at redemption.
  HandoffTuple relay_handoff(const HandoffTuple& h, const HandoffMutation& mutate = {}) {
    HandoffTuple out = h;
    if (mutate) mutate(out);
    transcript_.append("handoff", encode_handoff(out));
    return out;
  }

  void observe_result(std::string label, BytesView data) {
    transcript_.append(std::move(label), data);
  }

  Transcript& transcript() { return transcript_; }
  const Transcript& transcript() const { return transcript_; }
  const std::string& redeemer() const { return redeemer_; }

 private:
  Transcript transcript_;
  ShadowStore& shadows_;
  std::string redeemer_;
};

}  // namespace sudp
