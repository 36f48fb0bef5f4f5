#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sudp/authenticator.hpp"
#include "sudp/channel.hpp"
#include "sudp/custodian.hpp"
#include "sudp/grant.hpp"
#include "sudp/operation.hpp"

namespace sudp {

/// User-supplied inputs folded into the operation before rendering and
/// signature, so the binding commits to them and they travel only inside
/// the grant on the confidential leg.
struct GrantAmendments {
  /// Replacement value for a write operation's target.
  std::optional<Bytes> write_new_secret;
  /// Enroll a new credential on this device as part of the operation. The
  /// enrollment gesture has its own user consent, distinct from the acting
  /// credential's approval of the operation.
  Authenticator* enroll_device = nullptr;
  GestureDecision enroll_consent{true};
};

/// The authorizer U's trusted client: renders the operation, drives the
/// gesture ceremony, derives the transit intermediates, and assembles the
/// grant.
class UserAgent {
 public:
  UserAgent(Authenticator& auth, DecisionSource decide)
      : auth_(auth), decide_(std::move(decide)) {}

  /// u_c = KDF(y_c; ⊥, DS_user ∥ cid): the only derivation value that ever
  /// crosses the U→T boundary.
  static SymmetricKey derive_u(const SymmetricKey& y, const CredentialId& cid) {
    const Bytes info = frame({label_view(DomainLabel::user), cid.view()});
    return kdf(y.view(), std::nullopt, info);
  }

  /// Phase I participation for one credential: gesture on the fresh salt,
  /// then the user-side derivation stage.
  SetupParticipant setup_participant(const CredentialId& cid) {
    return SetupParticipant{
        cid, auth_.public_key(cid), [this, cid](BytesView eta) {
          const SymmetricKey y = auth_.gesture_prf_only(cid, eta, decide_setup());
          SymmetricKey u = derive_u(y, cid);
          trace("setup.y", y.view());
          trace("setup.u", u.view());
          return u;
        }};
  }

  /// II.2: amend, render, decide, gesture, assemble. Declining produces no
  /// gesture and no grant. For rotation-class operations the next salt is
  /// sampled and committed into scope before rendering, and the same
  /// ceremony evaluates the PRF on it.
  Grant review_and_grant(const HandoffTuple& h, const CredentialId& chosen,
                         const GrantAmendments& amend = {}) {
    const auto cred = std::find_if(h.creds.begin(), h.creds.end(),
                                   [&](const auto& c) { return c.first == chosen; });
    if (cred == h.creds.end()) fail(Err::unknown_credential_in_handoff);
    const auto& eta = cred->second;

    Operation o = h.o;
    if (amend.write_new_secret) {
      if (o.op_type != OpType::write) fail(Err::invalid_operation, "new secret on non-write");
      o.scope[std::string(scope_key::new_secret)] = *amend.write_new_secret;
    }
    std::optional<std::array<std::uint8_t, 32>> eta_next;
    if (rotation_class(o.op_type)) {
      if (o.op_type == OpType::enroll) apply_enrollment(o, amend);
      std::array<std::uint8_t, 32> en{};
      const Bytes eb = csprng(32);
      std::memcpy(en.data(), eb.data(), 32);
      o.scope[std::string(scope_key::eta_next)] = to_bytes(BytesView(en.data(), en.size()));
      eta_next = en;
    }

    const std::string rendered = render(o);
    ceremony_log_.push_back("render:" + hex8(op_hash(o).view()));
    const GestureDecision decision = decide_(rendered);
    ceremony_log_.push_back(decision.approve ? "approve" : "decline");
    if (!decision.approve) fail(Err::declined);

    const Binding beta = compute_binding(BytesView(h.r.data(), h.r.size()), chosen, o);
    const auto gesture =
        auth_.gesture(chosen, beta.beta, BytesView(eta.data(), eta.size()), decision);
    ceremony_log_.push_back("gesture:" + hex8(beta.beta.view()));
    trace("grant.y", gesture.y.view());
    SymmetricKey u_star = derive_u(gesture.y, chosen);
    trace("grant.u*", u_star.view());

    std::optional<GrantOpt> opt;
    if (eta_next) {
      const SymmetricKey y_next = auth_.gesture_prf_only(
          chosen, BytesView(eta_next->data(), eta_next->size()), decision);
      SymmetricKey u_next = derive_u(y_next, chosen);
      trace("grant.y_next", y_next.view());
      trace("grant.u_next", u_next.view());
      opt.emplace(GrantOpt{std::move(u_next), *eta_next});
    }

    Grant g{std::move(o), h.r, chosen, std::move(u_star), gesture.sig, std::move(opt)};
    ceremony_log_.push_back("grant:" + hex8(op_hash(g.o).view()));
    return g;
  }

  const std::vector<std::string>& ceremony_log() const { return ceremony_log_; }
  void set_key_trace(KeyTrace* t) { key_trace_ = t; }

 private:
  /// Setup gestures reuse the decision source with a fixed prompt.
  GestureDecision decide_setup() { return decide_("enroll this credential for sealed-state setup"); }

  void apply_enrollment(Operation& o, const GrantAmendments& amend) {
    Authenticator* device = amend.enroll_device;
    if (device == nullptr) fail(Err::enrollment_material_malformed, "no enrollment device");
    if (!amend.enroll_consent.approve) fail(Err::declined);
    auto [new_cid, new_pk] = device->enroll();
    const Bytes eta_plus = csprng(32);
    const SymmetricKey y_plus =
        device->gesture_prf_only(new_cid, eta_plus, amend.enroll_consent);
    SymmetricKey u_plus = derive_u(y_plus, new_cid);
    trace("enroll.y+", y_plus.view());
    trace("enroll.u+", u_plus.view());
    o.scope[std::string(scope_key::enroll_cid)] = to_bytes(new_cid.view());
    o.scope[std::string(scope_key::enroll_pk)] = new_pk;
    o.scope[std::string(scope_key::enroll_eta)] = eta_plus;
    o.scope[std::string(scope_key::enroll_u)] = to_bytes(u_plus.view());
    ceremony_log_.push_back("enroll-gesture:" + hex8(new_cid.view()));
  }

  void trace(std::string label, BytesView v) {
    if (key_trace_ != nullptr) key_trace_->add(std::move(label), v);
  }

  Authenticator& auth_;
  DecisionSource decide_;
  std::vector<std::string> ceremony_log_;
  KeyTrace* key_trace_ = nullptr;
};

// ---------------------------------------------------------------------------
// The confidential, authenticated U→T grant leg
// ---------------------------------------------------------------------------

/// Delivery never routes through the requester. Implementations return the
/// custodian's redemption handle to the caller driving the flow.
class GrantChannel {
 public:
  virtual ~GrantChannel() = default;
  virtual RhoId deliver(const Grant& g) = 0;
};

/// Co-located deployment: the grant bytes go straight to redemption.
class InProcessChannel : public GrantChannel {
 public:
  explicit InProcessChannel(Custodian& t) : t_(t) {}

  RhoId deliver(const Grant& g) override { return t_.redeem_bytes(encode_grant(g)); }

 private:
  Custodian& t_;
};

/// Cross-device profile: offer, authenticity check against the provisioned
/// custodian identity, sealed envelope, custodian-side open. The observer
/// tap exposes exactly the over-the-air tuple to the harness.
class CrossDeviceChannel : public GrantChannel {
 public:
  struct Observed {
    XdOffer offer;
    XdEnvelope envelope;
  };
  using ObserverTap = std::function<void(const Observed&)>;
  using OfferMutator = std::function<void(XdOffer&)>;

  CrossDeviceChannel(Custodian& t, Bytes custodian_identity)
      : t_(t), identity_(std::move(custodian_identity)) {}

  void set_observer(ObserverTap tap) { tap_ = std::move(tap); }
  void set_offer_mutator(OfferMutator m) { mutator_ = std::move(m); }

  RhoId deliver(const Grant& g) override {
    const BytesView r(g.r.data(), g.r.size());
    XdOffer offer = t_.xd_offer(r);
    if (mutator_) mutator_(offer);
    XdEnvelope env = xd_seal(g, offer, identity_, r);
    if (tap_) tap_({offer, env});
    last_envelope_ = env;
    return t_.redeem_envelope(env, r);
  }

  /// Replays the captured envelope (adversary's move; must fail at
  /// redemption step 1).
  RhoId replay_last(BytesView r) { return t_.redeem_envelope(last_envelope_, r); }

 private:
  Custodian& t_;
  Bytes identity_;
  ObserverTap tap_;
  OfferMutator mutator_;
  XdEnvelope last_envelope_;
};

}  // namespace sudp
