#pragma once

#include <deque>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sudp/authenticator.hpp"
#include "sudp/authorizer.hpp"
#include "sudp/custodian.hpp"
#include "sudp/requester_env.hpp"

namespace sudp::harness {

/// Scripted gesture decisions: scenarios enqueue decline/approve answers;
/// an empty queue approves. Every prompt is recorded.
class DecisionScript {
 public:
  DecisionSource source() {
    return [this](const std::string& rendered) {
      prompts_.push_back(rendered);
      if (queue_.empty()) return GestureDecision{true};
      const bool approve = queue_.front();
      queue_.pop_front();
      return GestureDecision{approve};
    };
  }

  void enqueue(bool approve) { queue_.push_back(approve); }
  const std::vector<std::string>& prompts() const { return prompts_; }

 private:
  std::deque<bool> queue_;
  std::vector<std::string> prompts_;
};

struct WorldConfig {
  std::size_t credentials = 1;
  std::vector<std::pair<std::string, std::string>> targets;  // name, host
  std::filesystem::path state_dir;
  std::int64_t start_time = 1'700'000'000;
  std::int64_t default_expiry_in = 600;
};

/// A complete single-process deployment of all roles, with an injectable
/// clock, planted canary secrets, and key-trace taps wired for the
/// non-exposure suites.
class World {
 public:
  World(const World&) = delete;
  World& operator=(const World&) = delete;

  explicit World(WorldConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.state_dir.empty()) {
      cfg_.state_dir = std::filesystem::temp_directory_path() /
                       ("sudp-world-" + hex(csprng(8)));
    }
    std::filesystem::create_directories(cfg_.state_dir);
    now_ = cfg_.start_time;

    if (cfg_.targets.empty()) cfg_.targets = {{"api-token", "api.acme.example"}};
    std::map<std::string, Bytes> secrets;
    for (const auto& [name, host] : cfg_.targets) {
      Bytes canary = csprng(32);
      env.register_target(name, host, canary);
      planted[name] = canary;
      secrets[name] = std::move(canary);
    }

    CustodianConfig ccfg;
    ccfg.state_path = cfg_.state_dir / "sealed-state.cbor";
    ccfg.audit_path = cfg_.state_dir / "audit.jsonl";
    ccfg.clock = [this] { return now_; };
    custodian = std::make_unique<Custodian>(ccfg, &env, &shadows);
    custodian->set_key_trace(&trace);

    user = std::make_unique<UserAgent>(auth, decisions.source());
    user->set_key_trace(&trace);
    requester = std::make_unique<Requester>(shadows, ccfg.redeemer_id);

    std::vector<SetupParticipant> participants;
    for (std::size_t i = 0; i < cfg_.credentials; ++i) {
      auto [cid, pk] = auth.enroll();
      (void)pk;
      cids.push_back(cid);
      participants.push_back(user->setup_participant(cid));
    }
    custodian->setup(secrets, participants);
  }

  // ----- time -----

  std::int64_t now() const { return now_; }
  void advance_clock(std::int64_t seconds) { now_ += seconds; }
  std::uint64_t expiry() const {
    return static_cast<std::uint64_t>(now_ + cfg_.default_expiry_in);
  }

  // ----- proposal helpers -----

  Operation propose_use(const std::string& target, const std::string& method = "GET",
                        const std::string& path = "/resource", Bytes body = {}) {
    HttpCallTemplate tpl;
    tpl.method = method;
    tpl.url = "https://" + env.host_of(target) + path;
    tpl.body = std::move(body);
    return requester->propose_http(tpl, target, expiry());
  }

  Operation propose_export(const std::string& target, const Bytes& recipient_pk) {
    return requester->propose_export(target, recipient_pk, expiry());
  }

  Operation propose_lifecycle(OpType type, const std::string& target,
                              std::map<std::string, Bytes> extra_scope = {}) {
    return requester->propose_lifecycle(type, target, expiry(), std::move(extra_scope));
  }

  // ----- flow steps -----

  struct FlowHandles {
    std::array<std::uint8_t, 32> r{};
    HandoffTuple handoff;
    Grant grant;
    RhoId rho = 0;
  };

  /// II.1 + relay: issue freshness, hand off through the requester.
  FlowHandles start_flow(const Operation& proposal, const HandoffMutation& mutate = {}) {
    FlowHandles f;
    auto [r, handoff] = custodian->issue_freshness(proposal);
    f.r = r;
    f.handoff = requester->relay_handoff(handoff, mutate);
    return f;
  }

  /// II.2: review and grant with the given credential.
  void grant(FlowHandles& f, std::size_t cred_idx, const GrantAmendments& amend = {}) {
    f.grant = user->review_and_grant(f.handoff, cids.at(cred_idx), amend);
  }

  /// II.2 transmission + II.3 redemption over the chosen leg.
  void deliver(FlowHandles& f, bool cross_device = false) {
    if (cross_device) {
      CrossDeviceChannel ch(*custodian, custodian->identity_public_key());
      f.rho = ch.deliver(f.grant);
    } else {
      InProcessChannel ch(*custodian);
      f.rho = ch.deliver(f.grant);
    }
  }

  /// Full honest delegated-use flow; returns the environment response after
  /// logging it into the requester's transcript.
  Bytes run_use_flow(const std::string& target, std::size_t cred_idx,
                     bool cross_device = false) {
    FlowHandles f = start_flow(propose_use(target));
    grant(f, cred_idx);
    deliver(f, cross_device);
    const ConsumeResult res = custodian->consume(f.rho);
    const auto& use = std::get<UseResult>(res);
    requester->observe_result("result", use.response);
    return use.response;
  }

  /// Full lifecycle flow (write/rotate/enroll/revoke).
  CommitReceipt run_lifecycle_flow(OpType type, const std::string& target,
                                   std::size_t cred_idx,
                                   const GrantAmendments& amend = {},
                                   std::map<std::string, Bytes> extra_scope = {}) {
    FlowHandles f = start_flow(propose_lifecycle(type, target, std::move(extra_scope)));
    grant(f, cred_idx, amend);
    deliver(f);
    const ConsumeResult res = custodian->consume(f.rho);
    const auto receipt = std::get<CommitReceipt>(res);
    requester->observe_result("commit", be64(receipt.new_ver));
    return receipt;
  }

  /// Full export flow; the sealed artifact transits the requester.
  DeliveryArtifact run_export_flow(const std::string& target, std::size_t cred_idx,
                                   const Bytes& recipient_pk, Operation* out_op = nullptr) {
    FlowHandles f = start_flow(propose_export(target, recipient_pk));
    grant(f, cred_idx);
    deliver(f);
    const ConsumeResult res = custodian->consume(f.rho);
    const auto& pi = std::get<DeliveryArtifact>(res);
    requester->observe_result("delivery.ct_d", pi.ct_d.enc);
    requester->observe_result("delivery.nonce",
                              BytesView(pi.delta.nonce.data(), pi.delta.nonce.size()));
    requester->observe_result("delivery.delta", pi.delta.ct);
    if (out_op != nullptr) *out_op = f.grant.o;
    return pi;
  }

  /// True when every enrolled credential can complete a use flow on its
  /// own — the uniform-recoverability check.
  bool all_credentials_unlock(const std::string& target) {
    for (std::size_t i = 0; i < cids.size(); ++i) {
      const auto* entry = custodian->sealed_state().find_entry(cids[i]);
      if (entry == nullptr) continue;  // revoked
      run_use_flow(target, i);         // throws on failure
    }
    return true;
  }

  /// Scan needles: every planted secret plus every traced derived key of at
  /// least 16 bytes.
  std::vector<std::pair<std::string, Bytes>> scan_needles() const {
    std::vector<std::pair<std::string, Bytes>> out;
    for (const auto& [name, secret] : planted) out.emplace_back("secret." + name, secret);
    for (const auto& [label, value] : trace.values)
      if (value.size() >= 16) out.emplace_back(label, value);
    return out;
  }

  /// The requester-non-exposure check over the whole transcript.
  std::vector<std::string> transcript_leaks() const {
    std::vector<std::string> leaks;
    for (const auto& [label, needle] : scan_needles())
      if (requester->transcript().contains(needle)) leaks.push_back(label);
    return leaks;
  }

  /// Simulated restart: fresh custodian instance over the committed state
  /// file. In-memory freshness and redemption state do not survive.
  void reload_custodian() {
    CustodianConfig ccfg;
    ccfg.state_path = state_path();
    ccfg.audit_path = cfg_.state_dir / "audit.jsonl";
    ccfg.clock = [this] { return now_; };
    custodian = std::make_unique<Custodian>(ccfg, &env, &shadows);
    custodian->set_key_trace(&trace);
    custodian->load();
  }

  const std::filesystem::path& state_dir() const { return cfg_.state_dir; }
  std::filesystem::path state_path() const { return cfg_.state_dir / "sealed-state.cbor"; }

  Environment env;
  Authenticator auth;
  ShadowStore shadows;
  DecisionScript decisions;
  KeyTrace trace;
  std::unique_ptr<Custodian> custodian;
  std::unique_ptr<UserAgent> user;
  std::unique_ptr<Requester> requester;
  std::vector<CredentialId> cids;
  std::map<std::string, Bytes> planted;

 private:
  WorldConfig cfg_;
  std::int64_t now_ = 0;
};

}  // namespace sudp::harness
