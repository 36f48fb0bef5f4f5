#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sudp/world.hpp"

namespace sudp::harness {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct StepReport {
  std::string op;
  std::string expected;
  std::string actual;
  bool pass = false;
};

struct Report {
  std::string name;
  std::string kind;  // "scenario" | "attack"
  std::vector<StepReport> steps;
  std::map<std::string, bool> invariants;

  bool pass() const {
    for (const auto& s : steps)
      if (!s.pass) return false;
    for (const auto& [k, ok] : invariants) {
      (void)k;
      if (!ok) return false;
    }
    return true;
  }

  json to_json() const {
    json out{{"name", name}, {"kind", kind}, {"pass", pass()}};
    out["steps"] = json::array();
    for (const auto& s : steps)
      out["steps"].push_back(
          {{"op", s.op}, {"expected", s.expected}, {"actual", s.actual}, {"pass", s.pass}});
    out["invariants"] = json::object();
    for (const auto& [k, ok] : invariants) out["invariants"][k] = ok;
    return out;
  }
};

// ---------------------------------------------------------------------------
// Scenario model
// ---------------------------------------------------------------------------

struct Step {
  std::string op;
  json args;
  std::string expect = "ok";
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  WorldConfig world;
  std::vector<Step> steps;

  static Scenario from_json(const json& j) {
    try {
      Scenario s;
      s.name = j.at("name").get<std::string>();
      s.seed = j.value("seed", 0ull);
      const json setup = j.value("setup", json::object());
      s.world.credentials = setup.value("credentials", 1u);
      if (setup.contains("targets")) {
        for (const auto& t : setup.at("targets"))
          s.world.targets.emplace_back(t.at("name").get<std::string>(),
                                       t.at("host").get<std::string>());
      }
      for (const auto& js : j.at("steps")) {
        Step step;
        step.op = js.at("op").get<std::string>();
        step.expect = js.value("expect", "ok");
        step.args = js;
        s.steps.push_back(std::move(step));
      }
      return s;
    } catch (const json::exception& e) {
      fail(Err::scenario_parse_error, e.what());
    }
  }

  static Scenario from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Err::scenario_parse_error, "cannot open " + path.string());
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      fail(Err::scenario_parse_error, e.what());
    }
    return from_json(j);
  }
};

// ---------------------------------------------------------------------------
// Scenario runner
// ---------------------------------------------------------------------------

class ScenarioRunner {
 public:
  explicit ScenarioRunner(const Scenario& s, std::filesystem::path state_dir = {})
      : scenario_(s) {
    WorldConfig cfg = s.world;
    cfg.state_dir = std::move(state_dir);
    world_ = std::make_unique<World>(cfg);
  }

  Report run() {
    Report report;
    report.name = scenario_.name;
    report.kind = "scenario";
    for (const auto& step : scenario_.steps) {
      StepReport sr;
      sr.op = step.op;
      sr.expected = step.expect;
      sr.actual = execute(step);
      sr.pass = sr.actual == sr.expected;
      report.steps.push_back(std::move(sr));
    }
    const auto leaks = world_->transcript_leaks();
    report.invariants["transcript-clean"] = leaks.empty();
    return report;
  }

  World& world() { return *world_; }

 private:
  /// Runs one step; returns "ok", "clean", or the closed error name.
  std::string execute(const Step& step) {
    try {
      dispatch(step);
      return step.op == "scan-transcript" ? "clean" : "ok";
    } catch (const Error& e) {
      return std::string(e.name());
    }
  }

  void dispatch(const Step& step) {
    World& w = *world_;
    const json& a = step.args;
    const std::string& op = step.op;

    if (op == "propose-use") {
      proposal_ = w.propose_use(a.at("target").get<std::string>(),
                                a.value("method", "GET"), a.value("path", "/resource"),
                                to_bytes(std::string_view(a.value("body", ""))));
      start();
    } else if (op == "propose-export") {
      recipient_ = KemKeyPair::generate();
      proposal_ = w.propose_export(a.at("target").get<std::string>(), recipient_->public_key);
      start();
    } else if (op == "propose-write") {
      proposal_ = w.propose_lifecycle(OpType::write, a.at("target").get<std::string>());
      start();
    } else if (op == "propose-rotate") {
      proposal_ = w.propose_lifecycle(OpType::rotate, a.value("target", "@state"));
      start();
    } else if (op == "propose-enroll") {
      proposal_ = w.propose_lifecycle(OpType::enroll, "@state");
      start();
    } else if (op == "propose-revoke") {
      const std::size_t idx = a.at("credential").get<std::size_t>();
      std::map<std::string, Bytes> scope;
      scope[std::string(scope_key::revoke_cid)] = to_bytes(w.cids.at(idx).view());
      proposal_ = w.propose_lifecycle(OpType::revoke, "@state", std::move(scope));
      start();
    } else if (op == "handoff") {
      HandoffMutation mutate;
      if (a.contains("mutate")) {
        const json m = a.at("mutate");
        mutate = [m, &w](HandoffTuple& h) {
          if (m.contains("path")) {
            h.o.scope[std::string(scope_key::path)] =
                to_bytes(std::string_view(m.at("path").get<std::string>()));
            w.shadows.put(op_hash(h.o), {}, h.o.expiry);
          }
          if (m.contains("target")) h.o.target = m.at("target").get<std::string>();
          if (m.contains("expiry")) h.o.expiry = m.at("expiry").get<std::uint64_t>();
        };
      }
      flow_->handoff = w.requester->relay_handoff(flow_->handoff, mutate);
    } else if (op == "grant") {
      if (a.value("decision", "approve") == "decline") w.decisions.enqueue(false);
      GrantAmendments amend;
      if (flow_->handoff.o.op_type == OpType::write) {
        const std::string source = a.value("write_value", "env-current");
        amend.write_new_secret = source == "fresh"
                                     ? csprng(32)
                                     : w.env.current_secret(flow_->handoff.o.target);
      }
      if (flow_->handoff.o.op_type == OpType::enroll) amend.enroll_device = &w.auth;
      w.grant(*flow_, a.value("credential", 0u), amend);
    } else if (op == "deliver") {
      w.deliver(*flow_, a.value("via", "in-process") == "cross-device");
    } else if (op == "consume") {
      const ConsumeResult res = w.custodian->consume(flow_->rho);
      if (const auto* use = std::get_if<UseResult>(&res)) {
        w.requester->observe_result("result", use->response);
        last_response_ = use->response;
      } else if (const auto* pi = std::get_if<DeliveryArtifact>(&res)) {
        w.requester->observe_result("delivery.ct_d", pi->ct_d.enc);
        w.requester->observe_result("delivery.delta", pi->delta.ct);
        delivery_ = *pi;
        delivery_op_ = flow_->grant.o;
      } else if (const auto* receipt = std::get_if<CommitReceipt>(&res)) {
        w.requester->observe_result("commit", be64(receipt->new_ver));
        // a fresh enrollment becomes addressable by scenario index
        if (flow_->grant.o.op_type == OpType::enroll) adopt_enrolled();
      }
    } else if (op == "replay-grant") {
      w.custodian->redeem(flow_->grant);
    } else if (op == "open-delivery") {
      if (!delivery_ || !recipient_) fail(Err::scenario_parse_error, "no delivery to open");
      const Bytes secret = open_delivery(recipient_->private_key, recipient_->public_key,
                                         *delivery_, *delivery_op_);
      if (secret != w.planted.at(delivery_op_->target) &&
          secret != w.env.current_secret(delivery_op_->target))
        fail(Err::aead_failure, "delivered secret mismatch");
    } else if (op == "env-rotate") {
      w.env.rotate(a.at("target").get<std::string>());
    } else if (op == "advance-clock") {
      w.advance_clock(a.at("seconds").get<std::int64_t>());
    } else if (op == "crash") {
      const auto point = crash_point_from_name(a.at("at").get<std::string>());
      if (!point) fail(Err::scenario_parse_error, "unknown crash point");
      w.custodian->set_crash_point(*point);
    } else if (op == "reload") {
      w.reload_custodian();
    } else if (op == "use-flow") {
      w.run_use_flow(a.at("target").get<std::string>(), a.value("credential", 0u));
    } else if (op == "scan-transcript") {
      const auto leaks = world_->transcript_leaks();
      if (!leaks.empty()) fail(Err::release_nonconformant, "transcript leak: " + leaks[0]);
    } else {
      fail(Err::scenario_parse_error, "unknown step op: " + op);
    }
  }

  void start() {
    flow_ = World::FlowHandles{};
    auto [r, handoff] = world_->custodian->issue_freshness(*proposal_);
    flow_->r = r;
    flow_->handoff = handoff;
  }

  void adopt_enrolled() {
    for (const auto& e : world_->custodian->sealed_state().entries) {
      if (std::find(world_->cids.begin(), world_->cids.end(), e.cid) == world_->cids.end())
        world_->cids.push_back(e.cid);
    }
  }

  const Scenario& scenario_;
  std::unique_ptr<World> world_;
  std::optional<Operation> proposal_;
  std::optional<World::FlowHandles> flow_;
  std::optional<KemKeyPair> recipient_;
  std::optional<DeliveryArtifact> delivery_;
  std::optional<Operation> delivery_op_;
  Bytes last_response_;
};

inline Report run_scenario(const Scenario& s, std::filesystem::path state_dir = {}) {
  ScenarioRunner runner(s, std::move(state_dir));
  return runner.run();
}

// ---------------------------------------------------------------------------
// Attack scripts
// ---------------------------------------------------------------------------

namespace detail {

inline void check_step(Report& report, std::string op, std::string expected,
                       const std::function<void()>& f) {
  StepReport sr;
  sr.op = std::move(op);
  sr.expected = std::move(expected);
  try {
    f();
    sr.actual = "ok";
  } catch (const Error& e) {
    sr.actual = std::string(e.name());
  }
  sr.pass = sr.actual == sr.expected;
  report.steps.push_back(std::move(sr));
}

inline Bytes traced(const World& w, const std::string& label) {
  Bytes out;
  for (const auto& [l, v] : w.trace.values)
    if (l == label) out = v;
  return out;
}

}  // namespace detail

/// replay: a redeemed grant cannot authorize a second execution. [RR]
inline Report attack_replay() {
  Report r{.name = "replay", .kind = "attack", .steps = {}, .invariants = {}};
  World w{WorldConfig{}};
  World::FlowHandles f = w.start_flow(w.propose_use("api-token"));
  w.grant(f, 0);
  detail::check_step(r, "honest-redeem", "ok", [&] { w.deliver(f); });
  detail::check_step(r, "honest-consume", "ok", [&] { w.custodian->consume(f.rho); });
  detail::check_step(r, "replay-grant", "unknown-or-expired-freshness",
                     [&] { w.custodian->redeem(f.grant); });
  return r;
}

/// substitute-op: mutating the operation after signature breaks β. [OB]
inline Report attack_substitute_op() {
  Report r{.name = "substitute-op", .kind = "attack", .steps = {}, .invariants = {}};
  World w{WorldConfig{}};
  World::FlowHandles f = w.start_flow(w.propose_use("api-token"));
  w.grant(f, 0);
  Grant evil = f.grant;
  evil.o.scope[std::string(scope_key::path)] = to_bytes(std::string_view("/admin/keys"));
  w.shadows.put(op_hash(evil.o), {}, evil.o.expiry);
  detail::check_step(r, "substituted-op", "signature-invalid",
                     [&] { w.custodian->redeem(evil); });
  detail::check_step(r, "burned-freshness", "unknown-or-expired-freshness",
                     [&] { w.custodian->redeem(f.grant); });
  return r;
}

/// forge-grant: a random signature never verifies. [AV]
inline Report attack_forge_grant() {
  Report r{.name = "forge-grant", .kind = "attack", .steps = {}, .invariants = {}};
  World w{WorldConfig{}};
  World::FlowHandles f = w.start_flow(w.propose_use("api-token"));
  Grant forged;
  forged.o = f.handoff.o;
  forged.r = f.r;
  forged.cid = w.cids[0];
  forged.u_star = random_key(KeyRole::intermediate);
  const Bytes sig = csprng(64);
  std::memcpy(forged.sigma.bytes.data(), sig.data(), 64);
  detail::check_step(r, "forged-signature", "signature-invalid",
                     [&] { w.custodian->redeem(forged); });
  return r;
}

/// storage-breach: the full Σ plus unrestricted API access minus gestures
/// recovers nothing. [CSB]
inline Report attack_storage_breach() {
  Report r{.name = "storage-breach", .kind = "attack", .steps = {}, .invariants = {}};
  WorldConfig cfg;
  cfg.credentials = 2;
  World w{cfg};
  w.run_use_flow("api-token", 0);

  std::ifstream in(w.state_path(), std::ios::binary);
  const Bytes sigma_bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  const SealedState sigma = decode_sealed_state(sigma_bytes);

  int recovered = 0;
  detail::check_step(r, "breach-driver", "ok", [&] {
    for (int i = 0; i < 100; ++i) {
      try {
        const SymmetricKey k = unwrap(random_key(KeyRole::wrap), sigma.entries[0].wrapped);
        open_box(k, sigma.c, state_ad(sigma.ver));
        ++recovered;
      } catch (const Error&) {
      }
      try {
        open_box(random_key(KeyRole::state), sigma.c, state_ad(sigma.ver));
        ++recovered;
      } catch (const Error&) {
      }
      for (const auto& e : sigma.entries) {
        try {
          const Bytes info =
              frame({label_view(DomainLabel::wrap), e.cid.view(), be64(e.wrap_ver)});
          unwrap(kdf(csprng(32), BytesView(e.eta.data(), e.eta.size()), info), e.wrapped);
          ++recovered;
        } catch (const Error&) {
        }
      }
    }
  });
  r.invariants["zero-secrets-recovered"] = recovered == 0;
  bool clean = true;
  for (const auto& [label, needle] : w.scan_needles()) {
    (void)label;
    clean = clean && !contains_bytes(sigma_bytes, needle);
  }
  r.invariants["sigma-scan-clean"] = clean;
  return r;
}

/// capture-pre-rotation-keys: pre-rotation (y, u, W) captures are useless
/// against post-rotation state, and vice versa. [RFS-wrap]
inline Report attack_capture_pre_rotation_keys() {
  Report r{.name = "capture-pre-rotation-keys", .kind = "attack", .steps = {}, .invariants = {}};
  World w{WorldConfig{}};
  w.trace.values.clear();
  w.run_use_flow("api-token", 0);
  const Bytes w_old = detail::traced(w, "consume.W*");
  const SealedState before = w.custodian->sealed_state();

  w.run_lifecycle_flow(OpType::rotate, "@state", 0);
  const SealedState after = w.custodian->sealed_state();
  const Bytes w_new = detail::traced(w, "lifecycle.W*new");

  detail::check_step(r, "old-W-vs-new-state", "wrap-integrity-failure", [&] {
    unwrap(SymmetricKey(w_old, KeyRole::wrap), after.find_entry(w.cids[0])->wrapped);
  });
  detail::check_step(r, "new-W-vs-old-ciphertext", "wrap-integrity-failure", [&] {
    unwrap(SymmetricKey(w_new, KeyRole::wrap), before.find_entry(w.cids[0])->wrapped);
  });
  detail::check_step(r, "old-W-still-fits-old-ciphertext", "ok", [&] {
    unwrap(SymmetricKey(w_old, KeyRole::wrap), before.find_entry(w.cids[0])->wrapped);
  });
  return r;
}

/// peer-map-capture: the documented L4 window, demonstrated open and then
/// closed by the peer's own rotation. [RFS-wrap, limitation]
inline Report attack_peer_map_capture() {
  Report r{.name = "peer-map-capture", .kind = "attack", .steps = {}, .invariants = {}};
  WorldConfig cfg;
  cfg.credentials = 2;
  World w{cfg};
  w.trace.values.clear();
  w.run_use_flow("api-token", 0);
  const Bytes captured = detail::traced(w, "consume.peer.W." + hex8(w.cids[1].view()));

  w.run_lifecycle_flow(OpType::rotate, "@state", 0);
  detail::check_step(r, "captured-peer-W-unwraps-post-exposure-rewrap", "ok", [&] {
    const SymmetricKey k = unwrap(SymmetricKey(captured, KeyRole::wrap),
                                  w.custodian->sealed_state().find_entry(w.cids[1])->wrapped);
    open_box(k, w.custodian->sealed_state().c, state_ad(w.custodian->sealed_state().ver));
  });

  w.run_lifecycle_flow(OpType::rotate, "@state", 1);
  detail::check_step(r, "closed-after-peer-rotates", "wrap-integrity-failure", [&] {
    unwrap(SymmetricKey(captured, KeyRole::wrap),
           w.custodian->sealed_state().find_entry(w.cids[1])->wrapped);
  });
  return r;
}

/// dormant-credential: the documented L3 gap, open until the dormant
/// credential rotates. [RFS-wrap, limitation]
inline Report attack_dormant_credential() {
  Report r{.name = "dormant-credential", .kind = "attack", .steps = {}, .invariants = {}};
  WorldConfig cfg;
  cfg.credentials = 2;
  World w{cfg};
  const Bytes captured = detail::traced(w, "setup.W");  // last = credential 1

  for (int i = 0; i < 3; ++i) w.run_lifecycle_flow(OpType::rotate, "@state", 0);
  detail::check_step(r, "historical-capture-still-unwraps-dormant-entry", "ok", [&] {
    unwrap(SymmetricKey(captured, KeyRole::wrap),
           w.custodian->sealed_state().find_entry(w.cids[1])->wrapped);
  });

  w.run_lifecycle_flow(OpType::rotate, "@state", 1);
  detail::check_step(r, "closed-after-dormant-rotates", "wrap-integrity-failure", [&] {
    unwrap(SymmetricKey(captured, KeyRole::wrap),
           w.custodian->sealed_state().find_entry(w.cids[1])->wrapped);
  });
  return r;
}

/// mitm-pk-substitution: an unauthenticated custodian key is rejected
/// before anything is transmitted. [CRC]
inline Report attack_mitm_pk_substitution() {
  Report r{.name = "mitm-pk-substitution", .kind = "attack", .steps = {}, .invariants = {}};
  World w{WorldConfig{}};
  World::FlowHandles f = w.start_flow(w.propose_use("api-token"));
  w.grant(f, 0);
  CrossDeviceChannel mitm(*w.custodian, w.custodian->identity_public_key());
  mitm.set_offer_mutator(
      [](XdOffer& offer) { offer.pk_t = EcKeyPair::generate().public_key; });
  detail::check_step(r, "substituted-pk", "pk-authenticity-failure",
                     [&] { mitm.deliver(f.grant); });
  detail::check_step(r, "honest-delivery-still-works", "ok", [&] {
    CrossDeviceChannel honest(*w.custodian, w.custodian->identity_public_key());
    honest.deliver(f.grant);
  });
  return r;
}

/// envelope-replay: a captured envelope cannot redeem twice. [RR]
inline Report attack_envelope_replay() {
  Report r{.name = "envelope-replay", .kind = "attack", .steps = {}, .invariants = {}};
  World w{WorldConfig{}};
  World::FlowHandles f = w.start_flow(w.propose_use("api-token"));
  w.grant(f, 0);
  CrossDeviceChannel ch(*w.custodian, w.custodian->identity_public_key());
  detail::check_step(r, "first-delivery", "ok", [&] { f.rho = ch.deliver(f.grant); });
  detail::check_step(r, "consume", "ok", [&] { w.custodian->consume(f.rho); });
  detail::check_step(r, "replayed-envelope", "unknown-or-expired-freshness", [&] {
    ch.replay_last(BytesView(f.grant.r.data(), f.grant.r.size()));
  });
  return r;
}

/// crash-mid-commit: a crash between staging and retirement leaves the old
/// epoch recoverable. [atomicity]
inline Report attack_crash_mid_commit() {
  Report r{.name = "crash-mid-commit", .kind = "attack", .steps = {}, .invariants = {}};
  WorldConfig cfg;
  cfg.credentials = 2;
  World w{cfg};
  w.custodian->set_crash_point(CrashPoint::after_staging);
  World::FlowHandles f = w.start_flow(w.propose_lifecycle(OpType::rotate, "@state"));
  w.grant(f, 0);
  w.deliver(f);
  detail::check_step(r, "crash-injected", "crash-injected",
                     [&] { w.custodian->consume(f.rho); });
  detail::check_step(r, "reload-recovers-old-epoch", "ok", [&] { w.reload_custodian(); });
  detail::check_step(r, "all-credentials-unlock", "ok",
                     [&] { w.all_credentials_unlock("api-token"); });
  return r;
}

/// export-cross-op-substitution: a captured delivery artifact cannot stand
/// in for a different authorized operation. [OB]
inline Report attack_export_cross_op_substitution() {
  Report r{.name = "export-cross-op-substitution", .kind = "attack", .steps = {}, .invariants = {}};
  WorldConfig cfg;
  cfg.targets = {{"api-token", "api.acme.example"}, {"mail-cred", "smtp.acme.example"}};
  World w{cfg};
  const KemKeyPair rcp = KemKeyPair::generate();
  Operation op_a, op_b;
  const DeliveryArtifact pi_a = w.run_export_flow("api-token", 0, rcp.public_key, &op_a);
  const DeliveryArtifact pi_b = w.run_export_flow("mail-cred", 0, rcp.public_key, &op_b);
  (void)pi_b;
  detail::check_step(r, "substitute-into-other-transcript", "aead-failure", [&] {
    open_delivery(rcp.private_key, rcp.public_key, pi_a, op_b);
  });
  detail::check_step(r, "honest-open", "ok", [&] {
    if (open_delivery(rcp.private_key, rcp.public_key, pi_a, op_a) !=
        w.planted.at("api-token"))
      fail(Err::aead_failure, "wrong plaintext");
  });
  return r;
}

/// retired-secret-replay: after E-side rotation plus a state write, the
/// retired secret confers nothing in either direction. [RFS-auth]
inline Report attack_retired_secret_replay() {
  Report r{.name = "retired-secret-replay", .kind = "attack", .steps = {}, .invariants = {}};
  World w{WorldConfig{}};
  const Bytes retired = w.env.current_secret("api-token");
  w.env.rotate("api-token");

  detail::check_step(r, "stale-sealed-secret-rejected", "environment-rejection", [&] {
    World::FlowHandles f = w.start_flow(w.propose_use("api-token"));
    w.grant(f, 0);
    w.deliver(f);
    w.custodian->consume(f.rho);
  });
  detail::check_step(r, "write-updates-protected-state", "ok", [&] {
    GrantAmendments amend;
    amend.write_new_secret = w.env.current_secret("api-token");
    w.run_lifecycle_flow(OpType::write, "api-token", 0, amend);
  });
  detail::check_step(r, "new-flow-succeeds", "ok", [&] { w.run_use_flow("api-token", 0); });
  detail::check_step(r, "retired-secret-rejected-at-E", "authority-rejected", [&] {
    NativeCall call;
    call.method = "GET";
    call.host = "api.acme.example";
    call.path = "/x";
    call.authority = retired;
    w.env.execute(call);
  });
  return r;
}

// ---------------------------------------------------------------------------
// Registry and coverage matrix
// ---------------------------------------------------------------------------

inline const std::vector<std::pair<std::string, Report (*)()>>& attack_registry() {
  static const std::vector<std::pair<std::string, Report (*)()>> registry = {
      {"replay", attack_replay},
      {"substitute-op", attack_substitute_op},
      {"forge-grant", attack_forge_grant},
      {"storage-breach", attack_storage_breach},
      {"capture-pre-rotation-keys", attack_capture_pre_rotation_keys},
      {"peer-map-capture", attack_peer_map_capture},
      {"dormant-credential", attack_dormant_credential},
      {"mitm-pk-substitution", attack_mitm_pk_substitution},
      {"envelope-replay", attack_envelope_replay},
      {"crash-mid-commit", attack_crash_mid_commit},
      {"export-cross-op-substitution", attack_export_cross_op_substitution},
      {"retired-secret-replay", attack_retired_secret_replay},
  };
  return registry;
}

inline Report run_attack(std::string_view name) {
  for (const auto& [n, fn] : attack_registry())
    if (n == name) return fn();
  fail(Err::scenario_parse_error, "unknown attack: " + std::string(name));
}

/// Taxonomy axis → attack scripts exercising it. A test asserts every axis
/// row is populated and every named script exists.
inline const std::map<std::string, std::vector<std::string>>& coverage_matrix() {
  static const std::map<std::string, std::vector<std::string>> matrix = {
      {"AV", {"forge-grant", "substitute-op"}},
      {"OB", {"substitute-op", "export-cross-op-substitution"}},
      {"RR", {"replay", "envelope-replay"}},
      {"CRC", {"mitm-pk-substitution"}},
      {"CSB", {"storage-breach"}},
      {"RFS-wrap", {"capture-pre-rotation-keys", "dormant-credential", "peer-map-capture"}},
      {"RFS-auth", {"retired-secret-replay"}},
  };
  return matrix;
}

}  // namespace sudp::harness
