#include <CLI11.hpp>

#include <iostream>
#include <string>

#include <json.hpp>

#include "sudp/harness.hpp"
#include "sudp/vectors.hpp"
#include "sudp/world.hpp"

namespace {

using namespace sudp;
using namespace sudp::harness;

int print_report(const Report& r, bool as_json) {
  if (as_json) {
    std::cout << r.to_json().dump(2) << "\n";
  } else {
    std::cout << r.kind << " " << r.name << "\n";
    for (const auto& s : r.steps) {
      std::cout << "  " << (s.pass ? "[pass]" : "[FAIL]") << " " << s.op << ": expected "
                << s.expected << ", got " << s.actual << "\n";
    }
    for (const auto& [k, ok] : r.invariants)
      std::cout << "  " << (ok ? "[pass]" : "[FAIL]") << " invariant " << k << "\n";
    std::cout << (r.pass() ? "PASS" : "FAIL") << ": " << r.name << "\n";
  }
  return r.pass() ? 0 : 1;
}

int cmd_vectors(bool as_json) {
  const auto results = run_vector_checks();
  if (as_json) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : results) out.push_back({{"name", r.name}, {"pass", r.pass}});
    std::cout << out.dump(2) << "\n";
  } else {
    for (const auto& r : results)
      std::cout << (r.pass ? "[pass] " : "[FAIL] ") << r.name << "\n";
  }
  const bool ok = all_vectors_pass(results);
  if (!as_json) std::cout << (ok ? "PASS" : "FAIL") << ": primitive vectors\n";
  return ok ? 0 : 1;
}

int cmd_demo(bool auto_approve) {
  std::cout << "--- secret-use delegation demo ---\n"
            << "One protected secret (\"api-token\") is sealed for a custodian.\n"
            << "The requester proposes an HTTP call; you play the authorizer.\n\n";

  WorldConfig cfg;
  World w(cfg);
  // interactive decision source instead of the scripted default
  UserAgent interactive(w.auth, [auto_approve](const std::string& rendered) {
    std::cout << "The requester asks you to authorize:\n\n" << rendered << "\n";
    if (auto_approve) {
      std::cout << "auto-approving (--yes)\n";
      return GestureDecision{true};
    }
    std::cout << "approve? [y/N] " << std::flush;
    std::string line;
    std::getline(std::cin, line);
    return GestureDecision{!line.empty() && (line[0] == 'y' || line[0] == 'Y')};
  });
  interactive.set_key_trace(&w.trace);

  const Operation proposal =
      w.propose_use("api-token", "GET", "/repos/acme/widgets/issues?state=open");
  auto [r, handoff] = w.custodian->issue_freshness(proposal);
  (void)r;
  const HandoffTuple relayed = w.requester->relay_handoff(handoff);

  try {
    const Grant g = interactive.review_and_grant(relayed, w.cids[0]);
    InProcessChannel ch(*w.custodian);
    const RhoId rho = ch.deliver(g);
    const ConsumeResult res = w.custodian->consume(rho);
    const auto& use = std::get<UseResult>(res);
    w.requester->observe_result("result", use.response);
    std::cout << "\ncustodian executed the call; requester received:\n  "
              << to_string(use.response) << "\n";
  } catch (const Error& e) {
    if (e.code() == Err::declined) {
      std::cout << "\ndeclined; no gesture output, no grant, nothing executed.\n";
      return 0;
    }
    std::cout << "\nflow rejected: " << e.what() << "\n";
    return 1;
  }

  const auto leaks = w.transcript_leaks();
  std::cout << "requester transcript scan: "
            << (leaks.empty() ? "no key material present" : "LEAK DETECTED") << "\n";
  return leaks.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secret-use delegation protocol reference toolkit"};
  app.require_subcommand(1);

  std::string state_dir;
  std::uint64_t seed = 0;
  bool as_json = false;
  app.add_option("--state-dir", state_dir, "directory for sealed-state files");
  app.add_option("--seed", seed, "fixture seed recorded in reports (crypto stays on OS RNG)");
  app.add_flag("--json", as_json, "machine-readable output");

  auto* demo = app.add_subcommand("demo", "interactive single-flow walkthrough");
  bool auto_approve = false;
  demo->add_flag("--yes", auto_approve, "approve the rendered operation without prompting");

  auto* scenario = app.add_subcommand("scenario", "scenario tools");
  auto* scenario_run = scenario->add_subcommand("run", "run a scenario file");
  std::string scenario_file;
  scenario_run->add_option("file", scenario_file, "scenario JSON file")->required();

  auto* attack = app.add_subcommand("attack", "run an attack script");
  std::string attack_name;
  attack->add_option("name", attack_name, "attack name, or 'all'")->required();

  app.add_subcommand("vectors", "check primitive test vectors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (app.got_subcommand("vectors")) return cmd_vectors(as_json);
    if (app.got_subcommand(demo)) return cmd_demo(auto_approve);
    if (app.got_subcommand(scenario)) {
      if (!scenario->got_subcommand(scenario_run)) {
        std::cerr << "usage: sudp scenario run <file>\n";
        return 2;
      }
      const Scenario s = Scenario::from_file(scenario_file);
      return print_report(run_scenario(s, state_dir), as_json);
    }
    if (app.got_subcommand(attack)) {
      if (attack_name == "all") {
        int rc = 0;
        for (const auto& [name, fn] : attack_registry()) {
          (void)fn;
          rc |= print_report(run_attack(name), as_json);
        }
        return rc;
      }
      const Report r = run_attack(attack_name);
      const int rc = print_report(r, as_json);
      if (rc == 0 && !as_json) std::cout << "attack rejected as expected\n";
      return rc;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == Err::scenario_parse_error ? 2 : 1;
  }
  return 2;
}
