#include <catch_amalgamated.hpp>

#include <chrono>
#include <set>

#include "sudp/harness.hpp"

using namespace sudp;
using namespace sudp::harness;

namespace {

std::filesystem::path scenario_dir() {
  // tests run from the build tree; scenarios live in the source tree
  for (auto p = std::filesystem::current_path(); !p.empty(); p = p.parent_path()) {
    if (std::filesystem::exists(p / "scenarios" / "honest-delegated-use.json"))
      return p / "scenarios";
    if (p == p.root_path()) break;
  }
  return std::filesystem::path(SUDP_SCENARIO_DIR);
}

}  // namespace

TEST_CASE("bundled honest scenarios all pass quickly", "[harness]") {
  const std::vector<std::string> honest = {
      "honest-delegated-use", "honest-export", "honest-write",
      "honest-rotate",        "honest-enroll", "honest-revoke",
      "cross-device-use"};
  for (const auto& name : honest) {
    const auto path = scenario_dir() / (name + ".json");
    INFO(path.string());
    const Scenario s = Scenario::from_file(path);
    const auto t0 = std::chrono::steady_clock::now();
    const Report r = run_scenario(s);
    const auto elapsed = std::chrono::steady_clock::now() - t0;
    for (const auto& step : r.steps) {
      INFO(name << " step " << step.op << " expected " << step.expected << " got "
                << step.actual);
      CHECK(step.pass);
    }
    CHECK(r.pass());
    CHECK(std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count() < 1000);
  }
}

TEST_CASE("adversarial scenarios assert their expected verdicts", "[harness]") {
  for (const std::string name : {"replay-attack", "expired-freshness", "crash-mid-commit"}) {
    const Scenario s = Scenario::from_file(scenario_dir() / (name + ".json"));
    const Report r = run_scenario(s);
    INFO(r.to_json().dump(2));
    CHECK(r.pass());
  }
}

TEST_CASE("scenario parse errors are reported as such", "[harness]") {
  CHECK_THROWS_MATCHES(Scenario::from_file("/nonexistent/file.json"), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Err::scenario_parse_error;
                       }));
  CHECK_THROWS_AS(Scenario::from_json(nlohmann::json{{"nope", 1}}), Error);

  Scenario bad;
  bad.name = "bad-step";
  bad.steps.push_back(Step{"no-such-op", nlohmann::json::object(), "ok"});
  const Report r = run_scenario(bad);
  CHECK_FALSE(r.pass());
  CHECK(r.steps[0].actual == "scenario-parse-error");
}

TEST_CASE("every attack script rejects as scripted", "[harness][attacks]") {
  for (const auto& [name, fn] : attack_registry()) {
    (void)fn;
    const Report r = run_attack(name);
    INFO(r.to_json().dump(2));
    CHECK(r.pass());
  }
}

TEST_CASE("coverage matrix spans every taxonomy axis", "[harness]") {
  const auto& matrix = coverage_matrix();
  const std::set<std::string> axes = {"AV", "OB", "RR", "CRC", "CSB", "RFS-wrap", "RFS-auth"};
  std::set<std::string> covered;
  for (const auto& [axis, scripts] : matrix) {
    CHECK(!scripts.empty());
    covered.insert(axis);
    for (const auto& s : scripts) {
      bool known = false;
      for (const auto& [n, fn] : attack_registry()) {
        (void)fn;
        known = known || n == s;
      }
      INFO(axis << " -> " << s);
      CHECK(known);
    }
  }
  CHECK(covered == axes);
}

TEST_CASE("reports are machine-readable and stable in shape", "[harness]") {
  const Scenario s = Scenario::from_file(scenario_dir() / "honest-delegated-use.json");
  const Report a = run_scenario(s);
  const Report b = run_scenario(s);
  const nlohmann::json ja = a.to_json();
  const nlohmann::json jb = b.to_json();
  CHECK(ja == jb);  // fresh crypto values never reach the report
  CHECK(ja.contains("name"));
  CHECK(ja.contains("steps"));
  CHECK(ja.contains("invariants"));
  CHECK(ja["pass"].is_boolean());
}
