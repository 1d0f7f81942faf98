#include <algorithm>
#include <set>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "kgstep/errors.hpp"
#include "kgstep/verification.hpp"

using namespace kgstep;

namespace {

// Checks that finish in well under a second each.
const std::vector<std::string> kFast{"core.", "analytic.", "fv.", "acceptance.1", "acceptance.2", "acceptance.3"};

VerifyReport run(std::vector<std::string> checks, Injection injection = Injection::None, std::size_t jobs = 1) {
  VerifyOptions o;
  o.checks = std::move(checks);
  o.injection = injection;
  o.jobs = jobs;
  return run_verification(o);
}

const CheckResult& find(const VerifyReport& r, std::string_view name) {
  const auto it = std::find_if(r.results.begin(), r.results.end(), [&](const CheckResult& c) { return c.name == name; });
  REQUIRE(it != r.results.end());
  return *it;
}

std::set<std::string> failed_set(const VerifyReport& r) {
  const std::vector<std::string> f = r.failed();
  return {f.begin(), f.end()};
}

}  // namespace

TEST_CASE("check registry") {
  const std::vector<CheckInfo> checks = list_checks();
  std::set<std::string_view> names;
  std::size_t acceptance = 0;
  for (const CheckInfo& c : checks) {
    CHECK(names.insert(c.name).second);
    CHECK_FALSE(c.title.empty());
    if (c.name.starts_with("acceptance.")) ++acceptance;
  }
  CHECK(acceptance == 8);
}

TEST_CASE("injection names round-trip") {
  for (Injection i : {Injection::None, Injection::FlipBranch, Injection::UnstableDt}) {
    CHECK(parse_injection(to_string(i)) == i);
  }
  CHECK_THROWS_AS(parse_injection("bogus"), ConfigError);
}

TEST_CASE("a filter that matches nothing is a configuration error") {
  CHECK_THROWS_AS(run({"nonexistent."}), ConfigError);
}

TEST_CASE("fast checks on the unmodified model") {
  const VerifyReport r = run(kFast);
  CHECK(r.results.size() == 13);
  // Near V0 = 2E the absolute current-balance bound is below the spacing of
  // the currents themselves; these two checks report that honestly.
  CHECK(failed_set(r) == std::set<std::string>{"analytic.current_balance", "acceptance.2"});
  CHECK(find(r, "analytic.current_balance").detail.find("max relative residual") != std::string::npos);
  CHECK(find(r, "acceptance.2").detail.find("R>1 for 200") != std::string::npos);
}

TEST_CASE("results are independent of the job count and arrive in order") {
  std::vector<std::string> seen;
  VerifyOptions o;
  o.checks = kFast;
  o.jobs = 3;
  const VerifyReport threaded = run_verification(o, [&](const CheckResult& c) { seen.push_back(c.name); });
  const VerifyReport serial = run(kFast);
  REQUIRE(threaded.results.size() == serial.results.size());
  for (std::size_t i = 0; i < serial.results.size(); ++i) {
    CHECK(seen[i] == serial.results[i].name);
    CHECK(threaded.results[i].name == serial.results[i].name);
    CHECK(threaded.results[i].passed == serial.results[i].passed);
  }
}

TEST_CASE("the seed changes the random samples") {
  VerifyOptions a, b;
  a.checks = b.checks = {"analytic.current_balance"};
  b.seed = a.seed + 1;
  CHECK(run_verification(a).results[0].detail != run_verification(b).results[0].detail);
  CHECK(run_verification(a).results[0].detail == run_verification(a).results[0].detail);
}

TEST_CASE("flipping the transmitted branch is caught") {
  const VerifyReport r = run(kFast, Injection::FlipBranch);
  const std::set<std::string> failed = failed_set(r);
  for (const char* name : {"core.klein_group_velocity", "analytic.regime_reflectivity", "analytic.klein_sign_coherence",
                           "acceptance.2", "acceptance.3"}) {
    CAPTURE(name);
    CHECK(failed.count(name) == 1);
  }
  // Identities that hold on either branch.
  for (const char* name : {"analytic.matching", "analytic.charge_transport", "acceptance.1", "core.mass_shell"}) {
    CAPTURE(name);
    CHECK(failed.count(name) == 0);
  }
  CHECK(find(r, "acceptance.2").detail.find("R>1 for 0") != std::string::npos);
}

TEST_CASE("an unstable time step is caught") {
  const VerifyReport r = run({"sim.determinism", "sim.instability_detection"}, Injection::UnstableDt);
  CHECK_FALSE(find(r, "sim.determinism").passed);
  CHECK(find(r, "sim.determinism").detail.find("instability") != std::string::npos);
  CHECK(find(r, "sim.instability_detection").passed);
}

TEST_CASE("result lines and JSON summary") {
  const VerifyReport r = run({"acceptance.3"});
  const std::string line = format_result_line(r.results[0]);
  CHECK(line.starts_with("PASS  acceptance.3"));

  std::ostringstream out;
  write_summary_json(out, r);
  const nlohmann::json j = nlohmann::json::parse(out.str());
  CHECK(j["seed"] == kDefaultSeed);
  CHECK(j["injection"] == "none");
  CHECK(j["passed"] == true);
  CHECK(j["failed"].empty());
  REQUIRE(j["checks"].size() == 1);
  CHECK(j["checks"][0]["name"] == "acceptance.3");
  CHECK(j["checks"][0]["passed"] == true);
  CHECK(j["checks"][0]["detail"].get<std::string>() == r.results[0].detail);
}
