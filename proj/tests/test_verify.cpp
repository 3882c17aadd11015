#include <string>

#include <doctest.h>
#include <json.hpp>

#include "extremal/oracles.hpp"
#include "extremal/verify.hpp"

using namespace extremal;

namespace {

const CheckResult* find(const VerificationReport& r, const std::string& name) {
  for (const CheckResult& c : r.checks)
    if (c.name == name) return &c;
  return nullptr;
}

}  // namespace

TEST_CASE("spec suite passes on the switch example and fails under a flipped sign") {
  const VerificationReport good = run_spec_suite(alpha_system(2.0), Vec3::Zero());
  CHECK(good.passed());
  REQUIRE(find(good, "one_switch_monte_carlo"));

  VerifyOptions opt;
  opt.sign = BracketSign::Flipped;
  const VerificationReport bad = run_spec_suite(alpha_system(2.0, BracketSign::Flipped), Vec3::Zero(), opt);
  CHECK_FALSE(bad.passed());
  REQUIRE(find(bad, "poisson_consistency"));
  CHECK_FALSE(find(bad, "poisson_consistency")->pass);
  CHECK_FALSE(find(bad, "bracket_oracle")->pass);
}

TEST_CASE("spec suite picks the case-specific checks") {
  const VerificationReport smooth = run_spec_suite(alpha_system(0.5), Vec3::Zero());
  CHECK(smooth.passed());
  CHECK(find(smooth, "envelope_fit"));
  CHECK_FALSE(find(smooth, "one_switch_monte_carlo"));
  const VerificationReport limit = run_spec_suite(alpha_system(1.0), Vec3::Zero());
  CHECK(limit.passed());
  CHECK(find(limit, "limit_locus"));
}

TEST_CASE("report renders as text and JSON") {
  const VerificationReport r = run_spec_suite(alpha_system(1.0), Vec3::Zero());
  CHECK(r.to_text().find("overall: PASS") != std::string::npos);
  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j.contains("checks"));
}
