#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include <doctest.h>

#include "extremal/error.hpp"
#include "extremal/io.hpp"
#include "extremal/oracles.hpp"

using namespace extremal;

namespace {

const char* kAlpha = R"({
  "name": "alpha_system",
  "params": {"alpha": 2},
  "f0": [[], [], [{"c": "alpha", "p": [1, 0, 0]}]],
  "f1": [[{"c": 1, "p": [0, 0, 0]}], [], []],
  "f2": [[], [{"c": 1, "p": [0, 0, 0]}], [{"c": 1, "p": [1, 0, 0]}]]
})";

std::string parse_error(const std::string& text, const std::map<std::string, double>& ov = {}) {
  try {
    parse_system_spec(text, ov);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ParseError);
    return e.what();
  }
  FAIL("expected a parse error");
  return {};
}

}  // namespace

TEST_CASE("parsing the alpha system with and without overrides") {
  const SystemSpec s = parse_system_spec(kAlpha);
  CHECK(s.name == "alpha_system");
  const ControlSystem a = alpha_system(2.0);
  for (int i = 0; i < 3; ++i) CHECK(s.fields[i] == a.field(i));
  const SystemSpec t = parse_system_spec(kAlpha, {{"alpha", 0.5}});
  CHECK(t.fields[0] == alpha_system(0.5).field(0));
  CHECK(t.params.at("alpha") == 0.5);
}

TEST_CASE("coefficient expressions") {
  const std::string text = R"({"params": {"k": 3},
    "f0": [[{"c": "-2.5*k", "p": [0,0,0]}], [{"c": "+k", "p": [0,1,0]}], []],
    "f1": [[{"c": 1, "p": [0,0,0]}], [], []], "f2": [[], [{"c": 1, "p": [0,0,0]}], []]})";
  const SystemSpec s = parse_system_spec(text);
  CHECK(s.fields[0].eval(Vec3(0, 2, 0)) == Vec3(-7.5, 6, 0));
}

TEST_CASE("serialize then parse gives identical fields") {
  std::mt19937_64 rng(4);
  SystemSpec s;
  s.name = "random";
  for (auto& f : s.fields) f = random_poly_field(rng, 3);
  const SystemSpec back = parse_system_spec(serialize_system_spec(s));
  for (int i = 0; i < 3; ++i) CHECK(back.fields[i] == s.fields[i]);
  CHECK(back.name == "random");
}

TEST_CASE("syntax errors report line and column") {
  const std::string msg = parse_error("{\n  \"f0\": [\n    [1,,]\n");
  CHECK(msg.find("line 3, column 8") != std::string::npos);
}

TEST_CASE("content errors report the JSON path") {
  CHECK(parse_error(R"({"f0": [[], []], "f1": [[], [], []], "f2": [[], [], []]})").find("/f0") != std::string::npos);
  CHECK(parse_error(R"({"f0": [[{"c": 1, "p": [0, -1, 0]}], [], []], "f1": [[], [], []], "f2": [[], [], []]})")
            .find("/f0/0/0/p") != std::string::npos);
  CHECK(parse_error(R"({"f0": [[{"c": "beta", "p": [0, 0, 0]}], [], []], "f1": [[], [], []], "f2": [[], [], []]})")
            .find("unknown parameter 'beta'") != std::string::npos);
  CHECK(parse_error(R"({"f0": [[], [], []], "f1": [[], [], []]})").find("f2") != std::string::npos);
  CHECK(parse_error(kAlpha, {{"beta", 1.0}}).find("beta") != std::string::npos);
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::numeric_limits<double>::max()})
    CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("trajectory CSV round trip is exact") {
  const ControlSystem sys = alpha_system(2.0);
  const ExtremalTrajectory tr = integrate_extremal(sys, seed_incoming(sys, Vec3::Zero(), 0.1), 0.0, 0.2);
  std::stringstream ss;
  write_trajectory_csv(ss, tr);
  const std::vector<TrajectoryRow> rows = read_trajectory_csv(ss);
  REQUIRE(rows.size() == tr.samples.size());
  int events = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const TrajectorySample& s = tr.samples[i];
    CHECK(rows[i].t == s.t);
    CHECK(rows[i].state.rho == s.state.rho);
    CHECK(rows[i].state.theta == s.state.theta);
    CHECK(rows[i].state.h3 == s.state.h3);
    CHECK(rows[i].state.x == s.state.x);
    CHECK(rows[i].u == s.u);
    CHECK(rows[i].event == s.event);
    events += rows[i].event;
  }
  CHECK(events == 1);
  std::stringstream bad("t,x1\n1,2\n");
  CHECK_THROWS_AS(read_trajectory_csv(bad), Error);
}
