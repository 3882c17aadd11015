#include <cmath>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "extremal/error.hpp"
#include "extremal/oracles.hpp"

using namespace extremal;

namespace {

/// Midpoint-rule reference for the alpha system with one constant control.
Vec3 march(double alpha, Vec3 x, double theta, double duration, int n = 20000) {
  const double u1 = std::cos(theta), u2 = std::sin(theta), h = duration / n;
  auto f = [&](const Vec3& y) { return Vec3(u1, u2, alpha * y[0] + u2 * y[0]); };
  for (int k = 0; k < n; ++k) x += h * f(x + 0.5 * h * f(x));
  return x;
}

}  // namespace

TEST_CASE("closed-form bang endpoint matches direct integration") {
  const Vec3 start(0.1, -0.2, 0.3);
  const std::vector<BangPiece> pieces{{0.4, 0.3}, {-2.0, 0.2}, {2.9, 0.15}};
  Vec3 x = start;
  for (const BangPiece& p : pieces) x = march(2.0, x, p.theta, p.duration);
  CHECK((bang_endpoint(2.0, start, pieces) - x).norm() < 1e-9);
}

TEST_CASE("direct search cannot beat the extremal time") {
  const JumpControls j = jump_controls(-2.0, 0.0, 1.0);
  const double ta = std::atan2(j.minus.u2, j.minus.u1), tb = std::atan2(j.plus.u2, j.plus.u1);
  const std::vector<BangPiece> pieces{{ta, 0.03}, {tb, 0.02}};
  const Vec3 target = bang_endpoint(2.0, Vec3::Zero(), pieces);
  SearchOptions opt;
  opt.start = Vec3::Zero();
  const DirectSearchResult r = direct_search_linear_example(2.0, target, 0.05, 20000, 42, opt);
  CHECK(r.best_found_time >= 0.05 - 1e-3);
  CHECK(r.evaluations <= 20000);
  const std::vector<BangPiece> found{{r.best_control[0], r.best_control[2]}, {r.best_control[1], r.best_control[3]}};
  CHECK((bang_endpoint(2.0, Vec3::Zero(), found) - target).norm() <= 1e-6);
}

TEST_CASE("direct search with no budget is Unreachable") {
  try {
    direct_search_linear_example(2.0, Vec3(0.05, 0.0, 0.0), 0.05, 0, 1);
    FAIL("expected Unreachable");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Unreachable);
  }
}

TEST_CASE("model radial ODE keeps the lower branch below the upper one") {
  for (double rho0 : {1e-2, 1e-3, 1e-4}) {
    const ModelOdeRun run = model_radial_ode(rho0, 0.5);
    CHECK(run.theta_grid.size() == 4000);
    CHECK(run.theta1 == doctest::Approx(run.T * rho0));
    CHECK(run.inequality_holds);
    CHECK(run.initially_reversed);
    for (std::size_t i = 0; i < run.theta_grid.size(); ++i) CHECK(run.rho_neg[i] < run.rho_pos[i]);
  }
  CHECK(model_radial_ode(1e-4, 0.5).profile_error < model_radial_ode(1e-2, 0.5).profile_error);
}

TEST_CASE("envelope of a constant run") {
  ExtremalTrajectory tr;
  for (int k = 0; k <= 10; ++k) {
    TrajectorySample s;
    s.t = 0.1 * k;
    s.state.rho = 0.25;
    tr.samples.push_back(s);
  }
  const std::vector<ExtremalTrajectory> runs{tr};
  const EnvelopeFit fit = envelope_fit(runs);
  CHECK(fit.a == doctest::Approx(1e-6));
  CHECK(fit.c == doctest::Approx(1.0));
  CHECK(envelope_violation(runs, fit) <= 0.0);
}

TEST_CASE("envelope of a decaying run recovers the rate") {
  ExtremalTrajectory tr;
  for (int k = 0; k <= 20; ++k) {
    TrajectorySample s;
    s.t = 0.05 * k;
    s.state.rho = 0.1 * std::exp(-2.0 * s.t);
    tr.samples.push_back(s);
  }
  const std::vector<ExtremalTrajectory> runs{tr};
  const EnvelopeFit fit = envelope_fit(runs);
  CHECK(envelope_violation(runs, fit) <= 1e-12);
  CHECK(fit.c * std::exp(-fit.a * 0.5) == doctest::Approx(std::exp(-1.0)).epsilon(1e-6));
}

TEST_CASE("envelope preconditions") {
  ExtremalTrajectory tr;
  tr.samples.push_back({0.0, {0.1, 0.0, 1.0, Vec3::Zero()}, {}, false});
  tr.samples.push_back({0.1, {0.1, 0.0, 1.0, Vec3::Zero()}, {}, false});
  tr.events.push_back({});
  std::vector<ExtremalTrajectory> runs{tr};
  try {
    envelope_fit(runs);
    FAIL("expected PreconditionViolated");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::PreconditionViolated);
  }
  runs[0].events.clear();
  runs[0].samples[1].state.rho = 0.0;
  try {
    envelope_fit(runs);
    FAIL("expected EnvelopeViolated");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EnvelopeViolated);
  }
}

TEST_CASE("smooth-bang extremals near the circle satisfy an exponential envelope") {
  const ControlSystem sys = alpha_system(0.5);
  std::vector<ExtremalTrajectory> runs;
  for (int k = 0; k < 8; ++k)
    runs.push_back(integrate_extremal(sys, BlowupState{1e-3 * (k + 1), -3.0 + 0.8 * k, 1.0, Vec3::Zero()}, 0.0, 1.0));
  const EnvelopeFit fit = envelope_fit(runs);
  CHECK(fit.c > 0.0);
  CHECK(envelope_violation(runs, fit) <= 1e-9);
}
