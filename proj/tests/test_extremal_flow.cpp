#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <doctest.h>

#include "extremal/error.hpp"
#include "extremal/extremal_flow.hpp"
#include "extremal/oracles.hpp"

using namespace extremal;

namespace {

Eigen::Matrix<double, 6, 1> pack(const CanonicalState& l) {
  Eigen::Matrix<double, 6, 1> v;
  v << l.xi, l.x;
  return v;
}

Eigen::Matrix<double, 6, 1> pack(const BlowupState& s) {
  Eigen::Matrix<double, 6, 1> v;
  v << s.rho, s.theta, s.h3, s.x;
  return v;
}

CanonicalState unpack(const Eigen::Matrix<double, 6, 1>& v) { return {v.head<3>(), v.tail<3>()}; }

bool same(const BlowupState& a, const BlowupState& b) {
  return a.rho == b.rho && a.theta == b.theta && a.h3 == b.h3 && a.x == b.x;
}

}  // namespace

TEST_CASE("blow-up chart round trip") {
  const ControlSystem sys = alpha_system(2.0);
  const BlowupState s{0.3, -2.1, 0.9, Vec3(0.2, -0.1, 0.4)};
  const BlowupState r = to_blowup(sys, to_canonical(sys, s));
  CHECK(r.rho == doctest::Approx(s.rho));
  CHECK(r.theta == doctest::Approx(s.theta));
  CHECK(r.h3 == doctest::Approx(s.h3));
  CHECK((r.x - s.x).norm() == 0.0);
  const BracketTable t = bracket_table(sys, to_canonical(sys, s));
  CHECK(t.h1() == doctest::Approx(0.3 * std::cos(-2.1)));
  CHECK(t.h2() == doctest::Approx(0.3 * std::sin(-2.1)));
}

TEST_CASE("chart dynamics agree with the canonical Hamiltonian field off the singular locus") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const ControlSystem sys(random_poly_field(rng, 2), random_poly_field(rng, 1), random_poly_field(rng, 1));
  for (int trial = 0; trial < 10; ++trial) {
    const BlowupState s{0.05 + 0.5 * std::abs(u(rng)), 3 * u(rng), u(rng), 0.2 * Vec3(u(rng), u(rng), u(rng))};
    const CanonicalState lam = to_canonical(sys, s);
    const auto d = pack(canonical_rhs(sys, lam));
    const double h = 1e-6;
    const auto plus = pack(to_blowup(sys, unpack(pack(lam) + h * d)));
    const auto minus = pack(to_blowup(sys, unpack(pack(lam) - h * d)));
    const auto fd = ((plus - minus) / (2 * h)).eval();
    const auto chart = pack(rhs_time(sys, s));
    CHECK((fd - chart).norm() <= 1e-6 * std::max(1.0, chart.norm()));

    const BlowupState r = rhs_rescaled(sys, s);
    CHECK(r.rho == doctest::Approx(s.rho * chart[0]));
    CHECK(r.theta == doctest::Approx(s.rho * chart[1]));
    CHECK(r.h3 == doctest::Approx(s.rho * chart[2]));
    CHECK((r.x - s.rho * chart.tail<3>()).norm() < 1e-12);
  }
  CHECK_THROWS_AS(rhs_time(sys, BlowupState{0.0, 0.0, 1.0, Vec3::Zero()}), Error);
}

TEST_CASE("equilibria of the rescaled field have eigenvalues -s and +s") {
  const ControlSystem sys = alpha_system(2.0);
  const ClassificationReport rep = classify_point(sys, Vec3::Zero());
  const double s = std::sqrt(rep.r * rep.r - rep.h12 * rep.h12);
  for (double th : {*rep.theta_minus, *rep.theta_plus}) {
    const BlowupState z{0.0, th, 1.0, Vec3::Zero()};
    const BlowupState v = rhs_rescaled(sys, z);
    CHECK(std::abs(v.theta) < 1e-12);
    const auto J = rescaled_jacobian(sys, z);
    CHECK(J(1, 1) == doctest::Approx(th == *rep.theta_minus ? s : -s).epsilon(1e-6));
    CHECK(J(0, 0) == doctest::Approx(th == *rep.theta_minus ? -s : s).epsilon(1e-6));
  }
}

TEST_CASE("Hamiltonian is conserved on a smooth arc") {
  const ControlSystem sys = alpha_system(0.5);
  const ExtremalTrajectory tr = integrate_extremal(sys, BlowupState{0.5, 1.0, 1.0, Vec3::Zero()}, 0.0, 1.0);
  REQUIRE(tr.terminated_reason == Termination::TimeUp);
  CHECK(tr.events.empty());
  const double h0 = maximized_hamiltonian(sys, to_canonical(sys, tr.samples.front().state));
  for (const TrajectorySample& s : tr.samples)
    CHECK(maximized_hamiltonian(sys, to_canonical(sys, s.state)) == doctest::Approx(h0).epsilon(1e-9));
  CHECK(tr.samples.back().t == 1.0);
  for (const TrajectorySample& s : tr.samples) CHECK(s.u.norm() == doctest::Approx(1.0));
}

TEST_CASE("rescaled and real-time integration agree away from the circle") {
  const ControlSystem sys = alpha_system(0.5);
  const BlowupState z{1e-3, 0.4, 1.0, Vec3::Zero()};
  IntegratorConfig near;
  near.eps_switch = 0.5;
  const ExtremalTrajectory a = integrate_extremal(sys, z, 0.0, 0.05);
  const ExtremalTrajectory b = integrate_extremal(sys, z, 0.0, 0.05, near);
  const auto la = pack(to_canonical(sys, a.samples.back().state));
  const auto lb = pack(to_canonical(sys, b.samples.back().state));
  CHECK((la - lb).norm() < 1e-8);
}

TEST_CASE("an extremal seeded on the incoming branch switches once with the predicted jump") {
  const ControlSystem sys = alpha_system(2.0);
  const BlowupState z = seed_incoming(sys, Vec3::Zero(), 0.5);
  const ExtremalTrajectory tr = integrate_extremal(sys, z, 0.0, 1.0);
  REQUIRE(tr.events.size() == 1);
  CHECK(count_switchings(tr) == 1);
  const SwitchEvent& e = tr.events.front();
  CHECK(e.t_switch == doctest::Approx(0.5).epsilon(1e-6));
  const JumpControls j = jump_controls(-2.0, 0.0, 1.0);
  CHECK(std::hypot(e.u_in.u1 - j.minus.u1, e.u_in.u2 - j.minus.u2) < 1e-5);
  CHECK(std::hypot(e.u_out.u1 - j.plus.u1, e.u_out.u2 - j.plus.u2) < 1e-5);
  int rows = 0;
  for (const TrajectorySample& s : tr.samples) rows += s.event ? 1 : 0;
  CHECK(rows == 1);
}

TEST_CASE("starting on the singular circle depends on the case") {
  const BlowupState z{0.0, 0.0, 1.0, Vec3::Zero()};
  const ExtremalTrajectory sw = integrate_extremal(alpha_system(2.0), z, 0.0, 0.2);
  CHECK(sw.terminated_reason == Termination::TimeUp);
  CHECK(sw.samples.back().state.rho > 0.0);
  const ExtremalTrajectory lim = integrate_extremal(alpha_system(1.0), z, 0.0, 0.2);
  CHECK(lim.terminated_reason == Termination::LimitCaseHold);
  try {
    integrate_extremal(alpha_system(0.5), z, 0.0, 0.2);
    FAIL("expected PreconditionViolated");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::PreconditionViolated);
  }
}

TEST_CASE("limit arc for alpha = 1 uses the control (0, -1)") {
  const ControlSystem sys = alpha_system(1.0);
  const ExtremalTrajectory tr = integrate_limit_arc(sys, BlowupState{0.0, 0.0, 1.0, Vec3::Zero()}, 0.0, 0.5);
  REQUIRE(tr.terminated_reason == Termination::TimeUp);
  for (const TrajectorySample& s : tr.samples) {
    CHECK(s.u.u1 == doctest::Approx(0.0));
    CHECK(s.u.u2 == doctest::Approx(-1.0));
  }
  CHECK((tr.samples.back().state.x - Vec3(0, -0.5, 0)).norm() < 1e-10);
  CHECK_THROWS_AS(integrate_limit_arc(alpha_system(2.0), BlowupState{0.0, 0.0, 1.0, Vec3::Zero()}, 0.0, 0.5),
                  Error);
}

TEST_CASE("leaving the domain radius stops the run") {
  IntegratorConfig cfg;
  cfg.domain_radius = 0.1;
  const ExtremalTrajectory tr =
      integrate_extremal(alpha_system(0.5), BlowupState{0.5, 1.0, 1.0, Vec3::Zero()}, 0.0, 5.0, cfg);
  CHECK(tr.terminated_reason == Termination::LeftChartDomain);
  CHECK(tr.samples.back().t < 5.0);
}

TEST_CASE("output times are hit exactly and sample_at interpolates") {
  const ControlSystem sys = alpha_system(2.0);
  const std::vector<double> times{0.1, 0.2, 0.35};
  const ExtremalTrajectory tr =
      integrate_extremal(sys, BlowupState{0.2, 0.3, 1.0, Vec3::Zero()}, 0.0, 0.4, {}, times);
  for (double t : times) {
    bool found = false;
    for (const TrajectorySample& s : tr.samples)
      if (s.t == t) {
        found = true;
        CHECK((pack(sample_at(sys, tr, t)) - pack(to_canonical(sys, s.state))).norm() < 1e-14);
      }
    CHECK(found);
  }
}

TEST_CASE("flow map is the identity at t = 0 and does not depend on the thread count") {
  const ControlSystem sys = alpha_system(2.0);
  std::vector<BlowupState> inits;
  for (int i = 0; i < 12; ++i) inits.push_back({1e-3 * (i + 1), -3.0 + 0.5 * i, 1.0, Vec3(0.01 * i, 0, 0)});
  const auto id = flow_map(sys, inits, 0.0, {}, 3);
  for (std::size_t i = 0; i < inits.size(); ++i) {
    REQUIRE(id[i].state);
    CHECK(same(*id[i].state, inits[i]));
  }
  IntegratorConfig fixed;
  fixed.fixed_step = 1e-3;
  const auto seq = flow_map(sys, inits, 0.2, fixed, 1);
  const auto par = flow_map(sys, inits, 0.2, fixed, 4);
  for (std::size_t i = 0; i < inits.size(); ++i) {
    REQUIRE(seq[i].state);
    REQUIRE(par[i].state);
    CHECK(same(*seq[i].state, *par[i].state));
  }
  const auto adaptive_seq = flow_map(sys, inits, 0.2, {}, 1);
  const auto adaptive_par = flow_map(sys, inits, 0.2, {}, 4);
  for (std::size_t i = 0; i < inits.size(); ++i) CHECK(same(*adaptive_seq[i].state, *adaptive_par[i].state));
}

TEST_CASE("repeated runs are bit-identical") {
  const ControlSystem sys = alpha_system(2.0);
  const BlowupState z = seed_incoming(sys, Vec3::Zero(), 0.3);
  const ExtremalTrajectory a = integrate_extremal(sys, z, 0.0, 0.6);
  const ExtremalTrajectory b = integrate_extremal(sys, z, 0.0, 0.6);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].t == b.samples[i].t);
    CHECK(same(a.samples[i].state, b.samples[i].state));
  }
}

TEST_CASE("invalid configurations are rejected") {
  IntegratorConfig cfg;
  cfg.eps_restart = 1.0;
  CHECK_THROWS_AS(integrate_extremal(alpha_system(2.0), BlowupState{0.1, 0.0, 1.0, Vec3::Zero()}, 0.0, 1.0, cfg),
                  Error);
  CHECK_THROWS_AS(integrate_extremal(alpha_system(2.0), BlowupState{0.1, 0.0, 1.0, Vec3::Zero()}, 1.0, 0.0), Error);
}
