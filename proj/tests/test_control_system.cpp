#include <cmath>
#include <random>

#include <doctest.h>

#include "extremal/control_system.hpp"
#include "extremal/error.hpp"
#include "extremal/oracles.hpp"
#include "extremal/singular_analysis.hpp"

using namespace extremal;

TEST_CASE("bracket cache matches direct brackets") {
  const ControlSystem sys = alpha_system(2.0);
  CHECK(sys.field(3) == cross(sys.field(1), sys.field(2)));
  CHECK(sys.bracket("12") == lie_bracket(sys.field(1), sys.field(2)));
  CHECK(sys.bracket("01") == PolyField::constant(Vec3(0, 0, -2)));
  CHECK(sys.bracket("02").is_zero());
  CHECK(sys.bracket("012") == lie_bracket(sys.field(0), sys.bracket("12")));
  CHECK(sys.bracket("3") == sys.field(3));
  CHECK_THROWS_AS(sys.bracket("0123"), Error);
  CHECK_THROWS_AS(sys.bracket("4"), Error);
}

TEST_CASE("flipped sign convention negates single brackets, nested ones flip twice") {
  const ControlSystem a = alpha_system(2.0);
  const ControlSystem b = alpha_system(2.0, BracketSign::Flipped);
  for (const char* w : {"01", "02", "12", "13"}) CHECK(b.bracket(w) == -a.bracket(w));
  for (const char* w : {"012", "112", "301"}) CHECK(b.bracket(w) == a.bracket(w));
  CHECK(b.field(3) == a.field(3));
}

TEST_CASE("bracket table is antisymmetric and holds the lifts") {
  std::mt19937_64 rng(1);
  const ControlSystem sys(random_poly_field(rng, 2), random_poly_field(rng, 2), random_poly_field(rng, 2));
  const CanonicalState lam{Vec3(0.3, -1.1, 0.7), Vec3(0.1, 0.2, -0.3)};
  const BracketTable t = bracket_table(sys, lam, 2);
  CHECK(t.has_second_order);
  for (int i = 0; i < 4; ++i) {
    CHECK(t.lift[i] == doctest::Approx(lam.xi.dot(sys.field(i).eval(lam.x))));
    for (int j = 0; j < 4; ++j) CHECK(t.pair[i][j] == doctest::Approx(-t.pair[j][i]));
  }
  CHECK(t.hkij(0, 1, 2) == doctest::Approx(lam.xi.dot(sys.bracket("012").eval(lam.x))));
}

TEST_CASE("Poisson brackets of lifts match bracket lifts, and the flipped convention is caught") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const PolyField f0 = random_poly_field(rng, 2), f1 = random_poly_field(rng, 2), f2 = random_poly_field(rng, 2);
    const CanonicalState lam{Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng))};
    const ControlSystem good(f0, f1, f2);
    const ControlSystem bad(f0, f1, f2, BracketSign::Flipped);
    CHECK(poisson_consistency(good, lam) < 1e-7);
    const BracketTable t = bracket_table(good, lam);
    const double largest = std::max({std::abs(t.h01()), std::abs(t.h02()), std::abs(t.h12())});
    CHECK(poisson_consistency(bad, lam) == doctest::Approx(2 * largest).epsilon(1e-6));
  }
}

TEST_CASE("rotating the control frame keeps r, h12 and the case") {
  const ControlSystem sys = alpha_system(2.0);
  const double a = 0.7, c = std::cos(a), s = std::sin(a);
  const ControlSystem rot(sys.field(0), c * sys.field(1) + s * sys.field(2), -s * sys.field(1) + c * sys.field(2));
  const Vec3 q(0.1, -0.2, 0.3);
  const ClassificationReport r0 = classify_point(sys, q), r1 = classify_point(rot, q);
  CHECK(r1.r == doctest::Approx(r0.r));
  CHECK(r1.h12 == doctest::Approx(r0.h12));
  CHECK(r1.point_case == r0.point_case);
  CHECK(normalize_angle(r1.phi - r0.phi + a) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("scaling the drift scales h01 and h02 only") {
  const ControlSystem sys = alpha_system(2.0);
  const ControlSystem big(3.0 * sys.field(0), sys.field(1), sys.field(2));
  const CanonicalState lam{Vec3(0.2, 0.5, 1.0), Vec3(0.4, 0.1, 0.0)};
  const BracketTable a = bracket_table(sys, lam), b = bracket_table(big, lam);
  CHECK(b.h01() == doctest::Approx(3 * a.h01()));
  CHECK(b.h02() == doctest::Approx(3 * a.h02()));
  CHECK(b.h12() == doctest::Approx(a.h12()));
}
