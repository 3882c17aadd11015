#include <cmath>
#include <random>

#include <doctest.h>

#include "extremal/oracles.hpp"
#include "extremal/poly_field.hpp"

using namespace extremal;

namespace {

Vec3 random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return Vec3(u(rng), u(rng), u(rng));
}

}  // namespace

TEST_CASE("polynomials are kept in canonical form") {
  const Polynomial p(std::vector<Monomial>{{1.0, {1, 0, 0}}, {0.0, {0, 1, 0}}, {2.0, {1, 0, 0}}, {4.0, {0, 0, 0}}});
  REQUIRE(p.terms().size() == 2);
  CHECK(p.terms()[0] == Monomial{4.0, {0, 0, 0}});
  CHECK(p.terms()[1] == Monomial{3.0, {1, 0, 0}});
  CHECK((p - p).is_zero());
  CHECK(Polynomial().degree() == -1);
}

TEST_CASE("graded lexicographic order") {
  CHECK(grlex_less({0, 0, 1}, {1, 0, 0}) == false);
  CHECK(grlex_less({1, 0, 0}, {0, 1, 0}));
  CHECK(grlex_less({0, 0, 5}, {1, 1, 1}) == false);
  CHECK(grlex_less({2, 0, 0}, {0, 0, 3}));
}

TEST_CASE("evaluation, products and derivatives") {
  const Polynomial x = Polynomial::variable(0), y = Polynomial::variable(1), z = Polynomial::variable(2);
  const Polynomial p = x * x * y + 3.0 * z - Polynomial::constant(2.0);
  const Vec3 a(1.5, -2.0, 0.25);
  CHECK(p(a) == doctest::Approx(1.5 * 1.5 * -2.0 + 0.75 - 2.0));
  CHECK(p.derivative(0) == 2.0 * x * y);
  CHECK(p.derivative(2) == Polynomial::constant(3.0));
  CHECK(p.derivative(1).derivative(1).is_zero());
  CHECK(p.degree() == 3);
}

TEST_CASE("bracket of the alpha-system drift-free fields") {
  const Polynomial zero;
  const PolyField f1({Polynomial::constant(1.0), zero, zero});
  const PolyField f2({zero, Polynomial::constant(1.0), Polynomial::variable(0)});
  CHECK(lie_bracket(f1, f2) == PolyField::constant(Vec3(0, 0, 1)));
  CHECK(cross(f1, f2) == PolyField({zero, -Polynomial::variable(0), Polynomial::constant(1.0)}));
}

TEST_CASE("bracket is bilinear and antisymmetric, Jacobi holds exactly on dyadic fields") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const PolyField f = random_poly_field(rng, 2, true);
    const PolyField g = random_poly_field(rng, 2, true);
    const PolyField h = random_poly_field(rng, 2, true);
    CHECK(lie_bracket(f, g) == -lie_bracket(g, f));
    CHECK(lie_bracket(f, f).is_zero());
    CHECK(lie_bracket(2.0 * f + h, g) == 2.0 * lie_bracket(f, g) + lie_bracket(h, g));
    const PolyField jac = lie_bracket(f, lie_bracket(g, h)) + lie_bracket(g, lie_bracket(h, f)) +
                          lie_bracket(h, lie_bracket(f, g));
    CHECK(jac.is_zero());
  }
}

TEST_CASE("symbolic bracket matches the finite-difference oracle") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const PolyField f = random_poly_field(rng, 3);
    const PolyField g = random_poly_field(rng, 3);
    const PolyField b = lie_bracket(f, g);
    const Vec3 x = random_point(rng);
    const Vec3 exact = b.eval(x);
    CHECK((fd_bracket_oracle(f, g, x) - exact).norm() <= 1e-6 * std::max(1.0, exact.norm()));
  }
}

TEST_CASE("finite-difference oracle error is second order in h") {
  std::mt19937_64 rng(5);
  const PolyField f = random_poly_field(rng, 3);
  const PolyField g = random_poly_field(rng, 3);
  const Vec3 x(0.3, -0.7, 0.45);
  const Vec3 exact = lie_bracket(f, g).eval(x);
  const double e1 = (fd_bracket_oracle(f, g, x, 2e-2) - exact).norm();
  const double e2 = (fd_bracket_oracle(f, g, x, 1e-2) - exact).norm();
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("cross product agrees pointwise and jacobian with finite differences") {
  std::mt19937_64 rng(3);
  const PolyField f = random_poly_field(rng, 2);
  const PolyField g = random_poly_field(rng, 2);
  const Vec3 x = random_point(rng);
  CHECK((cross(f, g).eval(x) - f.eval(x).cross(g.eval(x))).norm() < 1e-12);
  const double h = 1e-6;
  Mat3 fd;
  for (int j = 0; j < 3; ++j) {
    Vec3 e = Vec3::Zero();
    e[j] = h;
    fd.col(j) = (f.eval(x + e) - f.eval(x - e)) / (2 * h);
  }
  CHECK((fd - f.jacobian(x)).norm() < 1e-8);
}
