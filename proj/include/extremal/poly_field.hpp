#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace extremal {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Exponent triple of a monomial x1^p1 x2^p2 x3^p3.
using Powers = std::array<int, 3>;

struct Monomial {
  double coeff = 0.0;
  Powers powers{0, 0, 0};

  int degree() const noexcept { return powers[0] + powers[1] + powers[2]; }
  friend bool operator==(const Monomial&, const Monomial&) = default;
};

/// Graded lexicographic order: lower total degree first, then larger
/// exponent of x1, x2, x3.
bool grlex_less(const Powers& a, const Powers& b) noexcept;

/// Polynomial in (x1, x2, x3), always held in canonical form: terms sorted
/// by `grlex_less`, unique powers, no zero coefficients.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<Monomial> terms);

  static Polynomial constant(double c);
  static Polynomial variable(int index, double coeff = 1.0);

  std::span<const Monomial> terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }
  /// -1 for the zero polynomial.
  int degree() const noexcept;

  double operator()(const Vec3& x) const;
  Polynomial derivative(int var) const;

  Polynomial operator-() const;
  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);
  Polynomial& operator*=(double s);

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend bool operator==(const Polynomial&, const Polynomial&) = default;

 private:
  std::vector<Monomial> terms_;
};

/// Polynomial vector field on R^3, one polynomial per component.
class PolyField {
 public:
  PolyField() = default;
  explicit PolyField(std::array<Polynomial, 3> components)
      : comp_(std::move(components)) {}

  /// Constant field with the given value.
  static PolyField constant(const Vec3& v);

  const Polynomial& operator[](int i) const { return comp_[i]; }
  Polynomial& operator[](int i) { return comp_[i]; }

  bool is_zero() const noexcept;
  int degree() const noexcept;

  Vec3 eval(const Vec3& x) const;
  /// Entry (i, j) is d f_i / d x_j.
  Mat3 jacobian(const Vec3& x) const;

  PolyField operator-() const;
  PolyField& operator+=(const PolyField& other);
  PolyField& operator-=(const PolyField& other);
  PolyField& operator*=(double s);

  friend PolyField operator+(PolyField a, const PolyField& b) { return a += b; }
  friend PolyField operator-(PolyField a, const PolyField& b) { return a -= b; }
  friend PolyField operator*(PolyField a, double s) { return a *= s; }
  friend PolyField operator*(double s, PolyField a) { return a *= s; }
  friend bool operator==(const PolyField&, const PolyField&) = default;

 private:
  std::array<Polynomial, 3> comp_;
};

inline Vec3 eval_field(const PolyField& f, const Vec3& x) { return f.eval(x); }
inline Mat3 jacobian(const PolyField& f, const Vec3& x) { return f.jacobian(x); }

/// [f, g] = Dg f - Df g, computed exactly on coefficients.
PolyField lie_bracket(const PolyField& f, const PolyField& g);

/// Componentwise cross product f x g as polynomials.
PolyField cross(const PolyField& f, const PolyField& g);

}  // namespace extremal
