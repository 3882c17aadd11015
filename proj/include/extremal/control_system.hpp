#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>

#include "extremal/poly_field.hpp"

namespace extremal {

/// Linear independence threshold on |f1(x) x f2(x)|.
inline constexpr double kLinIndepTol = 1e-10;

/// Sign applied to every bracket in the cache. `Flipped` exists only to
/// inject a convention error in tests and the verification suite.
enum class BracketSign { Standard, Flipped };

/// Covector/point pair (xi, x) in canonical cotangent coordinates.
struct CanonicalState {
  Vec3 xi = Vec3::Zero();
  Vec3 x = Vec3::Zero();
};

/// Control-affine system x' = f0 + u1 f1 + u2 f2 with f3 = f1 x f2 and all
/// bracket fields of words up to length 3 over {0,1,2,3}. Immutable after
/// construction.
///
/// Words are right-nested: "ij" is [f_i, f_j] and "kij" is [f_k, [f_i, f_j]].
class ControlSystem {
 public:
  ControlSystem(PolyField f0, PolyField f1, PolyField f2,
                BracketSign sign = BracketSign::Standard);

  /// f0..f3.
  const PolyField& field(int i) const { return fields_.at(i); }
  /// Cached bracket for a word of length 1..3 over the digits 0-3.
  const PolyField& bracket(std::string_view word) const;

  BracketSign sign() const noexcept { return sign_; }

  /// |f3(x)| = |f1(x) x f2(x)|.
  double frame_norm(const Vec3& x) const;

 private:
  std::array<PolyField, 4> fields_;
  std::map<std::string, PolyField, std::less<>> cache_;
  BracketSign sign_;
};

/// Lift values at one cotangent point. `pair` is the full antisymmetric
/// table h_ij for i, j in {0,1,2,3}; `triple` holds h_kij for k, i, j in
/// {0,1,2} when second order was requested.
struct BracketTable {
  std::array<double, 4> lift{};
  std::array<std::array<double, 4>, 4> pair{};
  std::array<double, 27> triple{};
  bool has_second_order = false;

  double h0() const { return lift[0]; }
  double h1() const { return lift[1]; }
  double h2() const { return lift[2]; }
  double h3() const { return lift[3]; }
  double h01() const { return pair[0][1]; }
  double h02() const { return pair[0][2]; }
  double h12() const { return pair[1][2]; }
  double h03() const { return pair[0][3]; }
  double h13() const { return pair[1][3]; }
  double h23() const { return pair[2][3]; }
  double hkij(int k, int i, int j) const { return triple[9 * k + 3 * i + j]; }
};

/// <xi, f(x)>.
double hamiltonian_lift(const PolyField& f, const CanonicalState& lam);

/// Lift values of f0..f3 and their brackets at `lam`; order is 1 or 2.
BracketTable bracket_table(const ControlSystem& sys, const CanonicalState& lam, int order = 1);

}  // namespace extremal
