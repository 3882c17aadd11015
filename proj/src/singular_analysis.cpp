#include "extremal/singular_analysis.hpp"

#include <cmath>
#include <numbers>

#include "extremal/error.hpp"

namespace extremal {

std::string_view to_string(PointCase c) noexcept {
  switch (c) {
    case PointCase::Switch: return "Switch";
    case PointCase::SmoothBang: return "SmoothBang";
    case PointCase::Limit: return "Limit";
    case PointCase::Degenerate: return "Degenerate";
  }
  return "?";
}

std::string_view to_string(SingularArcVerdict v) noexcept {
  switch (v) {
    case SingularArcVerdict::ExcludedNormTooBig: return "ExcludedNormTooBig";
    case SingularArcVerdict::ExcludedByGoh: return "ExcludedByGoh";
    case SingularArcVerdict::PossibleLimit: return "PossibleLimit";
  }
  return "?";
}

double ControlValue::norm() const { return std::hypot(u1, u2); }

double normalize_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::remainder(theta, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  return a;
}

Vec3 canonical_covector(const ControlSystem& sys, const Vec3& q, const SingularTolerances& tol) {
  const Vec3 f1 = sys.field(1).eval(q);
  const Vec3 f2 = sys.field(2).eval(q);
  const Vec3 lam = f1.cross(f2);
  if (!(lam.norm() > tol.lin_indep_tol))
    throw Error(Errc::DegeneratePoint, "f1 and f2 are linearly dependent at the point");
  return lam;
}

bool rank_condition(const BracketTable& t, const SingularTolerances& tol) {
  return t.h01() * t.h01() + t.h02() * t.h02() + t.h12() * t.h12() > tol.rank_tol;
}

PointCase classify_values(double h01, double h02, double h12, const SingularTolerances& tol) {
  const double r2 = h01 * h01 + h02 * h02;
  const double s2 = h12 * h12;
  if (r2 + s2 <= tol.rank_tol) return PointCase::Degenerate;
  if (std::abs(r2 - s2) <= tol.limit_tol * (r2 + s2)) return PointCase::Limit;
  return r2 > s2 ? PointCase::Switch : PointCase::SmoothBang;
}

ClassificationReport classify_point(const ControlSystem& sys, const Vec3& q,
                                    const SingularTolerances& tol) {
  ClassificationReport rep;
  rep.point = q;
  rep.lambda_bar = canonical_covector(sys, q, tol);
  const BracketTable t = bracket_table(sys, {rep.lambda_bar, q}, 1);
  rep.h01 = t.h01();
  rep.h02 = t.h02();
  rep.h12 = t.h12();
  rep.r = std::hypot(rep.h01, rep.h02);
  rep.phi = std::atan2(rep.h02, rep.h01);
  rep.point_case = classify_values(rep.h01, rep.h02, rep.h12, tol);
  if (rep.point_case == PointCase::Degenerate)
    throw Error(Errc::DegeneratePoint, "rank condition fails: h01 = h02 = h12 = 0");
  if (rep.point_case == PointCase::Switch) {
    const EquilibriumAngles a = equilibrium_angles(rep.h01, rep.h02, rep.h12);
    const JumpControls j = jump_controls(rep.h01, rep.h02, rep.h12);
    rep.theta_minus = a.theta_minus;
    rep.theta_plus = a.theta_plus;
    rep.u_minus = j.minus;
    rep.u_plus = j.plus;
  }
  return rep;
}

EquilibriumAngles equilibrium_angles(double h01, double h02, double h12) {
  const double r2 = h01 * h01 + h02 * h02;
  if (!(r2 > h12 * h12) || r2 == 0.0)
    throw Error(Errc::NoRealAngles, "switching function has no simple zeros (r^2 <= h12^2)");
  const double root = std::sqrt(r2 - h12 * h12);
  EquilibriumAngles a;
  a.phi = std::atan2(h02, h01);
  // sin(theta - phi) = h12 / r, cos(theta - phi) = -+ root / r
  a.theta_minus = normalize_angle(a.phi + std::atan2(h12, -root));
  a.theta_plus = normalize_angle(a.phi + std::atan2(h12, root));
  return a;
}

JumpControls jump_controls(double h01, double h02, double h12) {
  const double r2 = h01 * h01 + h02 * h02;
  if (!(r2 > h12 * h12) || r2 == 0.0)
    throw Error(Errc::NoJump, "no switching at this point (r^2 <= h12^2)");
  const double root = std::sqrt(r2 - h12 * h12);
  JumpControls j;
  j.minus = {(-h02 * h12 - h01 * root) / r2, (h01 * h12 - h02 * root) / r2};
  j.plus = {(-h02 * h12 + h01 * root) / r2, (h01 * h12 + h02 * root) / r2};
  return j;
}

ControlValue singular_control(double h01, double h02, double h12, const SingularTolerances& tol) {
  if (!(std::abs(h12) > tol.rank_tol))
    throw Error(Errc::SingularControlUndefined, "h12 vanishes, singular control undefined");
  return {-h02 / h12, h01 / h12};
}

ControlValue singular_control(const BracketTable& t, const SingularTolerances& tol) {
  return singular_control(t.h01(), t.h02(), t.h12(), tol);
}

SingularArcVerdict singular_arc_admissible(const BracketTable& t, const SingularTolerances& tol) {
  if (!(std::abs(t.h12()) > tol.rank_tol))
    throw Error(Errc::SingularControlUndefined, "h12 vanishes, singular control undefined");
  const double r2 = t.h01() * t.h01() + t.h02() * t.h02();
  const double s2 = t.h12() * t.h12();
  if (std::abs(r2 - s2) <= tol.limit_tol * (r2 + s2)) return SingularArcVerdict::PossibleLimit;
  return r2 > s2 ? SingularArcVerdict::ExcludedNormTooBig : SingularArcVerdict::ExcludedByGoh;
}

double goh_residual(const BracketTable& t) { return t.h12(); }

LimitResiduals limit_locus_residuals(const ControlSystem& sys, const CanonicalState& lam,
                                     const SingularTolerances& tol) {
  const BracketTable t = bracket_table(sys, lam, 2);
  if (std::abs(t.h1()) > tol.sing_tol || std::abs(t.h2()) > tol.sing_tol)
    throw Error(Errc::NotOnSingularLocus, "h1 or h2 exceeds sing_tol");
  const ControlValue u = singular_control(t, tol);
  // d/dt h_ij = h_0ij + u1 h_1ij + u2 h_2ij along the singular extremal
  auto rate = [&](int i, int j) {
    return t.hkij(0, i, j) + u.u1 * t.hkij(1, i, j) + u.u2 * t.hkij(2, i, j);
  };
  LimitResiduals res;
  res.p0 = t.h01() * t.h01() + t.h02() * t.h02() - t.h12() * t.h12();
  res.p1 = 2.0 * (t.h01() * rate(0, 1) + t.h02() * rate(0, 2) - t.h12() * rate(1, 2));
  return res;
}

}  // namespace extremal
