#pragma once

#include <optional>
#include <string_view>

#include "extremal/control_system.hpp"

namespace extremal {

/// Numerical bands for the exact trichotomy r^2 vs h12^2.
struct SingularTolerances {
  double rank_tol = 1e-10;
  double sing_tol = 1e-9;
  double limit_tol = 1e-9;  // relative to r^2 + h12^2
  double lin_indep_tol = kLinIndepTol;
};

enum class PointCase { Switch, SmoothBang, Limit, Degenerate };
std::string_view to_string(PointCase c) noexcept;

/// Point of the control disk u1^2 + u2^2 <= 1.
struct ControlValue {
  double u1 = 0.0;
  double u2 = 0.0;

  double norm() const;
  friend bool operator==(const ControlValue&, const ControlValue&) = default;
};

struct EquilibriumAngles {
  double phi = 0.0;
  double theta_minus = 0.0;  // incoming: h0theta < 0
  double theta_plus = 0.0;   // outgoing: h0theta > 0
};

struct JumpControls {
  ControlValue minus;  // u(t - 0)
  ControlValue plus;   // u(t + 0)
};

struct ClassificationReport {
  Vec3 point = Vec3::Zero();
  Vec3 lambda_bar = Vec3::Zero();
  double r = 0.0;
  double h12 = 0.0;
  double h01 = 0.0;
  double h02 = 0.0;
  double phi = 0.0;
  PointCase point_case = PointCase::Degenerate;
  std::optional<double> theta_minus;
  std::optional<double> theta_plus;
  std::optional<ControlValue> u_minus;
  std::optional<ControlValue> u_plus;
};

enum class SingularArcVerdict { ExcludedNormTooBig, ExcludedByGoh, PossibleLimit };
std::string_view to_string(SingularArcVerdict v) noexcept;

/// Wraps an angle into (-pi, pi].
double normalize_angle(double theta);

/// f1(q) x f2(q); throws DegeneratePoint when |f3(q)| <= lin_indep_tol.
Vec3 canonical_covector(const ControlSystem& sys, const Vec3& q,
                        const SingularTolerances& tol = {});

/// h01^2 + h02^2 + h12^2 > rank_tol.
bool rank_condition(const BracketTable& table, const SingularTolerances& tol = {});

/// Trichotomy at the canonical covector over q. Throws DegeneratePoint when
/// f1, f2 are dependent at q or the rank condition fails.
ClassificationReport classify_point(const ControlSystem& sys, const Vec3& q,
                                    const SingularTolerances& tol = {});

/// Same trichotomy for bracket values already at hand.
PointCase classify_values(double h01, double h02, double h12,
                          const SingularTolerances& tol = {});

/// Zeros of theta -> h12 + cos(theta) h02 - sin(theta) h01. Requires
/// r^2 > h12^2 (throws NoRealAngles otherwise).
EquilibriumAngles equilibrium_angles(double h01, double h02, double h12);

/// Left and right limits of the control at the switching time, from the
/// closed-form bracket expression. Throws NoJump unless r^2 > h12^2.
JumpControls jump_controls(double h01, double h02, double h12);

/// Singular-arc control (-h02/h12, h01/h12).
ControlValue singular_control(double h01, double h02, double h12,
                              const SingularTolerances& tol = {});
ControlValue singular_control(const BracketTable& table, const SingularTolerances& tol = {});

SingularArcVerdict singular_arc_admissible(const BracketTable& table,
                                           const SingularTolerances& tol = {});

/// Goh residual h12: the only bracket pair for a two-input system.
double goh_residual(const BracketTable& table);

struct LimitResiduals {
  double p0 = 0.0;
  double p1 = 0.0;
};

/// (P0) and (P1) on the limit locus: p0 = h01^2 + h02^2 - h12^2 and its
/// time derivative along the singular extremal.
LimitResiduals limit_locus_residuals(const ControlSystem& sys, const CanonicalState& lam,
                                     const SingularTolerances& tol = {});

}  // namespace extremal
