#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "extremal/control_system.hpp"
#include "extremal/singular_analysis.hpp"

namespace extremal {

/// Extremal state in the blow-up chart: (h1, h2) = rho (cos theta, sin theta),
/// h3 = <xi, f3(x)>.
struct BlowupState {
  double rho = 0.0;
  double theta = 0.0;
  double h3 = 0.0;
  Vec3 x = Vec3::Zero();
};

struct IntegratorConfig {
  double rel_tol = 1e-11;
  double abs_tol = 1e-13;
  double max_step = 0.05;
  /// rho threshold below which the rescaled system takes over.
  double eps_switch = 1e-6;
  /// rho of the reseeded state after a switch.
  double eps_restart = 1e-10;
  double jump_tol = 1e-5;
  /// Cut distance from theta_minus before the switch is executed.
  double angle_tol = 1e-6;
  /// > 0 selects fixed steps of this size in real time.
  double fixed_step = 0.0;
  /// Fixed step in rescaled time, used together with `fixed_step`.
  double fixed_step_rescaled = 1e-2;
  /// Trajectory stops with LeftChartDomain once |x - x(0)| exceeds this.
  double domain_radius = std::numeric_limits<double>::infinity();
  long max_steps = 2'000'000;
  std::uint64_t seed = 42;
  SingularTolerances tol;
};

enum class SwitchKind {
  Teleport,  // cut near theta_minus, reseeded on the outgoing branch
  Resolved,  // integrated through in rescaled time without a cut
};

struct SwitchEvent {
  double t_switch = 0.0;
  Vec3 x_at = Vec3::Zero();
  double theta_in = 0.0;
  double theta_out = 0.0;
  ControlValue u_in;
  ControlValue u_out;
  double crossing_dt_bound = 0.0;
  SwitchKind kind = SwitchKind::Teleport;
};

struct TrajectorySample {
  double t = 0.0;
  BlowupState state;
  ControlValue u;
  bool event = false;
};

enum class Termination { TimeUp, DegeneratePoint, LeftChartDomain, LimitCaseHold };
std::string_view to_string(Termination t) noexcept;

struct ExtremalTrajectory {
  std::vector<TrajectorySample> samples;
  std::vector<SwitchEvent> events;
  Termination terminated_reason = Termination::TimeUp;
};

/// Columns f1(x), f2(x), f3(x); throws DegeneratePoint if f1, f2 are dependent.
Mat3 frame(const ControlSystem& sys, const Vec3& x, double lin_indep_tol = kLinIndepTol);

CanonicalState to_canonical(const ControlSystem& sys, const BlowupState& s);
BlowupState to_blowup(const ControlSystem& sys, const CanonicalState& lam);

/// Maximized Hamiltonian h0 + sqrt(h1^2 + h2^2).
double maximized_hamiltonian(const ControlSystem& sys, const CanonicalState& lam);

/// Hamiltonian vector field of the maximized Hamiltonian in (xi, x), valid off
/// the singular locus. Returned as (d xi/dt, dx/dt).
CanonicalState canonical_rhs(const ControlSystem& sys, const CanonicalState& lam);

/// d/dt of the blow-up state; throws ChartSingular at rho = 0.
BlowupState rhs_time(const ControlSystem& sys, const BlowupState& s);

/// d/ds of the blow-up state with dt/ds = rho; smooth through rho = 0.
BlowupState rhs_rescaled(const ControlSystem& sys, const BlowupState& s);

/// Central-difference Jacobian of rhs_rescaled in the ordering
/// (rho, theta, h3, x1, x2, x3).
Eigen::Matrix<double, 6, 6> rescaled_jacobian(const ControlSystem& sys, const BlowupState& s,
                                              double h = 1e-6);

/// Point on the one-dimensional stable (incoming) manifold of the
/// theta_minus equilibrium over q, at the given distance `rho` from the
/// singular circle. `h3` defaults to |f3(q)|^2 (covector f1 x f2).
BlowupState incoming_manifold_point(const ControlSystem& sys, const Vec3& q, double rho,
                                    std::optional<double> h3 = std::nullopt);

/// State from which the extremal reaches the singular point over q after
/// `duration` (backward integration along the incoming branch).
BlowupState seed_incoming(const ControlSystem& sys, const Vec3& q, double duration,
                          const IntegratorConfig& cfg = {},
                          std::optional<double> h3 = std::nullopt);

/// Integrates the extremal over [t0, t1], switching through the singular
/// locus when needed. Steps are clamped to land on each of `output_times`.
ExtremalTrajectory integrate_extremal(const ControlSystem& sys, const BlowupState& init,
                                      double t0, double t1, const IntegratorConfig& cfg = {},
                                      std::span<const double> output_times = {});
ExtremalTrajectory integrate_extremal(const ControlSystem& sys, const CanonicalState& init,
                                      double t0, double t1, const IntegratorConfig& cfg = {},
                                      std::span<const double> output_times = {});

/// Singular arc with boundary-valued control in the limit case. Terminates
/// with LeftChartDomain when |h1|, |h2| or |p0| exceed `drift_tol`.
ExtremalTrajectory integrate_limit_arc(const ControlSystem& sys, const BlowupState& init,
                                       double t0, double t1, const IntegratorConfig& cfg = {},
                                       double drift_tol = 1e-7);

struct FlowOutcome {
  std::optional<BlowupState> state;
  Termination reason = Termination::TimeUp;
  std::string error;
};

/// Worker count from EXTREMAL_KIT_THREADS, else hardware concurrency.
unsigned default_thread_count();

/// Final states of independent extremals at time t; results ordered like
/// `inits`.
std::vector<FlowOutcome> flow_map(const ControlSystem& sys, std::span<const BlowupState> inits,
                                  double t, const IntegratorConfig& cfg = {},
                                  unsigned threads = 0);

/// For each scale delta, the largest |lambda(T; z1) - lambda(T; z2)| /
/// |z1 - z2| over `pairs` random pairs z1,2 = center +- (delta/2) v in
/// canonical coordinates.
std::vector<double> lipschitz_probe(const ControlSystem& sys, const BlowupState& center,
                                    std::span<const double> scales, double horizon,
                                    const IntegratorConfig& cfg = {}, int pairs = 16,
                                    unsigned threads = 0);

int count_switchings(const ExtremalTrajectory& traj);

/// Canonical state at time t by linear interpolation between samples.
CanonicalState sample_at(const ControlSystem& sys, const ExtremalTrajectory& traj, double t);

}  // namespace extremal
