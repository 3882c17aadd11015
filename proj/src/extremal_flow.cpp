#include "extremal/extremal_flow.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include <Eigen/LU>

#include "extremal/error.hpp"
#include "extremal/ode.hpp"

namespace extremal {

std::string_view to_string(Termination t) noexcept {
  switch (t) {
    case Termination::TimeUp: return "TimeUp";
    case Termination::DegeneratePoint: return "DegeneratePoint";
    case Termination::LeftChartDomain: return "LeftChartDomain";
    case Termination::LimitCaseHold: return "LimitCaseHold";
  }
  return "?";
}

namespace {

using V6 = ode::State<6>;
using V7 = ode::State<7>;

/// The fields the blow-up right-hand side needs, looked up once.
struct FieldSet {
  const PolyField* f[4];
  const PolyField* b01;
  const PolyField* b02;
  const PolyField* b12;
  const PolyField* b03;
  const PolyField* b13;
  const PolyField* b23;

  explicit FieldSet(const ControlSystem& sys)
      : f{&sys.field(0), &sys.field(1), &sys.field(2), &sys.field(3)},
        b01(&sys.bracket("01")),
        b02(&sys.bracket("02")),
        b12(&sys.bracket("12")),
        b03(&sys.bracket("03")),
        b13(&sys.bracket("13")),
        b23(&sys.bracket("23")) {}
};

Mat3 frame_of(const FieldSet& fs, const Vec3& x, double tol) {
  Mat3 F;
  F.col(0) = fs.f[1]->eval(x);
  F.col(1) = fs.f[2]->eval(x);
  F.col(2) = fs.f[3]->eval(x);
  if (!(F.col(2).norm() > tol))
    throw Error(Errc::DegeneratePoint, "f1 and f2 are linearly dependent along the trajectory");
  return F;
}

Vec3 covector(const Mat3& F, double rho, double theta, double h3) {
  const Vec3 h(rho * std::cos(theta), rho * std::sin(theta), h3);
  return F.transpose().partialPivLu().solve(h);
}

struct Pieces {
  Vec3 xdot;      // f0 + f_theta
  double h0t;     // h0theta
  double dtheta;  // h12 + d/dtheta h0theta
  double h3dot;   // h03 + h_theta3
};

Pieces pieces(const FieldSet& fs, double rho, double theta, double h3, const Vec3& x) {
  const Mat3 F = frame_of(fs, x, kLinIndepTol);
  const Vec3 xi = covector(F, rho, theta, h3);
  const double c = std::cos(theta), s = std::sin(theta);
  const double h01 = xi.dot(fs.b01->eval(x));
  const double h02 = xi.dot(fs.b02->eval(x));
  const double h12 = xi.dot(fs.b12->eval(x));
  const double h03 = xi.dot(fs.b03->eval(x));
  const double h13 = xi.dot(fs.b13->eval(x));
  const double h23 = xi.dot(fs.b23->eval(x));
  Pieces p;
  p.xdot = fs.f[0]->eval(x) + c * F.col(0) + s * F.col(1);
  p.h0t = c * h01 + s * h02;
  p.dtheta = h12 + c * h02 - s * h01;
  p.h3dot = h03 + c * h13 + s * h23;
  return p;
}

V6 time_field(const FieldSet& fs, const V6& y) {
  if (!(y[0] > 0.0)) throw Error(Errc::ChartSingular, "rho = 0 in the real-time system");
  const Pieces p = pieces(fs, y[0], y[1], y[2], y.tail<3>());
  V6 d;
  d << p.h0t, p.dtheta / y[0], p.h3dot, p.xdot;
  return d;
}

/// Real-time field for use inside a step: stages that overshoot rho <= 0
/// come back as NaN so the step is rejected instead of aborting.
V6 time_field_in_step(const FieldSet& fs, const V6& y) {
  if (!(y[0] > 0.0)) return V6::Constant(std::numeric_limits<double>::quiet_NaN());
  return time_field(fs, y);
}

V6 rescaled_field(const FieldSet& fs, const V6& y) {
  const double rho = y[0];
  const Pieces p = pieces(fs, rho, y[1], y[2], y.tail<3>());
  V6 d;
  d << rho * p.h0t, p.dtheta, rho * p.h3dot, rho * p.xdot;
  return d;
}

V6 pack(const BlowupState& s) {
  V6 y;
  y << s.rho, s.theta, s.h3, s.x;
  return y;
}

BlowupState unpack(const V6& y) { return {y[0], y[1], y[2], y.tail<3>()}; }

BlowupState derivative_of(const V6& d) { return {d[0], d[1], d[2], d.tail<3>()}; }

TrajectorySample make_sample(double t, const V6& y, bool event = false) {
  TrajectorySample s;
  s.t = t;
  s.state = unpack(y);
  s.state.theta = normalize_angle(y[1]);
  s.u = {std::cos(y[1]), std::sin(y[1])};
  s.event = event;
  return s;
}

ControlValue control_at(double theta) { return {std::cos(theta), std::sin(theta)}; }

/// Lift values h01, h02, h12 at the singular covector (rho = 0) over x.
struct SingularValues {
  double h01 = 0.0, h02 = 0.0, h12 = 0.0;
};

SingularValues singular_values(const FieldSet& fs, double h3, const Vec3& x) {
  const Mat3 F = frame_of(fs, x, kLinIndepTol);
  const Vec3 xi = covector(F, 0.0, 0.0, h3);
  return {xi.dot(fs.b01->eval(x)), xi.dot(fs.b02->eval(x)), xi.dot(fs.b12->eval(x))};
}

Eigen::Matrix<double, 6, 6> jacobian_of(const FieldSet& fs, const V6& y, double h) {
  Eigen::Matrix<double, 6, 6> J;
  for (int j = 0; j < 6; ++j) {
    const double step = h * std::max(1.0, std::abs(y[j]));
    V6 yp = y, ym = y;
    yp[j] += step;
    ym[j] -= step;
    J.col(j) = (rescaled_field(fs, yp) - rescaled_field(fs, ym)) / (2.0 * step);
  }
  return J;
}

/// Eigenvector of the rescaled linearization at an equilibrium on rho = 0,
/// normalized to unit rho component, for the eigenvalue J(0,0).
V6 radial_eigenvector(const FieldSet& fs, const V6& eq) {
  const Eigen::Matrix<double, 6, 6> J = jacobian_of(fs, eq, 1e-6);
  const double lam = J(0, 0);
  Eigen::Matrix<double, 6, 6> M = J - lam * Eigen::Matrix<double, 6, 6>::Identity();
  const Eigen::Matrix<double, 5, 5> A = M.bottomRightCorner<5, 5>();
  const Eigen::Matrix<double, 5, 1> b = -M.bottomLeftCorner<5, 1>();
  V6 v;
  v[0] = 1.0;
  v.tail<5>() = A.fullPivLu().solve(b);
  return v;
}

std::vector<double> prepare_outputs(std::span<const double> outs, double t0, double t1) {
  std::vector<double> o;
  for (double t : outs)
    if (t > t0 && t < t1) o.push_back(t);
  o.push_back(t1);
  std::sort(o.begin(), o.end());
  o.erase(std::unique(o.begin(), o.end()), o.end());
  return o;
}

class Integrator {
 public:
  Integrator(const ControlSystem& sys, const IntegratorConfig& cfg, double t0, double t1,
             std::span<const double> outs)
      : fs_(sys), cfg_(cfg), t_(t0), t1_(t1), outs_(prepare_outputs(outs, t0, t1)) {}

  ExtremalTrajectory run(const BlowupState& init) {
    y_ = pack(init);
    origin_ = init.x;
    traj_.samples.push_back(make_sample(t_, y_));
    if (t1_ <= t_) return finish(Termination::TimeUp);
    try {
      while (true) {
        if (y_[0] > cfg_.eps_switch) {
          if (time_mode()) break;
        } else {
          if (near_mode()) break;
        }
      }
    } catch (const Error& e) {
      if (e.code() != Errc::DegeneratePoint) throw;
      reason_ = Termination::DegeneratePoint;
    }
    return finish(reason_);
  }

 private:
  double next_output() const { return outs_[out_idx_]; }

  bool fixed() const { return cfg_.fixed_step > 0.0; }

  void count_step() {
    if (++steps_ > cfg_.max_steps)
      throw Error(Errc::StepFailure, "step budget exhausted before reaching the final time");
  }

  ExtremalTrajectory finish(Termination reason) {
    traj_.terminated_reason = reason;
    return std::move(traj_);
  }

  void record(bool event = false) {
    if (!traj_.samples.empty() && !(t_ > traj_.samples.back().t)) {
      if (event) traj_.samples.back().event = true;
      return;
    }
    traj_.samples.push_back(make_sample(t_, y_, event || pending_event_));
    pending_event_ = false;
  }

  /// True when the trajectory has to stop.
  bool after_accept() {
    while (out_idx_ < outs_.size() && t_ >= next_output()) ++out_idx_;
    if ((y_.tail<3>() - origin_).norm() > cfg_.domain_radius) {
      reason_ = Termination::LeftChartDomain;
      return true;
    }
    if (out_idx_ >= outs_.size()) {
      reason_ = Termination::TimeUp;
      return true;
    }
    return false;
  }

  // Real-time system until t1 or until rho drops to eps_switch. Returns true
  // when the trajectory is finished.
  bool time_mode() {
    const ode::Rhs<6> f = [this](const V6& y) { return time_field_in_step(fs_, y); };
    V6 dy = f(y_);
    std::optional<double> forced;
    while (true) {
      count_step();
      const double target = next_output();
      double step = forced ? *forced : (fixed() ? cfg_.fixed_step : std::min(h_time_, cfg_.max_step));
      forced.reset();
      bool clamped = false;
      if (t_ + step >= target) {
        step = target - t_;
        clamped = true;
      }
      const auto trial = ode::dopri_step<6>(f, y_, dy, step, cfg_.rel_tol, cfg_.abs_tol);
      if (!trial.y.allFinite() || !std::isfinite(trial.err)) {
        forced = 0.5 * step;
        if (!(*forced > 1e-15 * std::max(1.0, std::abs(t_))))
          throw Error(Errc::StepFailure, "non-finite state in the real-time system");
        continue;
      }
      if (!fixed() && trial.err > 1.0) {
        h_time_ = ode::next_step(step, trial.err);
        if (h_time_ < 1e-15 * std::max(1.0, std::abs(t_)))
          throw Error(Errc::StepFailure, "step size underflow in the real-time system");
        continue;
      }
      if (trial.y[0] < 0.5 * cfg_.eps_switch) {
        // aim for the landing band [eps/2, eps] by linear extrapolation of rho
        const double drop = y_[0] - trial.y[0];
        const double want = y_[0] - 0.75 * cfg_.eps_switch;
        forced = step * std::clamp(want / drop, 0.05, 0.9);
        if (!(*forced > 1e-15 * std::max(1.0, std::abs(t_))))
          throw Error(Errc::StepFailure, "cannot land on the blow-up threshold");
        continue;
      }
      t_ = clamped ? target : t_ + step;
      y_ = trial.y;
      dy = trial.dy_end;
      record();
      if (!fixed()) h_time_ = ode::next_step(step, trial.err);
      if (after_accept()) return true;
      if (y_[0] <= cfg_.eps_switch) return false;
    }
  }

  // Blow-up neighbourhood of the singular circle. Returns true when the
  // trajectory is finished.
  bool near_mode() {
    const Vec3 x_entry = y_.tail<3>();
    if (!(std::abs(y_[2]) > 0.0))
      throw Error(Errc::DegeneratePoint, "covector vanishes on the singular circle");
    const SingularValues sv = singular_values(fs_, y_[2], x_entry);
    const PointCase pc = classify_values(sv.h01, sv.h02, sv.h12, cfg_.tol);
    if (pc == PointCase::Degenerate)
      throw Error(Errc::DegeneratePoint, "rank condition fails at the singular point");
    if (pc == PointCase::Limit) {
      reason_ = Termination::LimitCaseHold;
      return true;
    }
    if (y_[0] == 0.0) {
      if (pc != PointCase::Switch)
        throw Error(Errc::PreconditionViolated,
                    "an extremal starting on the singular circle is only defined in the switch case");
      depart();
      return rescaled_mode(pc, /*teleported=*/true);
    }
    return rescaled_mode(pc, false);
  }

  /// Reseed on the outgoing branch of the theta_plus equilibrium over the
  /// current point.
  double depart() {
    const Vec3 x = y_.tail<3>();
    const SingularValues sv = singular_values(fs_, y_[2], x);
    const EquilibriumAngles ang = equilibrium_angles(sv.h01, sv.h02, sv.h12);
    V6 eq;
    eq << 0.0, ang.theta_plus, y_[2], x;
    const V6 v = radial_eigenvector(fs_, eq);
    const double s = std::sqrt(std::max(0.0, sv.h01 * sv.h01 + sv.h02 * sv.h02 - sv.h12 * sv.h12));
    // keep theta continuous with the unwrapped history
    eq[1] = y_[1] + normalize_angle(ang.theta_plus - y_[1]);
    y_ = eq + cfg_.eps_restart * v;
    const double dt_out = cfg_.eps_restart / s;
    t_ += dt_out;
    return dt_out;
  }

  // Integrates the rescaled field in s with t appended as a state. Leaves when rho grows
  // past 2 eps_switch; in the switch case, cuts close to theta_minus and
  // reseeds on the outgoing branch.
  bool rescaled_mode(PointCase pc, bool teleported) {
    const double exit_rho = 2.0 * cfg_.eps_switch;
    const Vec3 x0 = y_.tail<3>();
    std::optional<EquilibriumAngles> ang;
    double s_act = 0.0;
    if (pc == PointCase::Switch) {
      const SingularValues sv = singular_values(fs_, y_[2], x0);
      ang = equilibrium_angles(sv.h01, sv.h02, sv.h12);
      s_act = std::sqrt(sv.h01 * sv.h01 + sv.h02 * sv.h02 - sv.h12 * sv.h12);
    }
    const double t_entry = t_;
    const double theta_entry = y_[1];
    double rho_min = y_[0];
    double t_min = t_;
    Vec3 x_min = x0;

    const ode::Rhs<7> f = [this](const V7& z) {
      V7 d;
      const V6 dd = rescaled_field(fs_, z.head<6>());
      d << dd, z[0];
      return d;
    };
    V7 z;
    z << y_, t_;
    V7 dz = f(z);
    double h = fixed() ? cfg_.fixed_step_rescaled : 0.05;
    while (true) {
      count_step();
      const double step = fixed() ? cfg_.fixed_step_rescaled : h;
      const auto trial = ode::dopri_step<7>(f, z, dz, step, cfg_.rel_tol, cfg_.abs_tol);
      if (!fixed() && trial.err > 1.0) {
        h = ode::next_step(step, trial.err);
        if (h < 1e-12) throw Error(Errc::StepFailure, "step size underflow in the rescaled system");
        continue;
      }
      if (!fixed()) h = std::min(ode::next_step(step, trial.err), 0.5);
      const V7 prev = z;
      const V7 dprev = dz;
      z = trial.y;
      dz = trial.dy_end;

      // output times crossed inside this step: re-step from prev with the
      // rescaled step that lands on the output time (dt/ds = rho)
      while (out_idx_ < outs_.size() && z[6] >= next_output()) {
        const double to = next_output();
        double ds = (z[6] > prev[6]) ? step * (to - prev[6]) / (z[6] - prev[6]) : step;
        V7 landed = z;
        for (int it = 0; it < 20; ++it) {
          landed = ode::dopri_step<7>(f, prev, dprev, ds, cfg_.rel_tol, cfg_.abs_tol).y;
          const double miss = landed[6] - to;
          if (std::abs(miss) <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(to)) ||
              !(landed[0] > 0.0))
            break;
          ds -= miss / landed[0];
        }
        y_ = landed.head<6>();
        t_ = to;
        record();
        ++out_idx_;
        if (out_idx_ >= outs_.size()) {
          reason_ = Termination::TimeUp;
          return true;
        }
      }
      y_ = z.head<6>();
      t_ = z[6];
      if (y_[0] < rho_min) {
        rho_min = y_[0];
        t_min = t_;
        x_min = y_.tail<3>();
      }
      record();
      if ((y_.tail<3>() - origin_).norm() > cfg_.domain_radius) {
        reason_ = Termination::LeftChartDomain;
        return true;
      }

      if (ang && !teleported) {
        const double dist = std::abs(normalize_angle(y_[1] - ang->theta_minus));
        if (y_[0] <= cfg_.eps_restart || dist < cfg_.angle_tol) {
          teleport(s_act);
          teleported = true;
          z << y_, t_;
          dz = f(z);
          if (out_idx_ < outs_.size() && t_ >= next_output()) {
            // the passage itself overran an output time; the reseeded state stands in
            while (out_idx_ < outs_.size() && t_ >= next_output()) ++out_idx_;
            if (out_idx_ >= outs_.size()) {
              reason_ = Termination::TimeUp;
              return true;
            }
          }
          continue;
        }
      }

      if (y_[0] >= exit_rho) {
        if (pc == PointCase::Switch && !teleported) {
          SwitchEvent ev;
          ev.kind = SwitchKind::Resolved;
          ev.t_switch = t_min;
          ev.x_at = x_min;
          ev.theta_in = normalize_angle(theta_entry);
          ev.theta_out = normalize_angle(y_[1]);
          ev.u_in = control_at(theta_entry);
          ev.u_out = control_at(y_[1]);
          ev.crossing_dt_bound = t_ - t_entry;
          traj_.events.push_back(ev);
          traj_.samples.back().event = true;
        }
        return false;
      }
      if (t_ <= t_entry && steps_ > cfg_.max_steps / 2)
        throw Error(Errc::StepFailure, "no progress in time near the singular circle");
    }
  }

  void teleport(double s_act) {
    SwitchEvent ev;
    ev.kind = SwitchKind::Teleport;
    ev.x_at = y_.tail<3>();
    ev.theta_in = normalize_angle(y_[1]);
    ev.u_in = control_at(y_[1]);
    const double dt_in = y_[0] / s_act;
    t_ += dt_in;
    ev.t_switch = t_;
    y_[0] = 0.0;
    const double dt_out = depart();
    ev.theta_out = normalize_angle(y_[1]);
    ev.u_out = control_at(y_[1]);
    ev.crossing_dt_bound = dt_in + dt_out;
    traj_.events.push_back(ev);
    pending_event_ = true;
    record();
  }

  FieldSet fs_;
  IntegratorConfig cfg_;
  double t_;
  double t1_;
  std::vector<double> outs_;
  std::size_t out_idx_ = 0;
  V6 y_;
  Vec3 origin_;
  double h_time_ = 1e-3;
  long steps_ = 0;
  bool pending_event_ = false;
  Termination reason_ = Termination::TimeUp;
  ExtremalTrajectory traj_;
};

void check_config(const IntegratorConfig& cfg) {
  if (!(cfg.eps_restart > 0.0 && cfg.eps_restart < cfg.eps_switch))
    throw Error(Errc::PreconditionViolated, "need 0 < eps_restart < eps_switch");
  if (!(cfg.rel_tol > 0.0 && cfg.abs_tol > 0.0 && cfg.max_step > 0.0 && cfg.angle_tol > 0.0))
    throw Error(Errc::PreconditionViolated, "tolerances and max_step must be positive");
  if (cfg.fixed_step < 0.0 || (cfg.fixed_step > 0.0 && !(cfg.fixed_step_rescaled > 0.0)))
    throw Error(Errc::PreconditionViolated, "fixed step sizes must be positive");
}

}  // namespace

Mat3 frame(const ControlSystem& sys, const Vec3& x, double lin_indep_tol) {
  return frame_of(FieldSet(sys), x, lin_indep_tol);
}

CanonicalState to_canonical(const ControlSystem& sys, const BlowupState& s) {
  const Mat3 F = frame(sys, s.x);
  return {covector(F, s.rho, s.theta, s.h3), s.x};
}

BlowupState to_blowup(const ControlSystem& sys, const CanonicalState& lam) {
  const Mat3 F = frame(sys, lam.x);
  const Vec3 h = F.transpose() * lam.xi;
  BlowupState s;
  s.rho = std::hypot(h[0], h[1]);
  s.theta = normalize_angle(std::atan2(h[1], h[0]));
  s.h3 = h[2];
  s.x = lam.x;
  return s;
}

double maximized_hamiltonian(const ControlSystem& sys, const CanonicalState& lam) {
  const double h0 = hamiltonian_lift(sys.field(0), lam);
  const double h1 = hamiltonian_lift(sys.field(1), lam);
  const double h2 = hamiltonian_lift(sys.field(2), lam);
  return h0 + std::hypot(h1, h2);
}

CanonicalState canonical_rhs(const ControlSystem& sys, const CanonicalState& lam) {
  const double h1 = hamiltonian_lift(sys.field(1), lam);
  const double h2 = hamiltonian_lift(sys.field(2), lam);
  const double rho = std::hypot(h1, h2);
  if (!(rho > 0.0)) throw Error(Errc::ChartSingular, "maximized Hamiltonian is not smooth on h1 = h2 = 0");
  const double u1 = h1 / rho, u2 = h2 / rho;
  CanonicalState d;
  d.x = sys.field(0).eval(lam.x) + u1 * sys.field(1).eval(lam.x) + u2 * sys.field(2).eval(lam.x);
  const Mat3 A = sys.field(0).jacobian(lam.x) + u1 * sys.field(1).jacobian(lam.x) +
                 u2 * sys.field(2).jacobian(lam.x);
  d.xi = -A.transpose() * lam.xi;
  return d;
}

BlowupState rhs_time(const ControlSystem& sys, const BlowupState& s) {
  return derivative_of(time_field(FieldSet(sys), pack(s)));
}

BlowupState rhs_rescaled(const ControlSystem& sys, const BlowupState& s) {
  return derivative_of(rescaled_field(FieldSet(sys), pack(s)));
}

Eigen::Matrix<double, 6, 6> rescaled_jacobian(const ControlSystem& sys, const BlowupState& s,
                                              double h) {
  return jacobian_of(FieldSet(sys), pack(s), h);
}

BlowupState incoming_manifold_point(const ControlSystem& sys, const Vec3& q, double rho,
                                    std::optional<double> h3) {
  const FieldSet fs(sys);
  const double h3v = h3 ? *h3 : frame_of(fs, q, kLinIndepTol).col(2).squaredNorm();
  const SingularValues sv = singular_values(fs, h3v, q);
  const EquilibriumAngles ang = equilibrium_angles(sv.h01, sv.h02, sv.h12);
  V6 eq;
  eq << 0.0, ang.theta_minus, h3v, q;
  const V6 v = radial_eigenvector(fs, eq);
  BlowupState s = unpack(eq + rho * v);
  s.theta = normalize_angle(s.theta);
  return s;
}

BlowupState seed_incoming(const ControlSystem& sys, const Vec3& q, double duration,
                          const IntegratorConfig& cfg, std::optional<double> h3) {
  check_config(cfg);
  if (!(duration > 0.0)) throw Error(Errc::PreconditionViolated, "duration must be positive");
  const FieldSet fs(sys);
  const double h3v = h3 ? *h3 : frame_of(fs, q, kLinIndepTol).col(2).squaredNorm();
  const SingularValues sv = singular_values(fs, h3v, q);
  const double s = std::sqrt(std::max(0.0, sv.h01 * sv.h01 + sv.h02 * sv.h02 - sv.h12 * sv.h12));
  if (!(s > 0.0)) throw Error(Errc::NoRealAngles, "no incoming extremal outside the switch case");
  const double rho_seed = std::min(1e-2 * cfg.eps_switch, 1e-2 * s * duration);
  const V6 start = pack(incoming_manifold_point(sys, q, rho_seed, h3v));
  double remaining = duration - rho_seed / s;

  // backward in time along the incoming branch; the theta direction contracts
  const ode::Rhs<6> f = [&fs](const V6& y) { return V6(-time_field_in_step(fs, y)); };
  V6 y = start;
  V6 dy = f(y);
  double h = rho_seed / s * 1e-2;
  long steps = 0;
  while (remaining > 0.0) {
    if (++steps > cfg.max_steps) throw Error(Errc::StepFailure, "seed integration did not finish");
    const double step = std::min({h, remaining, cfg.max_step});
    const auto trial = ode::dopri_step<6>(f, y, dy, step, cfg.rel_tol, cfg.abs_tol);
    if (trial.err > 1.0) {
      h = ode::next_step(step, trial.err);
      if (h < 1e-18) throw Error(Errc::StepFailure, "seed integration step underflow");
      continue;
    }
    y = trial.y;
    dy = trial.dy_end;
    remaining -= step;
    h = ode::next_step(step, trial.err);
  }
  BlowupState out = unpack(y);
  out.theta = normalize_angle(out.theta);
  return out;
}

ExtremalTrajectory integrate_extremal(const ControlSystem& sys, const BlowupState& init,
                                      double t0, double t1, const IntegratorConfig& cfg,
                                      std::span<const double> output_times) {
  check_config(cfg);
  if (!(init.rho >= 0.0) || !std::isfinite(init.rho) || !std::isfinite(init.theta) ||
      !std::isfinite(init.h3) || !init.x.allFinite())
    throw Error(Errc::PreconditionViolated, "initial state must be finite with rho >= 0");
  if (!(t1 >= t0)) throw Error(Errc::PreconditionViolated, "t_span must satisfy t1 >= t0");
  frame(sys, init.x);  // degenerate initial frame is a caller error
  Integrator it(sys, cfg, t0, t1, output_times);
  return it.run(init);
}

ExtremalTrajectory integrate_extremal(const ControlSystem& sys, const CanonicalState& init,
                                      double t0, double t1, const IntegratorConfig& cfg,
                                      std::span<const double> output_times) {
  return integrate_extremal(sys, to_blowup(sys, init), t0, t1, cfg, output_times);
}

ExtremalTrajectory integrate_limit_arc(const ControlSystem& sys, const BlowupState& init,
                                       double t0, double t1, const IntegratorConfig& cfg,
                                       double drift_tol) {
  check_config(cfg);
  if (!(t1 >= t0)) throw Error(Errc::PreconditionViolated, "t_span must satisfy t1 >= t0");
  if (init.rho > cfg.tol.sing_tol)
    throw Error(Errc::PreconditionViolated, "limit arc must start on the singular locus");
  const ClassificationReport rep = classify_point(sys, init.x, cfg.tol);
  if (rep.point_case != PointCase::Limit)
    throw Error(Errc::PreconditionViolated, "limit arc requires a limit-case point");

  // canonical state (xi, x) packed as a 6-vector
  auto lam_of = [](const V6& y) { return CanonicalState{y.head<3>(), y.tail<3>()}; };
  auto control = [&](const CanonicalState& lam) {
    return singular_control(bracket_table(sys, lam, 1), cfg.tol);
  };
  const ode::Rhs<6> f = [&](const V6& y) {
    const CanonicalState lam = lam_of(y);
    const ControlValue u = control(lam);
    const Mat3 A = sys.field(0).jacobian(lam.x) + u.u1 * sys.field(1).jacobian(lam.x) +
                   u.u2 * sys.field(2).jacobian(lam.x);
    V6 d;
    d.head<3>() = -A.transpose() * lam.xi;
    d.tail<3>() = sys.field(0).eval(lam.x) + u.u1 * sys.field(1).eval(lam.x) +
                  u.u2 * sys.field(2).eval(lam.x);
    return d;
  };
  auto drift_ok = [&](const CanonicalState& lam) {
    const BracketTable t = bracket_table(sys, lam, 1);
    const double p0 = t.h01() * t.h01() + t.h02() * t.h02() - t.h12() * t.h12();
    return std::abs(t.h1()) <= drift_tol && std::abs(t.h2()) <= drift_tol &&
           std::abs(p0) <= drift_tol;
  };
  auto sample = [&](double t, const V6& y) {
    const CanonicalState lam = lam_of(y);
    TrajectorySample s;
    s.t = t;
    s.state = to_blowup(sys, lam);
    s.u = control(lam);
    return s;
  };

  const CanonicalState lam0 = to_canonical(sys, init);
  if (!drift_ok(lam0))
    throw Error(Errc::DriftExceeded, "initial state is not on the limit locus within drift_tol");
  ExtremalTrajectory traj;
  V6 y;
  y << lam0.xi, lam0.x;
  double t = t0;
  traj.samples.push_back(sample(t, y));
  V6 dy = f(y);
  double h = std::min(cfg.max_step, 1e-3);
  long steps = 0;
  while (t < t1) {
    if (++steps > cfg.max_steps) throw Error(Errc::StepFailure, "step budget exhausted");
    double step = cfg.fixed_step > 0.0 ? cfg.fixed_step : std::min(h, cfg.max_step);
    step = std::min(step, t1 - t);
    const auto trial = ode::dopri_step<6>(f, y, dy, step, cfg.rel_tol, cfg.abs_tol);
    if (cfg.fixed_step <= 0.0 && trial.err > 1.0) {
      h = ode::next_step(step, trial.err);
      if (h < 1e-15) throw Error(Errc::StepFailure, "step size underflow on the limit arc");
      continue;
    }
    y = trial.y;
    dy = trial.dy_end;
    t = (t1 - t == step) ? t1 : t + step;
    if (cfg.fixed_step <= 0.0) h = ode::next_step(step, trial.err);
    traj.samples.push_back(sample(t, y));
    if (!drift_ok(lam_of(y))) {
      traj.terminated_reason = Termination::LeftChartDomain;
      return traj;
    }
  }
  traj.terminated_reason = Termination::TimeUp;
  return traj;
}

unsigned default_thread_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("EXTREMAL_KIT_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(v));
  }
  return n;
}

namespace {

template <class Task>
void parallel_for(std::size_t n, unsigned threads, Task&& task) {
  if (threads == 0) threads = default_thread_count();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) task(i);
    });
}

}  // namespace

std::vector<FlowOutcome> flow_map(const ControlSystem& sys, std::span<const BlowupState> inits,
                                  double t, const IntegratorConfig& cfg, unsigned threads) {
  std::vector<FlowOutcome> out(inits.size());
  parallel_for(inits.size(), threads, [&](std::size_t i) {
    try {
      ExtremalTrajectory tr = integrate_extremal(sys, inits[i], 0.0, t, cfg);
      out[i].reason = tr.terminated_reason;
      if (tr.terminated_reason == Termination::TimeUp) out[i].state = tr.samples.back().state;
    } catch (const Error& e) {
      out[i].error = e.what();
    }
  });
  return out;
}

std::vector<double> lipschitz_probe(const ControlSystem& sys, const BlowupState& center,
                                    std::span<const double> scales, double horizon,
                                    const IntegratorConfig& cfg, int pairs, unsigned threads) {
  if (pairs < 1) throw Error(Errc::PreconditionViolated, "need at least one probe pair");
  const CanonicalState c = to_canonical(sys, center);
  V6 c6;
  c6 << c.xi, c.x;

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal;
  std::vector<V6> dirs(static_cast<std::size_t>(pairs));
  for (V6& v : dirs) {
    for (int i = 0; i < 6; ++i) v[i] = normal(rng);
    v.normalize();
  }

  std::vector<BlowupState> inits;
  std::vector<double> gaps;
  for (double delta : scales)
    for (const V6& v : dirs) {
      const V6 a = c6 + 0.5 * delta * v;
      const V6 b = c6 - 0.5 * delta * v;
      inits.push_back(to_blowup(sys, {a.head<3>(), a.tail<3>()}));
      inits.push_back(to_blowup(sys, {b.head<3>(), b.tail<3>()}));
      gaps.push_back((a - b).norm());
    }
  const std::vector<FlowOutcome> fin = flow_map(sys, inits, horizon, cfg, threads);

  std::vector<double> ratios;
  std::size_t k = 0;
  for (std::size_t si = 0; si < scales.size(); ++si) {
    double best = 0.0;
    for (std::size_t p = 0; p < dirs.size(); ++p, ++k) {
      if (!(gaps[k] > 0.0)) continue;
      const FlowOutcome& A = fin[2 * k];
      const FlowOutcome& B = fin[2 * k + 1];
      if (!A.state || !B.state)
        throw Error(Errc::IntegrationFailure,
                    "probe trajectory did not reach the horizon: " + A.error + B.error);
      const CanonicalState la = to_canonical(sys, *A.state);
      const CanonicalState lb = to_canonical(sys, *B.state);
      V6 d;
      d << la.xi - lb.xi, la.x - lb.x;
      best = std::max(best, d.norm() / gaps[k]);
    }
    ratios.push_back(best);
  }
  return ratios;
}

int count_switchings(const ExtremalTrajectory& traj) {
  return static_cast<int>(traj.events.size());
}

CanonicalState sample_at(const ControlSystem& sys, const ExtremalTrajectory& traj, double t) {
  const auto& s = traj.samples;
  if (s.empty() || t < s.front().t || t > s.back().t)
    throw Error(Errc::PreconditionViolated, "time outside the trajectory span");
  auto hi = std::lower_bound(s.begin(), s.end(), t,
                             [](const TrajectorySample& a, double v) { return a.t < v; });
  const CanonicalState b = to_canonical(sys, hi->state);
  if (hi->t == t || hi == s.begin()) return b;
  const auto lo = hi - 1;
  const CanonicalState a = to_canonical(sys, lo->state);
  const double w = (t - lo->t) / (hi->t - lo->t);
  return {a.xi + w * (b.xi - a.xi), a.x + w * (b.x - a.x)};
}

}  // namespace extremal
