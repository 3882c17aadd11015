#include "extremal/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "extremal/error.hpp"
#include "extremal/ode.hpp"

namespace extremal {

ControlSystem alpha_system(double alpha, BracketSign sign) {
  const Polynomial zero;
  const Polynomial x1 = Polynomial::variable(0);
  PolyField f0({zero, zero, alpha * x1});
  PolyField f1({Polynomial::constant(1.0), zero, zero});
  PolyField f2({zero, Polynomial::constant(1.0), x1});
  return ControlSystem(std::move(f0), std::move(f1), std::move(f2), sign);
}

ControlSystem antipodal_system() {
  const Polynomial zero;
  PolyField f0({zero, zero, Polynomial::variable(0)});
  PolyField f1({Polynomial::constant(1.0), zero, zero});
  PolyField f2({zero, Polynomial::constant(1.0), zero});
  return ControlSystem(std::move(f0), std::move(f1), std::move(f2));
}

PolyField random_poly_field(std::mt19937_64& rng, int max_degree, bool dyadic) {
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  std::uniform_int_distribution<int> eighths(-8, 8);
  std::array<Polynomial, 3> comp;
  for (auto& p : comp) {
    std::vector<Monomial> terms;
    for (int a = 0; a <= max_degree; ++a)
      for (int b = 0; a + b <= max_degree; ++b)
        for (int c = 0; a + b + c <= max_degree; ++c)
          terms.push_back({dyadic ? eighths(rng) / 8.0 : coeff(rng), {a, b, c}});
    p = Polynomial(std::move(terms));
  }
  return PolyField(std::move(comp));
}

namespace {

Mat3 fd_jacobian(const PolyField& f, const Vec3& x, double h) {
  Mat3 J;
  for (int j = 0; j < 3; ++j) {
    Vec3 xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    J.col(j) = (eval_field(f, xp) - eval_field(f, xm)) / (2.0 * h);
  }
  return J;
}

}  // namespace

Vec3 fd_bracket_oracle(const PolyField& f, const PolyField& g, const Vec3& x, double h) {
  if (!(h > 0.0)) throw Error(Errc::PreconditionViolated, "finite-difference step must be positive");
  return fd_jacobian(g, x, h) * eval_field(f, x) - fd_jacobian(f, x, h) * eval_field(g, x);
}

double poisson_consistency(const ControlSystem& sys, const CanonicalState& lam, double h) {
  if (!(h > 0.0)) throw Error(Errc::PreconditionViolated, "finite-difference step must be positive");
  // lift as a function on R^6 = (xi, x), sampled through field evaluation only
  auto lift = [&](int i, const Vec3& xi, const Vec3& x) { return xi.dot(eval_field(sys.field(i), x)); };
  auto grad = [&](int i, Vec3& d_xi, Vec3& d_x) {
    for (int k = 0; k < 3; ++k) {
      Vec3 p = lam.xi, m = lam.xi;
      p[k] += h;
      m[k] -= h;
      d_xi[k] = (lift(i, p, lam.x) - lift(i, m, lam.x)) / (2.0 * h);
      p = lam.x;
      m = lam.x;
      p[k] += h;
      m[k] -= h;
      d_x[k] = (lift(i, lam.xi, p) - lift(i, lam.xi, m)) / (2.0 * h);
    }
  };
  std::array<Vec3, 3> gxi, gx;
  for (int i = 0; i < 3; ++i) grad(i, gxi[i], gx[i]);

  const BracketTable t = bracket_table(sys, lam, 1);
  double worst = 0.0;
  for (auto [i, j] : {std::pair{0, 1}, std::pair{0, 2}, std::pair{1, 2}}) {
    const double poisson = gxi[i].dot(gx[j]) - gx[i].dot(gxi[j]);
    worst = std::max(worst, std::abs(poisson - t.pair[i][j]));
  }
  return worst;
}

Vec3 bang_endpoint(double alpha, const Vec3& start, std::span<const BangPiece> pieces) {
  Vec3 x = start;
  for (const BangPiece& p : pieces) {
    const double c = std::cos(p.theta), s = std::sin(p.theta), t = p.duration;
    // x3' = (alpha + u2) x1 with x1 affine in t
    x[2] += (alpha + s) * (x[0] * t + 0.5 * c * t * t);
    x[0] += c * t;
    x[1] += s * t;
  }
  return x;
}

namespace {

class BudgetExhausted {};

/// Counts endpoint evaluations against the budget.
class Evaluator {
 public:
  Evaluator(double alpha, const Vec3& start, const Vec3& target, long budget)
      : alpha_(alpha), start_(start), target_(target), budget_(budget) {}

  Vec3 residual(std::span<const BangPiece> pieces) {
    if (count_ >= budget_) throw BudgetExhausted{};
    ++count_;
    return bang_endpoint(alpha_, start_, pieces) - target_;
  }

  long count() const { return count_; }

 private:
  double alpha_;
  Vec3 start_, target_;
  long budget_;
  long count_ = 0;
};

struct OneSwitch {
  double theta_a, theta_b, t1, t2;
  double total() const { return t1 + t2; }
};

/// Newton on (theta_b, t1, t2) with theta_a frozen. Returns false when the
/// endpoint cannot be matched with non-negative durations.
bool solve_for(Evaluator& ev, OneSwitch& u, double tol) {
  auto res = [&](const Vec3& v) {
    const BangPiece p[2] = {{u.theta_a, v[1]}, {v[0], v[2]}};
    return ev.residual(p);
  };
  Vec3 v(u.theta_b, u.t1, u.t2);
  Vec3 r = res(v);
  for (int it = 0; it < 30; ++it) {
    if (r.norm() <= 0.1 * tol) break;
    Mat3 J;
    for (int j = 0; j < 3; ++j) {
      Vec3 vp = v;
      const double h = 1e-7 * std::max(1.0, std::abs(v[j]));
      vp[j] += h;
      J.col(j) = (res(vp) - r) / h;
    }
    const Eigen::FullPivLU<Mat3> lu(J);
    if (!lu.isInvertible()) return false;
    Vec3 step = lu.solve(-r);
    double lam = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 12; ++ls) {
      Vec3 cand = v + lam * step;
      cand[1] = std::max(cand[1], 0.0);
      cand[2] = std::max(cand[2], 0.0);
      const Vec3 rc = res(cand);
      if (rc.norm() < r.norm()) {
        v = cand;
        r = rc;
        improved = true;
        break;
      }
      lam *= 0.5;
    }
    if (!improved) break;
  }
  if (!(r.norm() <= tol) || v[1] < 0.0 || v[2] < 0.0) return false;
  u.theta_b = v[0];
  u.t1 = v[1];
  u.t2 = v[2];
  return true;
}

double golden_min(const std::function<double(double)>& f, double lo, double hi, int iters) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? c : d;
}

/// Feasibility in total time T with `n` equal pieces and free angles, by
/// damped Gauss-Newton on the angles. On success `angles` holds a solution.
bool wide_feasible(Evaluator& ev, int n, double T, double tol, std::vector<double>& angles,
                   std::mt19937_64& rng, int restarts) {
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  std::vector<BangPiece> pcs(static_cast<std::size_t>(n));
  auto res = [&](const std::vector<double>& a) {
    for (int i = 0; i < n; ++i) pcs[i] = {a[i], T / n};
    return ev.residual(pcs);
  };
  for (int attempt = 0; attempt <= restarts; ++attempt) {
    std::vector<double> a = angles;
    if (attempt > 0 || a.size() != static_cast<std::size_t>(n)) {
      a.resize(static_cast<std::size_t>(n));
      for (double& v : a) v = ang(rng);
    }
    Vec3 r = res(a);
    double mu = 1e-3;
    for (int it = 0; it < 60 && r.norm() > 0.1 * tol; ++it) {
      Eigen::Matrix<double, 3, Eigen::Dynamic> J(3, n);
      for (int j = 0; j < n; ++j) {
        std::vector<double> ap = a;
        ap[j] += 1e-7;
        J.col(j) = (res(ap) - r) / 1e-7;
      }
      const Mat3 A = J * J.transpose() + mu * Mat3::Identity();
      const Eigen::VectorXd step = -J.transpose() * A.ldlt().solve(r);
      std::vector<double> cand = a;
      for (int j = 0; j < n; ++j) cand[j] += step[j];
      const Vec3 rc = res(cand);
      if (rc.norm() < r.norm()) {
        a = cand;
        r = rc;
        mu = std::max(mu * 0.3, 1e-12);
      } else {
        mu *= 10.0;
        if (mu > 1e8) break;
      }
    }
    if (r.norm() <= tol) {
      angles = a;
      return true;
    }
  }
  return false;
}

}  // namespace

DirectSearchResult direct_search_linear_example(double alpha, const Vec3& target,
                                                double extremal_time, long budget,
                                                std::uint64_t seed, const SearchOptions& opt) {
  DirectSearchResult out;
  out.target = target;
  out.extremal_time = extremal_time;
  if (budget <= 0) throw Error(Errc::Unreachable, "no evaluation budget");

  Evaluator ev(alpha, opt.start, target, budget);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  const double scale = std::isfinite(extremal_time) && extremal_time > 0.0
                           ? extremal_time
                           : std::max(1e-3, 2.0 * (target - opt.start).norm());
  std::uniform_real_distribution<double> dur(0.0, 2.0 * scale);

  std::vector<OneSwitch> feasible;
  auto keep = [&](const OneSwitch& u) {
    if (u.total() < out.best_found_time) {
      out.best_found_time = u.total();
      out.best_control = {u.theta_a, u.theta_b, u.t1, u.t2};
    }
  };

  try {
    // random restarts, up to 40% of the budget
    while (ev.count() < budget * 4 / 10) {
      OneSwitch u{ang(rng), ang(rng), dur(rng), dur(rng)};
      if (solve_for(ev, u, opt.endpoint_tol)) {
        feasible.push_back(u);
        keep(u);
      }
    }
  } catch (const BudgetExhausted&) {
  }

  // local search along the one-parameter family of matching controls
  std::sort(feasible.begin(), feasible.end(),
            [](const OneSwitch& a, const OneSwitch& b) { return a.total() < b.total(); });
  std::vector<OneSwitch> seeds;
  for (const OneSwitch& u : feasible) {
    const bool dup = std::any_of(seeds.begin(), seeds.end(), [&](const OneSwitch& s) {
      return std::abs(std::remainder(s.theta_a - u.theta_a, 2 * std::numbers::pi)) < 1e-3 &&
             std::abs(s.total() - u.total()) < 1e-6;
    });
    if (!dup) seeds.push_back(u);
    if (seeds.size() >= 8) break;
  }
  try {
    for (const OneSwitch& s0 : seeds) {
      OneSwitch warm = s0;
      auto T_of = [&](double ta) {
        OneSwitch u = warm;
        u.theta_a = ta;
        if (!solve_for(ev, u, opt.endpoint_tol)) return std::numeric_limits<double>::infinity();
        warm = u;
        keep(u);
        return u.total();
      };
      for (double width : {0.3, 0.03, 0.003}) {
        const double centre = out.best_control[0];
        warm = s0;
        if (std::abs(std::remainder(centre - s0.theta_a, 2 * std::numbers::pi)) < 0.5) {
          warm.theta_a = out.best_control[0];
          warm.theta_b = out.best_control[1];
          warm.t1 = out.best_control[2];
          warm.t2 = out.best_control[3];
        }
        golden_min(T_of, warm.theta_a - width, warm.theta_a + width, 40);
      }
    }
  } catch (const BudgetExhausted&) {
  }
  out.evaluations = ev.count();
  if (!std::isfinite(out.best_found_time))
    throw Error(Errc::Unreachable, "no one-switch bang control matched the target");
  out.best_control[0] = normalize_angle(out.best_control[0]);
  out.best_control[1] = normalize_angle(out.best_control[1]);

  if (opt.wide) {
    Evaluator wev(alpha, opt.start, target, budget);
    const int n = std::clamp(opt.wide_pieces, 1, 8);
    double lo = 0.5 * out.best_found_time, hi = out.best_found_time;
    std::vector<double> angles;
    try {
      // equal pieces cannot place the switch exactly, so grow the upper end
      // until it is feasible
      bool found = false;
      for (double grow = 1.001; grow < 2.0 && !found; grow = 1.0 + 2.0 * (grow - 1.0)) {
        if (wide_feasible(wev, n, out.best_found_time * grow, opt.endpoint_tol, angles, rng, 20)) {
          hi = out.best_found_time * grow;
          found = true;
        }
      }
      if (!found) lo = hi;
      std::vector<double> best = angles;
      for (int it = 0; it < 30 && hi - lo > 1e-5; ++it) {
        const double mid = 0.5 * (lo + hi);
        std::vector<double> a = best;
        if (wide_feasible(wev, n, mid, opt.endpoint_tol, a, rng, 10)) {
          hi = mid;
          best = a;
        } else {
          lo = mid;
        }
      }
      angles = best;
    } catch (const BudgetExhausted&) {
    }
    if (!angles.empty()) {
      out.wide_best_time = hi;
      for (double a : angles) out.wide_control.push_back({normalize_angle(a), hi / n});
    }
    out.evaluations += wev.count();
  }
  return out;
}

namespace {

/// One scalar model equation integrated with Dormand-Prince, sampled on an
/// increasing grid starting at 0.
std::vector<double> integrate_scalar(const std::function<double(double, double)>& f, double y0,
                                     const std::vector<double>& grid, double rel_tol,
                                     double abs_tol) {
  // autonomous form (theta, rho)
  const ode::Rhs<2> rhs = [&](const ode::State<2>& z) {
    ode::State<2> d;
    d << 1.0, f(z[0], z[1]);
    return d;
  };
  ode::State<2> z(0.0, y0);
  ode::State<2> dz = rhs(z);
  std::vector<double> out;
  out.reserve(grid.size());
  double h = 1e-6 * std::max(y0, 1e-12);
  long steps = 0;
  for (double target : grid) {
    while (z[0] < target) {
      if (++steps > 50'000'000)
        throw Error(Errc::IntegrationFailure, "model equation needs too many steps");
      const bool last = h >= target - z[0];
      const double step = last ? target - z[0] : h;
      const auto trial = ode::dopri_step<2>(rhs, z, dz, step, rel_tol, abs_tol);
      if (trial.err > 1.0) {
        h = ode::next_step(step, trial.err);
        if (h < 1e-300) throw Error(Errc::IntegrationFailure, "step underflow in the model equation");
        continue;
      }
      z = trial.y;
      if (last) z[0] = target;
      dz = trial.dy_end;
      h = ode::next_step(step, trial.err);
      if (!(z[1] > 0.0) || !std::isfinite(z[1]))
        throw Error(Errc::IntegrationFailure, "model solution left rho > 0");
    }
    out.push_back(z[1]);
  }
  return out;
}

}  // namespace

ModelOdeRun model_radial_ode(double rho0, double eta, const ModelOdeConfig& cfg) {
  if (!(rho0 > 0.0) || !(eta > 0.0 && eta < 1.0))
    throw Error(Errc::PreconditionViolated, "need rho0 > 0 and 0 < eta < 1");
  ModelOdeRun run;
  run.rho0 = rho0;
  run.eta = eta;
  run.T = cfg.T > 0.0 ? cfg.T : 3.0 * (1.0 + eta) / (1.0 - eta * eta);
  run.theta1 = run.T * rho0;

  // rho~(theta) = rho(-theta) and rho^(theta) = rho(eta theta)
  const auto neg = [](double th, double r) { return r * (r - std::sin(th)) / (1.0 - std::cos(th) + r); };
  const auto pos = [eta](double th, double r) {
    return -eta * r * (r + std::sin(eta * th)) / (1.0 - std::cos(eta * th) + r);
  };

  if (run.theta1 < cfg.theta_max) {
    const int n = std::max(cfg.grid_points, 2);
    for (int i = 1; i <= n; ++i)
      run.theta_grid.push_back(run.theta1 + (cfg.theta_max - run.theta1) * i / n);
  }
  run.rho_neg = integrate_scalar(neg, rho0, run.theta_grid, cfg.rel_tol, cfg.abs_tol);
  run.rho_pos = integrate_scalar(pos, rho0, run.theta_grid, cfg.rel_tol, cfg.abs_tol);
  run.inequality_holds = !run.theta_grid.empty();
  for (std::size_t i = 0; i < run.theta_grid.size(); ++i)
    if (!(run.rho_neg[i] < run.rho_pos[i])) run.inequality_holds = false;

  const std::vector<double> early{1e-3 * run.theta1};
  run.initially_reversed = integrate_scalar(neg, rho0, early, cfg.rel_tol, cfg.abs_tol)[0] >
                           integrate_scalar(pos, rho0, early, cfg.rel_tol, cfg.abs_tol)[0];

  // theta = s t, rho = s + s^2 x(t)
  std::vector<double> prof;
  for (int k = 1; k <= 100; ++k) prof.push_back(rho0 * run.T * k / 100.0);
  const std::vector<double> pn = integrate_scalar(neg, rho0, prof, cfg.rel_tol, cfg.abs_tol);
  const std::vector<double> pp = integrate_scalar(pos, rho0, prof, cfg.rel_tol, cfg.abs_tol);
  for (std::size_t k = 0; k < prof.size(); ++k) {
    const double t = prof[k] / rho0;
    const double x = (pn[k] - rho0) / (rho0 * rho0);
    const double y = (pp[k] - rho0) / (rho0 * rho0);
    run.profile_error = std::max({run.profile_error, std::abs(x - (t - 0.5 * t * t)),
                                  std::abs(y - (-eta * t - 0.5 * eta * eta * t * t))});
  }
  return run;
}

namespace {

struct LogSample {
  double t;
  double L;  // log(rho / rho0)
};

std::vector<LogSample> log_samples(std::span<const ExtremalTrajectory> runs) {
  std::vector<LogSample> s;
  for (const ExtremalTrajectory& tr : runs) {
    if (!tr.events.empty())
      throw Error(Errc::PreconditionViolated, "envelope fit needs switch-free runs");
    if (tr.samples.empty()) continue;
    const double rho0 = tr.samples.front().state.rho;
    const double t0 = tr.samples.front().t;
    for (const TrajectorySample& p : tr.samples) {
      if (!(p.state.rho > 0.0) || !(rho0 > 0.0))
        throw Error(Errc::EnvelopeViolated, "rho reached zero, no positive envelope exists");
      s.push_back({p.t - t0, std::log(p.state.rho / rho0)});
    }
  }
  if (s.empty()) throw Error(Errc::PreconditionViolated, "no samples to fit");
  return s;
}

double log_c_for(const std::vector<LogSample>& s, double a) {
  double m = std::numeric_limits<double>::infinity();
  for (const LogSample& p : s) m = std::min(m, p.L + a * p.t);
  return m;
}

}  // namespace

EnvelopeFit envelope_fit(std::span<const ExtremalTrajectory> runs, double a_floor) {
  if (!(a_floor > 0.0)) throw Error(Errc::PreconditionViolated, "a_floor must be positive");
  const std::vector<LogSample> s = log_samples(runs);
  double t_ref = 0.0;
  double a_hi = a_floor;
  for (const LogSample& p : s) {
    t_ref = std::max(t_ref, p.t);
    if (p.t > 0.0) a_hi = std::max(a_hi, 2.0 * std::abs(p.L) / p.t + 1.0);
  }
  // log c(a) is concave in a, so is the bound at t_ref / 2
  const auto neg_bound = [&](double a) { return -(log_c_for(s, a) - 0.5 * a * t_ref); };
  double a = t_ref > 0.0 ? golden_min(neg_bound, a_floor, a_hi, 200) : a_floor;
  if (neg_bound(a_floor) <= neg_bound(a)) a = a_floor;
  EnvelopeFit fit{std::exp(log_c_for(s, a)), a};
  if (!(fit.c > 0.0) || !std::isfinite(fit.c))
    throw Error(Errc::EnvelopeViolated, "no positive constant c bounds the runs");
  return fit;
}

double envelope_violation(std::span<const ExtremalTrajectory> runs, const EnvelopeFit& fit) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const ExtremalTrajectory& tr : runs) {
    if (tr.samples.empty()) continue;
    const double rho0 = tr.samples.front().state.rho;
    const double t0 = tr.samples.front().t;
    for (const TrajectorySample& p : tr.samples)
      worst = std::max(worst, fit.c * std::exp(-fit.a * (p.t - t0)) * rho0 - p.state.rho);
  }
  return worst;
}

}  // namespace extremal
