#include "extremal/verify.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "extremal/error.hpp"
#include "extremal/extremal_flow.hpp"
#include "extremal/io.hpp"
#include "extremal/oracles.hpp"
#include "extremal/singular_analysis.hpp"

namespace extremal {

bool VerificationReport::passed() const {
  for (const CheckResult& c : checks)
    if (!c.pass) return false;
  return !checks.empty();
}

std::string VerificationReport::to_text() const {
  std::ostringstream os;
  for (const auto& [k, v] : environment) os << "# " << k << " = " << v << '\n';
  for (const CheckResult& c : checks) {
    os << (c.pass ? "PASS " : "FAIL ") << c.name << "  measured=" << format_double(c.measured)
       << "  tol=" << format_double(c.tolerance) << "  time=" << format_double(std::round(c.seconds * 1000) / 1000) << "s";
    if (!c.detail.empty()) os << "  " << c.detail;
    os << '\n';
  }
  os << (passed() ? "overall: PASS" : "overall: FAIL") << '\n';
  return os.str();
}

std::string VerificationReport::to_json() const {
  nlohmann::json doc;
  doc["environment"] = nlohmann::json::object();
  for (const auto& [k, v] : environment) doc["environment"][k] = v;
  doc["checks"] = nlohmann::json::array();
  for (const CheckResult& c : checks)
    doc["checks"].push_back({{"name", c.name},
                             {"pass", c.pass},
                             {"measured", c.measured},
                             {"tolerance", c.tolerance},
                             {"seconds", c.seconds},
                             {"time_limit", c.time_limit},
                             {"detail", c.detail}});
  doc["passed"] = passed();
  return doc.dump(2) + "\n";
}

namespace {

using Clock = std::chrono::steady_clock;

/// Runs one check, timing it and turning exceptions into failures.
CheckResult timed(const std::string& name, double time_limit, const std::function<void(CheckResult&)>& body) {
  CheckResult r;
  r.name = name;
  r.time_limit = time_limit;
  const auto start = Clock::now();
  try {
    body(r);
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (time_limit > 0.0 && r.seconds > time_limit) {
    r.pass = false;
    r.detail += " (over time limit " + format_double(time_limit) + "s)";
  }
  return r;
}

std::string fmt(double v) { return format_double(v); }

double dist(const ControlValue& a, const ControlValue& b) { return std::hypot(a.u1 - b.u1, a.u2 - b.u2); }

/// Largest |cached [f_i, f_j] - FD oracle| over i < j in {0,1,2}.
double bracket_oracle_error(const ControlSystem& sys, const Vec3& x, double h = 1e-5) {
  double worst = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      const std::string w{static_cast<char>('0' + i), static_cast<char>('0' + j)};
      const Vec3 sym = sys.bracket(w).eval(x);
      const Vec3 fd = fd_bracket_oracle(sys.field(i), sys.field(j), x, h);
      worst = std::max(worst, (sym - fd).cwiseAbs().maxCoeff());
    }
  return worst;
}

Vec3 uniform_box(std::mt19937_64& rng, const Vec3& centre, double half) {
  std::uniform_real_distribution<double> u(-half, half);
  return centre + Vec3(u(rng), u(rng), u(rng));
}

// 1
CheckResult check_jump_formula(const VerifyOptions& opt) {
  return timed("jump_formula", 5.0, [&](CheckResult& r) {
    const ControlSystem sys = alpha_system(2.0, opt.sign);
    const ClassificationReport rep = classify_point(sys, Vec3::Zero());
    const double s3 = std::sqrt(3.0) / 2.0;
    const ControlValue want_minus{s3, -0.5}, want_plus{-s3, -0.5};
    const JumpControls j = jump_controls(rep.h01, rep.h02, rep.h12);
    const double closed = std::max(dist(j.minus, want_minus), dist(j.plus, want_plus));

    const BlowupState z = seed_incoming(sys, Vec3::Zero(), 0.5);
    const ExtremalTrajectory tr = integrate_extremal(sys, z, 0.0, 1.0);
    double integ = INFINITY;
    if (tr.events.size() == 1)
      integ = std::max(dist(tr.events[0].u_in, want_minus), dist(tr.events[0].u_out, want_plus));
    r.measured = std::max(closed, integ);
    r.tolerance = 1e-5;
    r.pass = closed <= 1e-9 && integ <= 1e-5;
    r.detail = "closed-form error " + fmt(closed) + " (tol 1e-9); integrated switch error " + fmt(integ) +
               " (tol 1e-5); events " + std::to_string(tr.events.size());
    if (tr.events.size() == 1) r.detail += "; t_switch " + fmt(tr.events[0].t_switch);
  });
}

// 2
CheckResult check_antipodal(const VerifyOptions& opt) {
  return timed("antipodal_jump", 0.0, [&](CheckResult& r) {
    (void)opt;
    const ControlSystem sys = antipodal_system();
    const ClassificationReport rep = classify_point(sys, Vec3::Zero());
    const JumpControls j = jump_controls(rep.h01, rep.h02, rep.h12);
    const double err = std::hypot(j.plus.u1 + j.minus.u1, j.plus.u2 + j.minus.u2);
    r.measured = std::max(err, std::abs(rep.h12));
    r.tolerance = 1e-9;
    r.pass = std::abs(rep.h12) <= 1e-12 && err <= 1e-9;
    r.detail = "h12 " + fmt(rep.h12) + "; |u+ + u-| " + fmt(err) + "; u- (" + fmt(j.minus.u1) + ", " + fmt(j.minus.u2) + ")";
  });
}

// 3
CheckResult check_trichotomy(const VerifyOptions& opt) {
  return timed("trichotomy", 1.0, [&](CheckResult& r) {
    const std::pair<double, PointCase> cases[] = {
        {2.0, PointCase::Switch}, {1.0, PointCase::Limit}, {0.5, PointCase::SmoothBang}};
    int wrong = 0;
    for (const auto& [alpha, want] : cases) {
      const PointCase got = classify_point(alpha_system(alpha, opt.sign), Vec3::Zero()).point_case;
      if (got != want) ++wrong;
      r.detail += "alpha " + fmt(alpha) + " -> " + std::string(to_string(got)) + "; ";
    }
    r.measured = wrong;
    r.tolerance = 0;
    r.pass = wrong == 0;
  });
}

// 4
CheckResult check_one_switch(const VerifyOptions& opt, const ControlSystem& sys, const Vec3& centre,
                             int count, double half, const std::string& name, double limit) {
  return timed(name, limit, [&](CheckResult& r) {
    std::mt19937_64 rng(opt.seed + 4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int worst = 0, with_switch = 0, skipped = 0;
    for (int i = 0; i < count; ++i) {
      const Vec3 q = uniform_box(rng, centre, half);
      const ClassificationReport rep = classify_point(sys, q);
      if (rep.point_case != PointCase::Switch) {
        ++skipped;
        continue;
      }
      const double s = std::sqrt(rep.r * rep.r - rep.h12 * rep.h12);
      BlowupState z;
      switch (i % 3) {
        case 0:  // exactly on the incoming branch
          z = seed_incoming(sys, q, 1e-3 + 5e-2 * u(rng));
          break;
        case 1:  // incoming branch, perturbed
          z = seed_incoming(sys, q, 1e-3 + 5e-2 * u(rng));
          z.theta += 1e-8 * (u(rng) - 0.5);
          z.rho *= 1.0 + 1e-8 * (u(rng) - 0.5);
          break;
        default:  // anywhere near the singular point
          z.rho = 1e-7 + 5e-2 * u(rng);
          z.theta = std::numbers::pi * (2.0 * u(rng) - 1.0);
          z.h3 = sys.frame_norm(q) * sys.frame_norm(q) * (0.5 + u(rng));
          z.x = q;
          break;
      }
      const double tbar = std::max(z.rho / s, 1e-2);
      const ExtremalTrajectory tr = integrate_extremal(sys, z, 0.0, 2.0 * tbar);
      const int n = count_switchings(tr);
      worst = std::max(worst, n);
      if (n > 0) ++with_switch;
    }
    r.measured = worst;
    r.tolerance = 1;
    r.pass = worst <= 1 && skipped < count;
    r.detail = std::to_string(count - skipped) + " runs, " + std::to_string(with_switch) +
               " with one switch, max events " + std::to_string(worst);
    if (skipped) r.detail += ", " + std::to_string(skipped) + " inits outside the switch case skipped";
  });
}

// 5
CheckResult check_envelope(const VerifyOptions& opt, const ControlSystem& sys, const Vec3& centre,
                           int runs_n, const std::string& name, double limit) {
  return timed(name, limit, [&](CheckResult& r) {
    std::mt19937_64 rng(opt.seed + 5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<ExtremalTrajectory> runs;
    for (int i = 0; i < runs_n; ++i) {
      BlowupState z;
      z.x = uniform_box(rng, centre, 0.05);
      z.rho = std::pow(10.0, -3.0 + 2.0 * u(rng));
      z.theta = std::numbers::pi * (2.0 * u(rng) - 1.0);
      z.h3 = sys.frame_norm(z.x) * sys.frame_norm(z.x) * (0.5 + u(rng));
      runs.push_back(integrate_extremal(sys, z, 0.0, 1.0));
    }
    const EnvelopeFit fit = envelope_fit(runs);
    const double viol = envelope_violation(runs, fit);
    r.measured = viol;
    r.tolerance = 1e-9;
    r.pass = fit.c > 0.0 && fit.a > 0.0 && viol <= 1e-9;
    r.detail = "c " + fmt(fit.c) + ", a " + fmt(fit.a) + " over " + std::to_string(runs_n) + " runs";
  });
}

// 6
CheckResult check_eigenvalues(const ControlSystem& sys, const Vec3& q, const std::string& name) {
  return timed(name, 0.0, [&](CheckResult& r) {
    const Vec3 lam = canonical_covector(sys, q);
    const BracketTable t = bracket_table(sys, {lam, q}, 1);
    const EquilibriumAngles ang = equilibrium_angles(t.h01(), t.h02(), t.h12());
    const double s = std::sqrt(t.h01() * t.h01() + t.h02() * t.h02() - t.h12() * t.h12());
    double worst = 0.0;
    for (int k = 0; k < 2; ++k) {
      BlowupState z;
      z.rho = 0.0;
      z.theta = k == 0 ? ang.theta_minus : ang.theta_plus;
      z.h3 = t.h3();
      z.x = q;
      const auto J = rescaled_jacobian(sys, z);
      const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::Matrix<double, 6, 6>>(J).eigenvalues();
      double lo = INFINITY, hi = -INFINITY;
      for (int i = 0; i < 6; ++i) {
        lo = std::min(lo, ev[i].real());
        hi = std::max(hi, ev[i].real());
      }
      // radial rate is -s at theta_minus and +s at theta_plus
      const double radial = J(0, 0);
      const double want_radial = k == 0 ? -s : s;
      worst = std::max({worst, std::abs(hi - s), std::abs(lo + s), std::abs(radial - want_radial)});
      r.detail += std::string(k == 0 ? "theta-: " : "theta+: ") + "eig [" + fmt(lo) + ", " + fmt(hi) + "] d(rho')/d(rho) " + fmt(radial) + "; ";
    }
    r.measured = worst;
    r.tolerance = 1e-6;
    r.pass = worst <= 1e-6;
    r.detail += "expected +-" + fmt(s);
  });
}

// 7
CheckResult check_brackets(const VerifyOptions& opt) {
  return timed("bracket_oracles", 30.0, [&](CheckResult& r) {
    std::mt19937_64 rng(opt.seed + 7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double oracle = 0.0, poisson = 0.0;
    bool jacobi = true;
    for (int k = 0; k < 20; ++k) {
      const PolyField f0 = random_poly_field(rng, 2), f1 = random_poly_field(rng, 2),
                      f2 = random_poly_field(rng, 2);
      const ControlSystem sys(f0, f1, f2, opt.sign);
      for (int p = 0; p < 10; ++p) oracle = std::max(oracle, bracket_oracle_error(sys, Vec3(u(rng), u(rng), u(rng))));
      for (int p = 0; p < 5; ++p) {
        const CanonicalState lam{Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng))};
        poisson = std::max(poisson, poisson_consistency(sys, lam, 1e-5));
      }
      // exact identity on dyadic coefficients
      const PolyField a = random_poly_field(rng, 2, true), b = random_poly_field(rng, 2, true),
                      c = random_poly_field(rng, 2, true);
      const PolyField sum = lie_bracket(a, lie_bracket(b, c)) + lie_bracket(b, lie_bracket(c, a)) +
                            lie_bracket(c, lie_bracket(a, b));
      if (!sum.is_zero()) jacobi = false;
    }
    r.measured = std::max(oracle, poisson);
    r.tolerance = 1e-6;
    r.pass = oracle <= 1e-6 && poisson <= 1e-6 && jacobi;
    r.detail = "symbolic vs FD " + fmt(oracle) + "; Poisson residual " + fmt(poisson) + "; Jacobi exact " +
               (jacobi ? "yes" : "no");
  });
}

// 8
CheckResult check_singular_control(const VerifyOptions& opt) {
  return timed("singular_control_identities", 0.0, [&](CheckResult& r) {
    std::mt19937_64 rng(opt.seed + 8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const SingularTolerances tol;
    double worst = 0.0;
    int mismatches = 0;
    for (int k = 0; k < 1000; ++k) {
      BracketTable t;
      double h12;
      do h12 = u(rng);
      while (std::abs(h12) <= 1e-3);
      const double h01 = u(rng), h02 = u(rng);
      t.pair[0][1] = h01;
      t.pair[1][0] = -h01;
      t.pair[0][2] = h02;
      t.pair[2][0] = -h02;
      t.pair[1][2] = h12;
      t.pair[2][1] = -h12;
      const ControlValue uc = singular_control(t);
      const double r2 = h01 * h01 + h02 * h02;
      const double n2 = uc.u1 * uc.u1 + uc.u2 * uc.u2;
      worst = std::max(worst, std::abs(n2 * h12 * h12 - r2) / r2);
      const double gap = r2 - h12 * h12;
      SingularArcVerdict want = gap > 0 ? SingularArcVerdict::ExcludedNormTooBig : SingularArcVerdict::ExcludedByGoh;
      if (std::abs(gap) <= tol.limit_tol * (r2 + h12 * h12)) want = SingularArcVerdict::PossibleLimit;
      if (singular_arc_admissible(t) != want) ++mismatches;
    }
    r.measured = worst;
    r.tolerance = 1e-12;
    r.pass = worst <= 1e-12 && mismatches == 0;
    r.detail = "norm identity relative error " + fmt(worst) + "; verdict mismatches " + std::to_string(mismatches);
  });
}

// 9
CheckResult check_lipschitz(const VerifyOptions& opt) {
  return timed("lipschitz_probe", 120.0, [&](CheckResult& r) {
    const std::vector<double> scales{1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    IntegratorConfig cfg;
    cfg.seed = opt.seed;
    // centre on the incoming branch, rho_c away from the singular point
    const double rho_c = 3e-3;
    const ControlSystem sw = alpha_system(2.0, opt.sign);
    const double s = std::sqrt(3.0);
    const BlowupState c_sw = seed_incoming(sw, Vec3::Zero(), rho_c / s);
    const std::vector<double> a = lipschitz_probe(sw, c_sw, scales, 2.0 * rho_c / s, cfg, 16, opt.threads);

    const ControlSystem sb = alpha_system(0.5, opt.sign);
    BlowupState c_sb;
    c_sb.rho = rho_c;
    c_sb.theta = 0.5;
    c_sb.h3 = 1.0;
    const std::vector<double> b = lipschitz_probe(sb, c_sb, scales, 2.0 * rho_c / std::sqrt(0.75), cfg, 16, opt.threads);

    const double growth = a.back() / a.front();
    const double spread = *std::max_element(b.begin(), b.end()) / *std::min_element(b.begin(), b.end());
    r.measured = growth;
    r.tolerance = 10.0;
    r.pass = growth >= 10.0 && spread < 10.0;
    r.detail = "alpha 2 ratios";
    for (double v : a) r.detail += " " + fmt(v);
    r.detail += " (growth " + fmt(growth) + ", need >= 10); alpha 0.5 ratios";
    for (double v : b) r.detail += " " + fmt(v);
    r.detail += " (spread " + fmt(spread) + ", need < 10)";
  });
}

// 10
CheckResult check_model_ode(const VerifyOptions&) {
  return timed("model_ode", 10.0, [&](CheckResult& r) {
    bool ok = true;
    double worst_margin = INFINITY;
    for (double rho0 : {1e-2, 1e-3, 1e-4}) {
      const ModelOdeRun run = model_radial_ode(rho0, 0.1);
      ok = ok && run.inequality_holds && run.initially_reversed;
      for (std::size_t i = 0; i < run.theta_grid.size(); ++i)
        worst_margin = std::min(worst_margin, (run.rho_pos[i] - run.rho_neg[i]) / rho0);
      r.detail += "rho0 " + fmt(rho0) + ": theta1 " + fmt(run.theta1) + ", " +
                  std::to_string(run.theta_grid.size()) + " grid points, holds " +
                  (run.inequality_holds ? "yes" : "no") + ", profile error " + fmt(run.profile_error) + "; ";
    }
    r.measured = worst_margin;
    r.tolerance = 0.0;
    r.pass = ok && worst_margin > 0.0;
  });
}

// 11
CheckResult check_direct_search(const VerifyOptions& opt) {
  return timed("direct_search", 300.0, [&](CheckResult& r) {
    const ControlSystem sys = alpha_system(2.0, opt.sign);
    std::mt19937_64 rng(opt.seed + 11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = INFINITY;
    long evals = 0;
    for (int k = 0; k < 10; ++k) {
      // switch point away from x1 = 0, short arcs on both sides
      const Vec3 q(0.05 + 0.05 * u(rng), -0.02 + 0.04 * u(rng), -0.02 + 0.04 * u(rng));
      const double t1 = 0.01 + 0.04 * u(rng), t2 = 0.01 + 0.04 * u(rng);
      const BlowupState z = seed_incoming(sys, q, t1);
      const ExtremalTrajectory tr = integrate_extremal(sys, z, 0.0, t1 + t2);
      if (tr.events.size() != 1) throw Error(Errc::IntegrationFailure, "reference extremal did not switch once");
      SearchOptions so;
      so.start = z.x;
      so.wide = opt.wide;
      const double T = t1 + t2;
      const DirectSearchResult res =
          direct_search_linear_example(2.0, tr.samples.back().state.x, T, 100000, opt.seed + k, so);
      evals += res.evaluations;
      worst = std::min(worst, res.best_found_time - T);
      if (opt.wide) worst = std::min(worst, res.wide_best_time - T);
    }
    r.measured = worst;
    r.tolerance = -1e-3;
    r.pass = worst >= -1e-3;
    r.detail = "min over 10 targets of (best found - T*) " + fmt(worst) + "; " + std::to_string(evals) + " evaluations";
  });
}

// 12
CheckResult check_continuity(const VerifyOptions& opt) {
  return timed("flow_continuity", 0.0, [&](CheckResult& r) {
    const ControlSystem sys = alpha_system(2.0, opt.sign);
    const double T = 0.5;
    std::vector<double> outs;
    for (int i = 1; i <= 200; ++i) outs.push_back(T * i / 200);
    BlowupState ref;  // the singular point itself, covector f1 x f2
    ref.h3 = sys.frame_norm(Vec3::Zero()) * sys.frame_norm(Vec3::Zero());
    const ExtremalTrajectory rt = integrate_extremal(sys, ref, 0.0, T, {}, outs);
    std::vector<double> dev;
    for (int k = 3; k <= 12; ++k) {
      BlowupState z = ref;
      z.rho = std::ldexp(1.0, -k);
      z.theta = 0.3;
      const ExtremalTrajectory tr = integrate_extremal(sys, z, 0.0, T, {}, outs);
      double d = 0.0;
      for (double t : outs) {
        const CanonicalState a = sample_at(sys, rt, t), b = sample_at(sys, tr, t);
        d = std::max(d, std::sqrt((a.xi - b.xi).squaredNorm() + (a.x - b.x).squaredNorm()));
      }
      dev.push_back(d);
    }
    double worst = 0.0;
    for (std::size_t i = 1; i < dev.size(); ++i) worst = std::max(worst, dev[i] / dev[i - 1]);
    r.measured = worst;
    r.tolerance = 1.05;
    r.pass = worst <= 1.05;
    r.detail = "sup-deviation k=3..12:";
    for (double d : dev) r.detail += " " + fmt(d);
  });
}

std::vector<std::pair<std::string, std::string>> environment(const VerifyOptions& opt) {
  const IntegratorConfig cfg;
  return {{"seed", std::to_string(opt.seed)},
          {"bracket_sign", opt.sign == BracketSign::Standard ? "standard" : "flipped"},
          {"threads", std::to_string(opt.threads ? opt.threads : default_thread_count())},
          {"eps_switch", fmt(cfg.eps_switch)},
          {"eps_restart", fmt(cfg.eps_restart)},
          {"rel_tol", fmt(cfg.rel_tol)},
          {"abs_tol", fmt(cfg.abs_tol)}};
}

}  // namespace

VerificationReport run_builtin_suite(const VerifyOptions& opt) {
  VerificationReport rep;
  rep.environment = environment(opt);
  rep.checks.push_back(check_jump_formula(opt));
  rep.checks.push_back(check_antipodal(opt));
  rep.checks.push_back(check_trichotomy(opt));
  rep.checks.push_back(check_one_switch(opt, alpha_system(2.0, opt.sign), Vec3::Zero(), 1000, 0.05,
                                        "one_switch_monte_carlo", 120.0));
  rep.checks.push_back(check_envelope(opt, alpha_system(0.5, opt.sign), Vec3::Zero(), 100, "envelope_fit", 60.0));
  rep.checks.push_back(check_eigenvalues(alpha_system(2.0, opt.sign), Vec3::Zero(), "equilibrium_eigenvalues"));
  rep.checks.push_back(check_brackets(opt));
  rep.checks.push_back(check_singular_control(opt));
  rep.checks.push_back(check_lipschitz(opt));
  rep.checks.push_back(check_model_ode(opt));
  rep.checks.push_back(check_direct_search(opt));
  rep.checks.push_back(check_continuity(opt));
  return rep;
}

VerificationReport run_spec_suite(const ControlSystem& sys, const Vec3& point, const VerifyOptions& opt) {
  VerificationReport rep;
  rep.environment = environment(opt);
  rep.environment.emplace_back("point", fmt(point[0]) + " " + fmt(point[1]) + " " + fmt(point[2]));

  rep.checks.push_back(timed("bracket_oracle", 0.0, [&](CheckResult& r) {
    std::mt19937_64 rng(opt.seed + 1);
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
      const Vec3 x = uniform_box(rng, point, 0.5);
      double scale = 1.0;
      for (const char* w : {"01", "02", "12"}) scale = std::max(scale, sys.bracket(w).eval(x).norm());
      worst = std::max(worst, bracket_oracle_error(sys, x) / scale);
    }
    r.measured = worst;
    r.tolerance = 1e-6;
    r.pass = worst <= 1e-6;
    r.detail = "relative symbolic vs FD bracket error at 10 points";
  }));
  rep.checks.push_back(timed("poisson_consistency", 0.0, [&](CheckResult& r) {
    std::mt19937_64 rng(opt.seed + 2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
      const CanonicalState lam{Vec3(u(rng), u(rng), u(rng)), uniform_box(rng, point, 0.5)};
      const BracketTable t = bracket_table(sys, lam, 1);
      const double scale = std::max({1.0, std::abs(t.h01()), std::abs(t.h02()), std::abs(t.h12())});
      worst = std::max(worst, poisson_consistency(sys, lam, 1e-5) / scale);
    }
    r.measured = worst;
    r.tolerance = 1e-6;
    r.pass = worst <= 1e-6;
    r.detail = "relative residual at 5 random covectors";
  }));

  PointCase pc = PointCase::Degenerate;
  rep.checks.push_back(timed("classification", 0.0, [&](CheckResult& r) {
    const ClassificationReport c = classify_point(sys, point);
    pc = c.point_case;
    r.measured = c.r * c.r - c.h12 * c.h12;
    r.tolerance = 0.0;
    r.pass = true;
    r.detail = "case " + std::string(to_string(pc)) + ", r " + fmt(c.r) + ", h12 " + fmt(c.h12);
  }));
  rep.checks.push_back(check_model_ode(opt));

  if (pc == PointCase::Switch) {
    rep.checks.push_back(timed("jump_formula_consistency", 0.0, [&](CheckResult& r) {
      const ClassificationReport c = classify_point(sys, point);
      double worst = 0.0;
      for (double th : {*c.theta_minus, *c.theta_plus})
        worst = std::max(worst, std::abs(c.h12 + std::cos(th) * c.h02 - std::sin(th) * c.h01));
      worst = std::max({worst, dist(*c.u_minus, {std::cos(*c.theta_minus), std::sin(*c.theta_minus)}),
                        dist(*c.u_plus, {std::cos(*c.theta_plus), std::sin(*c.theta_plus)})});
      r.measured = worst;
      r.tolerance = 1e-10;
      r.pass = worst <= 1e-10 * std::max(1.0, c.r);
      r.detail = "u- (" + fmt(c.u_minus->u1) + ", " + fmt(c.u_minus->u2) + "), u+ (" + fmt(c.u_plus->u1) + ", " +
                 fmt(c.u_plus->u2) + ")";
    }));
    rep.checks.push_back(check_eigenvalues(sys, point, "equilibrium_eigenvalues"));
    rep.checks.push_back(check_one_switch(opt, sys, point, 300, 0.02, "one_switch_monte_carlo", 0.0));
  } else if (pc == PointCase::SmoothBang) {
    rep.checks.push_back(check_envelope(opt, sys, point, 50, "envelope_fit", 0.0));
  } else if (pc == PointCase::Limit) {
    rep.checks.push_back(timed("limit_locus", 0.0, [&](CheckResult& r) {
      const Vec3 lam = canonical_covector(sys, point);
      const LimitResiduals res = limit_locus_residuals(sys, {lam, point});
      const BracketTable t = bracket_table(sys, {lam, point}, 1);
      const double scale = t.h01() * t.h01() + t.h02() * t.h02() + t.h12() * t.h12();
      r.measured = std::abs(res.p0) / scale;
      r.tolerance = SingularTolerances{}.limit_tol;
      r.pass = r.measured <= r.tolerance;
      r.detail = "p0 " + fmt(res.p0) + ", p1 " + fmt(res.p1);
    }));
  }
  return rep;
}

}  // namespace extremal
