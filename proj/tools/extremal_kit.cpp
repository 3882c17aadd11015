#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "extremal/error.hpp"
#include "extremal/extremal_flow.hpp"
#include "extremal/io.hpp"
#include "extremal/singular_analysis.hpp"
#include "extremal/verify.hpp"

namespace {

using namespace extremal;

enum Exit { kOk = 0, kVerifyFailed = 1, kUsage = 2, kNumeric = 3 };

struct Common {
  std::string spec;
  std::vector<std::string> params;
  std::vector<double> point{0.0, 0.0, 0.0};
  std::string format = "text";
};

struct Tuning {
  IntegratorConfig cfg;
};

std::map<std::string, double> parse_params(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const std::string& it : items) {
    const auto eq = it.find('=');
    if (eq == std::string::npos || eq == 0)
      throw Error(Errc::ParseError, "--param expects name=value, got '" + it + "'");
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(it.substr(eq + 1), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != it.size() - eq - 1)
      throw Error(Errc::ParseError, "--param value is not a number in '" + it + "'");
    out[it.substr(0, eq)] = v;
  }
  return out;
}

SystemSpec load(const Common& c) {
  if (!std::filesystem::exists(c.spec)) throw Error(Errc::ParseError, "spec file not found: " + c.spec);
  return load_system_spec(c.spec, parse_params(c.params));
}

Vec3 point_of(const Common& c) { return Vec3(c.point[0], c.point[1], c.point[2]); }

BlowupState parse_init(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    try {
      v.push_back(std::stod(item, &used));
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0) throw Error(Errc::ParseError, "--init entry is not a number: '" + item + "'");
  }
  if (v.size() != 6) throw Error(Errc::ParseError, "--init expects rho,theta,h3,x1,x2,x3");
  if (v[0] < 0.0) throw Error(Errc::ParseError, "--init rho must be >= 0");
  return {v[0], v[1], v[2], Vec3(v[3], v[4], v[5])};
}

void add_common(CLI::App* app, Common& c, bool spec_required) {
  auto* opt = app->add_option("--spec", c.spec, "system spec file (JSON)");
  if (spec_required) opt->required();
  app->add_option("--param", c.params, "override a spec parameter, name=value (repeatable)");
  app->add_option("--point", c.point, "base point x y z")->expected(3);
  app->add_option("--format", c.format, "output format")->check(CLI::IsMember({"text", "json"}));
}

void add_tuning(CLI::App* app, Tuning& t) {
  IntegratorConfig& c = t.cfg;
  app->add_option("--seed", c.seed, "random seed");
  app->add_option("--fixed-step", c.fixed_step, "fixed real-time step (0 = adaptive)");
  app->add_option("--fixed-step-rescaled", c.fixed_step_rescaled, "fixed rescaled-time step near the singular circle");
  app->add_option("--eps-switch", c.eps_switch, "rho threshold of the blow-up region");
  app->add_option("--eps-restart", c.eps_restart, "rho of the reseeded state after a switch");
  app->add_option("--angle-tol", c.angle_tol, "cut distance from the incoming equilibrium");
  app->add_option("--jump-tol", c.jump_tol, "tolerance for recorded jump controls");
  app->add_option("--rel-tol", c.rel_tol, "relative step tolerance");
  app->add_option("--abs-tol", c.abs_tol, "absolute step tolerance");
  app->add_option("--max-step", c.max_step, "largest real-time step");
  app->add_option("--domain-radius", c.domain_radius, "stop once |x - x0| exceeds this");
}

std::string opt_angle(const std::optional<double>& v) { return v ? format_double(*v) : "none"; }

int cmd_classify(const Common& c) {
  const SystemSpec spec = load(c);
  const ClassificationReport r = classify_point(spec.system(), point_of(c));
  if (c.format == "json") {
    nlohmann::json j;
    j["point"] = {r.point[0], r.point[1], r.point[2]};
    j["lambda_bar"] = {r.lambda_bar[0], r.lambda_bar[1], r.lambda_bar[2]};
    j["case"] = std::string(to_string(r.point_case));
    j["r"] = r.r;
    j["h12"] = r.h12;
    j["h01"] = r.h01;
    j["h02"] = r.h02;
    j["phi"] = r.phi;
    if (r.theta_minus) {
      j["theta_minus"] = *r.theta_minus;
      j["theta_plus"] = *r.theta_plus;
      j["u_minus"] = {r.u_minus->u1, r.u_minus->u2};
      j["u_plus"] = {r.u_plus->u1, r.u_plus->u2};
    }
    std::cout << j.dump(2) << '\n';
    return kOk;
  }
  std::cout << "case=" << to_string(r.point_case) << '\n'
            << "point=" << format_double(r.point[0]) << ',' << format_double(r.point[1]) << ','
            << format_double(r.point[2]) << '\n'
            << "lambda_bar=" << format_double(r.lambda_bar[0]) << ',' << format_double(r.lambda_bar[1]) << ','
            << format_double(r.lambda_bar[2]) << '\n'
            << "r=" << format_double(r.r) << '\n'
            << "h12=" << format_double(r.h12) << '\n'
            << "h01=" << format_double(r.h01) << '\n'
            << "h02=" << format_double(r.h02) << '\n'
            << "phi=" << format_double(r.phi) << '\n'
            << "theta_minus=" << opt_angle(r.theta_minus) << '\n'
            << "theta_plus=" << opt_angle(r.theta_plus) << '\n';
  if (r.u_minus) {
    std::cout << "u_minus=" << format_double(r.u_minus->u1) << ',' << format_double(r.u_minus->u2) << '\n'
              << "u_plus=" << format_double(r.u_plus->u1) << ',' << format_double(r.u_plus->u2) << '\n';
  } else {
    std::cout << "u_minus=none\nu_plus=none\n";
  }
  return kOk;
}

/// Writes through a temporary so a failed run leaves no partial file.
void write_atomically(const std::string& path, const std::string& body) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(Errc::ParseError, "cannot write " + path);
    out << body;
  }
  std::filesystem::rename(tmp, path);
}

int cmd_integrate(const Common& c, const Tuning& t, const std::string& init, double tmax, const std::string& out) {
  const SystemSpec spec = load(c);
  const BlowupState z = parse_init(init);
  if (!(tmax >= 0.0)) throw Error(Errc::ParseError, "--tmax must be >= 0");
  const ControlSystem sys = spec.system();
  const ExtremalTrajectory tr = integrate_extremal(sys, z, 0.0, tmax, t.cfg);
  std::ostringstream csv;
  write_trajectory_csv(csv, tr);
  write_atomically(out, csv.str());

  std::cout << "samples=" << tr.samples.size() << '\n'
            << "terminated=" << to_string(tr.terminated_reason) << '\n'
            << "switches=" << count_switchings(tr) << '\n';
  for (const SwitchEvent& e : tr.events) {
    std::cout << "switch t=" << format_double(e.t_switch) << " x=" << format_double(e.x_at[0]) << ','
              << format_double(e.x_at[1]) << ',' << format_double(e.x_at[2]) << " u_in=" << format_double(e.u_in.u1)
              << ',' << format_double(e.u_in.u2) << " u_out=" << format_double(e.u_out.u1) << ','
              << format_double(e.u_out.u2) << " dt_bound=" << format_double(e.crossing_dt_bound)
              << " kind=" << (e.kind == SwitchKind::Teleport ? "teleport" : "resolved") << '\n';
  }
  return kOk;
}

int cmd_flowmap(const Common& c, const Tuning& t, double radius, int n, double tmax, const std::string& out) {
  const SystemSpec spec = load(c);
  if (!(radius > 0.0) || n < 1 || !(tmax >= 0.0))
    throw Error(Errc::ParseError, "--grid-radius > 0, --grid-n >= 1 and --tmax >= 0 required");
  const ControlSystem sys = spec.system();
  const Vec3 q = point_of(c);
  const double h3 = sys.frame_norm(q) * sys.frame_norm(q);

  // (h1, h2) grid around the singular point, covector component h3 fixed
  std::vector<BlowupState> inits;
  std::vector<std::pair<double, double>> h12s;
  for (int i = -n; i <= n; ++i)
    for (int j = -n; j <= n; ++j) {
      const double h1 = radius * i / n, h2 = radius * j / n;
      inits.push_back({std::hypot(h1, h2), normalize_angle(std::atan2(h2, h1)), h3, q});
      h12s.emplace_back(h1, h2);
    }
  const std::vector<FlowOutcome> res = flow_map(sys, inits, tmax, t.cfg);

  std::optional<CanonicalState> ref;
  try {
    const ExtremalTrajectory rt = integrate_extremal(sys, BlowupState{0.0, 0.0, h3, q}, 0.0, tmax, t.cfg);
    if (rt.terminated_reason == Termination::TimeUp) ref = to_canonical(sys, rt.samples.back().state);
  } catch (const Error&) {
    // no extremal leaves the singular point outside the switch case
  }

  std::ostringstream csv;
  csv << "index,h1,h2,status,rho,theta,h3,x1,x2,x3,deviation\n";
  const std::string nan = "nan";
  for (std::size_t k = 0; k < inits.size(); ++k) {
    csv << k << ',' << format_double(h12s[k].first) << ',' << format_double(h12s[k].second) << ',';
    const FlowOutcome& o = res[k];
    std::string status = o.error.empty() ? std::string(to_string(o.reason)) : o.error.substr(0, o.error.find(':'));
    csv << status << ',';
    if (o.state) {
      const BlowupState& s = *o.state;
      csv << format_double(s.rho) << ',' << format_double(s.theta) << ',' << format_double(s.h3) << ','
          << format_double(s.x[0]) << ',' << format_double(s.x[1]) << ',' << format_double(s.x[2]) << ',';
      if (ref) {
        const CanonicalState l = to_canonical(sys, s);
        csv << format_double(std::sqrt((l.xi - ref->xi).squaredNorm() + (l.x - ref->x).squaredNorm()));
      } else {
        csv << nan;
      }
    } else {
      csv << nan << ',' << nan << ',' << nan << ',' << nan << ',' << nan << ',' << nan << ',' << nan;
    }
    csv << '\n';
  }
  write_atomically(out, csv.str());
  std::cout << "rows=" << inits.size() << '\n' << "reference=" << (ref ? "yes" : "no") << '\n';
  return kOk;
}

int cmd_verify(const Common& c, std::uint64_t seed, bool wide, bool flip, const std::string& out) {
  VerifyOptions opt;
  opt.seed = seed;
  opt.wide = wide;
  opt.sign = flip ? BracketSign::Flipped : BracketSign::Standard;
  VerificationReport rep;
  if (c.spec.empty()) {
    rep = run_builtin_suite(opt);
  } else {
    const SystemSpec spec = load(c);
    rep = run_spec_suite(spec.system(opt.sign), point_of(c), opt);
  }
  const std::string body = c.format == "json" ? rep.to_json() : rep.to_text();
  std::cout << body;
  if (!out.empty()) write_atomically(out, body);
  return rep.passed() ? kOk : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local time-optimal structure of 3-D control-affine systems with disk control"};
  app.require_subcommand(1);

  Common c_classify, c_integrate, c_flow, c_verify;
  Tuning t_integrate, t_flow;

  auto* classify = app.add_subcommand("classify", "classify the singular point over --point");
  add_common(classify, c_classify, true);

  auto* integrate = app.add_subcommand("integrate", "integrate one extremal and write its trajectory");
  add_common(integrate, c_integrate, true);
  add_tuning(integrate, t_integrate);
  std::string init, out_integrate;
  double tmax_integrate = 1.0;
  integrate->add_option("--init", init, "initial state rho,theta,h3,x1,x2,x3")->required();
  integrate->add_option("--tmax", tmax_integrate, "final time");
  integrate->add_option("--out", out_integrate, "trajectory CSV path")->required();

  auto* flowmap = app.add_subcommand("flowmap", "final states of a grid of extremals around the singular point");
  add_common(flowmap, c_flow, true);
  add_tuning(flowmap, t_flow);
  double radius = 1e-2, tmax_flow = 0.5;
  int grid_n = 4;
  std::string out_flow;
  flowmap->add_option("--grid-radius", radius, "half-width of the (h1, h2) grid");
  flowmap->add_option("--grid-n", grid_n, "grid points per half-axis");
  flowmap->add_option("--tmax", tmax_flow, "final time");
  flowmap->add_option("--out", out_flow, "grid CSV path")->required();

  auto* verify = app.add_subcommand("verify", "run the verification suite (built-in, or on --spec)");
  add_common(verify, c_verify, false);
  std::uint64_t seed = 42;
  bool wide = false, flip = false;
  std::string out_verify;
  verify->add_option("--seed", seed, "random seed");
  verify->add_flag("--wide", wide, "also search piecewise-constant controls (up to 8 pieces)");
  verify->add_flag("--inject-sign-flip", flip, "test hook: flip the bracket sign convention");
  verify->add_option("--out", out_verify, "also write the report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*classify) return cmd_classify(c_classify);
    if (*integrate) return cmd_integrate(c_integrate, t_integrate, init, tmax_integrate, out_integrate);
    if (*flowmap) return cmd_flowmap(c_flow, t_flow, radius, grid_n, tmax_flow, out_flow);
    if (*verify) return cmd_verify(c_verify, seed, wide, flip, out_verify);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == Errc::ParseError ? kUsage : kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumeric;
  }
  return kUsage;
}
