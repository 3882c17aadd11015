#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "extremal/control_system.hpp"
#include "extremal/extremal_flow.hpp"

namespace extremal {

/// x' = (0,0,alpha x1) + u1 (1,0,0) + u2 (0,1,x1).
ControlSystem alpha_system(double alpha, BracketSign sign = BracketSign::Standard);

/// x' = (0,0,x1) + u1 (1,0,0) + u2 (0,1,0); h12 vanishes identically.
ControlSystem antipodal_system();

/// Random field with every monomial of degree <= max_degree present and
/// coefficients uniform in [-1, 1]. With `dyadic`, coefficients are
/// multiples of 1/8 so that bracket identities hold exactly in floating point.
PolyField random_poly_field(std::mt19937_64& rng, int max_degree, bool dyadic = false);

/// D~g(x) f(x) - D~f(x) g(x) with central-difference Jacobians of step h.
/// Uses field evaluation only.
Vec3 fd_bracket_oracle(const PolyField& f, const PolyField& g, const Vec3& x, double h = 1e-5);

/// max over (i,j) in {(0,1),(0,2),(1,2)} of |{h_i,h_j} - h_ij|, with the
/// Poisson bracket taken by central differences of the coordinate formula.
double poisson_consistency(const ControlSystem& sys, const CanonicalState& lam, double h = 1e-5);

struct BangPiece {
  double theta = 0.0;
  double duration = 0.0;
};

/// Closed-form endpoint of the alpha system under piecewise-constant
/// controls on the unit circle.
Vec3 bang_endpoint(double alpha, const Vec3& start, std::span<const BangPiece> pieces);

struct SearchOptions {
  Vec3 start = Vec3::Zero();
  double endpoint_tol = 1e-6;
  /// Also search piecewise-constant controls with `wide_pieces` pieces.
  bool wide = false;
  int wide_pieces = 8;
};

struct DirectSearchResult {
  Vec3 target = Vec3::Zero();
  double extremal_time = std::numeric_limits<double>::quiet_NaN();
  double best_found_time = std::numeric_limits<double>::infinity();
  /// (theta_a, theta_b, t1, t2)
  std::array<double, 4> best_control{};
  long evaluations = 0;
  /// Only filled in wide mode.
  double wide_best_time = std::numeric_limits<double>::infinity();
  std::vector<BangPiece> wide_control;
};

/// Shortest one-switch bang control from `opt.start` to `target` for the
/// alpha system, found by random restarts plus local search. `budget`
/// bounds the number of endpoint evaluations. Throws Unreachable when no
/// control meets the endpoint tolerance.
DirectSearchResult direct_search_linear_example(double alpha, const Vec3& target,
                                                double extremal_time, long budget,
                                                std::uint64_t seed,
                                                const SearchOptions& opt = {});

struct ModelOdeConfig {
  /// T in theta_1 = T rho0; zero selects 3 (1 + eta) / (1 - eta^2).
  double T = 0.0;
  double theta_max = 1.5707963267948966;
  int grid_points = 4000;
  double rel_tol = 1e-12;
  double abs_tol = 1e-24;
};

struct ModelOdeRun {
  double rho0 = 0.0;
  double eta = 0.0;
  double T = 0.0;
  double theta1 = 0.0;
  std::vector<double> theta_grid;
  std::vector<double> rho_neg;  // rho(-theta)
  std::vector<double> rho_pos;  // rho(eta theta)
  /// rho(-theta) < rho(eta theta) at every grid point.
  bool inequality_holds = false;
  /// rho(-theta) > rho(eta theta) just after theta = 0.
  bool initially_reversed = false;
  /// Largest deviation of the rescaled profiles from t - t^2/2 and
  /// -eta t - eta^2 t^2 / 2 over t in [0, T].
  double profile_error = 0.0;
};

/// Both branches of rho' = -rho (sin theta + rho) / (1 - cos theta + rho)
/// from rho(0) = rho0, compared beyond theta_1.
ModelOdeRun model_radial_ode(double rho0, double eta, const ModelOdeConfig& cfg = {});

struct EnvelopeFit {
  double c = 0.0;
  double a = 0.0;
};

/// Envelope rho(t) >= c exp(-a t) rho(0) over all samples of all runs. Among
/// valid pairs, picks the one with the largest bound at half the longest
/// run (a >= a_floor); c is then the largest value that still holds.
EnvelopeFit envelope_fit(std::span<const ExtremalTrajectory> runs, double a_floor = 1e-6);

/// Worst amount by which a sample falls below the envelope (<= 0 when it
/// holds), in units of rho.
double envelope_violation(std::span<const ExtremalTrajectory> runs, const EnvelopeFit& fit);

}  // namespace extremal
