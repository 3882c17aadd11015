#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/Core>

namespace extremal::ode {

/// Dormand-Prince 5(4) tableau.
struct DormandPrince {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b_hat, the embedded 4th-order error weights (7th stage is FSAL)
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

template <int N>
using State = Eigen::Matrix<double, N, 1>;

template <int N>
using Rhs = std::function<State<N>(const State<N>&)>;

template <int N>
struct StepResult {
  State<N> y;
  State<N> dy_end;  // derivative at the new point (FSAL)
  double err = 0.0;  // scaled RMS error, accept when <= 1
};

/// One Dormand-Prince step of size h from (y, dy) for an autonomous field.
template <int N>
StepResult<N> dopri_step(const Rhs<N>& f, const State<N>& y, const State<N>& dy, double h,
                         double rel_tol, double abs_tol) {
  using T = DormandPrince;
  const State<N> k1 = dy;
  const State<N> k2 = f(y + h * (T::a21 * k1));
  const State<N> k3 = f(y + h * (T::a31 * k1 + T::a32 * k2));
  const State<N> k4 = f(y + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3));
  const State<N> k5 = f(y + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4));
  const State<N> k6 =
      f(y + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 + T::a64 * k4 + T::a65 * k5));
  StepResult<N> out;
  out.y = y + h * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4 + T::b5 * k5 + T::b6 * k6);
  out.dy_end = f(out.y);
  const State<N> e =
      h * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 + T::e7 * out.dy_end);
  double acc = 0.0;
  for (int i = 0; i < y.size(); ++i) {
    const double sc = abs_tol + rel_tol * std::max(std::abs(y[i]), std::abs(out.y[i]));
    const double q = e[i] / sc;
    acc += q * q;
  }
  out.err = std::sqrt(acc / static_cast<double>(y.size()));
  if (!std::isfinite(out.err)) out.err = INFINITY;
  return out;
}

/// Step-size update after a trial with scaled error `err`.
inline double next_step(double h, double err) {
  if (err == 0.0) return h * 5.0;
  const double factor = 0.9 * std::pow(err, -0.2);
  return h * std::clamp(factor, 0.2, 5.0);
}

}  // namespace extremal::ode
