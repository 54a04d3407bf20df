#ifndef PQG_ODE_HPP
#define PQG_ODE_HPP

// Adaptive explicit Dormand-Prince 5(4) integrator for the small ODE systems
// in this code (0-D microphysics relaxation). State is an Eigen vector; the
// right-hand side is any callable f(t, y) -> dy/dt.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace pqg {

struct OdeOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double h_init = 1e-4;
  double h_min = 1e-14;
  long max_steps = 50000000;
};

// Integrates y' = f(t, y) from t0 to t1. Throws std::runtime_error with a
// diagnostic if the step size underflows or the step budget is exhausted.
template <typename Rhs>
Eigen::VectorXd integrate_dopri5(Rhs&& f, double t0, double t1, Eigen::VectorXd y,
                                 const OdeOptions& opts = OdeOptions{}) {
  if (t1 == t0) return y;
  if (t1 < t0) throw std::invalid_argument("integrate_dopri5: t1 < t0");

  // Butcher tableau of the Dormand-Prince 5(4) pair.
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                   b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                   e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

  double t = t0;
  double h = std::min(opts.h_init, t1 - t0);
  Eigen::VectorXd k1 = f(t, y);

  for (long step = 0; step < opts.max_steps; ++step) {
    if (t >= t1) return y;
    h = std::min(h, t1 - t);

    const Eigen::VectorXd k2 = f(t + c2 * h, y + h * (a21 * k1));
    const Eigen::VectorXd k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const Eigen::VectorXd k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Eigen::VectorXd k5 =
        f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Eigen::VectorXd k6 =
        f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Eigen::VectorXd y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Eigen::VectorXd k7 = f(t + h, y5);  // FSAL stage
    const Eigen::VectorXd y4 =
        y + h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double err = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double scale =
          opts.abs_tol + opts.rel_tol * std::max(std::fabs(y[i]), std::fabs(y5[i]));
      const double e = (y5[i] - y4[i]) / scale;
      err += e * e;
    }
    err = std::sqrt(err / double(y.size()));

    if (err <= 1.0) {  // accept
      t += h;
      y = y5;
      k1 = k7;
    }
    const double factor =
        (err > 0.0) ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0) : 5.0;
    h *= factor;
    if (h < opts.h_min)
      throw std::runtime_error("integrate_dopri5: step size underflow at t = " +
                               std::to_string(t));
  }
  throw std::runtime_error("integrate_dopri5: step budget exhausted before t1");
}

}  // namespace pqg

#endif  // PQG_ODE_HPP
