#include "optrack/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace optrack {

namespace {

// Dormand-Prince 5(4) tableau
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// difference between the 5th and embedded 4th order weights
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

Vector integrate_plant(const PlantRhs& rhs, const Vector& x0, const Vector& u, double dt,
                       const IntegratorOptions& opts) {
  if (dt <= 0.0) throw std::invalid_argument("integrate_plant: dt must be positive");
  auto f = [&](const Vector& x) { return rhs(x, u); };

  Vector x = x0;
  double t = 0.0;
  double h = dt;
  while (t < dt) {
    h = std::min(h, dt - t);
    if (h < opts.underflow * dt) {
      throw StiffIntegrationError("integrate_plant: step size underflow, dynamics too stiff");
    }

    const Vector k1 = f(x);
    const Vector k2 = f(x + h * (a21 * k1));
    const Vector k3 = f(x + h * (a31 * k1 + a32 * k2));
    const Vector k4 = f(x + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vector k5 = f(x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vector k6 = f(x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Vector x_new = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vector k7 = f(x_new);
    const Vector err_vec =
        h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double err = 0.0;
    for (Index j = 0; j < x.size(); ++j) {
      const double scale =
          opts.abs_tol + opts.rel_tol * std::max(std::abs(x[j]), std::abs(x_new[j]));
      const double r = err_vec[j] / scale;
      err += r * r;
    }
    err = std::sqrt(err / std::max<Index>(1, x.size()));

    if (err <= 1.0) {
      t += h;
      x = x_new;
    }
    const double scale =
        (err == 0.0) ? opts.max_scale
                     : std::clamp(opts.safety * std::pow(err, -0.2), opts.min_scale,
                                  opts.max_scale);
    h *= scale;
  }
  return x;
}

}  // namespace optrack
