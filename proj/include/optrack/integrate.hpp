#pragma once

#include "optrack/types.hpp"

#include <functional>

namespace optrack {

using PlantRhs = std::function<Vector(const Vector& x, const Vector& u)>;

struct IntegratorOptions {
  double abs_tol = 1e-8;
  double rel_tol = 1e-8;
  double safety = 0.9;
  double min_scale = 0.2;
  double max_scale = 10.0;
  double underflow = 1e-14;  // relative step-size floor before failing
};

/// Advances x0 over one period of length dt under a zero-order-hold input,
/// using the adaptive Dormand-Prince 5(4) embedded Runge-Kutta pair.
/// Throws StiffIntegrationError on step-size underflow.
Vector integrate_plant(const PlantRhs& rhs, const Vector& x0, const Vector& u, double dt,
                       const IntegratorOptions& opts = {});

}  // namespace optrack
