#pragma once

#include "optrack/sim_model.hpp"

namespace optrack {

/// Two-variable parametric QP used as a tractable end-to-end check:
///   minimise |z|^2  subject to  z1 + z2 = s,  z in [-10, 10]^2.
/// The KKT solution is z* = (s/2, s/2), mu* = -s.
struct ToyQpSpec {
  double s0 = 1.0;     // initial parameter
  double drift = 0.5;  // parameter velocity in the closed-loop driver
  double dt = 0.1;     // controller period for the closed-loop driver
};

BlockNlp build_toy_qp_nlp();

/// Analytic KKT point at parameter s.
PrimalDual toy_qp_solution(double s);

SimModel make_toy_qp_model(const ToyQpSpec& spec = {});

}  // namespace optrack
