#pragma once

#include "optrack/sim_model.hpp"

#include <functional>

namespace optrack {

/// Identified machine constants of the bilinear DC motor.
struct DcMotorParams {
  double armature_inductance = 0.307;  // L_a, H
  double armature_resistance = 12.548; // R_a, Ohm
  double torque_constant = 0.22567;    // k_m, Nm/A^2
  double inertia = 0.00385;            // J, Nm s^2
  double friction = 0.00783;           // B, Nm s
  double load_torque = 1.47;           // tau_l, Nm
  double armature_voltage = 60.0;      // u_a, V
};

/// State boxes (armature current, angular speed) and field-current bounds.
struct DcMotorLimits {
  Eigen::Vector2d x_lower{-2.0, -8.0};
  Eigen::Vector2d x_upper{5.0, 1.5};
  double u_lower = 1.27;
  double u_upper = 1.4;
};

struct DcMotorWeights {
  double speed = 50.0;    // q_y, on the angular-speed tracking error
  double control = 0.01;  // r_u, on the field current
};

/// Continuous-time bilinear dynamics xdot = A x + B x u + c.
Eigen::Vector2d dc_motor_rhs(const Eigen::Vector2d& x, double u, const DcMotorParams& p);

/// Steady state (current, speed) for a held field current u.
Eigen::Vector2d dc_motor_equilibrium(double u, const DcMotorParams& p);

/// Index map of the decision vector
///   z = (x0_hat (2), x_1..x_N (2 each), u_0..u_{N-1}, r),
/// with the explicit-Euler defect rows followed by the x0_hat and r pin rows.
/// The initial state and the speed reference enter only through the pinned
/// variables, which keeps G(z, s) = g(z) + T s with constant T.
struct DcMotorLayout {
  int horizon = 0;
  Index x0_index() const { return 0; }
  Index state_index(int t) const { return 2 * t; }  // valid for t >= 1; t = 0 is x0_hat
  Index input_index(int t) const { return 2 * (horizon + 1) + t; }
  Index ref_index() const { return 2 * (horizon + 1) + horizon; }
  Index num_vars() const { return 3 * horizon + 3; }
  Index num_constraints() const { return 2 * horizon + 3; }
};

/// Single-block NLP for the receding-horizon speed tracking problem. The
/// parameter is s = (measured state (2), speed reference (1)).
BlockNlp build_dc_motor_nlp(const DcMotorParams& params, const DcMotorLimits& limits,
                            int horizon, double dt, const DcMotorWeights& weights);

/// Piecewise-constant speed reference: +level on [0, t1), -level on [t1, t2),
/// +level afterwards.
struct SpeedReference {
  double level = 2.0;
  double t1 = 2.0;
  double t2 = 4.0;
  double operator()(double t) const { return (t >= t1 && t < t2) ? -level : level; }
};

struct DcMotorModelOptions {
  DcMotorParams params;
  DcMotorLimits limits;
  DcMotorWeights weights;
  int horizon = 30;
  // start at a steady operating point; a cold start like (0, 0) makes the
  // boxed rollout infeasible (speed must dip below its lower bound before the
  // current can build torque)
  Eigen::Vector2d x0 = dc_motor_equilibrium(1.35, DcMotorParams{});
  SpeedReference reference;
};

SimModel make_dc_motor_model(double dt, const DcMotorModelOptions& opts = {});

}  // namespace optrack
