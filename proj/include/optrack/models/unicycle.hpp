#pragma once

#include "optrack/sim_model.hpp"

#include <vector>

namespace optrack {

/// Piecewise-linear reference path through timed waypoints. Position is
/// interpolated linearly; heading is the direction of the active segment.
/// Past the last waypoint the path extrapolates along the final segment.
struct WaypointPath {
  std::vector<double> times;
  std::vector<Eigen::Vector2d> points;

  Eigen::Vector3d eval(double t) const;  // (x, y, heading)
  void validate() const;
};

struct UnicycleFormationSpec {
  int horizon = 20;
  double dt = 0.35;
  Eigen::Vector3d leader_weight{10.0, 10.0, 1.0};          // Q_1 diagonal
  Eigen::Vector3d formation_weight_12{5.0, 5.0, 0.0};      // Q_{1,2} diagonal
  Eigen::Vector3d formation_weight_13{5.0, 5.0, 0.0};      // Q_{1,3} diagonal
  Eigen::Vector2d control_weight[3] = {{0.1, 0.1}, {0.1, 0.1}, {0.1, 0.1}};  // R_i
  Eigen::Vector3d offset_12{-0.5, 0.5, 0.0};  // d_{1,2}
  Eigen::Vector3d offset_13{-0.5, -0.5, 0.0}; // d_{1,3}
  double speed_min = 0.0;
  double speed_max = 0.5;
  double turn_max = 1.5707963267948966;  // pi/2
  double state_bound = 50.0;  // loose box on positions and heading
  WaypointPath path = {{0.0, 12.0, 24.0, 36.0},
                       {{0.0, 0.0}, {3.0, 0.0}, {3.0, 3.0}, {6.0, 3.0}}};
  Eigen::Vector3d initial_states[3] = {{0.0, 0.0, 0.0}, {0.5, -0.5, 0.0}, {0.5, 0.5, 0.0}};

  void validate() const;
};

/// Standard unicycle dynamics (u1 cos x3, u1 sin x3, u2).
Eigen::Vector3d unicycle_rhs(const Eigen::Vector3d& x, const Eigen::Vector2d& u);

/// One classical RK4 step with constant input, with sensitivities.
struct Rk4Step {
  Eigen::Vector3d x_next;
  Eigen::Matrix3d dx;
  Eigen::Matrix<double, 3, 2> du;
};
Rk4Step unicycle_rk4_step(const Eigen::Vector3d& x, const Eigen::Vector2d& u, double dt);

/// Index map for one agent block
///   z_i = (x0_hat (3), x_1..x_N (3 each), u_0..u_{N-1} (2 each) [, r (3)]),
/// the trailing reference pin being present on the leader only.
struct UnicycleLayout {
  int horizon = 0;
  bool has_reference = false;
  Index x0_index() const { return 0; }
  Index state_index(int t) const { return 3 * t; }  // t >= 1; t = 0 is x0_hat
  Index input_index(int t) const { return 3 * (horizon + 1) + 2 * t; }
  Index ref_index() const { return 3 * (horizon + 1) + 2 * horizon; }
  Index dim() const { return 5 * horizon + 3 + (has_reference ? 3 : 0); }
  Index num_constraints() const { return 3 * horizon + 3 + (has_reference ? 3 : 0); }
};

/// Three-agent NLP: a leader tracking the reference path and two followers
/// holding fixed world-frame offsets. Agents couple through the formation
/// cost only; there are no coupling constraint rows, so the dual update
/// decomposes per agent. Sweep groups: {leader}, then {follower 2, follower 3}
/// updated in parallel. Parameter s = (three measured states, reference pose).
BlockNlp build_unicycle_nlp(const UnicycleFormationSpec& spec);

SimModel make_unicycle_model(const UnicycleFormationSpec& spec = {});

/// |x_leader - x_follower2 - d_{1,2}|_2 on the stacked 9-dim plant state.
double unicycle_formation_error(const Vector& x_plant, const Eigen::Vector3d& offset_12);

}  // namespace optrack
