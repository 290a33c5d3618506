#include "model_factory.hpp"

#include "optrack/models/dc_motor.hpp"
#include "optrack/models/toy_qp.hpp"
#include "optrack/models/unicycle.hpp"

#include <stdexcept>

namespace optrack {

namespace {

Eigen::Vector3d vec3_from(const KeyValueConfig& cfg, const std::string& key,
                          const Eigen::Vector3d& fallback) {
  const auto v = cfg.get_list(key, {fallback[0], fallback[1], fallback[2]});
  if (v.size() != 3) throw std::invalid_argument("config key `" + key + "`: need 3 values");
  return {v[0], v[1], v[2]};
}

Eigen::Vector2d vec2_from(const KeyValueConfig& cfg, const std::string& key,
                          const Eigen::Vector2d& fallback) {
  const auto v = cfg.get_list(key, {fallback[0], fallback[1]});
  if (v.size() != 2) throw std::invalid_argument("config key `" + key + "`: need 2 values");
  return {v[0], v[1]};
}

SimModel make_dc_motor(const KeyValueConfig& cfg, double dt) {
  DcMotorModelOptions opts;
  opts.horizon = cfg.get_int("dc.horizon", opts.horizon);
  opts.weights.speed = cfg.get_double("dc.q_y", opts.weights.speed);
  opts.weights.control = cfg.get_double("dc.r_u", opts.weights.control);
  opts.x0 = vec2_from(cfg, "dc.x0", opts.x0);
  opts.reference.level = cfg.get_double("dc.ref_level", opts.reference.level);
  opts.reference.t1 = cfg.get_double("dc.ref_t1", opts.reference.t1);
  opts.reference.t2 = cfg.get_double("dc.ref_t2", opts.reference.t2);
  return make_dc_motor_model(dt, opts);
}

SimModel make_unicycles(const KeyValueConfig& cfg, double dt) {
  UnicycleFormationSpec spec;
  spec.dt = dt;
  spec.horizon = cfg.get_int("uni.horizon", spec.horizon);
  spec.leader_weight = vec3_from(cfg, "uni.q1", spec.leader_weight);
  spec.formation_weight_12 = vec3_from(cfg, "uni.q12", spec.formation_weight_12);
  spec.formation_weight_13 = vec3_from(cfg, "uni.q13", spec.formation_weight_13);
  spec.control_weight[0] = vec2_from(cfg, "uni.r1", spec.control_weight[0]);
  spec.control_weight[1] = vec2_from(cfg, "uni.r2", spec.control_weight[1]);
  spec.control_weight[2] = vec2_from(cfg, "uni.r3", spec.control_weight[2]);
  spec.offset_12 = vec3_from(cfg, "uni.d12", spec.offset_12);
  spec.offset_13 = vec3_from(cfg, "uni.d13", spec.offset_13);
  spec.speed_min = cfg.get_double("uni.speed_min", spec.speed_min);
  spec.speed_max = cfg.get_double("uni.speed_max", spec.speed_max);
  spec.turn_max = cfg.get_double("uni.turn_max", spec.turn_max);
  spec.state_bound = cfg.get_double("uni.state_bound", spec.state_bound);
  if (cfg.has("uni.waypoint_times") || cfg.has("uni.waypoint_x") || cfg.has("uni.waypoint_y")) {
    const auto times = cfg.get_list("uni.waypoint_times", {});
    const auto xs = cfg.get_list("uni.waypoint_x", {});
    const auto ys = cfg.get_list("uni.waypoint_y", {});
    if (times.size() != xs.size() || times.size() != ys.size()) {
      throw std::invalid_argument("uni.waypoint_*: lists must have equal lengths");
    }
    spec.path.times = times;
    spec.path.points.clear();
    for (std::size_t i = 0; i < times.size(); ++i) spec.path.points.push_back({xs[i], ys[i]});
  }
  spec.initial_states[0] = vec3_from(cfg, "uni.x0_1", spec.initial_states[0]);
  spec.initial_states[1] = vec3_from(cfg, "uni.x0_2", spec.initial_states[1]);
  spec.initial_states[2] = vec3_from(cfg, "uni.x0_3", spec.initial_states[2]);
  return make_unicycle_model(spec);
}

SimModel make_toy(const KeyValueConfig& cfg, double dt) {
  ToyQpSpec spec;
  spec.dt = dt;
  spec.s0 = cfg.get_double("toy.s0", spec.s0);
  spec.drift = cfg.get_double("toy.drift", spec.drift);
  return make_toy_qp_model(spec);
}

}  // namespace

SimModel make_model(const std::string& name, const KeyValueConfig& cfg, double dt) {
  if (name == "dc-motor") return make_dc_motor(cfg, dt);
  if (name == "unicycles") return make_unicycles(cfg, dt);
  if (name == "toy-qp") return make_toy(cfg, dt);
  throw std::invalid_argument("unknown model `" + name +
                              "` (expected dc-motor, unicycles or toy-qp)");
}

SolverConfig solver_config_from(const KeyValueConfig& cfg) {
  SolverConfig sc;
  sc.alpha_default = cfg.get_double("solver.alpha", sc.alpha_default);
  sc.beta = cfg.get_double("solver.beta", sc.beta);
  sc.c_init = cfg.get_double("solver.c_init", sc.c_init);
  sc.c_max = cfg.get_double("solver.c_max", sc.c_max);
  sc.reset_curvature = cfg.get_bool("solver.reset_curvature", sc.reset_curvature);
  sc.decay_curvature = cfg.get_bool("solver.decay_curvature", sc.decay_curvature);
  return sc;
}

FullSolveOptions oracle_options_from(const KeyValueConfig& cfg) {
  FullSolveOptions opts;  // keeps spectral curvature seeding enabled
  opts.base.alpha_default = cfg.get_double("solver.alpha", opts.base.alpha_default);
  opts.base.beta = cfg.get_double("solver.beta", opts.base.beta);
  opts.base.c_init = cfg.get_double("solver.c_init", opts.base.c_init);
  opts.base.c_max = cfg.get_double("solver.c_max", opts.base.c_max);
  opts.max_inner_sweeps = cfg.get_int("solver.oracle_inner_sweeps", opts.max_inner_sweeps);
  opts.max_outer_rounds = cfg.get_int("solver.oracle_outer_rounds", opts.max_outer_rounds);
  return opts;
}

RunOptions run_options_from(const KeyValueConfig& cfg) {
  RunOptions opts;
  opts.perturbation = cfg.get_double("sim.perturbation", opts.perturbation);
  opts.init_tol = cfg.get_double("sim.init_tol", opts.init_tol);
  opts.reference_tol = cfg.get_double("sim.reference_tol", opts.reference_tol);
  opts.solve_options = oracle_options_from(cfg);
  return opts;
}

std::pair<double, double> error_window_from(const KeyValueConfig& cfg) {
  return {cfg.get_double("sim.window_start", 2.0), cfg.get_double("sim.window_end", 4.0)};
}

}  // namespace optrack
