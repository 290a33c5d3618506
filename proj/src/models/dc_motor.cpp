#include "optrack/models/dc_motor.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace optrack {

Eigen::Vector2d dc_motor_rhs(const Eigen::Vector2d& x, double u, const DcMotorParams& p) {
  Eigen::Vector2d dx;
  dx[0] = -(p.armature_resistance / p.armature_inductance) * x[0] -
          (p.torque_constant / p.armature_inductance) * x[1] * u +
          p.armature_voltage / p.armature_inductance;
  dx[1] = -(p.friction / p.inertia) * x[1] + (p.torque_constant / p.inertia) * x[0] * u -
          p.load_torque / p.inertia;
  return dx;
}

Eigen::Vector2d dc_motor_equilibrium(double u, const DcMotorParams& p) {
  // solve A x + B x u + c = 0 for x
  const double speed =
      (p.torque_constant * u * p.armature_voltage / p.armature_resistance - p.load_torque) /
      (p.friction + p.torque_constant * p.torque_constant * u * u / p.armature_resistance);
  const double current =
      (p.armature_voltage - p.torque_constant * speed * u) / p.armature_resistance;
  return {current, speed};
}

namespace {

// d rhs / dx = A + B u and d rhs / du = B x for the bilinear dynamics
Eigen::Matrix2d dc_motor_rhs_dx(double u, const DcMotorParams& p) {
  Eigen::Matrix2d j;
  j << -(p.armature_resistance / p.armature_inductance),
      -(p.torque_constant / p.armature_inductance) * u,
      (p.torque_constant / p.inertia) * u, -(p.friction / p.inertia);
  return j;
}

Eigen::Vector2d dc_motor_rhs_du(const Eigen::Vector2d& x, const DcMotorParams& p) {
  return {-(p.torque_constant / p.armature_inductance) * x[1],
          (p.torque_constant / p.inertia) * x[0]};
}

}  // namespace

BlockNlp build_dc_motor_nlp(const DcMotorParams& params, const DcMotorLimits& limits,
                            int horizon, double dt, const DcMotorWeights& weights) {
  if (horizon < 1) throw std::invalid_argument("build_dc_motor_nlp: horizon must be >= 1");
  if (dt <= 0.0) throw std::invalid_argument("build_dc_motor_nlp: dt must be positive");

  const DcMotorLayout layout{horizon};
  const Index n = layout.num_vars();
  const Index m = layout.num_constraints();
  const int N = horizon;

  // The pinned copy of the measured state gets a widened box so that plant
  // excursions past the predicted-state bounds (inter-sample drift, transient
  // suboptimality) never make the pin rows infeasible.
  const double pin_margin = 1.5;

  Vector lower(n), upper(n);
  lower.segment(0, 2) = limits.x_lower.array() - pin_margin;
  upper.segment(0, 2) = limits.x_upper.array() + pin_margin;
  for (int t = 1; t <= N; ++t) {
    lower.segment(layout.state_index(t), 2) = limits.x_lower;
    upper.segment(layout.state_index(t), 2) = limits.x_upper;
  }
  for (int t = 0; t < N; ++t) {
    lower[layout.input_index(t)] = limits.u_lower;
    upper[layout.input_index(t)] = limits.u_upper;
  }
  lower[layout.ref_index()] = -10.0;
  upper[layout.ref_index()] = 10.0;

  BlockNlp nlp;
  nlp.blocks.push_back({n, BoxSet(lower, upper), 0});
  nlp.groups = {{0}};
  nlp.param_dim = 3;
  nlp.degree_hint = 4;  // bilinear defects make the penalty quartic

  SeparableCost cost;
  cost.value = [layout, weights, N](const Vector& z) {
    const double r = z[layout.ref_index()];
    double total = 0.0;
    for (int t = 1; t <= N; ++t) {
      const double e = z[layout.state_index(t) + 1] - r;
      total += weights.speed * e * e;
    }
    for (int t = 0; t < N; ++t) {
      const double u = z[layout.input_index(t)];
      total += weights.control * u * u;
    }
    return total;
  };
  cost.gradient = [layout, weights, N](const Vector& z) {
    Vector g = Vector::Zero(z.size());
    const double r = z[layout.ref_index()];
    double r_grad = 0.0;
    for (int t = 1; t <= N; ++t) {
      const double e = z[layout.state_index(t) + 1] - r;
      g[layout.state_index(t) + 1] = 2.0 * weights.speed * e;
      r_grad -= 2.0 * weights.speed * e;
    }
    for (int t = 0; t < N; ++t) {
      g[layout.input_index(t)] = 2.0 * weights.control * z[layout.input_index(t)];
    }
    g[layout.ref_index()] = r_grad;
    return g;
  };
  nlp.separable_costs.push_back(std::move(cost));

  LocalConstraint con;
  con.dim = m;
  con.value = [layout, params, dt, N](const Vector& z) {
    Vector g(layout.num_constraints());
    for (int t = 0; t < N; ++t) {
      const Index xi = (t == 0) ? layout.x0_index() : layout.state_index(t);
      const Eigen::Vector2d x_t = z.segment<2>(xi);
      const Eigen::Vector2d x_next = z.segment<2>(layout.state_index(t + 1));
      const double u_t = z[layout.input_index(t)];
      g.segment<2>(2 * t) = x_next - x_t - dt * dc_motor_rhs(x_t, u_t, params);
    }
    g.segment<2>(2 * N) = z.segment<2>(layout.x0_index());
    g[2 * N + 2] = z[layout.ref_index()];
    return g;
  };
  con.jac_t_apply = [layout, params, dt, N](const Vector& z, const Vector& v) {
    Vector out = Vector::Zero(z.size());
    for (int t = 0; t < N; ++t) {
      const Index xi = (t == 0) ? layout.x0_index() : layout.state_index(t);
      const Eigen::Vector2d x_t = z.segment<2>(xi);
      const double u_t = z[layout.input_index(t)];
      const Eigen::Vector2d v_t = v.segment<2>(2 * t);
      out.segment<2>(layout.state_index(t + 1)) += v_t;
      const Eigen::Matrix2d dfdx =
          Eigen::Matrix2d::Identity() + dt * dc_motor_rhs_dx(u_t, params);
      out.segment<2>(xi) -= dfdx.transpose() * v_t;
      out[layout.input_index(t)] -= dt * dc_motor_rhs_du(x_t, params).dot(v_t);
    }
    out.segment<2>(layout.x0_index()) += v.segment<2>(2 * N);
    out[layout.ref_index()] += v[2 * N + 2];
    return out;
  };
  nlp.local_constraints.push_back(std::move(con));

  Matrix t_map = Matrix::Zero(m, 3);
  t_map(2 * N, 0) = -1.0;
  t_map(2 * N + 1, 1) = -1.0;
  t_map(2 * N + 2, 2) = -1.0;
  nlp.parameter_maps.push_back(std::move(t_map));

  nlp.finalize();
  return nlp;
}

SimModel make_dc_motor_model(double dt, const DcMotorModelOptions& opts) {
  SimModel model;
  model.id = "dc-motor";
  model.nlp = build_dc_motor_nlp(opts.params, opts.limits, opts.horizon, dt, opts.weights);
  model.dt = dt;
  model.x0 = opts.x0;
  const DcMotorParams params = opts.params;
  model.plant_rhs = [params](const Vector& x, const Vector& u) -> Vector {
    return dc_motor_rhs(x.head<2>(), u[0], params);
  };
  const SpeedReference ref = opts.reference;
  model.make_param = [ref](double t, const Vector& x_plant) {
    Vector s(3);
    s << x_plant[0], x_plant[1], ref(t);
    return s;
  };
  const DcMotorLayout layout{opts.horizon};
  model.applied_input = [layout](const Vector& z) {
    return Vector::Constant(1, z[layout.input_index(0)]);
  };
  model.output = [](const Vector& x_plant) { return x_plant[1]; };
  return model;
}

}  // namespace optrack
