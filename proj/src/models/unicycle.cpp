#include "optrack/models/unicycle.hpp"

#include <cmath>
#include <stdexcept>

namespace optrack {

Eigen::Vector3d WaypointPath::eval(double t) const {
  const std::size_t n = times.size();
  std::size_t seg = 0;
  while (seg + 2 < n && t >= times[seg + 1]) ++seg;
  const Eigen::Vector2d& p0 = points[seg];
  const Eigen::Vector2d& p1 = points[seg + 1];
  const double span = times[seg + 1] - times[seg];
  const double tau = (t - times[seg]) / span;  // < 0 before start, > 1 extrapolates
  const Eigen::Vector2d pos = p0 + std::max(0.0, tau) * (p1 - p0);
  const Eigen::Vector2d dir = p1 - p0;
  Eigen::Vector3d out;
  out << pos[0], pos[1], std::atan2(dir[1], dir[0]);
  return out;
}

void WaypointPath::validate() const {
  if (times.size() < 2 || times.size() != points.size()) {
    throw std::invalid_argument("WaypointPath: need matching times/points, at least two");
  }
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    if (times[i + 1] <= times[i]) {
      throw std::invalid_argument("WaypointPath: times must be strictly increasing");
    }
    if ((points[i + 1] - points[i]).norm() == 0.0) {
      throw std::invalid_argument("WaypointPath: zero-length segment");
    }
  }
}

void UnicycleFormationSpec::validate() const {
  if (horizon < 1) throw std::invalid_argument("UnicycleFormationSpec: horizon must be >= 1");
  if (dt <= 0.0) throw std::invalid_argument("UnicycleFormationSpec: dt must be positive");
  if (speed_min >= speed_max || turn_max <= 0.0) {
    throw std::invalid_argument("UnicycleFormationSpec: bad input bounds");
  }
  auto positive = [](const auto& v) { return (v.array() >= 0.0).all(); };
  if (!positive(leader_weight) || !positive(formation_weight_12) ||
      !positive(formation_weight_13)) {
    throw std::invalid_argument("UnicycleFormationSpec: weights must be non-negative");
  }
  path.validate();
}

Eigen::Vector3d unicycle_rhs(const Eigen::Vector3d& x, const Eigen::Vector2d& u) {
  return {u[0] * std::cos(x[2]), u[0] * std::sin(x[2]), u[1]};
}

namespace {

Eigen::Matrix3d rhs_dx(const Eigen::Vector3d& x, const Eigen::Vector2d& u) {
  Eigen::Matrix3d j = Eigen::Matrix3d::Zero();
  j(0, 2) = -u[0] * std::sin(x[2]);
  j(1, 2) = u[0] * std::cos(x[2]);
  return j;
}

Eigen::Matrix<double, 3, 2> rhs_du(const Eigen::Vector3d& x) {
  Eigen::Matrix<double, 3, 2> j = Eigen::Matrix<double, 3, 2>::Zero();
  j(0, 0) = std::cos(x[2]);
  j(1, 0) = std::sin(x[2]);
  j(2, 1) = 1.0;
  return j;
}

}  // namespace

Rk4Step unicycle_rk4_step(const Eigen::Vector3d& x, const Eigen::Vector2d& u, double dt) {
  using M3 = Eigen::Matrix3d;
  using M32 = Eigen::Matrix<double, 3, 2>;
  const Eigen::Vector3d k1 = unicycle_rhs(x, u);
  const Eigen::Vector3d x2 = x + 0.5 * dt * k1;
  const Eigen::Vector3d k2 = unicycle_rhs(x2, u);
  const Eigen::Vector3d x3 = x + 0.5 * dt * k2;
  const Eigen::Vector3d k3 = unicycle_rhs(x3, u);
  const Eigen::Vector3d x4 = x + dt * k3;
  const Eigen::Vector3d k4 = unicycle_rhs(x4, u);

  const M3 a1 = rhs_dx(x, u);
  const M3 a2 = rhs_dx(x2, u) * (M3::Identity() + 0.5 * dt * a1);
  const M3 a3 = rhs_dx(x3, u) * (M3::Identity() + 0.5 * dt * a2);
  const M3 a4 = rhs_dx(x4, u) * (M3::Identity() + dt * a3);

  const M32 b1 = rhs_du(x);
  const M32 b2 = rhs_du(x2) + rhs_dx(x2, u) * (0.5 * dt * b1);
  const M32 b3 = rhs_du(x3) + rhs_dx(x3, u) * (0.5 * dt * b2);
  const M32 b4 = rhs_du(x4) + rhs_dx(x4, u) * (dt * b3);

  Rk4Step step;
  step.x_next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  step.dx = M3::Identity() + (dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
  step.du = (dt / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
  return step;
}

BlockNlp build_unicycle_nlp(const UnicycleFormationSpec& spec) {
  spec.validate();
  const int N = spec.horizon;
  const double dt = spec.dt;

  BlockNlp nlp;
  nlp.param_dim = 12;  // three measured states plus the reference pose
  nlp.degree_hint = 4;
  nlp.groups = {{0}, {1, 2}};

  std::vector<UnicycleLayout> layouts(3);
  for (int agent = 0; agent < 3; ++agent) {
    UnicycleLayout layout{N, agent == 0};
    layouts[agent] = layout;

    Vector lower(layout.dim()), upper(layout.dim());
    for (int t = 0; t <= N; ++t) {
      lower.segment<3>(3 * t).setConstant(-spec.state_bound);
      upper.segment<3>(3 * t).setConstant(spec.state_bound);
    }
    for (int t = 0; t < N; ++t) {
      lower[layout.input_index(t)] = spec.speed_min;
      upper[layout.input_index(t)] = spec.speed_max;
      lower[layout.input_index(t) + 1] = -spec.turn_max;
      upper[layout.input_index(t) + 1] = spec.turn_max;
    }
    if (layout.has_reference) {
      lower.segment<3>(layout.ref_index()).setConstant(-spec.state_bound);
      upper.segment<3>(layout.ref_index()).setConstant(spec.state_bound);
    }
    nlp.blocks.push_back({layout.dim(), BoxSet(lower, upper), agent == 0 ? 0 : 1});

    SeparableCost cost;
    const Eigen::Vector2d r_weight = spec.control_weight[agent];
    if (agent == 0) {
      const Eigen::Vector3d q1 = spec.leader_weight;
      cost.value = [layout, q1, r_weight, N](const Vector& z) {
        const Eigen::Vector3d r = z.segment<3>(layout.ref_index());
        double total = 0.0;
        for (int t = 1; t <= N; ++t) {
          const Eigen::Vector3d e = z.segment<3>(layout.state_index(t)) - r;
          total += e.cwiseProduct(q1).dot(e);
        }
        for (int t = 0; t < N; ++t) {
          const Eigen::Vector2d u = z.segment<2>(layout.input_index(t));
          total += u.cwiseProduct(r_weight).dot(u);
        }
        return total;
      };
      cost.gradient = [layout, q1, r_weight, N](const Vector& z) {
        Vector g = Vector::Zero(z.size());
        const Eigen::Vector3d r = z.segment<3>(layout.ref_index());
        Eigen::Vector3d r_grad = Eigen::Vector3d::Zero();
        for (int t = 1; t <= N; ++t) {
          const Eigen::Vector3d e = z.segment<3>(layout.state_index(t)) - r;
          const Eigen::Vector3d ge = 2.0 * q1.cwiseProduct(e);
          g.segment<3>(layout.state_index(t)) = ge;
          r_grad -= ge;
        }
        for (int t = 0; t < N; ++t) {
          g.segment<2>(layout.input_index(t)) =
              2.0 * r_weight.cwiseProduct(z.segment<2>(layout.input_index(t)));
        }
        g.segment<3>(layout.ref_index()) = r_grad;
        return g;
      };
    } else {
      cost.value = [layout, r_weight, N](const Vector& z) {
        double total = 0.0;
        for (int t = 0; t < N; ++t) {
          const Eigen::Vector2d u = z.segment<2>(layout.input_index(t));
          total += u.cwiseProduct(r_weight).dot(u);
        }
        return total;
      };
      cost.gradient = [layout, r_weight, N](const Vector& z) {
        Vector g = Vector::Zero(z.size());
        for (int t = 0; t < N; ++t) {
          g.segment<2>(layout.input_index(t)) =
              2.0 * r_weight.cwiseProduct(z.segment<2>(layout.input_index(t)));
        }
        return g;
      };
    }
    nlp.separable_costs.push_back(std::move(cost));

    LocalConstraint con;
    con.dim = layout.num_constraints();
    con.value = [layout, dt, N](const Vector& z) {
      Vector g(layout.num_constraints());
      for (int t = 0; t < N; ++t) {
        const Index xi = (t == 0) ? layout.x0_index() : layout.state_index(t);
        const Eigen::Vector3d x_t = z.segment<3>(xi);
        const Eigen::Vector2d u_t = z.segment<2>(layout.input_index(t));
        const Eigen::Vector3d x_next = z.segment<3>(layout.state_index(t + 1));
        g.segment<3>(3 * t) = x_next - unicycle_rk4_step(x_t, u_t, dt).x_next;
      }
      g.segment<3>(3 * N) = z.segment<3>(layout.x0_index());
      if (layout.has_reference) g.segment<3>(3 * N + 3) = z.segment<3>(layout.ref_index());
      return g;
    };
    con.jac_t_apply = [layout, dt, N](const Vector& z, const Vector& v) {
      Vector out = Vector::Zero(z.size());
      for (int t = 0; t < N; ++t) {
        const Index xi = (t == 0) ? layout.x0_index() : layout.state_index(t);
        const Eigen::Vector3d x_t = z.segment<3>(xi);
        const Eigen::Vector2d u_t = z.segment<2>(layout.input_index(t));
        const Eigen::Vector3d v_t = v.segment<3>(3 * t);
        const Rk4Step step = unicycle_rk4_step(x_t, u_t, dt);
        out.segment<3>(layout.state_index(t + 1)) += v_t;
        out.segment<3>(xi) -= step.dx.transpose() * v_t;
        out.segment<2>(layout.input_index(t)) -= step.du.transpose() * v_t;
      }
      out.segment<3>(layout.x0_index()) += v.segment<3>(3 * N);
      if (layout.has_reference) {
        out.segment<3>(layout.ref_index()) += v.segment<3>(3 * N + 3);
      }
      return out;
    };
    nlp.local_constraints.push_back(std::move(con));

    Matrix t_map = Matrix::Zero(layout.num_constraints(), 12);
    t_map.block<3, 3>(3 * N, 3 * agent) = -Eigen::Matrix3d::Identity();
    if (layout.has_reference) {
      t_map.block<3, 3>(3 * N + 3, 9) = -Eigen::Matrix3d::Identity();
    }
    nlp.parameter_maps.push_back(std::move(t_map));
  }

  // formation terms couple the leader with each follower; followers 2 and 3
  // never interact directly, which is what allows their parallel update
  CouplingCost coupling;
  const Eigen::Vector3d q12 = spec.formation_weight_12;
  const Eigen::Vector3d q13 = spec.formation_weight_13;
  const Eigen::Vector3d d12 = spec.offset_12;
  const Eigen::Vector3d d13 = spec.offset_13;
  const UnicycleLayout leader = layouts[0];
  const UnicycleLayout follower = layouts[1];  // followers share their layout
  const Index leader_off = 0;
  const Index f2_off = leader.dim();
  const Index f3_off = leader.dim() + follower.dim();
  const int horizon = N;
  coupling.value = [=](const Vector& z) {
    double total = 0.0;
    for (int t = 1; t <= horizon; ++t) {
      const Eigen::Vector3d x1 = z.segment<3>(leader_off + leader.state_index(t));
      const Eigen::Vector3d e12 =
          x1 - z.segment<3>(f2_off + follower.state_index(t)).eval() - d12;
      const Eigen::Vector3d e13 =
          x1 - z.segment<3>(f3_off + follower.state_index(t)).eval() - d13;
      total += e12.cwiseProduct(q12).dot(e12) + e13.cwiseProduct(q13).dot(e13);
    }
    return total;
  };
  coupling.block_gradient = [=](int block, const Vector& z) {
    const UnicycleLayout& layout = (block == 0) ? leader : follower;
    Vector g = Vector::Zero(layout.dim());
    for (int t = 1; t <= horizon; ++t) {
      const Eigen::Vector3d x1 = z.segment<3>(leader_off + leader.state_index(t));
      if (block == 0 || block == 1) {
        const Eigen::Vector3d e12 =
            x1 - z.segment<3>(f2_off + follower.state_index(t)).eval() - d12;
        const Eigen::Vector3d ge = 2.0 * q12.cwiseProduct(e12);
        g.segment<3>(layout.state_index(t)) += (block == 0) ? ge : Eigen::Vector3d(-ge);
      }
      if (block == 0 || block == 2) {
        const Eigen::Vector3d e13 =
            x1 - z.segment<3>(f3_off + follower.state_index(t)).eval() - d13;
        const Eigen::Vector3d ge = 2.0 * q13.cwiseProduct(e13);
        g.segment<3>(layout.state_index(t)) += (block == 0) ? ge : Eigen::Vector3d(-ge);
      }
    }
    return g;
  };
  nlp.coupling_cost = std::move(coupling);

  nlp.finalize();
  return nlp;
}

SimModel make_unicycle_model(const UnicycleFormationSpec& spec) {
  spec.validate();
  SimModel model;
  model.id = "unicycles";
  model.nlp = build_unicycle_nlp(spec);
  model.dt = spec.dt;
  model.x0.resize(9);
  for (int agent = 0; agent < 3; ++agent) {
    model.x0.segment<3>(3 * agent) = spec.initial_states[agent];
  }
  model.plant_rhs = [](const Vector& x, const Vector& u) -> Vector {
    Vector dx(9);
    for (int agent = 0; agent < 3; ++agent) {
      dx.segment<3>(3 * agent) =
          unicycle_rhs(x.segment<3>(3 * agent), u.segment<2>(2 * agent));
    }
    return dx;
  };
  const WaypointPath path = spec.path;
  model.make_param = [path](double t, const Vector& x_plant) {
    Vector s(12);
    s.head<9>() = x_plant;
    s.tail<3>() = path.eval(t);
    return s;
  };
  const UnicycleLayout leader{spec.horizon, true};
  const UnicycleLayout follower{spec.horizon, false};
  const Index offsets[3] = {0, leader.dim(), leader.dim() + follower.dim()};
  model.applied_input = [leader, follower, offsets](const Vector& z) {
    Vector u(6);
    u.segment<2>(0) = z.segment<2>(offsets[0] + leader.input_index(0));
    u.segment<2>(2) = z.segment<2>(offsets[1] + follower.input_index(0));
    u.segment<2>(4) = z.segment<2>(offsets[2] + follower.input_index(0));
    return u;
  };
  const Eigen::Vector3d d12 = spec.offset_12;
  model.output = [d12](const Vector& x_plant) {
    return unicycle_formation_error(x_plant, d12);
  };
  return model;
}

double unicycle_formation_error(const Vector& x_plant, const Eigen::Vector3d& offset_12) {
  const Eigen::Vector3d diff =
      x_plant.segment<3>(0) - x_plant.segment<3>(3) - offset_12;
  return diff.norm();
}

}  // namespace optrack
