#include "optrack/models/dc_motor.hpp"
#include "optrack/models/toy_qp.hpp"
#include "optrack/models/unicycle.hpp"

#include "optrack/diagnostics.hpp"
#include "optrack/solver.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace optrack;
using namespace optrack::testing;

TEST_CASE("dc motor dynamics") {
  const DcMotorParams p;

  SUBCASE("value at the origin comes straight from the constants") {
    const Eigen::Vector2d dx = dc_motor_rhs({0.0, 0.0}, 1.3, p);
    CHECK(dx[0] == p.armature_voltage / p.armature_inductance);
    CHECK(dx[1] == -p.load_torque / p.inertia);
    CHECK(dx[0] == doctest::Approx(195.43973941368076).epsilon(1e-12));
    CHECK(dx[1] == doctest::Approx(-381.8181818181818).epsilon(1e-12));
  }

  SUBCASE("zero input removes the bilinear term") {
    const Eigen::Vector2d dx = dc_motor_rhs({1.0, 0.0}, 0.0, p);
    CHECK(dx[0] == doctest::Approx(-p.armature_resistance / p.armature_inductance +
                                   p.armature_voltage / p.armature_inductance)
                       .epsilon(1e-12));
    CHECK(dx[1] == doctest::Approx(-p.load_torque / p.inertia).epsilon(1e-12));
  }

  SUBCASE("difference in inputs is the bilinear map") {
    Rng rng(4);
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::Vector2d x{rng.uniform(-2.0, 5.0), rng.uniform(-8.0, 1.5)};
      const double u1 = rng.uniform(1.27, 1.4), u2 = rng.uniform(1.27, 1.4);
      const Eigen::Vector2d diff = dc_motor_rhs(x, u1, p) - dc_motor_rhs(x, u2, p);
      Eigen::Vector2d expected;
      expected << -(p.torque_constant / p.armature_inductance) * x[1] * (u1 - u2),
          (p.torque_constant / p.inertia) * x[0] * (u1 - u2);
      CHECK((diff - expected).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
  }

  SUBCASE("the equilibrium has zero drift and sits inside the boxes") {
    const Eigen::Vector2d eq = dc_motor_equilibrium(1.35, p);
    CHECK(dc_motor_rhs(eq, 1.35, p).lpNorm<Eigen::Infinity>() <= 1e-10);
    const DcMotorLimits lim;
    CHECK(eq[0] > lim.x_lower[0]);
    CHECK(eq[0] < lim.x_upper[0]);
    CHECK(eq[1] > lim.x_lower[1]);
    CHECK(eq[1] < lim.x_upper[1]);
  }
}

TEST_CASE("dc motor NLP") {
  const int horizon = 30;
  const double dt = 0.018;
  const DcMotorParams params;
  const DcMotorLimits limits;
  const DcMotorWeights weights;
  const BlockNlp nlp = build_dc_motor_nlp(params, limits, horizon, dt, weights);
  const DcMotorLayout layout{horizon};

  SUBCASE("dimensions: pinned initial state and reference") {
    CHECK(nlp.num_vars() == 3 * horizon + 3);  // 93: states, inputs, x0_hat, r
    CHECK(nlp.num_constraints() == 2 * horizon + 3);  // 63: defects plus pins
    CHECK(nlp.num_blocks() == 1);
    CHECK(nlp.num_groups() == 1);
  }

  SUBCASE("an exact Euler rollout is feasible to machine precision") {
    Eigen::Vector2d x = dc_motor_equilibrium(1.3, params);
    Parameter s;
    s.s.resize(3);
    s.s << x[0], x[1], 1.7;
    Vector z(nlp.num_vars());
    z.segment<2>(layout.x0_index()) = x;
    Rng rng(6);
    for (int t = 0; t < horizon; ++t) {
      const double u = rng.uniform(limits.u_lower, limits.u_upper);
      z[layout.input_index(t)] = u;
      x = x + dt * dc_motor_rhs(x, u, params);
      z.segment<2>(layout.state_index(t + 1)) = x;
    }
    z[layout.ref_index()] = 1.7;
    CHECK(eval_constraints(nlp, z, s).lpNorm<Eigen::Infinity>() <= 1e-12);
  }

  SUBCASE("cost and penalty gradients match finite differences at feasible points") {
    Rng rng(8);
    const SimModel model = make_dc_motor_model(dt, {});
    const Parameter s{model.make_param(0.0, model.x0)};
    for (int trial = 0; trial < 20; ++trial) {
      const Vector z = random_in_box(nlp, rng);
      const Vector mu = random_vector(nlp.num_constraints(), rng);
      const Vector analytic = grad_block_aug_lagrangian(nlp, 0, z, mu, s, 100.0);
      const Vector fd = fd_block_gradient(nlp, 0, z, mu, s, 100.0);
      CHECK(fd_rel_error(analytic, fd) <= 1e-6);
    }
  }
}

TEST_CASE("unicycle dynamics") {
  CHECK((unicycle_rhs({0, 0, 0}, {1, 0}) - Eigen::Vector3d{1, 0, 0}).norm() <= 1e-15);
  const Eigen::Vector3d quarter = unicycle_rhs({5, -2, M_PI / 2}, {1, 0});
  CHECK(quarter[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(quarter[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(quarter[2] == 0.0);
  Rng rng(14);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Vector3d x{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const double w = rng.uniform(-1.0, 1.0);
    const Eigen::Vector3d dx = unicycle_rhs(x, {0.0, w});
    CHECK(dx[0] == 0.0);
    CHECK(dx[1] == 0.0);
    CHECK(dx[2] == w);
  }
}

TEST_CASE("rk4 step sensitivities match finite differences") {
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Vector3d x{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-3, 3)};
    const Eigen::Vector2d u{rng.uniform(0.0, 0.5), rng.uniform(-1.5, 1.5)};
    const double dt = 0.35;
    const Rk4Step step = unicycle_rk4_step(x, u, dt);
    const double h = 1e-6;
    for (int j = 0; j < 3; ++j) {
      Eigen::Vector3d xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const Eigen::Vector3d fd =
          (unicycle_rk4_step(xp, u, dt).x_next - unicycle_rk4_step(xm, u, dt).x_next) /
          (2.0 * h);
      CHECK((step.dx.col(j) - fd).lpNorm<Eigen::Infinity>() <= 1e-7);
    }
    for (int j = 0; j < 2; ++j) {
      Eigen::Vector2d up = u, um = u;
      up[j] += h;
      um[j] -= h;
      const Eigen::Vector3d fd =
          (unicycle_rk4_step(x, up, dt).x_next - unicycle_rk4_step(x, um, dt).x_next) /
          (2.0 * h);
      CHECK((step.du.col(j) - fd).lpNorm<Eigen::Infinity>() <= 1e-7);
    }
  }
}

TEST_CASE("waypoint path") {
  WaypointPath path{{0.0, 10.0, 20.0}, {{0, 0}, {2, 0}, {2, 2}}};
  path.validate();
  CHECK((path.eval(0.0).head<2>() - Eigen::Vector2d{0, 0}).norm() <= 1e-15);
  CHECK((path.eval(5.0).head<2>() - Eigen::Vector2d{1, 0}).norm() <= 1e-15);
  CHECK(path.eval(5.0)[2] == doctest::Approx(0.0));
  CHECK((path.eval(15.0).head<2>() - Eigen::Vector2d{2, 1}).norm() <= 1e-15);
  CHECK(path.eval(15.0)[2] == doctest::Approx(M_PI / 2));
  // extrapolation continues the last segment
  CHECK((path.eval(25.0).head<2>() - Eigen::Vector2d{2, 3}).norm() <= 1e-12);

  WaypointPath bad{{0.0, 0.0}, {{0, 0}, {1, 0}}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("unicycle formation NLP") {
  UnicycleFormationSpec spec;
  spec.horizon = 8;  // small horizon keeps the finite differencing quick
  const BlockNlp nlp = build_unicycle_nlp(spec);
  const int N = spec.horizon;

  SUBCASE("dimensions and structure") {
    CHECK(nlp.num_blocks() == 3);
    CHECK(nlp.num_groups() == 2);
    CHECK(nlp.groups[0].size() == 1);
    CHECK(nlp.groups[1].size() == 2);
    // per agent 3N defect rows + 3 pin rows; the leader adds 3 reference pins
    CHECK(nlp.num_constraints() == 3 * (3 * N + 3) + 3);
    CHECK(nlp.coupling.dim == 0);  // agents couple through the cost only
    const Index leader = 5 * N + 6;
    const Index follower = 5 * N + 3;
    CHECK(nlp.num_vars() == leader + 2 * follower);
  }

  SUBCASE("exact RK4 rollouts of all agents are feasible") {
    Rng rng(33);
    Parameter s;
    s.s.resize(12);
    Vector z(nlp.num_vars());
    for (int agent = 0; agent < 3; ++agent) {
      const UnicycleLayout layout{N, agent == 0};
      const Index off = nlp.var_offset(agent);
      Eigen::Vector3d x = spec.initial_states[agent];
      s.s.segment<3>(3 * agent) = x;
      z.segment<3>(off + layout.x0_index()) = x;
      for (int t = 0; t < N; ++t) {
        const Eigen::Vector2d u{rng.uniform(0.0, 0.5), rng.uniform(-1.5, 1.5)};
        z.segment<2>(off + layout.input_index(t)) = u;
        x = unicycle_rk4_step(x, u, spec.dt).x_next;
        z.segment<3>(off + layout.state_index(t + 1)) = x;
      }
      if (agent == 0) {
        const Eigen::Vector3d ref = spec.path.eval(0.0);
        z.segment<3>(off + layout.ref_index()) = ref;
        s.s.tail<3>() = ref;
      }
    }
    CHECK(eval_constraints(nlp, z, s).lpNorm<Eigen::Infinity>() <= 1e-12);
  }

  SUBCASE("formation gradient w.r.t. a follower is the stacked weighted residual") {
    Rng rng(34);
    const Vector z = random_in_box(nlp, rng);
    const Vector g2 = nlp.coupling_cost->block_gradient(1, z);
    const UnicycleLayout leader{N, true};
    const UnicycleLayout follower{N, false};
    for (int t = 1; t <= N; ++t) {
      const Eigen::Vector3d x1 = z.segment<3>(leader.state_index(t));
      const Eigen::Vector3d x2 =
          z.segment<3>(nlp.var_offset(1) + follower.state_index(t));
      const Eigen::Vector3d expected =
          -2.0 * spec.formation_weight_12.cwiseProduct(x1 - x2 - spec.offset_12);
      CHECK((g2.segment<3>(follower.state_index(t)) - expected).lpNorm<Eigen::Infinity>() <=
            1e-12);
    }
  }

  SUBCASE("gradient audit against finite differences at feasible points") {
    Rng rng(35);
    const Parameter s{random_vector(12, rng, -1.0, 1.0)};
    for (int trial = 0; trial < 20; ++trial) {
      const Vector z = random_in_box(nlp, rng);
      const Vector mu = random_vector(nlp.num_constraints(), rng);
      for (int b = 0; b < 3; ++b) {
        const Vector analytic = grad_block_aug_lagrangian(nlp, b, z, mu, s, 50.0);
        const Vector fd = fd_block_gradient(nlp, b, z, mu, s, 50.0);
        CHECK(fd_rel_error(analytic, fd) <= 1e-6);
      }
    }
  }

  SUBCASE("dual updates decompose per agent") {
    Rng rng(36);
    const Vector z = random_in_box(nlp, rng);
    const Parameter s{random_vector(12, rng)};
    const Vector mu = random_vector(nlp.num_constraints(), rng);
    const Vector updated = dual_update(nlp, z, mu, s, 10.0);
    for (int agent = 0; agent < 3; ++agent) {
      const Index off = nlp.con_offset(agent);
      const Index dim = nlp.local_constraints[agent].dim;
      const Vector own = nlp.local_constraints[agent].value(nlp.block_of(z, agent)) +
                         nlp.parameter_maps[agent] * s.s;
      CHECK((updated.segment(off, dim) - mu.segment(off, dim) - 10.0 * own)
                .lpNorm<Eigen::Infinity>() <= 1e-12);
    }
  }
}

TEST_CASE("toy qp model") {
  const BlockNlp qp = build_toy_qp_nlp();
  CHECK(qp.num_vars() == 2);
  CHECK(qp.num_constraints() == 1);
  const PrimalDual sol = toy_qp_solution(3.0);
  // stationarity: 2 z + mu (1,1) = 0 and feasibility z1 + z2 = s
  CHECK(2.0 * sol.z[0] + sol.mu[0] == 0.0);
  CHECK(sol.z[0] + sol.z[1] == 3.0);
  CHECK(feasibility_norm(qp, sol.z, {Vector::Constant(1, 3.0)}) == 0.0);
}
