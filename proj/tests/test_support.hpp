#pragma once

#include "optrack/block_nlp.hpp"

#include <string>

namespace optrack::testing {

/// One-block, one-variable NLP with J(z) = (z - center)^2 and no constraints;
/// the augmented Lagrangian reduces to J, handy for the backtracking examples.
inline BlockNlp scalar_quadratic(double center, double lo, double hi) {
  BlockNlp nlp;
  nlp.blocks.push_back({1, BoxSet(Vector::Constant(1, lo), Vector::Constant(1, hi)), 0});
  nlp.groups = {{0}};
  nlp.param_dim = 0;
  SeparableCost cost;
  cost.value = [center](const Vector& z) {
    const double d = z[0] - center;
    return d * d;
  };
  cost.gradient = [center](const Vector& z) {
    return Vector::Constant(1, 2.0 * (z[0] - center));
  };
  nlp.separable_costs.push_back(std::move(cost));
  nlp.finalize();
  return nlp;
}

/// Two blocks of two variables in two groups, with smooth couplings in both
/// the cost and the constraints, quadratic local constraints, and nontrivial
/// parameter maps. Exercises every callback path.
inline BlockNlp coupled_two_block() {
  BlockNlp nlp;
  nlp.param_dim = 2;
  nlp.degree_hint = 4;
  nlp.groups = {{0}, {1}};
  for (int b = 0; b < 2; ++b) {
    nlp.blocks.push_back(
        {2, BoxSet(Vector::Constant(2, -5.0), Vector::Constant(2, 5.0)), b});
    SeparableCost cost;
    const double w = 1.0 + b;
    cost.value = [w](const Vector& z) { return w * z.squaredNorm() + z[0]; };
    cost.gradient = [w](const Vector& z) -> Vector {
      Vector g = 2.0 * w * z;
      g[0] += 1.0;
      return g;
    };
    nlp.separable_costs.push_back(std::move(cost));

    LocalConstraint con;
    con.dim = 1;
    if (b == 0) {
      con.value = [](const Vector& z) {
        return Vector::Constant(1, z[0] * z[0] + 0.5 * z[1]);
      };
      con.jac_t_apply = [](const Vector& z, const Vector& v) {
        Vector out(2);
        out << 2.0 * z[0] * v[0], 0.5 * v[0];
        return out;
      };
    } else {
      con.value = [](const Vector& z) { return Vector::Constant(1, z[0] - z[1] * z[1]); };
      con.jac_t_apply = [](const Vector& z, const Vector& v) {
        Vector out(2);
        out << v[0], -2.0 * z[1] * v[0];
        return out;
      };
    }
    nlp.local_constraints.push_back(std::move(con));
    Matrix t(1, 2);
    t << (b == 0 ? 1.0 : 0.0), (b == 0 ? 0.0 : 3.0);
    nlp.parameter_maps.push_back(std::move(t));
  }

  CouplingCost couple;
  couple.value = [](const Vector& z) { return 0.25 * z[0] * z[2] + z[1] * z[3]; };
  couple.block_gradient = [](int b, const Vector& z) {
    Vector g(2);
    if (b == 0) {
      g << 0.25 * z[2], z[3];
    } else {
      g << 0.25 * z[0], z[1];
    }
    return g;
  };
  nlp.coupling_cost = std::move(couple);

  CouplingConstraint qc;
  qc.dim = 1;
  qc.value = [](const Vector& z) { return Vector::Constant(1, z[0] * z[3] - 1.0); };
  qc.jac_t_apply = [](int b, const Vector& z, const Vector& v) {
    Vector out = Vector::Zero(2);
    if (b == 0) {
      out[0] = z[3] * v[0];
    } else {
      out[1] = z[0] * v[0];
    }
    return out;
  };
  nlp.coupling = std::move(qc);

  nlp.finalize();
  return nlp;
}

inline Vector random_in_box(const BlockNlp& nlp, Rng& rng) {
  const Vector& lo = nlp.stacked_lower();
  const Vector& hi = nlp.stacked_upper();
  Vector z(nlp.num_vars());
  for (Index j = 0; j < z.size(); ++j) z[j] = rng.uniform(lo[j], hi[j]);
  return z;
}

inline Vector random_vector(Index n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Vector v(n);
  for (Index j = 0; j < n; ++j) v[j] = rng.uniform(lo, hi);
  return v;
}

inline double fd_rel_error(const Vector& analytic, const Vector& fd) {
  return (analytic - fd).lpNorm<Eigen::Infinity>() / (1.0 + fd.lpNorm<Eigen::Infinity>());
}

}  // namespace optrack::testing
