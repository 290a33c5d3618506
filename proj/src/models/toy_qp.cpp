#include "optrack/models/toy_qp.hpp"

namespace optrack {

BlockNlp build_toy_qp_nlp() {
  BlockNlp nlp;
  nlp.blocks.push_back({2, BoxSet(Vector::Constant(2, -10.0), Vector::Constant(2, 10.0)), 0});
  nlp.groups = {{0}};
  nlp.param_dim = 1;
  nlp.degree_hint = 2;

  SeparableCost cost;
  cost.value = [](const Vector& z) { return z.squaredNorm(); };
  cost.gradient = [](const Vector& z) -> Vector { return 2.0 * z; };
  nlp.separable_costs.push_back(std::move(cost));

  LocalConstraint con;
  con.dim = 1;
  con.value = [](const Vector& z) { return Vector::Constant(1, z[0] + z[1]); };
  con.jac_t_apply = [](const Vector&, const Vector& v) -> Vector {
    return Vector::Constant(2, v[0]);
  };
  nlp.local_constraints.push_back(std::move(con));
  nlp.parameter_maps.push_back(-Matrix::Ones(1, 1));

  nlp.finalize();
  return nlp;
}

PrimalDual toy_qp_solution(double s) {
  PrimalDual w;
  w.z = Vector::Constant(2, s / 2.0);
  w.mu = Vector::Constant(1, -s);
  return w;
}

SimModel make_toy_qp_model(const ToyQpSpec& spec) {
  // plant state (s, y): the parameter drifts autonomously while a first-order
  // lag y chases the applied decision variable, so the closed-loop output
  // reflects solver quality
  SimModel model;
  model.id = "toy-qp";
  model.nlp = build_toy_qp_nlp();
  model.dt = spec.dt;
  model.x0.resize(2);
  model.x0 << spec.s0, spec.s0 / 2.0;
  const double drift = spec.drift;
  model.plant_rhs = [drift](const Vector& x, const Vector& u) {
    Vector dx(2);
    dx << drift, (u[0] - x[1]) / 0.2;
    return dx;
  };
  model.make_param = [](double, const Vector& x_plant) -> Vector {
    return Vector::Constant(1, x_plant[0]);
  };
  model.applied_input = [](const Vector& z) { return Vector::Constant(1, z[0]); };
  model.output = [](const Vector& x_plant) { return x_plant[1]; };
  return model;
}

}  // namespace optrack
