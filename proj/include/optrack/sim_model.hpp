#pragma once

#include "optrack/block_nlp.hpp"
#include "optrack/integrate.hpp"

#include <functional>
#include <string>

namespace optrack {

/// Everything the closed-loop driver needs to run one plant-controller pair:
/// the NLP, the true continuous-time dynamics, the parameter packing, and the
/// projections from decision vector to applied input and from plant state to
/// the scalar output used for the tracking-error metric.
struct SimModel {
  std::string id;
  BlockNlp nlp;
  double dt = 0.0;  // controller period the NLP was discretised at
  Vector x0;        // plant initial state
  PlantRhs plant_rhs;
  std::function<Vector(double t, const Vector& x_plant)> make_param;
  std::function<Vector(const Vector& z)> applied_input;  // first input of the plan
  std::function<double(const Vector& x_plant)> output;
};

}  // namespace optrack
