#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace optrack {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Bounded box {x : lower <= x <= upper}. All bounds must be finite and
/// ordered; degenerate intervals (lower == upper) are allowed.
struct BoxSet {
  Vector lower;
  Vector upper;

  BoxSet() = default;
  BoxSet(Vector lo, Vector up);

  Index dim() const { return lower.size(); }
  bool contains(const Eigen::Ref<const Vector>& x, double tol = 0.0) const;
};

/// Euclidean projection onto a box, component-wise clamping.
Vector project_box(const Eigen::Ref<const Vector>& x, const BoxSet& box);

/// Time-dependent parameter s_k driving the NLP data.
struct Parameter {
  Vector s;
  int k = 0;
};

/// Primal-dual iterate w = (z, mu).
struct PrimalDual {
  Vector z;
  Vector mu;

  Vector stacked() const {
    Vector w(z.size() + mu.size());
    w << z, mu;
    return w;
  }
};

/// A callback produced a non-finite value; the message names the term.
struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Backtracking curvature exceeded its cap, which signals a non-smooth or
/// badly scaled callback.
struct CurvatureOverflowError : std::runtime_error {
  CurvatureOverflowError(const std::string& what, double curvature_value)
      : std::runtime_error(what), curvature(curvature_value) {}
  double curvature;
};

/// An iterative solve hit its iteration cap; carries the last residuals.
struct NoConvergenceError : std::runtime_error {
  NoConvergenceError(const std::string& what, double omega_value, double feasibility_value)
      : std::runtime_error(what), omega(omega_value), feasibility(feasibility_value) {}
  double omega;
  double feasibility;
};

/// Adaptive step-size underflow in the ODE integrator.
struct StiffIntegrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Deterministic 64-bit generator (splitmix64). Behaviour is identical across
/// platforms, which the trace reproducibility guarantees rely on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t x = (state_ += 0x9e3779b97f4a7c15ull);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  /// Uniform draw in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

}  // namespace optrack
