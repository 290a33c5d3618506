#pragma once

#include "optrack/types.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace optrack {

/// One decision block: a contiguous slice of the decision vector together
/// with its box and the sweep group it belongs to.
struct BlockSpec {
  Index dim = 0;
  BoxSet box;
  int group = 0;  // index into BlockNlp::groups
};

/// Smooth per-block cost with analytic gradient.
struct SeparableCost {
  std::function<double(const Vector&)> value;     // z_i -> J_i(z_i)
  std::function<Vector(const Vector&)> gradient;  // z_i -> grad J_i(z_i)
};

/// Smooth cost on the full decision vector, exposed through per-block
/// gradients so sweeps never need the full gradient at once.
struct CouplingCost {
  std::function<double(const Vector&)> value;                // z -> J_c(z)
  std::function<Vector(int, const Vector&)> block_gradient;  // (i, z) -> grad_i J_c(z)
};

/// Coupling equality constraints Q_c(z) = 0. The Jacobian is provided as a
/// transpose action (i, z, v) -> (d Q_c / d z_i)^T v; no matrix is ever
/// materialised.
struct CouplingConstraint {
  Index dim = 0;
  std::function<Vector(const Vector&)> value;
  std::function<Vector(int, const Vector&, const Vector&)> jac_t_apply;
};

/// Per-block equality constraints g_i(z_i) + T_i s = 0, again with a
/// transpose-action Jacobian (z_i, v) -> (d g_i / d z_i)^T v.
struct LocalConstraint {
  Index dim = 0;
  std::function<Vector(const Vector&)> value;
  std::function<Vector(const Vector&, const Vector&)> jac_t_apply;
};

/// Block-structured parametric NLP
///
///   minimise   sum_i J_i(z_i) + J_c(z)
///   subject to Q_c(z) = 0,
///              g_i(z_i) + T_i s = 0   for every block i,
///              z_i in Z_i,
///
/// with the blocks partitioned into ordered sweep groups. Within one group
/// every block may only interact with blocks of other groups, so that all
/// blocks of a group can be updated in parallel from a common snapshot.
///
/// The stacked constraint functional is
///   G(z, s) = (Q_c(z); g_1(z_1) + T_1 s; ...; g_B(z_B) + T_B s),
/// affine in s with constant slope (0; T_1; ...; T_B).
///
/// All evaluations are pure; a finalised BlockNlp is immutable and safe to
/// share across threads.
struct BlockNlp {
  std::vector<BlockSpec> blocks;
  std::vector<SeparableCost> separable_costs;      // one per block
  std::optional<CouplingCost> coupling_cost;       // may be absent
  CouplingConstraint coupling;                     // dim == 0 when absent
  std::vector<LocalConstraint> local_constraints;  // one per block, dim may be 0
  std::vector<Matrix> parameter_maps;              // T_i, shape q_i x p (empty when q_i == 0)
  Index param_dim = 0;
  int degree_hint = 2;  // polynomial degree of the penalised objective, used by diagnostics only
  std::vector<std::vector<int>> groups;  // ordered partition of block indices

  /// Validates invariants and computes the layout below. Must be called once
  /// after filling in the fields; throws std::invalid_argument on bad data.
  void finalize();

  bool finalized() const { return finalized_; }
  int num_blocks() const { return static_cast<int>(blocks.size()); }
  int num_groups() const { return static_cast<int>(groups.size()); }
  Index num_vars() const { return n_vars_; }
  Index num_constraints() const { return coupling.dim + n_local_; }

  Index var_offset(int i) const { return var_offset_[i]; }
  /// Offset of block i's local constraint rows within G (coupling rows first).
  Index con_offset(int i) const { return con_offset_[i]; }

  const Vector& stacked_lower() const { return lower_; }
  const Vector& stacked_upper() const { return upper_; }

  Eigen::Ref<const Vector> block_of(const Vector& z, int i) const {
    return z.segment(var_offset_[i], blocks[i].dim);
  }

  /// Projection onto Z = Z_1 x ... x Z_B.
  Vector project(const Eigen::Ref<const Vector>& z) const;

  bool in_feasible_box(const Eigen::Ref<const Vector>& z, double tol = 0.0) const;

 private:
  bool finalized_ = false;
  Index n_vars_ = 0;
  Index n_local_ = 0;
  std::vector<Index> var_offset_;
  std::vector<Index> con_offset_;
  Vector lower_, upper_;
};

/// Total smooth cost J(z) = sum_i J_i(z_i) + J_c(z).
double eval_cost(const BlockNlp& nlp, const Vector& z);

/// Stacked equality constraints G(z, s).
Vector eval_constraints(const BlockNlp& nlp, const Vector& z, const Parameter& s);

/// Augmented Lagrangian L_rho(z, mu, s) = J(z) + (mu + (rho/2) G(z,s))^T G(z,s).
/// Throws EvalError naming the offending term if any intermediate is non-finite.
/// magnitude, when given, receives |J| + (|mu| + (rho/2)|G|)^T |G|, the scale
/// of the summands and hence of the value's rounding error.
double eval_aug_lagrangian(const BlockNlp& nlp, const Vector& z, const Vector& mu,
                           const Parameter& s, double rho, double* magnitude = nullptr);

/// Gradient of L_rho with respect to block i, at the full point z.
Vector grad_block_aug_lagrangian(const BlockNlp& nlp, int i, const Vector& z,
                                 const Vector& mu, const Parameter& s, double rho);

/// Full gradient of L_rho, stacked over blocks.
Vector grad_aug_lagrangian(const BlockNlp& nlp, const Vector& z, const Vector& mu,
                           const Parameter& s, double rho);

/// Action of the full constraint Jacobian transpose: (d G / d z)^T v.
Vector constraint_jac_t_apply(const BlockNlp& nlp, const Vector& z, const Vector& v);

/// Central finite difference of the augmented Lagrangian with respect to block
/// i, step h = 1e-6 (1 + |z|_inf). Validation tool for gradient callbacks.
Vector fd_block_gradient(const BlockNlp& nlp, int i, const Vector& z, const Vector& mu,
                         const Parameter& s, double rho);

}  // namespace optrack
