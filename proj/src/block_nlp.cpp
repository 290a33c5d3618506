#include "optrack/block_nlp.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace optrack {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

BoxSet::BoxSet(Vector lo, Vector up) : lower(std::move(lo)), upper(std::move(up)) {
  require(lower.size() == upper.size(), "BoxSet: bound lengths differ");
  for (Index j = 0; j < lower.size(); ++j) {
    require(std::isfinite(lower[j]) && std::isfinite(upper[j]),
            "BoxSet: bounds must be finite");
    require(lower[j] <= upper[j], "BoxSet: lower > upper at component " + std::to_string(j));
  }
}

bool BoxSet::contains(const Eigen::Ref<const Vector>& x, double tol) const {
  if (x.size() != lower.size()) return false;
  for (Index j = 0; j < x.size(); ++j) {
    if (x[j] < lower[j] - tol || x[j] > upper[j] + tol) return false;
  }
  return true;
}

Vector project_box(const Eigen::Ref<const Vector>& x, const BoxSet& box) {
  require(x.size() == box.dim(), "project_box: dimension mismatch");
  return x.cwiseMax(box.lower).cwiseMin(box.upper);
}

void BlockNlp::finalize() {
  const int B = num_blocks();
  require(B > 0, "BlockNlp: no blocks");
  require(static_cast<int>(separable_costs.size()) == B,
          "BlockNlp: separable_costs size must match blocks");
  if (local_constraints.empty()) local_constraints.resize(B);
  require(static_cast<int>(local_constraints.size()) == B,
          "BlockNlp: local_constraints size must match blocks");
  if (parameter_maps.empty()) parameter_maps.resize(B);
  require(static_cast<int>(parameter_maps.size()) == B,
          "BlockNlp: parameter_maps size must match blocks");
  require(param_dim >= 0, "BlockNlp: negative param_dim");
  require(degree_hint >= 2, "BlockNlp: degree_hint must be >= 2");

  var_offset_.assign(B, 0);
  con_offset_.assign(B, 0);
  n_vars_ = 0;
  n_local_ = 0;
  for (int i = 0; i < B; ++i) {
    require(blocks[i].dim > 0, "BlockNlp: block " + std::to_string(i) + " has empty dimension");
    require(blocks[i].box.dim() == blocks[i].dim,
            "BlockNlp: box dimension mismatch at block " + std::to_string(i));
    require(separable_costs[i].value && separable_costs[i].gradient,
            "BlockNlp: missing cost callbacks at block " + std::to_string(i));
    var_offset_[i] = n_vars_;
    n_vars_ += blocks[i].dim;

    const auto& lc = local_constraints[i];
    require(lc.dim >= 0, "BlockNlp: negative constraint dimension");
    if (lc.dim > 0) {
      require(bool(lc.value) && bool(lc.jac_t_apply),
              "BlockNlp: missing constraint callbacks at block " + std::to_string(i));
      require(parameter_maps[i].rows() == lc.dim && parameter_maps[i].cols() == param_dim,
              "BlockNlp: parameter map shape mismatch at block " + std::to_string(i));
    }
    con_offset_[i] = coupling.dim + n_local_;
    n_local_ += lc.dim;
  }
  if (coupling.dim > 0) {
    require(bool(coupling.value) && bool(coupling.jac_t_apply),
            "BlockNlp: missing coupling constraint callbacks");
  }
  if (coupling_cost) {
    require(bool(coupling_cost->value) && bool(coupling_cost->block_gradient),
            "BlockNlp: missing coupling cost callbacks");
  }

  // groups must be an ordered partition of {0, ..., B-1} consistent with the
  // per-block group indices
  require(!groups.empty(), "BlockNlp: no groups");
  std::set<int> seen;
  for (int g = 0; g < static_cast<int>(groups.size()); ++g) {
    require(!groups[g].empty(), "BlockNlp: empty group " + std::to_string(g));
    for (int b : groups[g]) {
      require(b >= 0 && b < B, "BlockNlp: group references unknown block");
      require(seen.insert(b).second, "BlockNlp: block appears in two groups");
      require(blocks[b].group == g, "BlockNlp: block/group index disagreement");
    }
  }
  require(static_cast<int>(seen.size()) == B, "BlockNlp: groups do not cover all blocks");

  lower_.resize(n_vars_);
  upper_.resize(n_vars_);
  for (int i = 0; i < B; ++i) {
    lower_.segment(var_offset_[i], blocks[i].dim) = blocks[i].box.lower;
    upper_.segment(var_offset_[i], blocks[i].dim) = blocks[i].box.upper;
  }
  finalized_ = true;
}

Vector BlockNlp::project(const Eigen::Ref<const Vector>& z) const {
  require(z.size() == n_vars_, "project: dimension mismatch");
  return z.cwiseMax(lower_).cwiseMin(upper_);
}

bool BlockNlp::in_feasible_box(const Eigen::Ref<const Vector>& z, double tol) const {
  if (z.size() != n_vars_) return false;
  for (Index j = 0; j < n_vars_; ++j) {
    if (z[j] < lower_[j] - tol || z[j] > upper_[j] + tol) return false;
  }
  return true;
}

double eval_cost(const BlockNlp& nlp, const Vector& z) {
  double total = 0.0;
  for (int i = 0; i < nlp.num_blocks(); ++i) {
    total += nlp.separable_costs[i].value(nlp.block_of(z, i));
  }
  if (nlp.coupling_cost) total += nlp.coupling_cost->value(z);
  return total;
}

Vector eval_constraints(const BlockNlp& nlp, const Vector& z, const Parameter& s) {
  require(z.size() == nlp.num_vars(), "eval_constraints: z dimension mismatch");
  require(s.s.size() == nlp.param_dim, "eval_constraints: parameter dimension mismatch");
  Vector g(nlp.num_constraints());
  if (nlp.coupling.dim > 0) g.head(nlp.coupling.dim) = nlp.coupling.value(z);
  for (int i = 0; i < nlp.num_blocks(); ++i) {
    const auto& lc = nlp.local_constraints[i];
    if (lc.dim == 0) continue;
    g.segment(nlp.con_offset(i), lc.dim) =
        lc.value(nlp.block_of(z, i)) + nlp.parameter_maps[i] * s.s;
  }
  return g;
}

double eval_aug_lagrangian(const BlockNlp& nlp, const Vector& z, const Vector& mu,
                           const Parameter& s, double rho, double* magnitude) {
  require(rho > 0.0, "eval_aug_lagrangian: rho must be positive");
  require(mu.size() == nlp.num_constraints(), "eval_aug_lagrangian: mu dimension mismatch");
  double cost = 0.0;
  for (int i = 0; i < nlp.num_blocks(); ++i) {
    const double ci = nlp.separable_costs[i].value(nlp.block_of(z, i));
    if (!std::isfinite(ci)) {
      throw EvalError("non-finite value in separable cost of block " + std::to_string(i));
    }
    cost += ci;
  }
  if (nlp.coupling_cost) {
    const double cc = nlp.coupling_cost->value(z);
    if (!std::isfinite(cc)) throw EvalError("non-finite value in coupling cost");
    cost += cc;
  }
  const Vector g = eval_constraints(nlp, z, s);
  if (!g.allFinite()) throw EvalError("non-finite value in equality constraints");
  const double value = cost + (mu + 0.5 * rho * g).dot(g);
  if (!std::isfinite(value)) throw EvalError("non-finite augmented Lagrangian value");
  if (magnitude) {
    *magnitude = std::abs(cost) + (mu.cwiseAbs() + 0.5 * rho * g.cwiseAbs()).dot(g.cwiseAbs());
  }
  return value;
}

Vector grad_block_aug_lagrangian(const BlockNlp& nlp, int i, const Vector& z,
                                 const Vector& mu, const Parameter& s, double rho) {
  require(i >= 0 && i < nlp.num_blocks(), "grad_block_aug_lagrangian: bad block index");
  require(mu.size() == nlp.num_constraints(), "grad_block_aug_lagrangian: mu dimension mismatch");
  const Vector z_i = nlp.block_of(z, i);
  Vector grad = nlp.separable_costs[i].gradient(z_i);
  require(grad.size() == nlp.blocks[i].dim, "cost gradient has wrong dimension");
  if (nlp.coupling_cost) grad += nlp.coupling_cost->block_gradient(i, z);
  if (nlp.coupling.dim > 0) {
    const Vector w = mu.head(nlp.coupling.dim) + rho * nlp.coupling.value(z);
    grad += nlp.coupling.jac_t_apply(i, z, w);
  }
  const auto& lc = nlp.local_constraints[i];
  if (lc.dim > 0) {
    const Vector gi = lc.value(z_i) + nlp.parameter_maps[i] * s.s;
    const Vector w = mu.segment(nlp.con_offset(i), lc.dim) + rho * gi;
    grad += lc.jac_t_apply(z_i, w);
  }
  return grad;
}

Vector grad_aug_lagrangian(const BlockNlp& nlp, const Vector& z, const Vector& mu,
                           const Parameter& s, double rho) {
  Vector grad(nlp.num_vars());
  for (int i = 0; i < nlp.num_blocks(); ++i) {
    grad.segment(nlp.var_offset(i), nlp.blocks[i].dim) =
        grad_block_aug_lagrangian(nlp, i, z, mu, s, rho);
  }
  return grad;
}

Vector constraint_jac_t_apply(const BlockNlp& nlp, const Vector& z, const Vector& v) {
  require(v.size() == nlp.num_constraints(), "constraint_jac_t_apply: v dimension mismatch");
  Vector out = Vector::Zero(nlp.num_vars());
  for (int i = 0; i < nlp.num_blocks(); ++i) {
    auto slot = out.segment(nlp.var_offset(i), nlp.blocks[i].dim);
    if (nlp.coupling.dim > 0) {
      slot += nlp.coupling.jac_t_apply(i, z, v.head(nlp.coupling.dim));
    }
    const auto& lc = nlp.local_constraints[i];
    if (lc.dim > 0) {
      slot += lc.jac_t_apply(nlp.block_of(z, i), v.segment(nlp.con_offset(i), lc.dim));
    }
  }
  return out;
}

Vector fd_block_gradient(const BlockNlp& nlp, int i, const Vector& z, const Vector& mu,
                         const Parameter& s, double rho) {
  const double h = 1e-6 * (1.0 + z.lpNorm<Eigen::Infinity>());
  const Index off = nlp.var_offset(i);
  const Index dim = nlp.blocks[i].dim;
  Vector grad(dim);
  Vector zp = z;
  for (Index j = 0; j < dim; ++j) {
    const double orig = z[off + j];
    zp[off + j] = orig + h;
    const double up = eval_aug_lagrangian(nlp, zp, mu, s, rho);
    zp[off + j] = orig - h;
    const double dn = eval_aug_lagrangian(nlp, zp, mu, s, rho);
    zp[off + j] = orig;
    grad[j] = (up - dn) / (2.0 * h);
  }
  return grad;
}

}  // namespace optrack
