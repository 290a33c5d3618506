#include "optrack/solver.hpp"

#include "optrack/diagnostics.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <sstream>
#include <thread>

namespace optrack {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

double SolverConfig::min_alpha(int num_groups) const {
  double a = alpha_for_group(0);
  for (int g = 1; g < num_groups; ++g) a = std::min(a, alpha_for_group(g));
  return a;
}

void SolverConfig::validate() const {
  require(rho > 0.0, "SolverConfig: rho must be positive");
  require(sweeps >= 0, "SolverConfig: sweeps must be non-negative");
  require(beta > 1.0, "SolverConfig: beta must exceed 1");
  require(c_init > 0.0, "SolverConfig: c_init must be positive");
  require(c_max >= c_init, "SolverConfig: c_max must be at least c_init");
  require(c_min > 0.0, "SolverConfig: c_min must be positive");
  require(homotopy_stages >= 1, "SolverConfig: homotopy_stages must be at least 1");
  require(alpha_default > 0.0, "SolverConfig: alpha_default must be positive");
  for (double a : alpha) require(a > 0.0, "SolverConfig: alpha entries must be positive");
  require(threads >= 1, "SolverConfig: threads must be at least 1");
}

Vector bck_min(const BlockNlp& nlp, int block, const Vector& z, const Vector& mu,
               const Parameter& s, const SolverConfig& cfg, double& c_io,
               int* backtrack_count, const double* value_hint, const Vector* grad_hint) {
  require(c_io > 0.0, "bck_min: curvature must be positive");
  const Index off = nlp.var_offset(block);
  const Index dim = nlp.blocks[block].dim;
  const Vector z_i = z.segment(off, dim);
  const Vector grad =
      grad_hint ? *grad_hint : grad_block_aug_lagrangian(nlp, block, z, mu, s, cfg.rho);
  const double value0 =
      value_hint ? *value_hint : eval_aug_lagrangian(nlp, z, mu, s, cfg.rho);
  const double alpha = cfg.alpha_for_group(nlp.blocks[block].group);

  // a prox step below argument resolution is a fixed point; escalating the
  // curvature there only chases rounding noise
  const double step_floor =
      64.0 * std::numeric_limits<double>::epsilon() * (1.0 + z_i.lpNorm<Eigen::Infinity>());

  Vector trial = z;
  double c = c_io;
  int backtracks = 0;
  for (;;) {
    const Vector candidate = project_box(z_i - grad / c, nlp.blocks[block].box);
    const Vector dz = candidate - z_i;
    if (dz.lpNorm<Eigen::Infinity>() <= step_floor && dz.lpNorm<Eigen::Infinity>() > 0.0) {
      c_io = c;
      if (backtrack_count) *backtrack_count = backtracks;
      return z_i;
    }
    trial.segment(off, dim) = candidate;
    double magnitude = 0.0;
    const double value1 = eval_aug_lagrangian(nlp, trial, mu, s, cfg.rho, &magnitude);
    const double model = value0 + grad.dot(dz) + 0.5 * c * dz.squaredNorm();
    // rounding guard scaled to the evaluation's summands: once the true
    // decrease drops below the value's resolution, the exact comparison
    // would reject every curvature
    const double slack =
        16.0 * std::numeric_limits<double>::epsilon() * (1.0 + magnitude);
    if (value1 + 0.5 * alpha * dz.squaredNorm() <= model + slack) {
      c_io = c;
      if (backtrack_count) *backtrack_count = backtracks;
      return candidate;
    }
    c *= cfg.beta;
    ++backtracks;
    if (c > cfg.c_max) {
      std::ostringstream msg;
      msg << "bck_min: curvature " << c << " exceeded cap " << cfg.c_max << " at block "
          << block << "; callback is non-smooth or badly scaled"
          << " (|grad|=" << grad.norm() << ", value0=" << value0 << ", value1=" << value1
          << ", model=" << model << ", |dz|=" << dz.norm() << ", rho=" << cfg.rho << ")";
      throw CurvatureOverflowError(msg.str(), c);
    }
  }
}

std::pair<Vector, std::vector<SweepReport>> primal_sweeps(
    const BlockNlp& nlp, const Vector& z0, const Vector& mu, const Parameter& s,
    const SolverConfig& cfg, CurvatureState* curvature) {
  cfg.validate();
  require(nlp.finalized(), "primal_sweeps: NLP not finalised");
  require(z0.size() == nlp.num_vars(), "primal_sweeps: z dimension mismatch");

  const int B = nlp.num_blocks();
  Vector c = (curvature && curvature->c.size() == B) ? curvature->c
                                                     : Vector::Constant(B, cfg.c_init);
  std::vector<Vector> prev_z, prev_grad;
  if (cfg.spectral_curvature) {
    if (curvature && static_cast<int>(curvature->prev_z.size()) == B) {
      prev_z = curvature->prev_z;
      prev_grad = curvature->prev_grad;
    } else {
      prev_z.resize(B);
      prev_grad.resize(B);
    }
  }

  Vector z = z0;
  std::vector<SweepReport> reports;
  reports.reserve(cfg.sweeps);
  if (cfg.sweeps == 0) {
    if (curvature) curvature->c = c;
    return {z, reports};
  }

  double current_value = eval_aug_lagrangian(nlp, z, mu, s, cfg.rho);
  for (int sweep = 0; sweep < cfg.sweeps; ++sweep) {
    if (cfg.reset_curvature) {
      c.setConstant(cfg.c_init);
    } else if (!cfg.spectral_curvature && cfg.decay_curvature) {
      c = (c / cfg.beta).cwiseMax(cfg.c_min);
    }

    SweepReport report;
    report.value_before = current_value;
    report.backtrack_counts.assign(B, 0);
    const Vector z_prev = z;

    for (int g = 0; g < nlp.num_groups(); ++g) {
      const double group_value =
          (g == 0) ? current_value : eval_aug_lagrangian(nlp, z, mu, s, cfg.rho);
      const auto& members = nlp.groups[g];
      const Vector snapshot = z;  // freeze-then-update: all blocks of the
                                  // group read the same point
      std::vector<Vector> updates(members.size());
      auto update_range = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t m = lo; m < hi; ++m) {
          const int b = members[m];
          const Vector grad_b =
              grad_block_aug_lagrangian(nlp, b, snapshot, mu, s, cfg.rho);
          if (cfg.spectral_curvature) {
            const auto snap_b = snapshot.segment(nlp.var_offset(b), nlp.blocks[b].dim);
            if (prev_z[b].size() == snap_b.size()) {
              const Vector dz = snap_b - prev_z[b];
              const double den = dz.squaredNorm();
              const double num = dz.dot(grad_b - prev_grad[b]);
              if (den > 0.0 && num > 0.0) {
                c[b] = std::clamp(num / den, cfg.c_min, cfg.c_max);
              }
            } else {
              c[b] = cfg.c_init;  // fresh objective, no curvature pair yet
            }
            prev_z[b] = snap_b;
            prev_grad[b] = grad_b;
          }
          updates[m] = bck_min(nlp, b, snapshot, mu, s, cfg, c[b],
                               &report.backtrack_counts[b], &group_value, &grad_b);
        }
      };
      const int workers = std::min<int>(cfg.threads, static_cast<int>(members.size()));
      if (workers <= 1) {
        update_range(0, members.size());
      } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (members.size() + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
          const std::size_t lo = w * chunk;
          const std::size_t hi = std::min(members.size(), lo + chunk);
          if (lo < hi) pool.emplace_back(update_range, lo, hi);
        }
        for (auto& t : pool) t.join();
      }
      for (std::size_t m = 0; m < members.size(); ++m) {
        const int b = members[m];
        z.segment(nlp.var_offset(b), nlp.blocks[b].dim) = updates[m];
      }
    }

    current_value = eval_aug_lagrangian(nlp, z, mu, s, cfg.rho);
    report.value_after = current_value;
    report.step_norm = (z - z_prev).norm();
    report.curvature = c;
    reports.push_back(std::move(report));
    if (cfg.sweep_tol > 0.0 && kkt_residual(nlp, z, mu, s, cfg.rho) <= cfg.sweep_tol) {
      break;
    }
  }

  if (curvature) {
    curvature->c = c;
    if (cfg.spectral_curvature) {
      curvature->prev_z = std::move(prev_z);
      curvature->prev_grad = std::move(prev_grad);
    }
  }
  return {z, std::move(reports)};
}

Vector dual_update(const BlockNlp& nlp, const Vector& z, const Vector& mu,
                   const Parameter& s, double rho) {
  require(rho > 0.0, "dual_update: rho must be positive");
  if (nlp.num_constraints() == 0) return mu;
  return mu + rho * eval_constraints(nlp, z, s);
}

namespace {

// Stationarity-driven endgame for the reference solver: plain projected
// gradient steps accepted on the KKT residual, which is computed from the
// analytic gradient and so stays meaningful after the value-based
// backtracking test has drowned in round-off. Returns the best residual.
double polish_stationarity(const BlockNlp& nlp, Vector& z, const Vector& mu,
                           const Parameter& s, double rho, double c_start,
                           double target, int max_iters) {
  double c = std::clamp(c_start, 1e-6, 1e15);
  Vector best_z = z;
  Vector cur = z;
  double best = kkt_residual(nlp, z, mu, s, rho);
  double cur_om = best;
  for (int it = 0; it < max_iters && best > target; ++it) {
    const Vector grad = grad_aug_lagrangian(nlp, cur, mu, s, rho);
    Vector cand = nlp.project(cur - grad / c);
    const double om = kkt_residual(nlp, cand, mu, s, rho);
    if (om < cur_om) {
      cur = std::move(cand);
      cur_om = om;
      if (cur_om < best) {
        best = cur_om;
        best_z = cur;
      }
      c = std::max(c * 0.7, 1e-6);
    } else {
      c *= 2.0;
      if (c > 1e15) break;
    }
  }
  z = std::move(best_z);
  return best;
}

// One continuation stage: primal sweeps at s_stage followed by a dual update.
// Shared by both track_step entry points so a single-stage continuation run
// is bit-identical to the plain step.
StageReport run_stage(const BlockNlp& nlp, PrimalDual& w, const Parameter& s_stage,
                      const SolverConfig& stage_cfg, CurvatureState* curvature,
                      double* omega_out, double* auglag_out) {
  auto [z_new, reports] = primal_sweeps(nlp, w.z, w.mu, s_stage, stage_cfg, curvature);
  if (omega_out) *omega_out = kkt_residual(nlp, z_new, w.mu, s_stage, stage_cfg.rho);
  if (auglag_out) {
    *auglag_out = reports.empty() ? eval_aug_lagrangian(nlp, z_new, w.mu, s_stage, stage_cfg.rho)
                                  : reports.back().value_after;
  }
  w.z = std::move(z_new);
  w.mu = dual_update(nlp, w.z, w.mu, s_stage, stage_cfg.rho);
  StageReport stage;
  stage.stage_param = s_stage;
  stage.sweeps = std::move(reports);
  return stage;
}

}  // namespace

TrackStepResult track_step(const BlockNlp& nlp, const PrimalDual& w,
                           const Parameter& s_next, const SolverConfig& cfg,
                           CurvatureState* curvature) {
  cfg.validate();
  require(cfg.homotopy_stages == 1,
          "track_step: continuation with D > 1 needs the previous parameter");
  TrackStepResult result;
  result.w = w;
  result.stages.push_back(run_stage(nlp, result.w, s_next, cfg, curvature,
                                    &result.omega, &result.auglag));
  result.group_prox_count = static_cast<long>(cfg.sweeps) * nlp.num_groups();
  result.feasibility = feasibility_norm(nlp, result.w.z, s_next);
  return result;
}

TrackStepResult track_step(const BlockNlp& nlp, const PrimalDual& w,
                           const Parameter& s_prev, const Parameter& s_next,
                           const SolverConfig& cfg, CurvatureState* curvature) {
  cfg.validate();
  require(s_prev.s.size() == s_next.s.size(), "track_step: parameter dimensions differ");
  const int stages = cfg.homotopy_stages;
  const int per_stage = cfg.sweeps / stages;
  const int last_stage = cfg.sweeps - per_stage * (stages - 1);

  TrackStepResult result;
  result.w = w;
  for (int j = 1; j <= stages; ++j) {
    Parameter s_j;
    s_j.k = s_next.k;
    // last stage lands exactly on s_next
    s_j.s = (j == stages)
                ? s_next.s
                : Vector(s_prev.s + (static_cast<double>(j) / stages) * (s_next.s - s_prev.s));
    SolverConfig stage_cfg = cfg;
    stage_cfg.sweeps = (j == stages) ? last_stage : per_stage;
    const bool final_stage = (j == stages);
    result.stages.push_back(run_stage(nlp, result.w, s_j, stage_cfg, curvature,
                                      final_stage ? &result.omega : nullptr,
                                      final_stage ? &result.auglag : nullptr));
    result.group_prox_count += static_cast<long>(stage_cfg.sweeps) * nlp.num_groups();
  }
  result.feasibility = feasibility_norm(nlp, result.w.z, s_next);
  return result;
}

PrimalDual full_solve(const BlockNlp& nlp, const PrimalDual& w_init, const Parameter& s,
                      double rho, double tol, const FullSolveOptions& opts,
                      SolveStats* stats) {
  require(tol > 0.0, "full_solve: tol must be positive");
  require(rho > 0.0, "full_solve: rho must be positive");
  require(nlp.finalized(), "full_solve: NLP not finalised");

  PrimalDual w = w_init;
  w.z = nlp.project(w.z);
  if (w.mu.size() != nlp.num_constraints()) w.mu = Vector::Zero(nlp.num_constraints());

  const double rho_init = rho;
  SolveStats local;
  local.rho_final = rho;
  auto finish = [&](double omega, double feas) {
    local.omega = omega;
    local.feasibility = feas;
    local.rho_final = rho;
    if (stats) *stats = local;
  };

  double omega = kkt_residual(nlp, w.z, w.mu, s, rho);
  double feas = feasibility_norm(nlp, w.z, s);
  if (omega <= tol && feas <= tol) {
    finish(omega, feas);
    return w;
  }

  SolverConfig cfg = opts.base;
  cfg.homotopy_stages = 1;
  cfg.sweeps = 1;
  CurvatureState curvature;
  double inner_tol = std::max(0.1 * feas, tol);
  double feas_prev = feas;

  for (int round = 1; round <= opts.max_outer_rounds; ++round) {
    cfg.rho = rho;
    bool inner_converged = false;
    double omega_pre = 0.0;
    for (int inner = 0; inner < opts.max_inner_sweeps; ++inner) {
      auto [z_new, reports] = primal_sweeps(nlp, w.z, w.mu, s, cfg, &curvature);
      w.z = std::move(z_new);
      ++local.total_sweeps;
      omega_pre = kkt_residual(nlp, w.z, w.mu, s, rho);
      if (omega_pre <= inner_tol) {
        inner_converged = true;
        break;
      }
    }
    if (!inner_converged) {
      const double c_start = curvature.c.size() ? curvature.c.maxCoeff() : cfg.c_init;
      omega_pre = polish_stationarity(nlp, w.z, w.mu, s, rho, c_start, inner_tol,
                                      opts.polish_iterations);
      inner_converged = (omega_pre <= inner_tol);
      curvature.clear_history();
    }
    local.outer_rounds = round;

    // the pre-update pair may already be the answer; updating mu would kick
    // the stationarity residual by rho |G|
    feas = feasibility_norm(nlp, w.z, s);
    if (omega_pre <= tol && feas <= tol) {
      finish(omega_pre, feas);
      return w;
    }

    w.mu = dual_update(nlp, w.z, w.mu, s, rho);
    curvature.clear_history();  // the objective changed under the iterate

    omega = kkt_residual(nlp, w.z, w.mu, s, rho);
    if (omega <= tol && feas <= tol) {
      finish(omega, feas);
      return w;
    }
    inner_tol = std::max(0.1 * feas, tol);
    // only a solved subproblem with outstanding feasibility can blame the
    // penalty for a stall; past that, growing rho only stiffens the primal
    if (inner_converged && feas > tol && feas > opts.stall_factor * feas_prev &&
        rho < opts.rho_max) {
      rho = std::min(rho * opts.rho_growth, opts.rho_max);
    } else if (!inner_converged && rho > rho_init) {
      // the subproblem is too stiff to solve at this penalty; soften it and
      // let the accumulated multiplier carry the feasibility
      rho = std::max(rho / opts.rho_growth, rho_init);
      curvature.clear_history();
    }
    feas_prev = feas;
  }

  finish(omega, feas);
  std::ostringstream msg;
  msg << "full_solve: no convergence after " << opts.max_outer_rounds
      << " outer rounds (omega=" << omega << ", |G|=" << feas << ")";
  throw NoConvergenceError(msg.str(), omega, feas);
}

}  // namespace optrack
