#pragma once

#include "optrack/block_nlp.hpp"

#include <utility>
#include <vector>

namespace optrack {

/// Every algorithmic knob of the splitting solver.
struct SolverConfig {
  double rho = 100.0;    // penalty parameter, constant while s and mu vary
  int sweeps = 36;       // M: primal sweeps per tracking step (split across stages)
  std::vector<double> alpha;  // per-group proximal regularisation; empty -> alpha_default
  double alpha_default = 1e-6;
  double beta = 2.0;    // backtracking growth factor, > 1
  double c_init = 1.0;  // initial curvature guess
  double c_min = 1e-4;  // floor for the per-sweep curvature decay; a very low
                        // floor lets quiet phases shrink c so far that the next
                        // excitation probes box corners and can hop basins
  double c_max = 1e12;  // cap; exceeding it raises CurvatureOverflowError
  int homotopy_stages = 1;       // D; 1 recovers the plain tracking step
  bool reset_curvature = false;  // reset c_i to c_init at every sweep start
  bool decay_curvature = true;   // otherwise divide carried c_i by beta per sweep
  bool spectral_curvature = false;  // seed c_i from the Barzilai-Borwein ratio of
                                    // the previous sweep; used by the reference
                                    // solver, not the budgeted tracking path
  double sweep_tol = 0.0;  // > 0: stop sweeping early once the subproblem KKT
                           // residual drops below this (M -> infinity surrogate)
  int threads = 1;               // parallel within-group block updates

  double alpha_for_group(int g) const {
    return (g < static_cast<int>(alpha.size())) ? alpha[g] : alpha_default;
  }
  double min_alpha(int num_groups) const;
  void validate() const;  // throws std::invalid_argument naming the field
};

/// Record of one primal sweep over all groups.
struct SweepReport {
  double value_before = 0.0;  // L_rho at the sweep start
  double value_after = 0.0;   // L_rho after all groups updated
  double step_norm = 0.0;     // |z_next - z_prev|_2 over the whole sweep
  Vector curvature;           // accepted c_i per block
  std::vector<int> backtrack_counts;  // per block
};

/// One continuation stage: its interpolated parameter and the sweeps run at it.
struct StageReport {
  Parameter stage_param;
  std::vector<SweepReport> sweeps;
};

struct TrackStepResult {
  PrimalDual w;
  std::vector<StageReport> stages;  // length D
  double omega = 0.0;        // KKT residual of the last stage's subproblem at w.z
  double feasibility = 0.0;  // |G(w.z, s_next)|_2 after the final dual update
  double auglag = 0.0;       // L_rho(w.z, mu_pre_dual, s_next)
  long group_prox_count = 0;  // group-level prox steps across all stages
};

/// Per-block curvatures carried across sweeps and tracking steps, plus the
/// previous sweep's points and gradients when spectral seeding is active.
struct CurvatureState {
  Vector c;
  std::vector<Vector> prev_z;
  std::vector<Vector> prev_grad;

  /// Drops the spectral history; call when the objective changes (new mu or
  /// rho) so stale gradient pairs cannot seed the next sweep.
  void clear_history() {
    prev_z.clear();
    prev_grad.clear();
  }
};

/// Backtracking proximal step on block i from the frozen point z.
///
/// Returns the projected gradient candidate for the first curvature in
/// {c_io, beta c_io, beta^2 c_io, ...} whose quadratic model dominates the
/// block objective with margin (alpha_i/2) |dz|^2; c_io is updated to the
/// accepted value. The comparison carries a machine-epsilon slack scaled to
/// the objective magnitude, without which the test stagnates once the true
/// decrease falls below the representable resolution of L. value_hint and
/// grad_hint, when given, must equal L_rho(z, mu, s) and the block gradient.
Vector bck_min(const BlockNlp& nlp, int block, const Vector& z, const Vector& mu,
               const Parameter& s, const SolverConfig& cfg, double& c_io,
               int* backtrack_count = nullptr, const double* value_hint = nullptr,
               const Vector* grad_hint = nullptr);

/// cfg.sweeps Gauss-Seidel sweeps over the groups in order; blocks within a
/// group update in parallel from a common snapshot, so sequential and
/// threaded execution produce bit-identical iterates.
std::pair<Vector, std::vector<SweepReport>> primal_sweeps(
    const BlockNlp& nlp, const Vector& z0, const Vector& mu, const Parameter& s,
    const SolverConfig& cfg, CurvatureState* curvature = nullptr);

/// First-order multiplier update mu + rho G(z, s).
Vector dual_update(const BlockNlp& nlp, const Vector& z, const Vector& mu,
                   const Parameter& s, double rho);

/// Plain tracking step: cfg.sweeps primal sweeps at s_next warm-started at
/// w.z, followed by one dual update. Requires cfg.homotopy_stages == 1.
TrackStepResult track_step(const BlockNlp& nlp, const PrimalDual& w,
                           const Parameter& s_next, const SolverConfig& cfg,
                           CurvatureState* curvature = nullptr);

/// Continuation tracking step: D stages along the path from s_prev to s_next,
/// each running floor(M/D) sweeps (remainder on the last stage) and one dual
/// update. With D == 1 this performs exactly the plain step's operations.
TrackStepResult track_step(const BlockNlp& nlp, const PrimalDual& w,
                           const Parameter& s_prev, const Parameter& s_next,
                           const SolverConfig& cfg, CurvatureState* curvature = nullptr);

struct FullSolveOptions {
  FullSolveOptions() {
    base.spectral_curvature = true;
    base.decay_curvature = false;
  }
  int max_outer_rounds = 500;
  int max_inner_sweeps = 2000;   // sweep cap per outer round
  int polish_iterations = 400;   // stationarity-driven endgame after a stalled round
  double rho_growth = 10.0;     // escalation factor when |G| stalls
  double rho_max = 1e8;         // past this, penalty curvature drowns in round-off
  double stall_factor = 0.5;  // |G| must shrink by this factor per round
  SolverConfig base;          // alpha/beta/curvature knobs; rho and sweeps are ignored
};

struct SolveStats {
  int outer_rounds = 0;
  long total_sweeps = 0;
  double omega = 0.0;
  double feasibility = 0.0;
  double rho_final = 0.0;
};

/// Full-accuracy reference solver: alternating rounds of primal sweeps (until
/// the subproblem KKT residual meets a shrinking inner tolerance) and dual
/// updates, escalating rho tenfold whenever feasibility stalls. Returns once
/// both the KKT residual and |G| are at most tol; throws NoConvergenceError
/// with the last residuals if the round cap is exceeded.
PrimalDual full_solve(const BlockNlp& nlp, const PrimalDual& w_init, const Parameter& s,
                      double rho, double tol, const FullSolveOptions& opts = {},
                      SolveStats* stats = nullptr);

}  // namespace optrack
