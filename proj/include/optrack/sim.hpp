#pragma once

#include "optrack/sim_model.hpp"
#include "optrack/solver.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace optrack {

/// Modeled computational power: primal sweeps executable per second.
struct BudgetModel {
  double power = 2000.0;
};

struct Budget {
  long total = 0;      // M = floor(power * dt)
  long per_stage = 0;  // floor(M / D); the last stage absorbs the remainder
};

/// Sweep budget for one sampling period. A zero budget is legal and means the
/// tracking step degenerates to dual updates only.
Budget compute_budget(const BudgetModel& budget, double dt, int stages);

struct TraceRow {
  long k = 0;
  double t = 0.0;
  Vector s;
  Vector x_plant;
  Vector u_applied;
  double omega = 0.0;
  double feas = 0.0;
  double auglag = 0.0;
  long sweeps_used = 0;
  double wall_seconds = 0.0;
};

struct ClosedLoopTrace {
  std::vector<TraceRow> rows;
  // per step, flattened across continuation stages; empty when not recorded
  std::vector<std::vector<SweepReport>> sweep_reports;
  std::vector<PrimalDual> iterates;  // suboptimal w at each step (optional)

  // run metadata, echoed into every CSV row
  std::string model_id;
  double dt = 0.0;
  double rho = 0.0;
  long sweeps_per_step = 0;
  int stages = 1;
  std::uint64_t seed = 0;
  double duration = 0.0;
  double power = 0.0;

  Vector outputs(const SimModel& model) const;
};

struct RunOptions {
  double duration = 6.0;
  std::uint64_t seed = 1;
  double perturbation = 0.05;  // uniform(-p, p) applied entrywise to w*_0
  double init_tol = 1e-7;     // accuracy of the initial full solve
  double reference_tol = 1e-7;
  bool force_homotopy_path = false;  // route D = 1 through the continuation loop
  bool record_sweep_reports = true;
  bool record_iterates = false;
  FullSolveOptions solve_options;
};

/// Closed loop under the fixed-budget tracking step: solve the first problem
/// to full accuracy, perturb, then per period apply the first planned input,
/// integrate the plant, advance the parameter and run one tracking step
/// warm-started at the previous plan.
ClosedLoopTrace run_closed_loop(const SimModel& model, SolverConfig cfg,
                                const BudgetModel& budget, const RunOptions& opts);

/// Same driver, but every step solves to full accuracy. Stands in for an
/// external NLP solver as the optimality baseline.
ClosedLoopTrace run_reference_loop(const SimModel& model, SolverConfig cfg,
                                   const BudgetModel& budget, const RunOptions& opts);

/// RMS gap between the two runs' outputs over t in [window_start, window_end].
double window_tracking_error(const SimModel& model, const ClosedLoopTrace& reference,
                             const ClosedLoopTrace& suboptimal,
                             double window_start = 2.0, double window_end = 4.0);

/// CSV with one row per step; floating point at 17 significant digits so
/// equal runs serialise byte-identically.
std::string trace_to_csv(const ClosedLoopTrace& trace);
void write_trace_csv(const std::string& path, const ClosedLoopTrace& trace);

}  // namespace optrack
