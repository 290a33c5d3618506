#pragma once

#include "optrack/config.hpp"
#include "optrack/sim.hpp"
#include "optrack/sim_model.hpp"

#include <string>

namespace optrack {

/// Builds one of the named experiment models at the given controller period,
/// honouring every documented config key (model hyperparameters, weights,
/// reference schedules). Throws std::invalid_argument for unknown names.
SimModel make_model(const std::string& name, const KeyValueConfig& cfg, double dt);

/// Solver knobs from config (alpha, beta, curvature handling). rho, sweeps
/// and stages are filled in by the caller.
SolverConfig solver_config_from(const KeyValueConfig& cfg);

/// Reference-solver options from config; keeps the oracle's own curvature
/// seeding while honouring the shared alpha/beta knobs.
FullSolveOptions oracle_options_from(const KeyValueConfig& cfg);

/// Closed-loop run options from config (perturbation, tolerances, window).
RunOptions run_options_from(const KeyValueConfig& cfg);

/// Output-error window [start, end] used by sweeps and summaries.
std::pair<double, double> error_window_from(const KeyValueConfig& cfg);

}  // namespace optrack
