#include "model_factory.hpp"

#include "optrack/diagnostics.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace {

using namespace optrack;

constexpr int kExitSuccess = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct CommonArgs {
  std::string model;
  std::string config_path;
  std::string out_path;
  std::optional<double> dt;
  std::optional<double> rho;
  std::optional<double> power;
  std::optional<double> duration;
  std::optional<std::uint64_t> seed;
  std::optional<int> stages;
};

struct Resolved {
  std::string model;
  double dt = 0.0;
  double rho = 0.0;
  double power = 0.0;
  double duration = 0.0;
  std::uint64_t seed = 0;
  int stages = 1;
  KeyValueConfig cfg;
};

void add_common_flags(CLI::App* cmd, CommonArgs* args, bool with_out) {
  cmd->add_option("--model", args->model, "model: dc-motor, unicycles or toy-qp");
  cmd->add_option("--config", args->config_path, "key = value config file");
  cmd->add_option("--dt", args->dt, "sampling period (s)");
  cmd->add_option("--rho", args->rho, "penalty parameter");
  cmd->add_option("--power", args->power, "computational power (prox sweeps per second)");
  cmd->add_option("--duration", args->duration, "simulated time (s)");
  cmd->add_option("--seed", args->seed, "perturbation seed");
  cmd->add_option("--stages,-D", args->stages, "continuation stages D");
  if (with_out) cmd->add_option("--out", args->out_path, "output CSV path");
}

// flag > config > default
Resolved resolve(const CommonArgs& args) {
  Resolved r;
  r.cfg = args.config_path.empty() ? KeyValueConfig()
                                   : KeyValueConfig::from_file(args.config_path);
  r.model = !args.model.empty() ? args.model : r.cfg.get_string("run.model", "");
  if (r.model.empty()) throw std::invalid_argument("missing --model (or run.model in config)");

  if (args.dt) {
    r.dt = *args.dt;
  } else if (r.cfg.has("run.dt")) {
    r.dt = r.cfg.get_double("run.dt", 0.0);
  } else {
    throw std::invalid_argument("missing --dt (or run.dt in config)");
  }
  if (!(r.dt > 0.0)) throw std::invalid_argument("invalid --dt: must be positive");

  r.rho = args.rho ? *args.rho : r.cfg.get_double("run.rho", 100.0);
  if (!(r.rho > 0.0)) throw std::invalid_argument("invalid --rho: must be positive");
  r.power = args.power ? *args.power : r.cfg.get_double("run.power", 2000.0);
  if (!(r.power > 0.0)) throw std::invalid_argument("invalid --power: must be positive");
  r.duration = args.duration ? *args.duration : r.cfg.get_double("run.duration", 6.0);
  if (!(r.duration > 0.0)) throw std::invalid_argument("invalid --duration: must be positive");
  r.seed = args.seed ? *args.seed : r.cfg.get_u64("run.seed", 1);
  r.stages = args.stages ? *args.stages : r.cfg.get_int("run.stages", 1);
  if (r.stages < 1) throw std::invalid_argument("invalid --stages: must be at least 1");
  return r;
}

std::string reference_path_for(const std::string& out_path) {
  const auto dot = out_path.find_last_of('.');
  const auto slash = out_path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return out_path + "_ref.csv";
  }
  return out_path.substr(0, dot) + "_ref" + out_path.substr(dot);
}

struct RunOutput {
  ClosedLoopTrace trace;
  ClosedLoopTrace reference;
  double error = 0.0;
  double mean_omega = 0.0;
  double mean_feas = 0.0;
};

RunOutput run_pair(const Resolved& r, double dt, double rho, double power, int stages) {
  SimModel model = make_model(r.model, r.cfg, dt);
  SolverConfig cfg = solver_config_from(r.cfg);
  cfg.rho = rho;
  cfg.homotopy_stages = stages;
  RunOptions opts = run_options_from(r.cfg);
  opts.duration = r.duration;
  opts.seed = r.seed;
  BudgetModel budget{power};

  RunOutput out;
  out.trace = run_closed_loop(model, cfg, budget, opts);
  out.reference = run_reference_loop(model, cfg, budget, opts);
  const auto [w0, w1] = error_window_from(r.cfg);
  try {
    out.error = window_tracking_error(model, out.reference, out.trace, w0, w1);
  } catch (const std::invalid_argument&) {
    out.error = std::nan("");  // run shorter than the error window
  }
  double sum_omega = 0.0, sum_feas = 0.0;
  long count = 0;
  for (const auto& row : out.trace.rows) {
    if (row.t >= w0 - 1e-12 && row.t <= w1 + 1e-12) {
      sum_omega += row.omega;
      sum_feas += row.feas;
      ++count;
    }
  }
  if (count > 0) {
    out.mean_omega = sum_omega / count;
    out.mean_feas = sum_feas / count;
  }
  return out;
}

int cmd_track(const CommonArgs& args) {
  const Resolved r = resolve(args);
  if (args.out_path.empty()) throw std::invalid_argument("missing --out");
  RunOutput out = run_pair(r, r.dt, r.rho, r.power, r.stages);
  write_trace_csv(args.out_path, out.trace);
  const std::string ref_path = reference_path_for(args.out_path);
  write_trace_csv(ref_path, out.reference);
  std::printf("model %s: %zu steps, E = %.6g, wrote %s and %s\n", r.model.c_str(),
              out.trace.rows.size(), out.error, args.out_path.c_str(), ref_path.c_str());
  return kExitSuccess;
}

int sweep_threads() {
  const char* env = std::getenv("OPTRACK_THREADS");
  if (!env) return 1;
  const int n = std::atoi(env);
  return n > 0 ? n : 1;
}

int cmd_sweep(const CommonArgs& args, const std::string& axis,
              const std::vector<double>& grid) {
  const Resolved r = resolve(args);
  if (args.out_path.empty()) throw std::invalid_argument("missing --out");
  if (grid.empty()) throw std::invalid_argument("empty --grid");
  if (axis != "dt" && axis != "rho" && axis != "power" && axis != "D") {
    throw std::invalid_argument("invalid --axis: expected dt, rho, power or D");
  }

  struct Row {
    double value, error, mean_omega, mean_feas;
  };
  std::vector<Row> rows(grid.size());
  std::vector<std::string> failures(grid.size());

  auto run_point = [&](std::size_t i) {
    const double v = grid[i];
    double dt = r.dt, rho = r.rho, power = r.power;
    int stages = r.stages;
    if (axis == "dt") dt = v;
    if (axis == "rho") rho = v;
    if (axis == "power") power = v;
    if (axis == "D") stages = static_cast<int>(v);
    try {
      RunOutput out = run_pair(r, dt, rho, power, stages);
      rows[i] = {v, out.error, out.mean_omega, out.mean_feas};
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  };

  const int workers = std::min<int>(sweep_threads(), static_cast<int>(grid.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) run_point(i);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next.fetch_add(1); i < grid.size(); i = next.fetch_add(1)) {
        run_point(i);
      }
    };
    std::vector<std::thread> pool;
    for (int wkr = 0; wkr < workers; ++wkr) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!failures[i].empty()) {
      throw std::runtime_error("sweep point " + std::to_string(grid[i]) +
                               " failed: " + failures[i]);
    }
  }

  std::ofstream file(args.out_path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open output file: " + args.out_path);
  std::string text = axis + ",E,mean_omega,mean_feasG\n";
  char buf[160];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", row.value, row.error,
                  row.mean_omega, row.mean_feas);
    text += buf;
  }
  file << text;
  std::printf("sweep over %s: %zu points, wrote %s\n", axis.c_str(), rows.size(),
              args.out_path.c_str());
  return kExitSuccess;
}

int cmd_solve(const CommonArgs& args, double tol) {
  CommonArgs with_defaults = args;
  if (!with_defaults.dt) {
    // nominal periods per model when neither flag nor config provides one
    KeyValueConfig cfg = args.config_path.empty()
                             ? KeyValueConfig()
                             : KeyValueConfig::from_file(args.config_path);
    if (!cfg.has("run.dt")) {
      const std::string name =
          !args.model.empty() ? args.model : cfg.get_string("run.model", "");
      if (name == "dc-motor") with_defaults.dt = 0.018;
      if (name == "unicycles") with_defaults.dt = 0.35;
      if (name == "toy-qp") with_defaults.dt = 0.1;
    }
  }
  const Resolved r = resolve(with_defaults);
  if (!(tol > 0.0)) throw std::invalid_argument("invalid --tol: must be positive");

  SimModel model = make_model(r.model, r.cfg, r.dt);
  const BlockNlp& nlp = model.nlp;
  Parameter s;
  s.s = model.make_param(0.0, model.x0);
  PrimalDual guess;
  guess.z = nlp.project(Vector::Zero(nlp.num_vars()));
  guess.mu = Vector::Zero(nlp.num_constraints());

  SolveStats stats;
  const FullSolveOptions opts = oracle_options_from(r.cfg);
  const PrimalDual w = full_solve(nlp, guess, s, r.rho, tol, opts, &stats);

  std::printf("model: %s (n = %ld, m = %ld)\n", r.model.c_str(),
              static_cast<long>(nlp.num_vars()), static_cast<long>(nlp.num_constraints()));
  const Index show = std::min<Index>(w.z.size(), 8);
  std::string zs;
  char buf[48];
  for (Index j = 0; j < show; ++j) {
    std::snprintf(buf, sizeof(buf), "%s%.10g", j ? " " : "", w.z[j]);
    zs += buf;
  }
  std::printf("z*: %s%s\n", zs.c_str(), w.z.size() > show ? " ..." : "");
  if (w.mu.size() > 0 && w.mu.size() <= 8) {
    std::string ms;
    for (Index j = 0; j < w.mu.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "%s%.10g", j ? " " : "", w.mu[j]);
      ms += buf;
    }
    std::printf("mu*: %s\n", ms.c_str());
  }
  std::printf("omega: %.6g\nfeasG: %.6g\nouter_rounds: %d\nsweeps: %ld\nrho_final: %.6g\n",
              stats.omega, stats.feasibility, stats.outer_rounds, stats.total_sweeps,
              stats.rho_final);
  return kExitSuccess;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"real-time parametric NLP tracking: splitting solver and experiment harness"};
  app.require_subcommand(1);

  CommonArgs track_args, sweep_args, solve_args;
  std::string sweep_axis;
  std::vector<double> sweep_grid;
  double solve_tol = 1e-7;

  CLI::App* track = app.add_subcommand("track", "closed-loop run, writes trace + reference CSVs");
  add_common_flags(track, &track_args, true);

  CLI::App* sweep = app.add_subcommand("sweep", "grid of closed-loop runs, writes a summary CSV");
  add_common_flags(sweep, &sweep_args, true);
  sweep->add_option("--axis", sweep_axis, "swept quantity: dt, rho, power or D");
  sweep->add_option("--grid", sweep_grid, "comma-separated grid values")->delimiter(',');

  CLI::App* solve = app.add_subcommand("solve", "solve one instance to full accuracy");
  add_common_flags(solve, &solve_args, false);
  solve->add_option("--tol", solve_tol, "KKT and feasibility tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitSuccess : kExitUsage;
  }

  try {
    if (track->parsed()) return cmd_track(track_args);
    if (sweep->parsed()) return cmd_sweep(sweep_args, sweep_axis, sweep_grid);
    if (solve->parsed()) return cmd_solve(solve_args, solve_tol);
    std::cerr << "error: no subcommand\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
