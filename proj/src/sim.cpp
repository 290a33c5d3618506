#include "optrack/sim.hpp"

#include "optrack/diagnostics.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace optrack {

Budget compute_budget(const BudgetModel& budget, double dt, int stages) {
  if (budget.power <= 0.0) throw std::invalid_argument("compute_budget: power must be positive");
  if (dt <= 0.0) throw std::invalid_argument("compute_budget: dt must be positive");
  if (stages < 1) throw std::invalid_argument("compute_budget: stages must be at least 1");
  // nudge against binary round-off in products like 300 * 0.35
  const double raw = budget.power * dt;
  Budget out;
  out.total = static_cast<long>(std::floor(raw + 1e-9 * std::max(1.0, raw)));
  out.per_stage = out.total / stages;
  return out;
}

Vector ClosedLoopTrace::outputs(const SimModel& model) const {
  Vector y(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    y[static_cast<Index>(i)] = model.output(rows[i].x_plant);
  }
  return y;
}

namespace {

long step_count(double duration, double dt) {
  if (duration <= 0.0) throw std::invalid_argument("run: duration must be positive");
  return static_cast<long>(std::floor(duration / dt + 1e-9)) + 1;
}

PrimalDual initial_guess(const BlockNlp& nlp) {
  PrimalDual w;
  w.z = nlp.project(Vector::Zero(nlp.num_vars()));
  w.mu = Vector::Zero(nlp.num_constraints());
  return w;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

ClosedLoopTrace run_closed_loop(const SimModel& model, SolverConfig cfg,
                                const BudgetModel& budget, const RunOptions& opts) {
  cfg.validate();
  if (model.dt <= 0.0) throw std::invalid_argument("run_closed_loop: model has no period");
  const double dt = model.dt;
  const Budget b = compute_budget(budget, dt, cfg.homotopy_stages);
  if (b.total == 0) {
    std::cerr << "run_closed_loop: budget exhausted (power " << budget.power << ", dt " << dt
              << "); steps run dual updates only\n";
  }
  cfg.sweeps = static_cast<int>(b.total);

  ClosedLoopTrace trace;
  trace.model_id = model.id;
  trace.dt = dt;
  trace.rho = cfg.rho;
  trace.sweeps_per_step = b.total;
  trace.stages = cfg.homotopy_stages;
  trace.seed = opts.seed;
  trace.duration = opts.duration;
  trace.power = budget.power;

  const long steps = step_count(opts.duration, dt);
  const BlockNlp& nlp = model.nlp;

  Parameter s;
  s.k = 0;
  Vector x_plant = model.x0;
  s.s = model.make_param(0.0, x_plant);

  PrimalDual w = full_solve(nlp, initial_guess(nlp), s, cfg.rho, opts.init_tol,
                            opts.solve_options);
  Rng rng(opts.seed);
  for (Index j = 0; j < w.z.size(); ++j) {
    w.z[j] += rng.uniform(-opts.perturbation, opts.perturbation);
  }
  for (Index j = 0; j < w.mu.size(); ++j) {
    w.mu[j] += rng.uniform(-opts.perturbation, opts.perturbation);
  }
  w.z = nlp.project(w.z);

  double omega = kkt_residual(nlp, w.z, w.mu, s, cfg.rho);
  double feas = feasibility_norm(nlp, w.z, s);
  double auglag = eval_aug_lagrangian(nlp, w.z, w.mu, s, cfg.rho);
  double wall = 0.0;
  CurvatureState curvature;

  for (long k = 0; k < steps; ++k) {
    const double t_k = k * dt;
    TraceRow row;
    row.k = k;
    row.t = t_k;
    row.s = s.s;
    row.x_plant = x_plant;
    row.u_applied = model.applied_input(w.z);
    row.omega = omega;
    row.feas = feas;
    row.auglag = auglag;
    row.sweeps_used = b.total;
    row.wall_seconds = wall;
    trace.rows.push_back(std::move(row));
    if (opts.record_iterates) trace.iterates.push_back(w);
    if (k + 1 == steps) break;

    x_plant = integrate_plant(model.plant_rhs, x_plant, trace.rows.back().u_applied, dt);
    Parameter s_next;
    s_next.k = static_cast<int>(k) + 1;
    s_next.s = model.make_param((k + 1) * dt, x_plant);

    const auto start = Clock::now();
    TrackStepResult step =
        (cfg.homotopy_stages == 1 && !opts.force_homotopy_path)
            ? track_step(nlp, w, s_next, cfg, &curvature)
            : track_step(nlp, w, s, s_next, cfg, &curvature);
    wall = seconds_since(start);

    w = std::move(step.w);
    omega = step.omega;
    feas = step.feasibility;
    auglag = step.auglag;
    if (opts.record_sweep_reports) {
      std::vector<SweepReport> flattened;
      for (auto& stage : step.stages) {
        for (auto& rep : stage.sweeps) flattened.push_back(std::move(rep));
      }
      trace.sweep_reports.push_back(std::move(flattened));
    }
    s = std::move(s_next);
  }
  return trace;
}

ClosedLoopTrace run_reference_loop(const SimModel& model, SolverConfig cfg,
                                   const BudgetModel& budget, const RunOptions& opts) {
  cfg.validate();
  if (model.dt <= 0.0) throw std::invalid_argument("run_reference_loop: model has no period");
  const double dt = model.dt;

  ClosedLoopTrace trace;
  trace.model_id = model.id + "-reference";
  trace.dt = dt;
  trace.rho = cfg.rho;
  trace.sweeps_per_step = 0;
  trace.stages = 1;
  trace.seed = opts.seed;
  trace.duration = opts.duration;
  trace.power = budget.power;

  const long steps = step_count(opts.duration, dt);
  const BlockNlp& nlp = model.nlp;

  Parameter s;
  s.k = 0;
  Vector x_plant = model.x0;
  s.s = model.make_param(0.0, x_plant);

  SolveStats stats;
  PrimalDual w = full_solve(nlp, initial_guess(nlp), s, cfg.rho, opts.reference_tol,
                            opts.solve_options, &stats);
  double wall = 0.0;

  for (long k = 0; k < steps; ++k) {
    TraceRow row;
    row.k = k;
    row.t = k * dt;
    row.s = s.s;
    row.x_plant = x_plant;
    row.u_applied = model.applied_input(w.z);
    row.omega = stats.omega;
    row.feas = stats.feasibility;
    row.auglag = eval_aug_lagrangian(nlp, w.z, w.mu, s, cfg.rho);
    row.sweeps_used = stats.total_sweeps;
    row.wall_seconds = wall;
    trace.rows.push_back(std::move(row));
    if (opts.record_iterates) trace.iterates.push_back(w);
    if (k + 1 == steps) break;

    x_plant = integrate_plant(model.plant_rhs, x_plant, trace.rows.back().u_applied, dt);
    Parameter s_next;
    s_next.k = static_cast<int>(k) + 1;
    s_next.s = model.make_param((k + 1) * dt, x_plant);

    const auto start = Clock::now();
    w = full_solve(nlp, w, s_next, cfg.rho, opts.reference_tol, opts.solve_options, &stats);
    wall = seconds_since(start);
    s = std::move(s_next);
  }
  return trace;
}

double window_tracking_error(const SimModel& model, const ClosedLoopTrace& reference,
                             const ClosedLoopTrace& suboptimal, double window_start,
                             double window_end) {
  if (reference.rows.size() != suboptimal.rows.size()) {
    throw std::invalid_argument("window_tracking_error: traces have different lengths");
  }
  std::vector<double> y_star, y_bar;
  for (std::size_t i = 0; i < reference.rows.size(); ++i) {
    const double t = reference.rows[i].t;
    if (t >= window_start - 1e-12 && t <= window_end + 1e-12) {
      y_star.push_back(model.output(reference.rows[i].x_plant));
      y_bar.push_back(model.output(suboptimal.rows[i].x_plant));
    }
  }
  if (y_star.empty()) {
    throw std::invalid_argument("window_tracking_error: no samples in the window");
  }
  return tracking_error(Eigen::Map<const Vector>(y_star.data(), y_star.size()),
                        Eigen::Map<const Vector>(y_bar.data(), y_bar.size()));
}

namespace {

void append_number(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

std::string trace_to_csv(const ClosedLoopTrace& trace) {
  std::string out;
  const Index p = trace.rows.empty() ? 0 : trace.rows.front().s.size();
  const Index nx = trace.rows.empty() ? 0 : trace.rows.front().x_plant.size();
  const Index nu = trace.rows.empty() ? 0 : trace.rows.front().u_applied.size();

  out += "k,t";
  for (Index j = 0; j < p; ++j) out += ",s_" + std::to_string(j);
  for (Index j = 0; j < nx; ++j) out += ",x_plant_" + std::to_string(j);
  for (Index j = 0; j < nu; ++j) out += ",u_applied_" + std::to_string(j);
  out += ",omega,feasG,auglag,M_used,D,rho,dt,seed\n";

  for (const auto& row : trace.rows) {
    out += std::to_string(row.k);
    out += ',';
    append_number(out, row.t);
    for (Index j = 0; j < p; ++j) {
      out += ',';
      append_number(out, row.s[j]);
    }
    for (Index j = 0; j < nx; ++j) {
      out += ',';
      append_number(out, row.x_plant[j]);
    }
    for (Index j = 0; j < nu; ++j) {
      out += ',';
      append_number(out, row.u_applied[j]);
    }
    out += ',';
    append_number(out, row.omega);
    out += ',';
    append_number(out, row.feas);
    out += ',';
    append_number(out, row.auglag);
    out += ',' + std::to_string(row.sweeps_used);
    out += ',' + std::to_string(trace.stages);
    out += ',';
    append_number(out, trace.rho);
    out += ',';
    append_number(out, trace.dt);
    out += ',' + std::to_string(trace.seed);
    out += '\n';
  }
  return out;
}

void write_trace_csv(const std::string& path, const ClosedLoopTrace& trace) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open trace file for writing: " + path);
  file << trace_to_csv(trace);
}

}  // namespace optrack
