#include <cmath>
#include <iomanip>
#include <sstream>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include <CLI11.hpp>

#include "hkdmpc/run_log.hpp"
#include "hkdmpc/scenario.hpp"
#include "hkdmpc/solve_stats.hpp"

namespace fs = std::filesystem;
using namespace hkdmpc;

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kDivergence = 2, kSolverFailure = 3 };

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

struct RunOptions {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<int> replan_iters;
  bool no_feedback_warmstart = false;
  bool no_plant_feedback = false;
  std::optional<double> duration;
  bool asynchronous = false;
};

Scenario load_with_overrides(const RunOptions& o) {
  Scenario sc = load_scenario(o.scenario);
  if (o.seed) sc.sim.seed = *o.seed;
  if (!o.out_dir.empty()) sc.output_dir = o.out_dir;
  if (o.replan_iters) sc.controller.replan_iterations = *o.replan_iters;
  if (o.no_feedback_warmstart) sc.controller.solver.feedback_warm_start = false;
  if (o.no_plant_feedback) sc.sim.plant_feedback = false;
  if (o.duration) sc.sim.duration = *o.duration;
  if (o.asynchronous) sc.sim.asynchronous = true;
  try {
    sc.controller.validate();
    sc.sim.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return sc;
}

int cmd_run(const RunOptions& o) {
  const Scenario sc = load_with_overrides(o);
  const CommandScript script = sc.script();
  MpcController controller(sc.robot, script, sc.controller);
  const RunLog log = run_closed_loop(controller, sc.sim);

  const fs::path dir(sc.output_dir);
  fs::create_directories(dir);
  {
    auto f = open_out(dir / "run.csv");
    write_run_csv(log, f);
  }
  {
    auto f = open_out(dir / "telemetry.csv");
    write_telemetry_csv(log.telemetry, f);
  }
  {
    auto f = open_out(dir / "events.csv");
    write_events_csv(log.events, f);
  }
  {
    auto f = open_out(dir / "reference.csv");
    write_reference_csv(reference_profile(script, sc.robot), f);
  }
  const RunSummary summary = summarize(sc.name, log, script, sc.robot);
  {
    auto f = open_out(dir / "summary.yaml");
    write_summary(summary, f);
  }
  std::vector<double> wall;
  for (const auto& t : log.telemetry) {
    if (!t.cold_start) wall.push_back(t.wall_ms);
  }
  if (!wall.empty()) {
    auto f = open_out(dir / "stats.md");
    f << render_stats_table({{sc.name, SolveStats::from_samples(wall)}});
  }

  write_summary(summary, std::cout);
  std::cout << "artifacts: " << dir.string() << '\n';
  if (log.diverged) {
    std::cerr << "error: " << log.divergence_reason << '\n';
    return log.divergence_reason.rfind("solver failure", 0) == 0 ? kSolverFailure : kDivergence;
  }
  return kOk;
}

int cmd_solve_once(const RunOptions& o, double time) {
  const Scenario sc = load_with_overrides(o);
  const CommandScript script = sc.script();
  MpcController controller(sc.robot, script, sc.controller);
  const int step = static_cast<int>(std::floor(time / sc.dt + 1e-9));

  PlantState measured = standing_state(sc.robot, script.command_at_step(step).height);
  measured.time = step * sc.dt;
  const auto problem = controller.build_problem(measured, step);
  ddp::HsddpSolver solver(sc.controller.solver);
  const ddp::DdpSolution sol = solver.solve(*problem);

  const fs::path dir(sc.output_dir);
  fs::create_directories(dir);
  {
    auto f = open_out(dir / "solve_trajectory.csv");
    f << "k,t";
    for (int i = 0; i < kStateDim; ++i) f << ",x" << i;
    for (int i = 0; i < kControlDim; ++i) f << ",u" << i;
    f << '\n' << std::setprecision(17);
    for (int k = 0; k <= sol.horizon(); ++k) {
      f << k << ',' << (step + k) * sc.dt;
      for (int i = 0; i < kStateDim; ++i) f << ',' << sol.x[k][i];
      for (int i = 0; i < kControlDim; ++i) {
        f << ',' << (k < sol.horizon() ? sol.u[k][i] : std::numeric_limits<double>::quiet_NaN());
      }
      f << '\n';
    }
  }
  {
    auto f = open_out(dir / "solve_trace.csv");
    f << "outer,iteration,cost,violation,step,regularization\n" << std::setprecision(17);
    for (const auto& t : sol.trace) {
      f << t.outer << ',' << t.iteration << ',' << t.cost << ',' << t.violation << ',' << t.step
        << ',' << t.regularization << '\n';
    }
  }
  const double td = problem->max_touchdown_residual(sol);
  const double fr = problem->min_friction_residual(sol);
  std::ostringstream report;
  report << "scenario: " << sc.name << "\nwindow_start: " << step
         << "\nstatus: " << (sol.converged() ? "converged" : "not_converged")
         << "\niterations: " << sol.iterations << "\nouter_iterations: " << sol.outer_iterations
         << "\ncost: " << sol.cost << "\nmax_violation: " << sol.max_violation
         << "\nmax_touchdown_residual: " << td << "\nmin_friction_residual: "
         << (std::isfinite(fr) ? fr : 0.0) << '\n';
  {
    auto f = open_out(dir / "solve_report.yaml");
    f << report.str();
  }
  std::cout << report.str() << "artifacts: " << dir.string() << '\n';
  return kOk;
}

int cmd_stats(const std::vector<std::string>& files) {
  std::vector<StatsRow> rows;
  for (const auto& path : files) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    const fs::path p(path);
    const std::string task = p.parent_path().filename().empty() ? p.stem().string()
                                                                 : p.parent_path().filename().string();
    rows.emplace_back(task, SolveStats::from_samples(read_wall_times(in)));
  }
  std::cout << render_stats_table(rows);
  return kOk;
}

int cmd_ablation(const RunOptions& o, double disturbance_time, double omega_x) {
  const Scenario base = load_with_overrides(o);
  const CommandScript script = base.script();
  const fs::path dir(base.output_dir);
  fs::create_directories(dir);

  // Rollout comparison at the disturbed replan.
  MpcController controller(base.robot, script, base.controller);
  SimConfig pre = base.sim;
  pre.duration = disturbance_time;
  pre.impulses.clear();
  pre.random_impulses.count = 0;
  const RunLog before = run_closed_loop(controller, pre);
  if (before.diverged) {
    std::cerr << "error: " << before.divergence_reason << '\n';
    return kDivergence;
  }
  PlantState measured = before.final_state;
  measured.x[state_index::kOmega] += omega_x;
  const int step = static_cast<int>(std::lround(disturbance_time / script.dt()));
  const WarmStartComparison cmp = compare_warm_start_rollouts(controller, measured, step);

  // Closed-loop runs with and without feedback.
  SimConfig disturbed = base.sim;
  disturbed.impulses.push_back({disturbance_time - 1e-9, BodyImpulse{Vec3(omega_x, 0, 0), Vec3::Zero()}});
  MpcController c1(base.robot, script, base.controller);
  const RunLog fb = run_closed_loop(c1, disturbed);

  MpcController c2(base.robot, script, base.controller);
  SimConfig cut = disturbed;
  cut.feedback_cutoff = disturbance_time - 1e-9;
  const RunLog nofb = run_closed_loop(c2, cut);

  auto excursion = [&](const RunLog& log) {
    double m = 0.0;
    for (const auto& r : log.rows) {
      if (r.time >= disturbance_time) m = std::max(m, std::abs(r.x[state_index::kOmega]));
    }
    if (log.final_state.time >= disturbance_time) {
      m = std::max(m, std::abs(log.final_state.x[state_index::kOmega]));
    }
    return m;
  };
  {
    auto f = open_out(dir / "ablation.csv");
    f << "time,wx_feedback,wx_no_feedback\n" << std::setprecision(17);
    const std::size_t n = std::max(fb.rows.size(), nofb.rows.size());
    for (std::size_t i = 0; i < n; ++i) {
      const double t = i < fb.rows.size() ? fb.rows[i].time : nofb.rows[i].time;
      f << t << ',';
      if (i < fb.rows.size()) f << fb.rows[i].x[state_index::kOmega];
      f << ',';
      if (i < nofb.rows.size()) f << nofb.rows[i].x[state_index::kOmega];
      f << '\n';
    }
  }
  {
    auto f = open_out(dir / "ablation_rollout.csv");
    f << "step,wx_feedback,wx_no_feedback\n" << std::setprecision(17);
    const auto& a = cmp.with_feedback.omega_x;
    const auto& b = cmp.without_feedback.omega_x;
    for (std::size_t i = 0; i < std::max(a.size(), b.size()); ++i) {
      f << i << ',';
      if (i < a.size()) f << a[i];
      f << ',';
      if (i < b.size()) f << b[i];
      f << '\n';
    }
  }
  auto peak = [](const std::vector<double>& w) {
    double m = 0.0;
    for (double v : w) m = std::max(m, std::abs(v));
    return m;
  };
  std::ostringstream report;
  report << "scenario: " << base.name << "\ndisturbance_time: " << disturbance_time
         << "\nomega_x_impulse: " << omega_x
         << "\nrollout_feedback_diverged: " << (cmp.with_feedback.diverged ? "true" : "false")
         << "\nrollout_feedback_cost: " << cmp.with_feedback.cost
         << "\nrollout_no_feedback_diverged: " << (cmp.without_feedback.diverged ? "true" : "false")
         << "\nrollout_no_feedback_cost: " << cmp.without_feedback.cost
         << "\nrollout_omega_x_excursion_feedback: " << peak(cmp.with_feedback.omega_x)
         << "\nrollout_omega_x_excursion_no_feedback: " << peak(cmp.without_feedback.omega_x)
         << "\nclosed_loop_feedback_diverged: " << (fb.diverged ? "true" : "false")
         << "\nclosed_loop_no_feedback_diverged: " << (nofb.diverged ? "true" : "false")
         << "\nomega_x_excursion_feedback: " << excursion(fb)
         << "\nomega_x_excursion_no_feedback: " << excursion(nofb) << '\n';
  {
    auto f = open_out(dir / "ablation_summary.yaml");
    f << report.str();
  }
  std::cout << report.str() << "artifacts: " << dir.string() << '\n';
  return kOk;
}

void add_common(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("scenario", o.scenario, "Scenario YAML file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Seed for random disturbances and noise");
  cmd->add_option("--out", o.out_dir, "Output directory");
  cmd->add_option("--replan-iters", o.replan_iters, "DDP iteration cap for replans")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--no-feedback-warmstart", o.no_feedback_warmstart,
                "Warm-start replans with feedforward controls only");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HKD-MPC quadruped simulator"};
  app.require_subcommand(1);

  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "Closed-loop simulation of a scenario");
  add_common(run, run_opts);
  run->add_flag("--no-plant-feedback", run_opts.no_plant_feedback,
                "Apply planned GRFs without the feedback gains");
  run->add_option("--duration", run_opts.duration, "Simulated seconds (default: script length)");
  run->add_flag("--async", run_opts.asynchronous, "Planner in its own thread, real-time plant");

  RunOptions solve_opts;
  double solve_time = 0.0;
  auto* solve = app.add_subcommand("solve-once", "Single cold solve over one planning window");
  add_common(solve, solve_opts);
  solve->add_option("--time", solve_time, "Window start time (s)");

  std::vector<std::string> telemetry_files;
  auto* stats = app.add_subcommand("stats", "Solve-time table from telemetry files");
  stats->add_option("telemetry", telemetry_files, "telemetry.csv files")
      ->required()
      ->check(CLI::ExistingFile);

  RunOptions ablation_opts;
  double disturbance_time = 0.0;
  double omega_x = 5.0;
  auto* ablation = app.add_subcommand("ablation", "Feedback-gain ablation with an omega_x kick");
  add_common(ablation, ablation_opts);
  ablation->add_option("--time", disturbance_time, "Disturbance time (s)")->required();
  ablation->add_option("--omega-x", omega_x, "Roll-rate impulse (rad/s)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_opts);
    if (*solve) return cmd_solve_once(solve_opts, solve_time);
    if (*stats) return cmd_stats(telemetry_files);
    if (*ablation) return cmd_ablation(ablation_opts, disturbance_time, omega_x);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const StatsError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const SimulationDiverged& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDivergence;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolverFailure;
  }
  return kOk;
}
