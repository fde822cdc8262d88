#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hkd_samples.hpp"
#include "hkdmpc/cost_constraints.hpp"
#include "hkdmpc/run_log.hpp"
#include "hkdmpc/scenario.hpp"
#include "hkdmpc/solve_stats.hpp"
#include "oracles.hpp"

using namespace hkdmpc;
using namespace hkdmpc::testing;
namespace si = state_index;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

Scenario bundled(const std::string& name) {
  return load_scenario(std::string(HKDMPC_CONFIG_DIR) + "/scenarios/" + name + ".yaml");
}

struct ScenarioRun {
  Scenario scenario;
  RunLog log;
};

// Closed-loop runs are shared between criteria.
class Runs {
 public:
  const ScenarioRun& get(const std::string& name, std::uint64_t seed = 0) {
    const std::string key = name + "#" + std::to_string(seed);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    ScenarioRun r{bundled(name), {}};
    if (seed != 0) r.scenario.sim.seed = seed;
    MpcController controller(r.scenario.robot, r.scenario.script(), r.scenario.controller);
    r.log = run_closed_loop(controller, r.scenario.sim);
    return cache_.emplace(key, std::move(r)).first->second;
  }

 private:
  std::map<std::string, ScenarioRun> cache_;
};

Outcome riccati_equivalence() {
  std::mt19937_64 rng(2024);
  const LqProblem p = LqProblem::random(24, 24, 50, rng);
  const RiccatiSolution ref = riccati(p);
  const auto start = std::chrono::steady_clock::now();
  ddp::HsddpSolver solver;
  const ddp::DdpSolution sol = solver.solve(p);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  double err = 0.0;
  for (int k = 0; k < p.n; ++k) {
    err = std::max({err, max_abs(sol.u[k] - ref.u[k]), max_abs(sol.x[k] - ref.x[k]),
                    max_abs(sol.gains[k] - ref.gains[k])});
  }
  err = std::max(err, max_abs(sol.x[p.n] - ref.x[p.n]));
  return {err < 1e-8 && seconds < 1.0,
          fmt("24x24 LQ, 50 steps: max abs err %.2e, %.3f s", err, seconds)};
}

Outcome finite_difference_oracles() {
  const RobotParams p = unitree_a1();
  std::mt19937_64 rng(7);
  const double dt = 0.01;
  const int points = 200;
  double dyn = 0.0, reset = 0.0, touchdown = 0.0, cost = 0.0;
  for (int i = 0; i < points; ++i) {
    const ContactFlags s = random_flags(rng);
    const StateVector x = random_state(p, s, rng);
    const ControlVector u = random_control(rng);
    StateMatrix a;
    ControlMatrix b;
    linearize_step(x, u, s, dt, p, a, b);
    dyn = std::max(dyn, rel_err(a, fd_jacobian([&](const Vector& v) -> Vector {
                                  return integrate_step(StateVector(v), u, s, dt, p);
                                }, x)));
    dyn = std::max(dyn, rel_err(b, fd_jacobian([&](const Vector& v) -> Vector {
                                  return integrate_step(x, ControlVector(v), s, dt, p);
                                }, u)));

    const Leg leg = leg_from_index(i % kNumLegs);
    ContactFlags sr = s;
    const bool td = i % 2 == 0;
    sr[leg] = !td;
    const StateVector xr = random_state(p, sr, rng);
    const StateMatrix jac =
        reset_jacobian(xr, leg, td ? ResetKind::Touchdown : ResetKind::Takeoff, sr, p);
    reset = std::max(reset, rel_err(jac, fd_jacobian([&](const Vector& v) -> Vector {
                                      return td ? reset_touchdown(StateVector(v), leg, sr, p)
                                                : reset_takeoff(StateVector(v), leg, sr, p);
                                    }, xr)));

    HkdState xs;
    xs.v = x;
    xs.leg(leg) = p.default_joints(leg) + random_vector(3, rng, 0.3);
    StateVector g;
    touchdown_residual(xs.v, leg, p, &g);
    touchdown = std::max(touchdown, rel_err(g, fd_gradient([&](const Vector& v) {
                                              return touchdown_residual(StateVector(v), leg, p);
                                            }, xs.v)));

    CostWeights w;
    w.body = random_spd(kBodyDim, rng);
    w.stance_foot = random_spd(3, rng);
    w.swing_joint = random_spd(3, rng);
    const StateVector x_ref = random_state(p, s, rng);
    ControlVector u_ref = random_control(rng), uc = random_control(rng);
    for (int j = 0; j < kNumLegs; ++j) {
      uc.segment<3>(control_index::grf(j)) = Vec3(2.0 * (j - 1.5), 1.0 - j, 20.0 + 5.0 * j);
    }
    const RelaxedBarrier barrier;
    const auto total = [&](const StateVector& xv, const ControlVector& uv, StageCost* out) {
      return hkdmpc::running_cost(xv, uv, x_ref, u_ref, s, w, dt, out) +
             add_grf_barrier(uv, s, p.friction_coefficient, barrier, dt, out);
    };
    StageCost d;
    total(x, uc, &d);
    cost = std::max(cost, rel_err(d.lx, fd_gradient([&](const Vector& v) {
                                    return total(StateVector(v), uc, nullptr);
                                  }, x, 1e-5)));
    cost = std::max(cost, rel_err(d.lu, fd_gradient([&](const Vector& v) {
                                    return total(x, ControlVector(v), nullptr);
                                  }, uc, 1e-5)));
    cost = std::max(cost, rel_err(d.luu, fd_jacobian([&](const Vector& v) -> Vector {
                                    StageCost o;
                                    total(x, ControlVector(v), &o);
                                    return o.lu;
                                  }, uc)));
  }
  const bool pass = dyn < 1e-5 && reset < 1e-5 && touchdown < 1e-5 && cost < 1e-6;
  return {pass, fmt("%d points: dynamics %.1e, resets %.1e, touchdown %.1e, cost %.1e", points,
                    dyn, reset, touchdown, cost)};
}

Outcome augmented_lagrangian_vs_kkt() {
  Vector x0(2), goal(2);
  x0 << 1.0, 0.5;
  goal << 0.3, 0.0;
  const DoubleIntegrator p(30, 0.1, x0, goal);
  const auto kkt = p.kkt();
  ddp::SolverOptions o;
  o.constraint_tolerance = 1e-9;
  ddp::HsddpSolver solver(o);
  const ddp::DdpSolution sol = solver.solve(p);
  double err = 0.0;
  for (int k = 0; k < p.n; ++k) err = std::max(err, std::abs(sol.u[k][0] - kkt.u[k]));
  for (int k = 0; k <= p.n; ++k) err = std::max(err, max_abs(sol.x[k] - kkt.x[k]));
  const bool pass = err < 1e-6 && sol.max_violation < 1e-8 && sol.outer_iterations <= 10;
  return {pass, fmt("max err %.2e, violation %.2e, %d outer iterations", err, sol.max_violation,
                    sol.outer_iterations)};
}

bool monotone_trace(const ddp::DdpSolution& sol) {
  for (std::size_t i = 1; i < sol.trace.size(); ++i) {
    const auto& e = sol.trace[i];
    const auto& prev = sol.trace[i - 1];
    if (e.step > 0.0 && e.outer == prev.outer && e.cost > prev.cost + 1e-9 * std::abs(prev.cost)) {
      return false;
    }
  }
  return true;
}

Outcome jump_window_cold_solve() {
  const Scenario s = bundled("run_jump_run");
  MpcController controller(s.robot, s.script(), s.controller);
  const int step = 150;
  PlantState measured = standing_state(s.robot, s.robot.standing_height);
  measured.time = step * s.dt;
  const auto problem = controller.build_problem(measured, step);
  ddp::HsddpSolver solver(s.controller.solver);
  const ddp::DdpSolution sol = solver.solve(*problem);
  const double td = problem->max_touchdown_residual(sol);
  const double fr = problem->min_friction_residual(sol);
  const bool mono = monotone_trace(sol);
  return {td < 1e-3 && fr >= -1e-6 && mono,
          fmt("touchdown residual %.2e, min friction residual %.3f, trace %s, %d iterations", td,
              fr, mono ? "monotone" : "NOT monotone", sol.iterations)};
}

Outcome run_jump_run(Runs& runs) {
  const ScenarioRun& r = runs.get("run_jump_run");
  const auto flights = realized_flights(r.log);
  const CommandScript script = r.scenario.script();
  if (r.log.diverged || flights.size() != 1) {
    return {false, fmt("diverged %d, %zu flights", r.log.diverged, flights.size())};
  }
  const double scheduled = (script.flight_windows()[0].last - script.flight_windows()[0].first) *
                           script.dt();
  const double land = flights[0].touchdown;
  const double rmse = height_rmse(r.log, script, r.scenario.robot, land, land + 1.0);
  const bool pass = std::abs(flights[0].duration() - scheduled) <= 0.02 + 1e-9 && rmse < 0.03 &&
                    r.log.wall_seconds < 60.0;
  return {pass, fmt("flight %.3f s (scheduled %.2f), landing RMSE %.4f m, wall %.1f s",
                    flights[0].duration(), scheduled, rmse, r.log.wall_seconds)};
}

Outcome continuous_jump(Runs& runs) {
  const ScenarioRun& r = runs.get("continuous_jump");
  const auto flights = realized_flights(r.log);
  const CommandScript script = r.scenario.script();
  const auto& windows = script.flight_windows();
  if (r.log.diverged || flights.size() != windows.size()) {
    return {false, fmt("diverged %d, %zu of %zu flights", r.log.diverged, flights.size(),
                       windows.size())};
  }
  bool pass = true;
  std::ostringstream d;
  d << "flights";
  for (std::size_t i = 0; i < flights.size(); ++i) {
    const double scheduled = (windows[i].last - windows[i].first) * r.scenario.dt;
    pass = pass && std::abs(flights[i].duration() - scheduled) <= 0.02 + 1e-9;
    if (i > 0) {
      pass = pass && flights[i].duration() > flights[i - 1].duration() &&
             flights[i].apex > flights[i - 1].apex;
    }
    d << fmt(" %.2f", flights[i].duration());
  }
  d << " s, apex";
  for (const auto& f : flights) d << fmt(" %.3f", f.apex);
  d << " m";
  return {pass, d.str()};
}

Outcome mixed_gait_hop(Runs& runs) {
  bool pass = true;
  std::ostringstream d;
  for (std::uint64_t seed : {1u, 2u}) {
    const ScenarioRun& r = runs.get("mixed_gait_hop", seed);
    const auto impulses = impulse_schedule(r.scenario.sim, r.scenario.script().duration());
    double largest = 0.0;
    for (const auto& i : impulses) largest = std::max(largest, i.impulse.velocity.norm());
    pass = pass && !r.log.diverged && largest <= 0.3 + 1e-12 && !impulses.empty();
    d << fmt("seed %d: %s, %zu impulses <= %.3f m/s; ", static_cast<int>(seed),
             r.log.diverged ? "diverged" : "stable", impulses.size(), largest);
  }
  return {pass, d.str()};
}

Outcome replan_budget(Runs& runs) {
  const std::vector<std::pair<std::string, std::uint64_t>> all{
      {"stand", 0}, {"run_jump_run", 0}, {"continuous_jump", 0},
      {"mixed_gait_hop", 1}, {"mixed_gait_hop", 2}};
  int worst_iters = 0;
  double worst_violation = 0.0;
  bool diverged = false;
  for (const auto& [name, seed] : all) {
    const ScenarioRun& r = runs.get(name, seed);
    diverged = diverged || r.log.diverged;
    for (const SolveTelemetry& t : r.log.telemetry) {
      if (t.cold_start) continue;
      worst_iters = std::max(worst_iters, t.iterations);
      worst_violation = std::max(worst_violation, t.violation);
    }
  }
  return {!diverged && worst_iters <= 3 && worst_violation < 5e-3,
          fmt("%zu runs: max %d iterations, max violation %.2e", all.size(), worst_iters,
              worst_violation)};
}

Outcome feedback_ablation() {
  const Scenario s = bundled("run_jump_run");
  const CommandScript script = s.script();
  const double t = 1.98;
  MpcController controller(s.robot, script, s.controller);
  SimConfig pre = s.sim;
  pre.duration = t;
  const RunLog before = run_closed_loop(controller, pre);
  if (before.diverged) return {false, "run before the disturbance diverged"};
  PlantState measured = before.final_state;
  measured.x[si::kOmega] += 5.0;
  const int step = static_cast<int>(std::lround(t / script.dt()));
  const WarmStartComparison cmp = compare_warm_start_rollouts(controller, measured, step);
  const auto peak = [](const std::vector<double>& w) {
    double m = 0.0;
    for (double v : w) m = std::max(m, std::abs(v));
    return m;
  };
  const double wf = peak(cmp.with_feedback.omega_x);
  const double wn = peak(cmp.without_feedback.omega_x);
  const bool bounded = !cmp.with_feedback.diverged && std::isfinite(cmp.with_feedback.cost);
  const bool worse = cmp.without_feedback.diverged ||
                     (cmp.with_feedback.cost > 0.0 &&
                      cmp.without_feedback.cost >= 10.0 * cmp.with_feedback.cost);
  return {bounded && worse && wf < wn,
          fmt("+5 rad/s roll kick at %.2f s: feedback cost %.3f, peak wx %.2f; "
              "feedforward %s, peak wx %.1f",
              t, cmp.with_feedback.cost, wf,
              cmp.without_feedback.diverged ? "diverged" : "bounded", wn)};
}

Outcome solve_time_table(Runs& runs) {
  const std::vector<std::pair<std::string, std::pair<std::string, std::uint64_t>>> tasks{
      {"Run-jump-run", {"run_jump_run", 0}},
      {"Mixed gaits", {"mixed_gait_hop", 1}},
      {"Continuous jump", {"continuous_jump", 0}}};
  std::vector<StatsRow> rows;
  bool pass = true;
  for (const auto& [label, key] : tasks) {
    std::vector<double> wall;
    for (const SolveTelemetry& t : runs.get(key.first, key.second).log.telemetry) {
      if (!t.cold_start) wall.push_back(t.wall_ms);
    }
    const SolveStats st = SolveStats::from_samples(wall);
    pass = pass && st.mean <= 20.0 && st.max <= 60.0;
    rows.emplace_back(label, st);
  }
  const std::string table = render_stats_table(rows);
  pass = pass && parse_stats_table(table).size() == rows.size();
  std::cout << table;
  std::ostringstream d;
  for (const auto& [label, st] : rows) d << fmt("%s mean %.1f max %.1f ms; ", label.c_str(), st.mean, st.max);
  return {pass, d.str()};
}

}  // namespace

int main() {
  Runs runs;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"riccati equivalence", riccati_equivalence},
      {"finite-difference oracles", finite_difference_oracles},
      {"augmented Lagrangian vs KKT", augmented_lagrangian_vs_kkt},
      {"jump-window cold solve", jump_window_cold_solve},
      {"run-jump-run", [&] { return run_jump_run(runs); }},
      {"continuous jump", [&] { return continuous_jump(runs); }},
      {"mixed-gait hop under disturbances", [&] { return mixed_gait_hop(runs); }},
      {"replan iteration and violation budget", [&] { return replan_budget(runs); }},
      {"feedback warm-start ablation", feedback_ablation},
      {"replan solve times", [&] { return solve_time_table(runs); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " ("
              << criteria[i].first << "): " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
