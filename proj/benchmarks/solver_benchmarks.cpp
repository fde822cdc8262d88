#include <memory>

#include <benchmark/benchmark.h>

#include "hkdmpc/scenario.hpp"

namespace {

using namespace hkdmpc;

Scenario bundled(const std::string& name) {
  return load_scenario(std::string(HKDMPC_CONFIG_DIR) + "/scenarios/" + name + ".yaml");
}

struct JumpWindow {
  Scenario scenario = bundled("run_jump_run");
  std::unique_ptr<MpcController> controller;
  std::unique_ptr<HkdProblem> problem;
  ddp::DdpSolution nominal;

  explicit JumpWindow(int step) {
    controller = std::make_unique<MpcController>(scenario.robot, scenario.script(),
                                                 scenario.controller);
    PlantState measured = standing_state(scenario.robot, scenario.robot.standing_height);
    measured.time = step * scenario.dt;
    problem = controller->build_problem(measured, step);
    ddp::HsddpSolver solver(scenario.controller.solver);
    nominal = solver.solve(*problem);
  }
};

void BM_BackwardSweep(benchmark::State& state) {
  JumpWindow w(static_cast<int>(state.range(0)));
  ddp::HsddpSolver solver(w.scenario.controller.solver);
  solver.set_augmented_lagrangian(w.nominal.multipliers, w.nominal.penalty);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solver.backward_sweep(*w.problem, w.nominal, 0.0));
  }
}
BENCHMARK(BM_BackwardSweep)->Arg(0)->Arg(150)->Unit(benchmark::kMicrosecond);

void BM_Rollout(benchmark::State& state) {
  JumpWindow w(150);
  ddp::HsddpSolver solver(w.scenario.controller.solver);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solver.rollout(*w.problem, w.nominal.u));
  }
}
BENCHMARK(BM_Rollout)->Unit(benchmark::kMicrosecond);

void BM_ColdSolve(benchmark::State& state) {
  JumpWindow w(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    ddp::HsddpSolver solver(w.scenario.controller.solver);
    benchmark::DoNotOptimize(solver.solve(*w.problem));
  }
}
BENCHMARK(BM_ColdSolve)->Arg(0)->Arg(150)->Unit(benchmark::kMillisecond);

// Warm replan one step after a converged plan, as in the receding-horizon loop.
void BM_WarmReplan(benchmark::State& state) {
  const Scenario s = bundled("run_jump_run");
  const int step = static_cast<int>(state.range(0));
  PlantState first = standing_state(s.robot, s.robot.standing_height);
  first.time = step * s.dt;
  PlantState next = first;
  next.time += s.dt;
  for (auto _ : state) {
    state.PauseTiming();
    MpcController controller(s.robot, s.script(), s.controller);
    controller.replan(first, step);
    state.ResumeTiming();
    benchmark::DoNotOptimize(controller.replan(next, step + 1));
  }
}
BENCHMARK(BM_WarmReplan)->Arg(0)->Arg(150)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
