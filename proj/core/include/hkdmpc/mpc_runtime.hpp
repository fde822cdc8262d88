#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hkdmpc/hkd_problem.hpp"
#include "hkdmpc/leg_controller.hpp"
#include "hkdmpc/plant.hpp"

namespace hkdmpc {

struct ControllerConfig {
  HkdProblemSettings problem;
  ReferenceOptions reference;
  ddp::SolverOptions solver;  // used as-is for the cold first solve
  int replan_iterations = 3;
  int horizon_steps = 50;

  void validate() const;
};

/// Immutable result of one MPC solve.
struct Plan {
  ddp::DdpSolution solution;
  int window_start = 0;  // absolute schedule step of entry 0
  double start_time = 0.0;
  double dt = 0.01;
  std::vector<ContactFlags> flags;  // N + 1
  /// World foothold at each leg's first touchdown inside the window.
  std::array<std::optional<Vec3>, kNumLegs> next_foothold;
  std::array<int, kNumLegs> next_touchdown_step{-1, -1, -1, -1};  // absolute
  double wall_ms = 0.0;
  bool cold_start = false;
  double touchdown_residual = 0.0;
  double friction_residual = 0.0;

  int horizon() const { return solution.horizon(); }
  /// Window index used at absolute time t (clamped to the window).
  int index_at(double t) const;
  /// Zero-order-held control.
  ControlVector control_at(double t) const;
  /// Linearly interpolated body state.
  Eigen::Matrix<double, kBodyDim, 1> body_at(double t) const;
  /// GRF of `leg` from the feedback law evaluated at the measured body state.
  Vec3 grf_at(double t, Leg leg, const StateVector& x_measured, bool feedback) const;
};

struct SolveTelemetry {
  double time = 0.0;
  int window_start = 0;
  double wall_ms = 0.0;
  int iterations = 0;
  double cost = 0.0;
  double violation = 0.0;
  bool converged = false;
  bool cold_start = false;
  bool warm_start_diverged = false;
  double first_rollout_cost = 0.0;
};

/// Receding-horizon planner: the first call solves cold with the full
/// iteration budget, later calls warm start from the previous plan.
class MpcController {
 public:
  MpcController(RobotParams params, CommandScript script, ControllerConfig config);

  const RobotParams& params() const { return params_; }
  const CommandScript& script() const { return script_; }
  const ControllerConfig& config() const { return config_; }

  /// Plans from the measured plant state at absolute schedule step `step`.
  /// `allow_feedback = false` forces a feedforward-only warm start.
  std::shared_ptr<const Plan> replan(const PlantState& measured, int step,
                                     bool allow_feedback = true);
  std::shared_ptr<const Plan> last_plan() const { return last_; }
  void reset() { last_.reset(); }

  /// Problem for the window starting at `step`, with the measured state
  /// re-interpreted for the window's first contact flags.
  std::unique_ptr<HkdProblem> build_problem(const PlantState& measured, int step) const;

  /// Warm start for a problem at `step` built from the last plan.
  std::optional<ddp::WarmStart> warm_start_for(int step) const;

  ddp::HsddpSolver& solver() { return solver_; }
  ddp::SolverOptions replan_options() const;

 private:
  RobotParams params_;
  CommandScript script_;
  ControllerConfig config_;
  ddp::HsddpSolver solver_;
  std::shared_ptr<const Plan> last_;
};

/// Wraps a solution into a Plan for the given problem.
std::shared_ptr<Plan> make_plan(const HkdProblem& problem, ddp::DdpSolution solution, double dt);

struct TimedImpulse {
  double time = 0.0;
  BodyImpulse impulse;
};

struct RandomImpulses {
  int count = 0;
  double max_speed = 0.3;  // m/s, horizontal
  double start = 0.0;
  double end = 0.0;        // 0 selects the run duration
};

struct SimConfig {
  double plant_rate = 500.0;
  double mpc_rate = 100.0;
  /// Plant ticks between the start of a solve and its plan taking effect.
  int policy_lag_ticks = 0;
  double duration = 0.0;  // 0 selects the script duration
  double swing_apex = 0.08;
  double swing_tracking_gain = 200.0;  // 1/s, joint-velocity correction
  double late_touchdown_descent = 0.5;  // m/s
  double touchdown_tolerance = 0.02;
  PdGains pd;
  double noise_std = 0.0;
  bool plant_feedback = true;
  /// From this time on, plant feedback and the feedback warm start are off.
  double feedback_cutoff = std::numeric_limits<double>::infinity();
  bool asynchronous = false;
  std::vector<TimedImpulse> impulses;
  RandomImpulses random_impulses;
  std::uint64_t seed = 0;
  PlantLimits limits;

  void validate() const;
  int ticks_per_plan() const;
};

/// Joint torque applied at one plant tick, per leg.
using LegTorques = std::array<Vec3, kNumLegs>;

struct LogRow {
  double time = 0.0;
  StateVector x = StateVector::Zero();
  ControlVector u = ControlVector::Zero();
  LegTorques torque{};
  ContactFlags contact;
};

struct EventRecord {
  double time = 0.0;
  std::string kind;
  int leg = -1;
  std::string detail;
};

struct RunLog {
  std::vector<LogRow> rows;
  std::vector<SolveTelemetry> telemetry;
  std::vector<EventRecord> events;
  bool diverged = false;
  std::string divergence_reason;
  double wall_seconds = 0.0;
  PlantState final_state;
};

/// Impulses of the config plus its seeded random impulses, sorted by time.
std::vector<TimedImpulse> impulse_schedule(const SimConfig& config, double duration);

/// Closed-loop simulation. Diverged runs return the partial log with
/// `diverged` set.
RunLog run_closed_loop(MpcController& controller, const SimConfig& config);

struct RolloutOutcome {
  bool diverged = false;
  double cost = 0.0;  // augmented cost of the rollout; +inf when diverged
  std::string reason;
  std::vector<double> omega_x;  // per step, up to divergence
};

struct WarmStartComparison {
  RolloutOutcome with_feedback;
  RolloutOutcome without_feedback;
};

/// First rollout of the replan at `step` from `measured`, once with the
/// shifted previous gains and once feedforward only. Requires a previous plan.
WarmStartComparison compare_warm_start_rollouts(MpcController& controller,
                                                const PlantState& measured, int step);

}  // namespace hkdmpc
