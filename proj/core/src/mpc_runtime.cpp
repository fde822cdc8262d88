#include "hkdmpc/mpc_runtime.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>

namespace hkdmpc {

namespace si = state_index;
namespace ci = control_index;

using Clock = std::chrono::steady_clock;

namespace {

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

int step_of(double t, double dt) { return static_cast<int>(std::floor(t / dt + 1e-9)); }

}  // namespace

void ControllerConfig::validate() const {
  problem.weights.validate();
  if (!(problem.dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(problem.barrier.weight >= 0.0) || !(problem.barrier.delta > 0.0)) {
    throw std::invalid_argument("invalid barrier settings");
  }
  solver.validate();
  if (replan_iterations < 1 || replan_iterations > solver.max_iterations) {
    throw std::invalid_argument("replan iteration cap must lie in [1, first-solve cap]");
  }
  if (horizon_steps < 1) throw std::invalid_argument("horizon must contain at least one step");
  if (!(reference.landing_duration >= 0.0) || !(reference.max_stance_duration > 0.0)) {
    throw std::invalid_argument("invalid reference options");
  }
}

int Plan::index_at(double t) const {
  const int k = step_of(t - start_time, dt);
  return std::clamp(k, 0, horizon() - 1);
}

ControlVector Plan::control_at(double t) const { return solution.u[index_at(t)]; }

Eigen::Matrix<double, kBodyDim, 1> Plan::body_at(double t) const {
  const int k = index_at(t);
  const double s = std::clamp((t - start_time - k * dt) / dt, 0.0, 1.0);
  return (1.0 - s) * solution.x[k].head<kBodyDim>() + s * solution.x[k + 1].head<kBodyDim>();
}

Vec3 Plan::grf_at(double t, Leg leg, const StateVector& x_measured, bool feedback) const {
  const int k = index_at(t);
  if (!flags[k][leg]) return Vec3::Zero();
  const int row = ci::grf(index_of(leg));
  Vec3 f = solution.u[k].segment<3>(row);
  if (feedback && !solution.gains.empty()) {
    const Eigen::Matrix<double, kBodyDim, 1> dx = x_measured.head<kBodyDim>() - body_at(t);
    f += solution.gains[k].block(row, 0, 3, kBodyDim) * dx;
  }
  return f;
}

MpcController::MpcController(RobotParams params, CommandScript script, ControllerConfig config)
    : params_(std::move(params)),
      script_(std::move(script)),
      config_(std::move(config)),
      solver_(config_.solver) {
  params_.validate();
  config_.validate();
  if (std::abs(config_.problem.dt - script_.dt()) > 1e-12) {
    throw std::invalid_argument("controller dt differs from the command script dt");
  }
}

ddp::SolverOptions MpcController::replan_options() const {
  ddp::SolverOptions o = config_.solver;
  o.max_iterations = config_.replan_iterations;
  return o;
}

std::unique_ptr<HkdProblem> MpcController::build_problem(const PlantState& measured,
                                                         int step) const {
  const ContactFlags first = script_.schedule().flags_at(step);
  HkdState x;
  x.v = align_to_contact(measured.x, measured.contact, first, params_);
  ReferenceTrajectory ref =
      generate_reference(script_, step, config_.horizon_steps, x, params_, config_.reference);
  return std::make_unique<HkdProblem>(params_, config_.problem, std::move(ref), x.v);
}

std::optional<ddp::WarmStart> MpcController::warm_start_for(int step) const {
  if (!last_) return std::nullopt;
  const int shift = step - last_->window_start;
  if (shift < 0) return std::nullopt;
  return ddp::shift_solution(last_->solution, shift, config_.horizon_steps);
}

std::shared_ptr<const Plan> MpcController::replan(const PlantState& measured, int step,
                                                  bool allow_feedback) {
  const auto start = Clock::now();
  const auto problem = build_problem(measured, step);
  const auto warm = warm_start_for(step);
  ddp::SolverOptions options = warm ? replan_options() : config_.solver;
  options.feedback_warm_start = options.feedback_warm_start && allow_feedback;
  solver_.set_options(options);
  ddp::DdpSolution sol = solver_.solve(*problem, warm);
  const double wall = elapsed_ms(start);

  auto plan = make_plan(*problem, std::move(sol), config_.problem.dt);
  plan->wall_ms = wall;
  plan->cold_start = !warm.has_value();
  last_ = plan;
  return plan;
}

std::shared_ptr<Plan> make_plan(const HkdProblem& problem, ddp::DdpSolution solution, double dt) {
  auto plan = std::make_shared<Plan>();
  const ReferenceTrajectory& ref = problem.reference();
  plan->window_start = ref.window_start;
  plan->dt = dt;
  plan->start_time = ref.window_start * dt;
  plan->flags = ref.flags;
  plan->touchdown_residual = problem.max_touchdown_residual(solution);
  plan->friction_residual = problem.min_friction_residual(solution);

  const int n = problem.horizon();
  const RobotParams& params = problem.params();
  for (Leg leg : kAllLegs) {
    for (int k = 1; k <= n; ++k) {
      if (ref.flags[k - 1][leg] || !ref.flags[k][leg]) continue;
      const int row = si::leg(index_of(leg));
      if (k < n) {
        plan->next_foothold[index_of(leg)] = Vec3(solution.x[k].segment<3>(row));
      } else {
        const BodyPose pose{solution.x[n].segment<3>(si::kEuler),
                            solution.x[n].segment<3>(si::kPosition)};
        plan->next_foothold[index_of(leg)] =
            foot_position_in_world(params, leg, solution.x[n].segment<3>(row), pose);
      }
      plan->next_touchdown_step[index_of(leg)] = ref.window_start + k;
      break;
    }
  }
  plan->solution = std::move(solution);
  return plan;
}

void SimConfig::validate() const {
  if (!(plant_rate > 0.0) || !(mpc_rate > 0.0) || plant_rate < mpc_rate) {
    throw std::invalid_argument("plant rate must be >= MPC rate > 0");
  }
  const double ratio = plant_rate / mpc_rate;
  if (std::abs(ratio - std::round(ratio)) > 1e-9) {
    throw std::invalid_argument("MPC rate must divide the plant rate");
  }
  if (policy_lag_ticks < 0) throw std::invalid_argument("policy lag must be >= 0");
  if (duration < 0.0) throw std::invalid_argument("duration must be >= 0");
  if (touchdown_tolerance < 0.0 || noise_std < 0.0 || swing_apex < 0.0) {
    throw std::invalid_argument("negative simulation setting");
  }
  if (random_impulses.count < 0 || random_impulses.max_speed < 0.0) {
    throw std::invalid_argument("invalid random impulse settings");
  }
}

int SimConfig::ticks_per_plan() const {
  return static_cast<int>(std::lround(plant_rate / mpc_rate));
}

std::vector<TimedImpulse> impulse_schedule(const SimConfig& config, double duration) {
  std::vector<TimedImpulse> out = config.impulses;
  const RandomImpulses& r = config.random_impulses;
  if (r.count > 0) {
    std::mt19937_64 rng(config.seed);
    const double end = r.end > 0.0 ? r.end : duration;
    std::uniform_real_distribution<double> when(r.start, std::max(r.start, end));
    std::uniform_real_distribution<double> speed(0.0, r.max_speed);
    std::uniform_real_distribution<double> heading(-std::numbers::pi, std::numbers::pi);
    for (int i = 0; i < r.count; ++i) {
      TimedImpulse ti;
      ti.time = when(rng);
      const double v = speed(rng), h = heading(rng);
      ti.impulse.velocity = Vec3(v * std::cos(h), v * std::sin(h), 0.0);
      out.push_back(ti);
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const TimedImpulse& a, const TimedImpulse& b) { return a.time < b.time; });
  return out;
}

namespace {

struct SwingTrack {
  Vec3 liftoff = Vec3::Zero();
  double liftoff_time = 0.0;
  JointAngles q_des = JointAngles::Zero();
  bool have_q_des = false;
  bool workspace_flagged = false;
  bool torque_flagged = false;
};

struct TickControl {
  ControlVector u = ControlVector::Zero();
  LegTorques torque{};
};

class LoopCore {
 public:
  LoopCore(const MpcController& controller, const SimConfig& config, RunLog& log)
      : params_(controller.params()), script_(controller.script()), config_(config), log_(log),
        dt_plant_(1.0 / config.plant_rate), dt_(script_.dt()) {}

  bool feedback_at(double t) const {
    return config_.plant_feedback && t < config_.feedback_cutoff - 1e-12;
  }

  void event(double t, std::string kind, int leg = -1, std::string detail = {}) {
    log_.events.push_back({t, std::move(kind), leg, std::move(detail)});
  }

  void contacts(PlantState& plant) {
    const ContactFlags scheduled = script_.schedule().flags_at(step_of(plant.time, dt_));
    const auto feet_before = foot_positions(plant, params_);
    const auto changes = update_contacts(plant, scheduled, params_, config_.touchdown_tolerance);
    for (Leg leg : kAllLegs) {
      const int j = index_of(leg);
      switch (changes[j]) {
        case ContactChange::Takeoff:
          swing_[j] = SwingTrack{};
          swing_[j].liftoff = feet_before[j];
          swing_[j].liftoff_time = plant.time;
          event(plant.time, "takeoff", j);
          break;
        case ContactChange::Touchdown:
          event(plant.time, "touchdown", j);
          late_[j] = false;
          break;
        case ContactChange::LateTouchdown:
          if (!late_[j]) event(plant.time, "late_touchdown", j);
          late_[j] = true;
          break;
        case ContactChange::None:
          break;
      }
    }
  }

  TickControl control(const PlantState& plant, const Plan* plan) {
    TickControl out;
    const double t = plant.time;
    const Vec3 euler = plant.x.segment<3>(si::kEuler);
    const BodyPose pose{euler, plant.x.segment<3>(si::kPosition)};
    const double mu = params_.friction_coefficient;
    const auto fallback = grf_reference(plant.contact, params_);

    for (Leg leg : kAllLegs) {
      const int j = index_of(leg);
      const int row = si::leg(j);
      if (plant.contact[leg]) {
        Vec3 f = plan ? plan->grf_at(t, leg, plant.x, feedback_at(t)) : fallback[j];
        f.z() = std::max(f.z(), 0.0);
        f.x() = std::clamp(f.x(), -mu * f.z(), mu * f.z());
        f.y() = std::clamp(f.y(), -mu * f.z(), mu * f.z());
        out.u.segment<3>(ci::grf(j)) = f;
        const JointAngles q = joint_angles_toward(params_, leg, plant.x.segment<3>(row), pose);
        Vec3 tau = stance_torque(params_, leg, q, euler, f);
        if (clamp_torque(tau, params_.torque_limits)) {
          if (!swing_[j].torque_flagged) event(t, "torque_clamped", j);
          swing_[j].torque_flagged = true;
        }
        out.torque[j] = tau;
      } else {
        swing_leg(plant, plan, leg, out);
      }
    }
    return out;
  }

  std::array<bool, kNumLegs> late_{};

 private:
  Vec3 swing_target(const PlantState& plant, const Plan* plan, Leg leg, int td_step) const {
    const int j = index_of(leg);
    if (plan && plan->next_foothold[j] && plan->next_touchdown_step[j] == td_step) {
      Vec3 p = *plan->next_foothold[j];
      p.z() = 0.0;
      return p;
    }
    const MotionCommand& cmd = script_.command_at_step(td_step);
    const double yaw = plant.x[si::kEuler + 2];
    const Vec3 v_now(plant.x[si::kVelocity], plant.x[si::kVelocity + 1], 0.0);
    const Vec3 v_cmd = rot_z(yaw) * Vec3(cmd.forward_velocity, cmd.lateral_velocity, 0.0);
    int len = 0;
    const int max_len = static_cast<int>(std::round(0.5 / dt_));
    while (len < max_len && script_.schedule().flags_at(td_step + len)[leg]) ++len;
    const double gain = std::sqrt(cmd.height / params_.gravity.norm());
    const Vec3 rel = raibert_target(v_now, v_cmd, len * dt_, leg, params_, gain);
    const double ahead = td_step * dt_ - plant.time;
    Vec3 p = plant.x.segment<3>(si::kPosition) + ahead * v_now + rot_z(yaw) * rel;
    p.z() = 0.0;
    return p;
  }

  void swing_leg(const PlantState& plant, const Plan* plan, Leg leg, TickControl& out) {
    const int j = index_of(leg);
    const int row = si::leg(j);
    const double t = plant.time;
    SwingTrack& track = swing_[j];

    int td_step = step_of(t, dt_) + 1;
    const int limit = td_step + static_cast<int>(std::round(5.0 / dt_));
    while (td_step < limit && !script_.schedule().flags_at(td_step)[leg]) ++td_step;
    if (late_[j]) td_step = step_of(t, dt_);
    const double t_td = std::max(td_step * dt_, track.liftoff_time + dt_);

    const Vec3 target = swing_target(plant, plan, leg, late_[j] ? last_td_step_[j] : td_step);
    if (!late_[j]) last_td_step_[j] = td_step;
    const double t_next = t + dt_plant_;
    const double duration = t_td - track.liftoff_time;
    SwingSample s = swing_foot_trajectory(track.liftoff, target,
                                          (t_next - track.liftoff_time) / duration,
                                          config_.swing_apex, duration);
    if (late_[j] || t_next > t_td) {
      s.position = target - Vec3(0.0, 0.0, config_.late_touchdown_descent * (t_next - t_td));
      s.velocity = Vec3(0.0, 0.0, -config_.late_touchdown_descent);
    }

    const Vec3 euler = plant.x.segment<3>(si::kEuler);
    const Mat3 r = rotation_from_euler(euler);
    const Vec3 p_body = plant.x.segment<3>(si::kPosition);
    const Vec3 rel_body = r.transpose() * (s.position - p_body);
    const Vec3 in_hip = rel_body - params_.hip_offset(leg);
    const JointAngles q = plant.x.segment<3>(row);

    if (auto q_des = try_inverse_kinematics(params_, leg, in_hip)) {
      track.q_des = *q_des;
      track.have_q_des = true;
      track.workspace_flagged = false;
    } else {
      if (!track.workspace_flagged) event(t, "out_of_workspace", j);
      track.workspace_flagged = true;
      if (!track.have_q_des) {
        track.q_des = q;
        track.have_q_des = true;
      }
    }

    const Vec3 omega = plant.x.segment<3>(si::kOmega);
    const Vec3 v_com = plant.x.segment<3>(si::kVelocity);
    const Vec3 v_rel = r.transpose() * (s.velocity - v_com) - omega.cross(rel_body);
    const Mat3 jac = leg_jacobian(params_, leg, track.q_des);
    Vec3 qd_des = Vec3::Zero();
    if (!track.workspace_flagged && std::abs(jac.determinant()) > 1e-6) {
      qd_des = jac.partialPivLu().solve(v_rel);
    }

    const Vec3 u_joint = qd_des + config_.swing_tracking_gain * (track.q_des - q);
    out.u.segment<3>(ci::joint_vel(j)) = u_joint;
    Vec3 tau = swing_torque(q, u_joint, track.q_des, qd_des, config_.pd);
    clamp_torque(tau, params_.torque_limits);
    out.torque[j] = tau;
    track.torque_flagged = false;
  }

  const RobotParams& params_;
  const CommandScript& script_;
  const SimConfig& config_;
  RunLog& log_;
  double dt_plant_;
  double dt_;
  std::array<SwingTrack, kNumLegs> swing_{};
  std::array<int, kNumLegs> last_td_step_{};
};

PlantState measure(const PlantState& plant, double noise_std, std::mt19937_64& rng) {
  if (noise_std <= 0.0) return plant;
  PlantState m = plant;
  std::normal_distribution<double> n(0.0, noise_std);
  for (int i = 0; i < kBodyDim; ++i) m.x[i] += n(rng);
  return m;
}

SolveTelemetry telemetry_of(const Plan& plan, double t) {
  SolveTelemetry tm;
  tm.time = t;
  tm.window_start = plan.window_start;
  tm.wall_ms = plan.wall_ms;
  tm.iterations = plan.solution.iterations;
  tm.cost = plan.solution.cost;
  tm.violation = plan.solution.max_violation;
  tm.converged = plan.solution.converged();
  tm.cold_start = plan.cold_start;
  tm.warm_start_diverged = plan.solution.warm_start_rollout_diverged;
  tm.first_rollout_cost = plan.solution.first_rollout_cost;
  return tm;
}

/// Single-slot latest-value mailbox.
template <typename T>
class Mailbox {
 public:
  void put(T value) {
    {
      std::lock_guard lock(mutex_);
      slot_ = std::move(value);
      ++version_;
    }
    cv_.notify_all();
  }
  std::optional<T> take_newer(std::uint64_t& seen) {
    std::lock_guard lock(mutex_);
    if (version_ == seen || !slot_) return std::nullopt;
    seen = version_;
    return slot_;
  }
  template <typename Pred>
  std::optional<T> wait_newer(std::uint64_t& seen, Pred stop) {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return version_ != seen || stop(); });
    if (version_ == seen || !slot_) return std::nullopt;
    seen = version_;
    return slot_;
  }
  void wake() { cv_.notify_all(); }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::optional<T> slot_;
  std::uint64_t version_ = 0;
};

RunLog run_deterministic(MpcController& controller, const SimConfig& config, double duration) {
  RunLog log;
  LoopCore core(controller, config, log);
  const RobotParams& params = controller.params();
  const CommandScript& script = controller.script();
  const double dt_plant = 1.0 / config.plant_rate;
  const int ticks_per_plan = config.ticks_per_plan();
  const long total_ticks = std::lround(duration * config.plant_rate);
  const auto impulses = impulse_schedule(config, duration);
  std::size_t next_impulse = 0;
  std::mt19937_64 noise_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  PlantState plant = standing_state(params, script.command_at_step(0).height);
  std::deque<std::pair<long, std::shared_ptr<const Plan>>> pending;
  std::shared_ptr<const Plan> active;

  for (long tick = 0; tick < total_ticks; ++tick) {
    plant.time = tick * dt_plant;
    core.contacts(plant);

    if (tick % ticks_per_plan == 0) {
      const int step = step_of(plant.time, script.dt());
      try {
        auto plan = controller.replan(measure(plant, config.noise_std, noise_rng), step,
                                      plant.time < config.feedback_cutoff - 1e-12);
        log.telemetry.push_back(telemetry_of(*plan, plant.time));
        pending.emplace_back(tick + config.policy_lag_ticks, std::move(plan));
      } catch (const std::exception& e) {
        core.event(plant.time, "solver_failure", -1, e.what());
        log.diverged = true;
        log.divergence_reason = std::string("solver failure: ") + e.what();
        break;
      }
    }
    while (!pending.empty() && pending.front().first <= tick) {
      active = pending.front().second;
      pending.pop_front();
    }

    const TickControl ctl = core.control(plant, active.get());
    log.rows.push_back({plant.time, plant.x, ctl.u, ctl.torque, plant.contact});

    const BodyImpulse* impulse = nullptr;
    BodyImpulse combined;
    const double t_next = plant.time + dt_plant;
    bool any = false;
    while (next_impulse < impulses.size() && impulses[next_impulse].time < t_next - 1e-12) {
      combined.omega += impulses[next_impulse].impulse.omega;
      combined.velocity += impulses[next_impulse].impulse.velocity;
      any = true;
      ++next_impulse;
    }
    if (any) {
      impulse = &combined;
      core.event(t_next, "disturbance", -1);
    }
    try {
      step_plant(plant, ctl.u, dt_plant, params, config.limits, impulse);
    } catch (const SimulationDiverged& e) {
      core.event(e.time(), "divergence", -1, e.what());
      log.diverged = true;
      log.divergence_reason = e.what();
      break;
    }
  }
  log.final_state = plant;
  return log;
}

RunLog run_asynchronous(MpcController& controller, const SimConfig& config, double duration) {
  RunLog log;
  LoopCore core(controller, config, log);
  const RobotParams& params = controller.params();
  const CommandScript& script = controller.script();
  const double dt_plant = 1.0 / config.plant_rate;
  const int ticks_per_plan = config.ticks_per_plan();
  const long total_ticks = std::lround(duration * config.plant_rate);
  const auto impulses = impulse_schedule(config, duration);
  std::size_t next_impulse = 0;
  std::mt19937_64 noise_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  Mailbox<PlantState> measurements;
  Mailbox<std::shared_ptr<const Plan>> plans;
  std::atomic<bool> stop{false};
  std::mutex telemetry_mutex;
  std::vector<SolveTelemetry> telemetry;
  std::string planner_error;

  std::thread planner([&] {
    std::uint64_t seen = 0;
    while (!stop) {
      auto m = measurements.wait_newer(seen, [&] { return stop.load(); });
      if (!m) continue;
      try {
        auto plan = controller.replan(*m, step_of(m->time, script.dt()),
                                      m->time < config.feedback_cutoff - 1e-12);
        {
          std::lock_guard lock(telemetry_mutex);
          telemetry.push_back(telemetry_of(*plan, m->time));
        }
        plans.put(plan);
      } catch (const std::exception& e) {
        std::lock_guard lock(telemetry_mutex);
        planner_error = e.what();
        stop = true;
      }
    }
  });

  PlantState plant = standing_state(params, script.command_at_step(0).height);
  std::shared_ptr<const Plan> active;
  std::uint64_t plan_seen = 0;
  const auto wall_start = Clock::now();

  for (long tick = 0; tick < total_ticks && !stop; ++tick) {
    plant.time = tick * dt_plant;
    std::this_thread::sleep_until(wall_start + std::chrono::duration_cast<Clock::duration>(
                                                   std::chrono::duration<double>(plant.time)));
    core.contacts(plant);
    if (tick % ticks_per_plan == 0) measurements.put(measure(plant, config.noise_std, noise_rng));
    if (!active) {
      // The first plan is awaited so the robot never stands on an empty plan.
      std::uint64_t seen = plan_seen;
      if (auto p = plans.wait_newer(seen, [&] { return stop.load(); })) {
        active = *p;
        plan_seen = seen;
      }
    } else if (auto p = plans.take_newer(plan_seen)) {
      active = *p;
    }

    const TickControl ctl = core.control(plant, active.get());
    log.rows.push_back({plant.time, plant.x, ctl.u, ctl.torque, plant.contact});

    BodyImpulse combined;
    bool any = false;
    const double t_next = plant.time + dt_plant;
    while (next_impulse < impulses.size() && impulses[next_impulse].time < t_next - 1e-12) {
      combined.omega += impulses[next_impulse].impulse.omega;
      combined.velocity += impulses[next_impulse].impulse.velocity;
      any = true;
      ++next_impulse;
    }
    if (any) core.event(t_next, "disturbance", -1);
    try {
      step_plant(plant, ctl.u, dt_plant, params, config.limits, any ? &combined : nullptr);
    } catch (const SimulationDiverged& e) {
      core.event(e.time(), "divergence", -1, e.what());
      log.diverged = true;
      log.divergence_reason = e.what();
      break;
    }
  }
  log.final_state = plant;
  stop = true;
  measurements.wake();
  planner.join();
  log.telemetry = std::move(telemetry);
  if (!planner_error.empty() && !log.diverged) {
    log.diverged = true;
    log.divergence_reason = "solver failure: " + planner_error;
  }
  return log;
}

}  // namespace

RunLog run_closed_loop(MpcController& controller, const SimConfig& config) {
  config.validate();
  const double duration = config.duration > 0.0 ? config.duration : controller.script().duration();
  controller.reset();
  const auto start = Clock::now();
  RunLog log = config.asynchronous ? run_asynchronous(controller, config, duration)
                                   : run_deterministic(controller, config, duration);
  log.wall_seconds = elapsed_ms(start) / 1000.0;
  return log;
}

WarmStartComparison compare_warm_start_rollouts(MpcController& controller,
                                                const PlantState& measured, int step) {
  const auto warm = controller.warm_start_for(step);
  if (!warm) throw std::logic_error("warm-start comparison needs a previous plan");
  const auto problem = controller.build_problem(measured, step);
  ddp::HsddpSolver& solver = controller.solver();
  solver.set_options(controller.replan_options());

  ddp::MultiplierMap multipliers;
  for (int i = 0; i < static_cast<int>(problem->phases().size()); ++i) {
    for (int c = 0; c < problem->num_equalities(i); ++c) {
      const auto key = problem->equality_key(i, c);
      const auto it = warm->multipliers.find(key);
      multipliers[key] = it == warm->multipliers.end() ? 0.0 : it->second;
    }
  }
  solver.set_augmented_lagrangian(multipliers, controller.config().solver.penalty_init);

  const double bound = controller.config().solver.divergence_bound;
  const auto trace = [&](bool feedback) {
    std::vector<double> wx;
    ddp::Vector x = problem->initial_state();
    const auto& phases = problem->phases();
    try {
      for (std::size_t i = 0; i < phases.size(); ++i) {
        for (int k = phases[i].start; k < phases[i].end; ++k) {
          wx.push_back(x[si::kOmega]);
          ddp::Vector u = warm->u[k];
          if (feedback) u += warm->gains[k] * (x - warm->x[k]);
          x = problem->step(k, x, u);
          if (!x.allFinite()) return wx;
          if (x.lpNorm<Eigen::Infinity>() > bound) {
            wx.push_back(x[si::kOmega]);
            return wx;
          }
        }
        if (i + 1 < phases.size()) x = problem->reset(static_cast<int>(i), x);
      }
      wx.push_back(x[si::kOmega]);
    } catch (const std::exception&) {
    }
    return wx;
  };
  const auto attempt = [&](bool feedback) {
    RolloutOutcome out;
    try {
      const ddp::DdpSolution sol =
          feedback ? solver.rollout(*problem, warm->u, &warm->gains, &warm->x)
                   : solver.rollout(*problem, warm->u);
      out.cost = sol.cost;
    } catch (const ddp::RolloutDiverged& e) {
      out.diverged = true;
      out.cost = std::numeric_limits<double>::infinity();
      out.reason = e.what();
    }
    out.omega_x = trace(feedback);
    return out;
  };
  return {attempt(true), attempt(false)};
}

}  // namespace hkdmpc
