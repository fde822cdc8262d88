#include "hkdmpc/reference_gen.hpp"

#include <cmath>

namespace hkdmpc {

namespace si = state_index;

CommandScript::CommandScript(std::vector<CommandSegment> segments, double dt)
    : segments_(std::move(segments)) {
  if (segments_.empty()) throw InvalidSpec("command script is empty");
  std::vector<GaitSpec> gaits;
  int first = 0;
  for (const CommandSegment& seg : segments_) {
    if (!(seg.command.height > 0.0)) throw InvalidSpec("commanded height must be positive");
    gaits.push_back(seg.gait);
    segment_first_step_.push_back(first);
    first += static_cast<int>(std::round(seg.gait.duration / dt));
  }
  schedule_ = compose(gaits, dt);

  const int n = schedule_.size();
  int k = 0;
  while (k < n) {
    if (schedule_.at(k).count() != 0) {
      ++k;
      continue;
    }
    FlightWindow fw;
    fw.first = k;
    while (k < n && schedule_.at(k).count() == 0) ++k;
    fw.last = k;
    fw.apex = command_at_step(fw.first).flight_apex;
    flights_.push_back(fw);
  }
}

const MotionCommand& CommandScript::command_at_step(int k) const {
  for (int i = static_cast<int>(segments_.size()) - 1; i >= 0; --i) {
    if (k >= segment_first_step_[i]) return segments_[i].command;
  }
  return segments_.front().command;
}

double CommandScript::yaw_at_step(int k) const {
  double yaw = 0.0;
  for (int i = 0; i < k; ++i) yaw += command_at_step(i).yaw_rate * dt();
  return yaw;
}

std::array<Vec3, kNumLegs> grf_reference(const ContactFlags& s, const RobotParams& params) {
  std::array<Vec3, kNumLegs> out;
  out.fill(Vec3::Zero());
  const int n = s.count();
  if (n == 0) return out;
  const double share = params.mass * params.gravity.norm() / n;
  for (int j = 0; j < kNumLegs; ++j) {
    if (s.stance[j]) out[j] = Vec3(0.0, 0.0, share);
  }
  return out;
}

Vec3 raibert_target(const Vec3& v_now, const Vec3& v_cmd, double stance_duration, Leg leg,
                    const RobotParams& params, double gain) {
  const Vec3 nominal = foot_position_in_body(params, leg, params.default_joints(leg));
  Vec3 r = nominal + 0.5 * stance_duration * v_now + gain * (v_now - v_cmd);
  r.z() = 0.0;
  return r;
}

namespace {

struct FlightShape {
  double dz = 0.0;
  double vz = 0.0;
};

FlightShape flight_bump(const CommandScript& script, int k, double landing_duration) {
  const double dt = script.dt();
  for (const auto& fw : script.flight_windows()) {
    const double duration = (fw.last - fw.first) * dt;
    if (k >= fw.first && k <= fw.last) {
      const double tau = (k - fw.first) * dt / duration;
      return {fw.apex * 4.0 * tau * (1.0 - tau), fw.apex * 4.0 * (1.0 - 2.0 * tau) / duration};
    }
    const double since = (k - fw.last) * dt;
    if (since > 0.0 && since < landing_duration) {
      return {0.0, -fw.apex * 4.0 / duration * (1.0 - since / landing_duration)};
    }
  }
  return {};
}

Vec3 commanded_velocity(const MotionCommand& cmd, double yaw) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  return {c * cmd.forward_velocity - s * cmd.lateral_velocity,
          s * cmd.forward_velocity + c * cmd.lateral_velocity, 0.0};
}

}  // namespace

ReferenceTrajectory generate_reference(const CommandScript& script, int window_start,
                                       int horizon_steps, const HkdState& x_now,
                                       const RobotParams& params,
                                       const ReferenceOptions& options) {
  if (horizon_steps < 1) throw InvalidSpec("reference window must be nonempty");
  const ContactSchedule& schedule = script.schedule();
  const double dt = script.dt();
  const int n = horizon_steps;
  const int lookback = static_cast<int>(std::round(2.0 / dt));

  // Integrated CoM xy reference over [window_start - lookback, window_start + n].
  const int first = std::max(0, window_start - lookback);
  const int count = window_start + n - first + 1;
  std::vector<double> yaw(count);
  std::vector<Vec3> com(count);
  {
    double y = script.yaw_at_step(first);
    for (int i = 0; i < count; ++i) {
      yaw[i] = y;
      y += script.command_at_step(first + i).yaw_rate * dt;
    }
    const int anchor = window_start - first;
    com[anchor] = Vec3(x_now.position().x(), x_now.position().y(), 0.0);
    for (int i = anchor; i + 1 < count; ++i) {
      com[i + 1] = com[i] + dt * commanded_velocity(script.command_at_step(first + i), yaw[i]);
    }
    for (int i = anchor; i > 0; --i) {
      com[i - 1] = com[i] - dt * commanded_velocity(script.command_at_step(first + i - 1), yaw[i - 1]);
    }
  }

  const Vec3 v_now(x_now.velocity().x(), x_now.velocity().y(), 0.0);
  const int max_stance = std::max(1, static_cast<int>(std::round(options.max_stance_duration / dt)));

  ReferenceTrajectory ref;
  ref.window_start = window_start;
  ref.x.resize(n + 1);
  ref.u.resize(n);
  ref.foot_target.resize(n + 1);
  ref.flags.resize(n + 1);

  for (int k = 0; k <= n; ++k) {
    const int abs_k = window_start + k;
    const int idx = abs_k - first;
    const MotionCommand& cmd = script.command_at_step(abs_k);
    const ContactFlags s = schedule.flags_at(abs_k);
    ref.flags[k] = s;
    const FlightShape bump = flight_bump(script, abs_k, options.landing_duration);
    const double gain =
        options.raibert_gain >= 0.0 ? options.raibert_gain : std::sqrt(cmd.height / params.gravity.norm());

    HkdState xr;
    xr.euler() = Vec3(0.0, 0.0, yaw[idx]);
    xr.position() = Vec3(com[idx].x(), com[idx].y(), cmd.height + bump.dz);
    xr.omega() = Vec3(0.0, 0.0, cmd.yaw_rate);
    const Vec3 v_cmd = commanded_velocity(cmd, yaw[idx]);
    xr.velocity() = Vec3(v_cmd.x(), v_cmd.y(), bump.vz);

    for (Leg leg : kAllLegs) {
      const int j = index_of(leg);
      if (!s.stance[j]) {
        xr.leg(leg) = params.default_joints(leg);
        ref.foot_target[k][j] = Vec3::Zero();
        continue;
      }
      int td = abs_k;
      while (td > first && abs_k - td < lookback && schedule.flags_at(td - 1).stance[j]) --td;
      int len = 0;
      while (len < max_stance && schedule.flags_at(td + len).stance[j]) ++len;
      const int td_idx = td - first;
      const double td_yaw = yaw[td_idx];
      const Vec3 v_cmd_td = commanded_velocity(script.command_at_step(td), td_yaw);
      const Vec3 rel = raibert_target(v_now, v_cmd_td, len * dt, leg, params, gain);
      const Vec3 rel_world = rot_z(td_yaw) * Vec3(rel.x(), rel.y(), 0.0);
      const Vec3 target(com[td_idx].x() + rel_world.x(), com[td_idx].y() + rel_world.y(), 0.0);
      xr.leg(leg) = target;
      ref.foot_target[k][j] = target;
    }
    ref.x[k] = xr.v;

    if (k < n) {
      ControlInput ur;
      const auto grf = grf_reference(s, params);
      for (Leg leg : kAllLegs) ur.grf(leg) = grf[index_of(leg)];
      ref.u[k] = ur.v;
    }
  }
  return ref;
}

std::vector<ReferenceProfilePoint> reference_profile(const CommandScript& script,
                                                     const RobotParams& params) {
  HkdState x0;
  x0.position() = Vec3(0.0, 0.0, script.command_at_step(0).height);
  const int n = script.schedule().size();
  const ReferenceTrajectory ref = generate_reference(script, 0, n, x0, params);
  std::vector<ReferenceProfilePoint> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    out.push_back({k * script.dt(), ref.x[k][si::kPosition + 2], ref.x[k][si::kVelocity]});
  }
  return out;
}

}  // namespace hkdmpc
