#pragma once

#include <vector>

#include "hkdmpc/gait_schedule.hpp"

namespace hkdmpc {

/// Commanded motion for one gait segment. Velocities are expressed in the
/// yaw-aligned frame.
struct MotionCommand {
  double height = 0.26;
  double forward_velocity = 0.0;
  double lateral_velocity = 0.0;
  double yaw_rate = 0.0;
  /// Extra CoM rise at the middle of any full-flight interval that starts in
  /// this segment.
  double flight_apex = 0.0;
};

struct CommandSegment {
  GaitSpec gait;
  MotionCommand command;
};

/// Ordered gait segments with their commands; the contact timeline is the
/// composition of the segment gaits.
class CommandScript {
 public:
  CommandScript(std::vector<CommandSegment> segments, double dt);

  const std::vector<CommandSegment>& segments() const { return segments_; }
  const ContactSchedule& schedule() const { return schedule_; }
  double dt() const { return schedule_.dt(); }
  double duration() const { return schedule_.end_time() - schedule_.start_time(); }

  /// Command active at absolute step k (last command past the end).
  const MotionCommand& command_at_step(int k) const;
  /// Integrated commanded yaw at absolute step k.
  double yaw_at_step(int k) const;

  /// Absolute [first, last) step ranges where all four legs swing.
  struct FlightWindow {
    int first = 0;
    int last = 0;
    double apex = 0.0;
  };
  const std::vector<FlightWindow>& flight_windows() const { return flights_; }

 private:
  std::vector<CommandSegment> segments_;
  std::vector<int> segment_first_step_;
  ContactSchedule schedule_;
  std::vector<FlightWindow> flights_;
};

struct ReferenceOptions {
  /// Raibert velocity-error gain; negative selects sqrt(height / |g|).
  double raibert_gain = -1.0;
  /// Upper bound for the stance duration used in foot targets (s).
  double max_stance_duration = 0.5;
  /// After a flight, v_z ramps from the landing velocity to 0 over this time (s).
  double landing_duration = 0.2;
};

struct ReferenceTrajectory {
  int window_start = 0;                         // absolute step of entry 0
  std::vector<StateVector> x;                   // N + 1 entries
  std::vector<ControlVector> u;                 // N entries: GRF reference, zero joint velocity
  std::vector<std::array<Vec3, kNumLegs>> foot_target;  // world-frame stance targets, N + 1
  std::vector<ContactFlags> flags;              // N + 1 entries

  int size() const { return static_cast<int>(u.size()); }
};

/// Even split of m*|g| over the stance legs, pointing up.
std::array<Vec3, kNumLegs> grf_reference(const ContactFlags& s, const RobotParams& params);

/// Desired foot position relative to the CoM in the yaw-aligned frame (z = 0).
Vec3 raibert_target(const Vec3& v_now, const Vec3& v_cmd, double stance_duration, Leg leg,
                    const RobotParams& params, double gain);

/// Reference over the `horizon_steps`-step window starting at absolute step
/// `window_start`, anchored at the measured CoM position.
ReferenceTrajectory generate_reference(const CommandScript& script, int window_start,
                                       int horizon_steps, const HkdState& x_now,
                                       const RobotParams& params,
                                       const ReferenceOptions& options = {});

/// Open-loop reference over the whole script (z and forward velocity series).
struct ReferenceProfilePoint {
  double t = 0.0;
  double z = 0.0;
  double vx = 0.0;
};
std::vector<ReferenceProfilePoint> reference_profile(const CommandScript& script,
                                                     const RobotParams& params);

}  // namespace hkdmpc
