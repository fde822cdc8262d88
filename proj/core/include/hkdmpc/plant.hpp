#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include "hkdmpc/hkd_dynamics.hpp"

namespace hkdmpc {

class SimulationDiverged : public std::runtime_error {
 public:
  SimulationDiverged(double time, const std::string& why)
      : std::runtime_error("simulation diverged at t=" + std::to_string(time) + ": " + why),
        time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

struct PlantLimits {
  double state_bound = 1e3;
  double min_height = 0.05;  // CoM height treated as a fall
  double max_tilt = 1.2;     // |roll| or |pitch| (rad) treated as a fall
};

/// Additive change of the body twist.
struct BodyImpulse {
  Vec3 omega = Vec3::Zero();     // body frame, rad/s
  Vec3 velocity = Vec3::Zero();  // world frame, m/s
};

/// Ground-truth simulation state. `x` follows the HKD layout with leg
/// variables interpreted by `contact`.
struct PlantState {
  double time = 0.0;
  StateVector x = StateVector::Zero();
  ContactFlags contact = ContactFlags::all(true);
};

/// Standing state at the nominal height with every foot under its default pose.
PlantState standing_state(const RobotParams& params, double height);

/// One plant tick: forward Euler of the HKD model with the plant's own contact
/// flags, then the optional impulse. Throws SimulationDiverged.
void step_plant(PlantState& state, const ControlVector& u, double dt, const RobotParams& params,
                const PlantLimits& limits = {}, const BodyImpulse* impulse = nullptr);

enum class ContactChange { None, Touchdown, Takeoff, LateTouchdown };

/// Reconciles plant contact with the scheduled flags. A scheduled takeoff is
/// immediate and the swing leg starts from the joint angles reaching the
/// current foothold. A scheduled touchdown happens only once the foot is
/// within `touchdown_tolerance` of the ground; the foothold is placed on the
/// ground below the foot. Otherwise the change is reported as late.
std::array<ContactChange, kNumLegs> update_contacts(PlantState& state,
                                                    const ContactFlags& scheduled,
                                                    const RobotParams& params,
                                                    double touchdown_tolerance);

/// World position of every foot of the plant.
std::array<Vec3, kNumLegs> foot_positions(const PlantState& state, const RobotParams& params);

}  // namespace hkdmpc
