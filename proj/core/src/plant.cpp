#include "hkdmpc/plant.hpp"

#include <cmath>

#include "hkdmpc/leg_controller.hpp"

namespace hkdmpc {

namespace si = state_index;

PlantState standing_state(const RobotParams& params, double height) {
  PlantState s;
  s.x.segment<3>(si::kPosition) = Vec3(0.0, 0.0, height);
  for (Leg leg : kAllLegs) {
    Vec3 foot = params.hip_offset(leg) +
                foot_position_in_hip(params, leg, params.default_joints(leg));
    foot.z() = 0.0;
    s.x.segment<3>(si::leg(index_of(leg))) = foot;
  }
  s.contact = ContactFlags::all(true);
  return s;
}

void step_plant(PlantState& state, const ControlVector& u, double dt, const RobotParams& params,
                const PlantLimits& limits, const BodyImpulse* impulse) {
  try {
    state.x = integrate_step(state.x, u, state.contact, dt, params);
  } catch (const GimbalLock& e) {
    throw SimulationDiverged(state.time, e.what());
  }
  state.time += dt;
  if (impulse) {
    state.x.segment<3>(si::kOmega) += impulse->omega;
    state.x.segment<3>(si::kVelocity) += impulse->velocity;
  }
  if (!state.x.allFinite()) throw SimulationDiverged(state.time, "non-finite state");
  if (state.x.lpNorm<Eigen::Infinity>() > limits.state_bound) {
    throw SimulationDiverged(state.time, "state norm exceeds bound");
  }
  if (state.x[si::kPosition + 2] < limits.min_height) {
    throw SimulationDiverged(state.time, "body height below limit");
  }
  if (std::abs(state.x[si::kEuler]) > limits.max_tilt ||
      std::abs(state.x[si::kEuler + 1]) > limits.max_tilt) {
    throw SimulationDiverged(state.time, "body tilt beyond limit");
  }
}

std::array<ContactChange, kNumLegs> update_contacts(PlantState& state,
                                                    const ContactFlags& scheduled,
                                                    const RobotParams& params,
                                                    double touchdown_tolerance) {
  std::array<ContactChange, kNumLegs> changes{};
  const BodyPose pose{state.x.segment<3>(si::kEuler), state.x.segment<3>(si::kPosition)};
  for (Leg leg : kAllLegs) {
    const int row = si::leg(index_of(leg));
    const bool stance = state.contact[leg];
    if (stance && !scheduled[leg]) {
      const Vec3 foothold = state.x.segment<3>(row);
      state.x.segment<3>(row) = joint_angles_toward(params, leg, foothold, pose);
      state.contact[leg] = false;
      changes[index_of(leg)] = ContactChange::Takeoff;
    } else if (!stance && scheduled[leg]) {
      Vec3 foot = foot_position_in_world(params, leg, state.x.segment<3>(row), pose);
      if (foot.z() <= touchdown_tolerance) {
        foot.z() = 0.0;
        state.x.segment<3>(row) = foot;
        state.contact[leg] = true;
        changes[index_of(leg)] = ContactChange::Touchdown;
      } else {
        changes[index_of(leg)] = ContactChange::LateTouchdown;
      }
    }
  }
  return changes;
}

std::array<Vec3, kNumLegs> foot_positions(const PlantState& state, const RobotParams& params) {
  std::array<Vec3, kNumLegs> out;
  const BodyPose pose{state.x.segment<3>(si::kEuler), state.x.segment<3>(si::kPosition)};
  for (Leg leg : kAllLegs) {
    const int row = si::leg(index_of(leg));
    out[index_of(leg)] = state.contact[leg]
                             ? Vec3(state.x.segment<3>(row))
                             : foot_position_in_world(params, leg, state.x.segment<3>(row), pose);
  }
  return out;
}

}  // namespace hkdmpc
