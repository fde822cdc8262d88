#pragma once

#include <array>
#include <stdexcept>

#include "hkdmpc/robot_model.hpp"

namespace hkdmpc {

inline constexpr int kStateDim = 24;
inline constexpr int kControlDim = 24;
inline constexpr int kBodyDim = 12;

using StateVector = Eigen::Matrix<double, kStateDim, 1>;
using ControlVector = Eigen::Matrix<double, kControlDim, 1>;
using StateMatrix = Eigen::Matrix<double, kStateDim, kStateDim>;
using ControlMatrix = Eigen::Matrix<double, kStateDim, kControlDim>;

// State layout: [euler(3) | com position(3) | body angular velocity(3) |
//                world linear velocity(3) | y_0 .. y_3 (3 each)]
// y_j is the world foothold while leg j is in stance and its joint angles
// while it swings.
namespace state_index {
inline constexpr int kEuler = 0;
inline constexpr int kPosition = 3;
inline constexpr int kOmega = 6;
inline constexpr int kVelocity = 9;
inline constexpr int kLegs = 12;
constexpr int leg(int j) { return kLegs + 3 * j; }
}  // namespace state_index

// Control layout: [grf_0 .. grf_3 (world, N) | joint_vel_0 .. joint_vel_3 (rad/s)]
namespace control_index {
inline constexpr int kGrf = 0;
inline constexpr int kJointVel = 12;
constexpr int grf(int j) { return kGrf + 3 * j; }
constexpr int joint_vel(int j) { return kJointVel + 3 * j; }
}  // namespace control_index

/// Thin typed view over the 24-entry state vector.
struct HkdState {
  StateVector v = StateVector::Zero();

  auto euler() { return v.segment<3>(state_index::kEuler); }
  auto euler() const { return v.segment<3>(state_index::kEuler); }
  auto position() { return v.segment<3>(state_index::kPosition); }
  auto position() const { return v.segment<3>(state_index::kPosition); }
  auto omega() { return v.segment<3>(state_index::kOmega); }
  auto omega() const { return v.segment<3>(state_index::kOmega); }
  auto velocity() { return v.segment<3>(state_index::kVelocity); }
  auto velocity() const { return v.segment<3>(state_index::kVelocity); }
  auto leg(Leg l) { return v.segment<3>(state_index::leg(index_of(l))); }
  auto leg(Leg l) const { return v.segment<3>(state_index::leg(index_of(l))); }
  auto body() { return v.head<kBodyDim>(); }
  auto body() const { return v.head<kBodyDim>(); }

  BodyPose pose() const { return {euler(), position()}; }
};

struct ControlInput {
  ControlVector v = ControlVector::Zero();

  auto grf(Leg l) { return v.segment<3>(control_index::grf(index_of(l))); }
  auto grf(Leg l) const { return v.segment<3>(control_index::grf(index_of(l))); }
  auto joint_velocity(Leg l) { return v.segment<3>(control_index::joint_vel(index_of(l))); }
  auto joint_velocity(Leg l) const { return v.segment<3>(control_index::joint_vel(index_of(l))); }
};

/// Per-leg contact status; true means stance.
struct ContactFlags {
  std::array<bool, kNumLegs> stance{};

  bool operator[](Leg l) const { return stance[index_of(l)]; }
  bool& operator[](Leg l) { return stance[index_of(l)]; }
  int count() const;
  bool operator==(const ContactFlags&) const = default;

  static ContactFlags all(bool value);
};

/// Raised when a reset map is applied to a leg in the wrong contact mode.
class ModeMismatch : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class ResetKind { Touchdown, Takeoff };

StateVector continuous_dynamics(const StateVector& x, const ControlVector& u,
                                const ContactFlags& s, const RobotParams& params);

/// Explicit Euler: x + dt * f(x, u, s). Stance footholds are copied unchanged.
StateVector integrate_step(const StateVector& x, const ControlVector& u, const ContactFlags& s,
                           double dt, const RobotParams& params);

/// Exact Jacobians of integrate_step.
void linearize_step(const StateVector& x, const ControlVector& u, const ContactFlags& s,
                    double dt, const RobotParams& params, StateMatrix& a, ControlMatrix& b);

/// Swing -> stance: the leg's joint angles become its world foothold.
/// `s_before` is the contact status immediately before the event.
StateVector reset_touchdown(const StateVector& x, Leg leg, const ContactFlags& s_before,
                            const RobotParams& params);

/// Stance -> swing: the leg's joint angles are set to the default pose.
StateVector reset_takeoff(const StateVector& x, Leg leg, const ContactFlags& s_before,
                          const RobotParams& params);

/// d(reset)/dx at x.
StateMatrix reset_jacobian(const StateVector& x, Leg leg, ResetKind kind,
                           const ContactFlags& s_before, const RobotParams& params);

}  // namespace hkdmpc
