#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "hkdmpc/rotation.hpp"

namespace hkdmpc {

inline constexpr int kNumLegs = 4;

// Leg order is fixed: front-right, front-left, hind-right, hind-left.
enum class Leg : int { FrontRight = 0, FrontLeft = 1, HindRight = 2, HindLeft = 3 };

inline constexpr std::array<Leg, kNumLegs> kAllLegs{Leg::FrontRight, Leg::FrontLeft,
                                                     Leg::HindRight, Leg::HindLeft};

constexpr int index_of(Leg leg) { return static_cast<int>(leg); }

inline Leg leg_from_index(int i) {
  if (i < 0 || i >= kNumLegs) throw std::out_of_range("leg index " + std::to_string(i));
  return static_cast<Leg>(i);
}

std::string_view leg_name(Leg leg);

/// +1 for left legs, -1 for right legs.
constexpr double side_sign(Leg leg) {
  return (leg == Leg::FrontLeft || leg == Leg::HindLeft) ? 1.0 : -1.0;
}

/// Abduction, hip pitch, knee pitch (rad).
using JointAngles = Vec3;

struct JointLimits {
  Vec3 lower{-0.8, -1.5, -2.7};
  Vec3 upper{0.8, 3.0, -0.1};
};

struct RobotParams {
  std::string name;
  double mass = 0.0;
  Mat3 inertia = Mat3::Zero();
  std::array<Vec3, kNumLegs> hip_offsets{};
  double abduction_length = 0.0;
  double thigh_length = 0.0;
  double shank_length = 0.0;
  std::array<JointAngles, kNumLegs> default_joint_angles{};
  double friction_coefficient = 0.0;
  double standing_height = 0.0;
  Vec3 gravity{0.0, 0.0, -9.81};
  JointLimits joint_limits;
  Vec3 torque_limits{33.5, 33.5, 33.5};

  const Vec3& hip_offset(Leg leg) const { return hip_offsets[index_of(leg)]; }
  const JointAngles& default_joints(Leg leg) const { return default_joint_angles[index_of(leg)]; }

  /// Distance from hip to foot at full knee extension.
  double max_reach() const;
  /// Distance from hip to foot at full knee flexion.
  double min_reach() const;

  /// Throws InvalidRobotParams describing the first violated invariant.
  void validate() const;
};

class InvalidRobotParams : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class OutOfWorkspace : public std::runtime_error {
 public:
  OutOfWorkspace(Leg leg, const Vec3& target);
  Leg leg() const { return leg_; }
  const Vec3& target() const { return target_; }

 private:
  Leg leg_;
  Vec3 target_;
};

/// Built-in parameter sets; the bundled YAML files carry the same values.
RobotParams unitree_a1();
RobotParams mini_cheetah();

/// Reads RobotParams from a YAML file (schema in docs/config.md).
RobotParams load_robot_params(const std::string& path);
RobotParams parse_robot_params(std::string_view yaml_text);

struct BodyPose {
  Vec3 euler = Vec3::Zero();
  Vec3 position = Vec3::Zero();
};

// Kinematic chain (hip frame is body-aligned, origin at the hip):
//   p = Rx(q0) * ([0, side*l_ab, 0] + Ry(q1) * ([0, 0, -l_thigh] + Ry(q2) * [0, 0, -l_shank]))
// Knee-backward branch: q2 < 0 when the leg is bent.

Vec3 foot_position_in_hip(const RobotParams& params, Leg leg, const JointAngles& q);
Vec3 foot_position_in_body(const RobotParams& params, Leg leg, const JointAngles& q);
Vec3 foot_position_in_world(const RobotParams& params, Leg leg, const JointAngles& q,
                            const BodyPose& pose);

/// d(foot_position_in_hip)/dq. Singular at full knee extension.
Mat3 leg_jacobian(const RobotParams& params, Leg leg, const JointAngles& q);

/// Closed-form IK on the knee-backward branch. Throws OutOfWorkspace.
JointAngles inverse_kinematics(const RobotParams& params, Leg leg, const Vec3& foot_in_hip);
std::optional<JointAngles> try_inverse_kinematics(const RobotParams& params, Leg leg,
                                                  const Vec3& foot_in_hip);

/// Clamps q into the configured joint limits; `clamped` reports whether any
/// component moved.
JointAngles clamp_to_limits(const RobotParams& params, const JointAngles& q,
                            bool* clamped = nullptr);

}  // namespace hkdmpc
