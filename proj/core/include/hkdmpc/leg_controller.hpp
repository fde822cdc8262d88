#pragma once

#include "hkdmpc/hkd_dynamics.hpp"

namespace hkdmpc {

struct SwingSample {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();  // per second
};

/// Cubic Bezier from `p_start` to `p_target`. The two inner control points sit
/// 4/3 * apex above the endpoints, so with level endpoints the midpoint is
/// exactly `apex_height` above them. `duration` scales the phase derivative.
SwingSample swing_foot_trajectory(const Vec3& p_start, const Vec3& p_target, double phase,
                                  double apex_height, double duration);

struct PdGains {
  Vec3 kp{60.0, 60.0, 60.0};
  Vec3 kd{2.0, 2.0, 2.0};
};

/// Joint-space PD: kp (q_des - q) + kd (qd_des - qd).
Vec3 swing_torque(const JointAngles& q, const Vec3& qd, const JointAngles& q_des,
                  const Vec3& qd_des, const PdGains& gains);

/// Joint torques realizing the world-frame GRF `grf` at the foot:
/// J^T R^T grf with J the hip-frame leg Jacobian.
Vec3 stance_torque(const RobotParams& params, Leg leg, const JointAngles& q, const Vec3& euler,
                   const Vec3& grf);

/// Clamps each entry to +-limit; returns true when anything was clipped.
bool clamp_torque(Vec3& tau, const Vec3& limit);

/// Joint angles of `leg` for a world foot position under the given body pose.
/// If the point is outside the workspace it is pulled radially toward the hip
/// onto the reachable shell first.
JointAngles joint_angles_toward(const RobotParams& params, Leg leg, const Vec3& foot_world,
                                const BodyPose& pose);

}  // namespace hkdmpc
