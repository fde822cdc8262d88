#include "hkdmpc/leg_controller.hpp"

#include <algorithm>

namespace hkdmpc {

SwingSample swing_foot_trajectory(const Vec3& p_start, const Vec3& p_target, double phase,
                                  double apex_height, double duration) {
  const double s = std::clamp(phase, 0.0, 1.0);
  const Vec3 lift(0.0, 0.0, 4.0 / 3.0 * apex_height);
  const Vec3 c0 = p_start;
  const Vec3 c1 = p_start + lift;
  const Vec3 c2 = p_target + lift;
  const Vec3 c3 = p_target;
  const double r = 1.0 - s;

  SwingSample out;
  out.position = r * r * r * c0 + 3.0 * r * r * s * c1 + 3.0 * r * s * s * c2 + s * s * s * c3;
  const Vec3 d = 3.0 * r * r * (c1 - c0) + 6.0 * r * s * (c2 - c1) + 3.0 * s * s * (c3 - c2);
  out.velocity = duration > 0.0 ? Vec3(d / duration) : Vec3::Zero();
  return out;
}

Vec3 swing_torque(const JointAngles& q, const Vec3& qd, const JointAngles& q_des,
                  const Vec3& qd_des, const PdGains& gains) {
  return gains.kp.cwiseProduct(q_des - q) + gains.kd.cwiseProduct(qd_des - qd);
}

Vec3 stance_torque(const RobotParams& params, Leg leg, const JointAngles& q, const Vec3& euler,
                   const Vec3& grf) {
  const Mat3 r = rotation_from_euler(euler);
  return leg_jacobian(params, leg, q).transpose() * (r.transpose() * grf);
}

bool clamp_torque(Vec3& tau, const Vec3& limit) {
  const Vec3 clipped = tau.cwiseMax(-limit).cwiseMin(limit);
  const bool changed = clipped != tau;
  tau = clipped;
  return changed;
}

JointAngles joint_angles_toward(const RobotParams& params, Leg leg, const Vec3& foot_world,
                                const BodyPose& pose) {
  const Mat3 r = rotation_from_euler(pose.euler);
  Vec3 rel = r.transpose() * (foot_world - pose.position) - params.hip_offset(leg);
  if (auto q = try_inverse_kinematics(params, leg, rel)) return *q;
  const double dist = rel.norm();
  const double lo = params.min_reach() + 1e-6;
  const double hi = params.max_reach() - 1e-6;
  if (dist < 1e-9) {
    rel = Vec3(0.0, 0.0, -lo);
  } else {
    rel *= std::clamp(dist, lo, hi) / dist;
  }
  if (auto q = try_inverse_kinematics(params, leg, rel)) return *q;
  return params.default_joints(leg);
}

}  // namespace hkdmpc
