#include "hkdmpc/robot_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace hkdmpc {

namespace {

constexpr double kReachTolerance = 1e-12;

std::string format_vec(const Vec3& v) {
  std::ostringstream os;
  os << "(" << v.x() << ", " << v.y() << ", " << v.z() << ")";
  return os.str();
}

Vec3 read_vec3(const YAML::Node& node, const std::string& what) {
  if (!node || !node.IsSequence() || node.size() != 3) {
    throw InvalidRobotParams(what + ": expected a 3-element sequence");
  }
  return {node[0].as<double>(), node[1].as<double>(), node[2].as<double>()};
}

double read_scalar(const YAML::Node& node, const std::string& what) {
  if (!node || !node.IsScalar()) throw InvalidRobotParams(what + ": missing scalar");
  return node.as<double>();
}

constexpr std::array<const char*, kNumLegs> kLegKeys{"front_right", "front_left", "hind_right",
                                                     "hind_left"};

}  // namespace

std::string_view leg_name(Leg leg) { return kLegKeys[index_of(leg)]; }

OutOfWorkspace::OutOfWorkspace(Leg leg, const Vec3& target)
    : std::runtime_error("foot target " + format_vec(target) + " outside workspace of leg " +
                         std::string(leg_name(leg))),
      leg_(leg),
      target_(target) {}

double RobotParams::max_reach() const {
  const double planar = thigh_length + shank_length;
  return std::sqrt(abduction_length * abduction_length + planar * planar);
}

double RobotParams::min_reach() const {
  const double planar = std::abs(thigh_length - shank_length);
  return std::sqrt(abduction_length * abduction_length + planar * planar);
}

void RobotParams::validate() const {
  if (!(mass > 0.0)) throw InvalidRobotParams("mass must be positive");
  if (!inertia.isApprox(inertia.transpose(), 1e-12)) {
    throw InvalidRobotParams("inertia must be symmetric");
  }
  Eigen::LLT<Mat3> llt(inertia);
  if (llt.info() != Eigen::Success) throw InvalidRobotParams("inertia must be positive definite");
  if (!(abduction_length > 0.0 && thigh_length > 0.0 && shank_length > 0.0)) {
    throw InvalidRobotParams("link lengths must be positive");
  }
  if (!(friction_coefficient > 0.0)) {
    throw InvalidRobotParams("friction coefficient must be positive");
  }
  if (!(standing_height > 0.0)) throw InvalidRobotParams("standing height must be positive");
  const auto mirrored = [](const Vec3& a, const Vec3& b) {
    return std::abs(a.x() - b.x()) < 1e-9 && std::abs(a.y() + b.y()) < 1e-9 &&
           std::abs(a.z() - b.z()) < 1e-9;
  };
  if (!mirrored(hip_offset(Leg::FrontRight), hip_offset(Leg::FrontLeft)) ||
      !mirrored(hip_offset(Leg::HindRight), hip_offset(Leg::HindLeft))) {
    throw InvalidRobotParams("hip offsets must be mirror-symmetric about the sagittal plane");
  }
  if (hip_offset(Leg::FrontLeft).y() <= 0.0) {
    throw InvalidRobotParams("left hips must have positive y offset");
  }
  for (int i = 0; i < 3; ++i) {
    if (joint_limits.lower[i] >= joint_limits.upper[i]) {
      throw InvalidRobotParams("joint limits must satisfy lower < upper");
    }
    if (!(torque_limits[i] > 0.0)) throw InvalidRobotParams("torque limits must be positive");
  }
}

RobotParams unitree_a1() {
  RobotParams p;
  p.name = "unitree_a1";
  p.mass = 12.0;
  p.inertia = Vec3(0.0168, 0.0565, 0.0647).asDiagonal();
  p.hip_offsets = {Vec3(0.183, -0.047, 0.0), Vec3(0.183, 0.047, 0.0), Vec3(-0.183, -0.047, 0.0),
                   Vec3(-0.183, 0.047, 0.0)};
  p.abduction_length = 0.08505;
  p.thigh_length = 0.2;
  p.shank_length = 0.2;
  p.default_joint_angles.fill(JointAngles(0.0, 0.85, -1.7));
  p.friction_coefficient = 0.7;
  p.standing_height = 0.26;
  p.torque_limits = Vec3(33.5, 33.5, 33.5);
  return p;
}

RobotParams mini_cheetah() {
  RobotParams p;
  p.name = "mini_cheetah";
  p.mass = 9.0;
  p.inertia = Vec3(0.07, 0.26, 0.242).asDiagonal();
  p.hip_offsets = {Vec3(0.19, -0.049, 0.0), Vec3(0.19, 0.049, 0.0), Vec3(-0.19, -0.049, 0.0),
                   Vec3(-0.19, 0.049, 0.0)};
  p.abduction_length = 0.062;
  p.thigh_length = 0.209;
  p.shank_length = 0.195;
  p.default_joint_angles.fill(JointAngles(0.0, 0.8, -1.6));
  p.friction_coefficient = 0.6;
  p.standing_height = 0.28;
  p.torque_limits = Vec3(17.0, 17.0, 26.0);
  return p;
}

namespace {

RobotParams params_from_node(const YAML::Node& root) {
  if (!root || !root.IsMap()) throw InvalidRobotParams("robot config must be a mapping");
  RobotParams p;
  p.name = root["name"] ? root["name"].as<std::string>() : "robot";
  p.mass = read_scalar(root["mass"], "mass");

  const YAML::Node inertia = root["inertia"];
  if (inertia && inertia.IsSequence() && inertia.size() == 3 && inertia[0].IsSequence()) {
    for (int r = 0; r < 3; ++r) p.inertia.row(r) = read_vec3(inertia[r], "inertia row").transpose();
  } else {
    p.inertia = read_vec3(inertia, "inertia (diagonal)").asDiagonal();
  }

  const YAML::Node hips = root["hip_offsets"];
  if (!hips || !hips.IsMap()) throw InvalidRobotParams("hip_offsets: expected a mapping");
  for (Leg leg : kAllLegs) {
    p.hip_offsets[index_of(leg)] =
        read_vec3(hips[kLegKeys[index_of(leg)]], "hip_offsets." + std::string(leg_name(leg)));
  }

  const YAML::Node links = root["links"];
  if (!links) throw InvalidRobotParams("links: missing section");
  p.abduction_length = read_scalar(links["abduction"], "links.abduction");
  p.thigh_length = read_scalar(links["thigh"], "links.thigh");
  p.shank_length = read_scalar(links["shank"], "links.shank");

  const YAML::Node q_default = root["default_joint_angles"];
  if (q_default && q_default.IsMap()) {
    for (Leg leg : kAllLegs) {
      p.default_joint_angles[index_of(leg)] = read_vec3(
          q_default[kLegKeys[index_of(leg)]], "default_joint_angles." + std::string(leg_name(leg)));
    }
  } else {
    p.default_joint_angles.fill(read_vec3(q_default, "default_joint_angles"));
  }

  p.friction_coefficient = read_scalar(root["friction_coefficient"], "friction_coefficient");
  p.standing_height = read_scalar(root["standing_height"], "standing_height");
  if (root["gravity"]) p.gravity = read_vec3(root["gravity"], "gravity");
  if (const YAML::Node limits = root["joint_limits"]) {
    p.joint_limits.lower = read_vec3(limits["lower"], "joint_limits.lower");
    p.joint_limits.upper = read_vec3(limits["upper"], "joint_limits.upper");
  }
  if (root["torque_limits"]) p.torque_limits = read_vec3(root["torque_limits"], "torque_limits");
  p.validate();
  return p;
}

}  // namespace

RobotParams load_robot_params(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::Exception& e) {
    throw InvalidRobotParams("cannot read robot config '" + path + "': " + e.what());
  }
  return params_from_node(root);
}

RobotParams parse_robot_params(std::string_view yaml_text) {
  try {
    return params_from_node(YAML::Load(std::string(yaml_text)));
  } catch (const YAML::Exception& e) {
    throw InvalidRobotParams(std::string("malformed robot config: ") + e.what());
  }
}

Vec3 foot_position_in_hip(const RobotParams& params, Leg leg, const JointAngles& q) {
  const double a = side_sign(leg) * params.abduction_length;
  const double l2 = params.thigh_length, l3 = params.shank_length;
  const double s1 = std::sin(q[1]), c1 = std::cos(q[1]);
  const double s12 = std::sin(q[1] + q[2]), c12 = std::cos(q[1] + q[2]);
  const double x = -l2 * s1 - l3 * s12;
  const double z_leg = -l2 * c1 - l3 * c12;
  const double s0 = std::sin(q[0]), c0 = std::cos(q[0]);
  return {x, a * c0 - z_leg * s0, a * s0 + z_leg * c0};
}

Vec3 foot_position_in_body(const RobotParams& params, Leg leg, const JointAngles& q) {
  return params.hip_offset(leg) + foot_position_in_hip(params, leg, q);
}

Vec3 foot_position_in_world(const RobotParams& params, Leg leg, const JointAngles& q,
                            const BodyPose& pose) {
  return pose.position + rotation_from_euler(pose.euler) * foot_position_in_body(params, leg, q);
}

Mat3 leg_jacobian(const RobotParams& params, Leg leg, const JointAngles& q) {
  const double a = side_sign(leg) * params.abduction_length;
  const double l2 = params.thigh_length, l3 = params.shank_length;
  const double s1 = std::sin(q[1]), c1 = std::cos(q[1]);
  const double s12 = std::sin(q[1] + q[2]), c12 = std::cos(q[1] + q[2]);
  const double x = -l2 * s1 - l3 * s12;
  const double z_leg = -l2 * c1 - l3 * c12;
  const double s0 = std::sin(q[0]), c0 = std::cos(q[0]);

  // Planar partials: dx/dq1 = z_leg, dz_leg/dq1 = -x.
  const double dx_dq2 = -l3 * c12;
  const double dz_dq2 = l3 * s12;

  Mat3 j;
  j.col(0) << 0.0, -a * s0 - z_leg * c0, a * c0 - z_leg * s0;
  j.col(1) << z_leg, x * s0, -x * c0;
  j.col(2) << dx_dq2, -dz_dq2 * s0, dz_dq2 * c0;
  return j;
}

std::optional<JointAngles> try_inverse_kinematics(const RobotParams& params, Leg leg,
                                                  const Vec3& foot_in_hip) {
  const double a = side_sign(leg) * params.abduction_length;
  const double l2 = params.thigh_length, l3 = params.shank_length;
  const double dist = foot_in_hip.norm();
  if (!std::isfinite(dist) || dist > params.max_reach() + kReachTolerance ||
      dist < params.min_reach() - kReachTolerance) {
    return std::nullopt;
  }

  const double y = foot_in_hip.y(), z = foot_in_hip.z();
  const double planar_sq = std::max(0.0, y * y + z * z - a * a);
  const double z_leg = -std::sqrt(planar_sq);
  JointAngles q;
  q[0] = std::remainder(std::atan2(z, y) - std::atan2(z_leg, a), 2.0 * std::numbers::pi);

  const double x = foot_in_hip.x();
  const double cos_knee =
      std::clamp((x * x + z_leg * z_leg - l2 * l2 - l3 * l3) / (2.0 * l2 * l3), -1.0, 1.0);
  q[2] = -std::acos(cos_knee);
  const double k1 = l2 + l3 * std::cos(q[2]);
  const double k2 = l3 * std::sin(q[2]);
  q[1] = std::atan2(-x, -z_leg) - std::atan2(k2, k1);
  return q;
}

JointAngles inverse_kinematics(const RobotParams& params, Leg leg, const Vec3& foot_in_hip) {
  if (auto q = try_inverse_kinematics(params, leg, foot_in_hip)) return *q;
  throw OutOfWorkspace(leg, foot_in_hip);
}

JointAngles clamp_to_limits(const RobotParams& params, const JointAngles& q, bool* clamped) {
  const JointAngles out = q.cwiseMax(params.joint_limits.lower).cwiseMin(params.joint_limits.upper);
  if (clamped) *clamped = (out != q);
  return out;
}

}  // namespace hkdmpc
