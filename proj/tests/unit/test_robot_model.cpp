#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hkdmpc/robot_model.hpp"
#include "oracles.hpp"

namespace hkdmpc {
namespace {

using testing::fd_jacobian;
using testing::rel_err;

JointAngles random_joints(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ab(-0.6, 0.6), hip(-1.0, 2.0), knee(-2.5, -0.3);
  return {ab(rng), hip(rng), knee(rng)};
}

// Configurations with the foot below the hip in the leg plane (the IK branch).
JointAngles random_working_joints(const RobotParams& p, std::mt19937_64& rng) {
  for (;;) {
    const JointAngles q = random_joints(rng);
    const double z_leg = -p.thigh_length * std::cos(q[1]) - p.shank_length * std::cos(q[1] + q[2]);
    if (z_leg < -0.02) return q;
  }
}

// Homogeneous transform chain built independently of the library.
Vec3 chain_foot_in_body(const RobotParams& p, Leg leg, const JointAngles& q) {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.translate(p.hip_offset(leg));
  t.rotate(Eigen::AngleAxisd(q[0], Vec3::UnitX()));
  t.translate(Vec3(0.0, side_sign(leg) * p.abduction_length, 0.0));
  t.rotate(Eigen::AngleAxisd(q[1], Vec3::UnitY()));
  t.translate(Vec3(0.0, 0.0, -p.thigh_length));
  t.rotate(Eigen::AngleAxisd(q[2], Vec3::UnitY()));
  t.translate(Vec3(0.0, 0.0, -p.shank_length));
  return t.translation();
}

TEST(RobotModel, StraightLegPointsDown) {
  const RobotParams p = unitree_a1();
  const Vec3 foot = foot_position_in_hip(p, Leg::FrontLeft, Vec3::Zero());
  EXPECT_NEAR(foot.x(), 0.0, 1e-15);
  EXPECT_NEAR(foot.y(), p.abduction_length, 1e-15);
  EXPECT_NEAR(foot.z(), -(p.thigh_length + p.shank_length), 1e-15);
}

TEST(RobotModel, ForwardKinematicsMatchesTransformChain) {
  const RobotParams p = unitree_a1();
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const JointAngles q = random_joints(rng);
    for (Leg leg : kAllLegs) {
      EXPECT_LT((foot_position_in_body(p, leg, q) - chain_foot_in_body(p, leg, q)).norm(), 1e-12);
    }
  }
}

TEST(RobotModel, WorldFootUsesBodyPose) {
  const RobotParams p = unitree_a1();
  const JointAngles q = p.default_joints(Leg::HindRight);
  const BodyPose pose{Vec3(0.1, -0.2, 0.7), Vec3(1.0, 2.0, 0.3)};
  const Vec3 expected =
      rotation_from_euler(pose.euler) * chain_foot_in_body(p, Leg::HindRight, q) + pose.position;
  EXPECT_LT((foot_position_in_world(p, Leg::HindRight, q, pose) - expected).norm(), 1e-12);
}

TEST(RobotModel, InverseKinematicsRoundTrip) {
  const RobotParams p = unitree_a1();
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const JointAngles q = random_working_joints(p, rng);
    for (Leg leg : kAllLegs) {
      const Vec3 foot = foot_position_in_hip(p, leg, q);
      const JointAngles back = inverse_kinematics(p, leg, foot);
      EXPECT_LT((back - q).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_LT((foot_position_in_hip(p, leg, back) - foot).norm(), 1e-12);
    }
  }
}

TEST(RobotModel, JacobianMatchesFiniteDifference) {
  const RobotParams p = unitree_a1();
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const JointAngles q = random_joints(rng);
    const Leg leg = leg_from_index(i % kNumLegs);
    const auto f = [&](const testing::Vector& v) -> testing::Vector {
      return foot_position_in_hip(p, leg, Vec3(v));
    };
    const testing::Matrix fd = fd_jacobian(f, q);
    EXPECT_LT(rel_err(leg_jacobian(p, leg, q), fd), 1e-6);
  }
}

TEST(RobotModel, JacobianSingularAtFullExtension) {
  const RobotParams p = unitree_a1();
  for (Leg leg : kAllLegs) {
    EXPECT_NEAR(leg_jacobian(p, leg, Vec3(0.2, 0.3, 0.0)).determinant(), 0.0, 1e-12);
    EXPECT_GT(std::abs(leg_jacobian(p, leg, p.default_joints(leg)).determinant()), 1e-4);
  }
}

TEST(RobotModel, UnreachableTargetThrows) {
  const RobotParams p = unitree_a1();
  const Vec3 far(0.0, 0.0, -1.0);
  EXPECT_THROW(inverse_kinematics(p, Leg::FrontRight, far), OutOfWorkspace);
  EXPECT_FALSE(try_inverse_kinematics(p, Leg::FrontRight, far).has_value());
  try {
    inverse_kinematics(p, Leg::HindLeft, far);
    FAIL();
  } catch (const OutOfWorkspace& e) {
    EXPECT_EQ(e.leg(), Leg::HindLeft);
    EXPECT_EQ(e.target(), far);
  }
  EXPECT_THROW(inverse_kinematics(p, Leg::FrontRight, Vec3::Zero()), OutOfWorkspace);
}

TEST(RobotModel, LeftAndRightLegsAreMirrorImages) {
  const RobotParams p = unitree_a1();
  const Mat3 mirror = Vec3(1.0, -1.0, 1.0).asDiagonal();
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    const JointAngles q = random_joints(rng);
    const JointAngles qm(-q[0], q[1], q[2]);
    EXPECT_LT((mirror * foot_position_in_body(p, Leg::FrontRight, q) -
               foot_position_in_body(p, Leg::FrontLeft, qm))
                  .norm(),
              1e-12);
    EXPECT_LT((mirror * foot_position_in_body(p, Leg::HindRight, q) -
               foot_position_in_body(p, Leg::HindLeft, qm))
                  .norm(),
              1e-12);
  }
}

TEST(RobotModel, DefaultStanceHeightMatchesStandingHeight) {
  for (const RobotParams& p : {unitree_a1(), mini_cheetah()}) {
    for (Leg leg : kAllLegs) {
      const Vec3 foot = foot_position_in_body(p, leg, p.default_joints(leg));
      EXPECT_NEAR(-foot.z(), p.standing_height, 0.02) << p.name;
    }
  }
}

TEST(RobotModel, ClampReportsMovement) {
  const RobotParams p = unitree_a1();
  bool clamped = true;
  EXPECT_EQ(clamp_to_limits(p, p.default_joints(Leg::FrontRight), &clamped),
            p.default_joints(Leg::FrontRight));
  EXPECT_FALSE(clamped);
  const JointAngles out = clamp_to_limits(p, Vec3(2.0, -3.0, 0.5), &clamped);
  EXPECT_TRUE(clamped);
  EXPECT_EQ(out, Vec3(0.8, -1.5, -0.1));
}

TEST(RobotModel, BundledYamlMatchesBuiltIn) {
  const RobotParams yaml = load_robot_params(std::string(HKDMPC_CONFIG_DIR) + "/robots/a1.yaml");
  const RobotParams builtin = unitree_a1();
  EXPECT_EQ(yaml.name, builtin.name);
  EXPECT_DOUBLE_EQ(yaml.mass, builtin.mass);
  EXPECT_TRUE(yaml.inertia.isApprox(builtin.inertia));
  for (Leg leg : kAllLegs) {
    EXPECT_TRUE(yaml.hip_offset(leg).isApprox(builtin.hip_offset(leg)));
    EXPECT_TRUE(yaml.default_joints(leg).isApprox(builtin.default_joints(leg)));
  }
  EXPECT_DOUBLE_EQ(yaml.thigh_length, builtin.thigh_length);
  EXPECT_DOUBLE_EQ(yaml.friction_coefficient, builtin.friction_coefficient);
  const RobotParams mc =
      load_robot_params(std::string(HKDMPC_CONFIG_DIR) + "/robots/mini_cheetah.yaml");
  EXPECT_DOUBLE_EQ(mc.mass, mini_cheetah().mass);
}

TEST(RobotModel, ValidationRejectsBadParameters) {
  RobotParams p = unitree_a1();
  EXPECT_NO_THROW(p.validate());
  p.mass = 0.0;
  EXPECT_THROW(p.validate(), InvalidRobotParams);
  p = unitree_a1();
  p.inertia(0, 1) = 0.01;
  EXPECT_THROW(p.validate(), InvalidRobotParams);
  p = unitree_a1();
  p.hip_offsets[1].y() = 0.05;
  EXPECT_THROW(p.validate(), InvalidRobotParams);
  p = unitree_a1();
  p.shank_length = -0.1;
  EXPECT_THROW(p.validate(), InvalidRobotParams);
  EXPECT_THROW(parse_robot_params("name: x\nmass: 1.0\n"), InvalidRobotParams);
}

}  // namespace
}  // namespace hkdmpc
