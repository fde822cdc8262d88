#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hkdmpc {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Euler angles are stored as (roll, pitch, yaw) and composed in ZYX order:
// R = Rz(yaw) * Ry(pitch) * Rx(roll). R maps body-frame vectors into the
// world frame.

class GimbalLock : public std::domain_error {
 public:
  explicit GimbalLock(double pitch)
      : std::domain_error("Euler-rate map is singular at pitch " + std::to_string(pitch)),
        pitch_(pitch) {}
  double pitch() const { return pitch_; }

 private:
  double pitch_;
};

// Pitch may not come closer than this to +-pi/2.
inline constexpr double kGimbalMargin = 1e-3;

inline Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

inline Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

inline Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

inline Mat3 rotation_from_euler(const Vec3& euler) {
  return rot_z(euler.z()) * rot_y(euler.y()) * rot_x(euler.x());
}

/// Partial derivatives of rotation_from_euler with respect to roll, pitch
/// and yaw, in that order.
inline std::array<Mat3, 3> rotation_euler_partials(const Vec3& euler) {
  const Mat3 rx = rot_x(euler.x());
  const Mat3 ry = rot_y(euler.y());
  const Mat3 rz = rot_z(euler.z());
  const double cr = std::cos(euler.x()), sr = std::sin(euler.x());
  const double cp = std::cos(euler.y()), sp = std::sin(euler.y());
  const double cy = std::cos(euler.z()), sy = std::sin(euler.z());
  Mat3 drx, dry, drz;
  drx << 0, 0, 0, 0, -sr, -cr, 0, cr, -sr;
  dry << -sp, 0, cp, 0, 0, 0, -cp, 0, -sp;
  drz << -sy, -cy, 0, cy, -sy, 0, 0, 0, 0;
  return {rz * ry * drx, rz * dry * rx, drz * ry * rx};
}

inline void check_gimbal(const Vec3& euler) {
  if (std::abs(std::cos(euler.y())) < std::sin(kGimbalMargin)) {
    throw GimbalLock(euler.y());
  }
}

/// Maps body angular velocity to Euler-angle rates: theta_dot = T(theta) * omega.
inline Mat3 euler_rate_matrix(const Vec3& euler) {
  check_gimbal(euler);
  const double cr = std::cos(euler.x()), sr = std::sin(euler.x());
  const double cp = std::cos(euler.y()), tp = std::tan(euler.y());
  Mat3 t;
  t << 1, sr * tp, cr * tp,
       0, cr, -sr,
       0, sr / cp, cr / cp;
  return t;
}

/// Partial derivatives of euler_rate_matrix with respect to roll and pitch
/// (the map does not depend on yaw).
inline std::array<Mat3, 2> euler_rate_partials(const Vec3& euler) {
  const double cr = std::cos(euler.x()), sr = std::sin(euler.x());
  const double cp = std::cos(euler.y()), sp = std::sin(euler.y());
  const double tp = sp / cp, sec2 = 1.0 / (cp * cp);
  Mat3 d_roll, d_pitch;
  d_roll << 0, cr * tp, -sr * tp,
            0, -sr, -cr,
            0, cr / cp, -sr / cp;
  d_pitch << 0, sr * sec2, cr * sec2,
             0, 0, 0,
             0, sr * sp * sec2, cr * sp * sec2;
  return {d_roll, d_pitch};
}

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

}  // namespace hkdmpc
