#include "hkdmpc/hkd_dynamics.hpp"

namespace hkdmpc {

namespace si = state_index;
namespace ci = control_index;

int ContactFlags::count() const {
  int n = 0;
  for (bool b : stance) n += b ? 1 : 0;
  return n;
}

ContactFlags ContactFlags::all(bool value) {
  ContactFlags s;
  s.stance.fill(value);
  return s;
}

namespace {

// Sum over stance legs of (p_f - p) x lambda, world frame.
Vec3 contact_moment(const StateVector& x, const ControlVector& u, const ContactFlags& s) {
  Vec3 moment = Vec3::Zero();
  const Vec3 p = x.segment<3>(si::kPosition);
  for (int j = 0; j < kNumLegs; ++j) {
    if (!s.stance[j]) continue;
    moment += (x.segment<3>(si::leg(j)) - p).cross(u.segment<3>(ci::grf(j)));
  }
  return moment;
}

}  // namespace

StateVector continuous_dynamics(const StateVector& x, const ControlVector& u,
                                const ContactFlags& s, const RobotParams& params) {
  const Vec3 euler = x.segment<3>(si::kEuler);
  const Vec3 omega = x.segment<3>(si::kOmega);
  const Mat3 t = euler_rate_matrix(euler);
  const Mat3 r = rotation_from_euler(euler);

  StateVector dx = StateVector::Zero();
  dx.segment<3>(si::kEuler) = t * omega;
  dx.segment<3>(si::kPosition) = x.segment<3>(si::kVelocity);

  const Vec3 body_moment = r.transpose() * contact_moment(x, u, s);
  const Vec3 i_omega = params.inertia * omega;
  dx.segment<3>(si::kOmega) = params.inertia.ldlt().solve(body_moment - omega.cross(i_omega));

  Vec3 force = Vec3::Zero();
  for (int j = 0; j < kNumLegs; ++j) {
    if (s.stance[j]) {
      force += u.segment<3>(ci::grf(j));
    } else {
      dx.segment<3>(si::leg(j)) = u.segment<3>(ci::joint_vel(j));
    }
  }
  dx.segment<3>(si::kVelocity) = params.gravity + force / params.mass;
  return dx;
}

StateVector integrate_step(const StateVector& x, const ControlVector& u, const ContactFlags& s,
                           double dt, const RobotParams& params) {
  StateVector next = x + dt * continuous_dynamics(x, u, s, params);
  // Keep stance footholds bit-identical rather than relying on x + dt * 0.
  for (int j = 0; j < kNumLegs; ++j) {
    if (s.stance[j]) next.segment<3>(si::leg(j)) = x.segment<3>(si::leg(j));
  }
  return next;
}

void linearize_step(const StateVector& x, const ControlVector& u, const ContactFlags& s,
                    double dt, const RobotParams& params, StateMatrix& a, ControlMatrix& b) {
  const Vec3 euler = x.segment<3>(si::kEuler);
  const Vec3 omega = x.segment<3>(si::kOmega);
  const Vec3 p = x.segment<3>(si::kPosition);
  const Mat3 t = euler_rate_matrix(euler);
  const auto dt_partials = euler_rate_partials(euler);
  const Mat3 r = rotation_from_euler(euler);
  const auto dr = rotation_euler_partials(euler);
  const Mat3 inertia_inv = params.inertia.inverse();

  StateMatrix fx = StateMatrix::Zero();
  ControlMatrix fu = ControlMatrix::Zero();

  // Euler-rate rows.
  fx.block<3, 1>(si::kEuler, si::kEuler + 0) = dt_partials[0] * omega;
  fx.block<3, 1>(si::kEuler, si::kEuler + 1) = dt_partials[1] * omega;
  fx.block<3, 3>(si::kEuler, si::kOmega) = t;

  fx.block<3, 3>(si::kPosition, si::kVelocity) = Mat3::Identity();

  // Angular acceleration rows.
  const Vec3 moment = contact_moment(x, u, s);
  for (int i = 0; i < 3; ++i) {
    fx.block<3, 1>(si::kOmega, si::kEuler + i) = inertia_inv * (dr[i].transpose() * moment);
  }
  const Mat3 gyro = skew(omega) * params.inertia - skew(params.inertia * omega);
  fx.block<3, 3>(si::kOmega, si::kOmega) = -inertia_inv * gyro;

  const Mat3 ir = inertia_inv * r.transpose();
  for (int j = 0; j < kNumLegs; ++j) {
    if (s.stance[j]) {
      const Vec3 lambda = u.segment<3>(ci::grf(j));
      const Vec3 lever = x.segment<3>(si::leg(j)) - p;
      // d(lever x lambda)/dp = [lambda]x ; d/dp_f = -[lambda]x
      fx.block<3, 3>(si::kOmega, si::kPosition) += ir * skew(lambda);
      fx.block<3, 3>(si::kOmega, si::leg(j)) = -ir * skew(lambda);
      fu.block<3, 3>(si::kOmega, ci::grf(j)) = ir * skew(lever);
      fu.block<3, 3>(si::kVelocity, ci::grf(j)) = Mat3::Identity() / params.mass;
    } else {
      fu.block<3, 3>(si::leg(j), ci::joint_vel(j)) = Mat3::Identity();
    }
  }

  a = StateMatrix::Identity() + dt * fx;
  b = dt * fu;
}

namespace {

void require_mode(const ContactFlags& s_before, Leg leg, bool expect_stance, const char* what) {
  if (s_before[leg] != expect_stance) {
    throw ModeMismatch(std::string(what) + " applied to leg " + std::string(leg_name(leg)) +
                       (expect_stance ? " which is not in stance" : " which is not in swing"));
  }
}

}  // namespace

StateVector reset_touchdown(const StateVector& x, Leg leg, const ContactFlags& s_before,
                            const RobotParams& params) {
  require_mode(s_before, leg, false, "touchdown reset");
  StateVector out = x;
  const int j = index_of(leg);
  const BodyPose pose{x.segment<3>(si::kEuler), x.segment<3>(si::kPosition)};
  out.segment<3>(si::leg(j)) = foot_position_in_world(params, leg, x.segment<3>(si::leg(j)), pose);
  return out;
}

StateVector reset_takeoff(const StateVector& x, Leg leg, const ContactFlags& s_before,
                          const RobotParams& params) {
  require_mode(s_before, leg, true, "takeoff reset");
  StateVector out = x;
  out.segment<3>(si::leg(index_of(leg))) = params.default_joints(leg);
  return out;
}

StateMatrix reset_jacobian(const StateVector& x, Leg leg, ResetKind kind,
                           const ContactFlags& s_before, const RobotParams& params) {
  const int row = si::leg(index_of(leg));
  StateMatrix jac = StateMatrix::Identity();
  if (kind == ResetKind::Takeoff) {
    require_mode(s_before, leg, true, "takeoff reset");
    jac.block<3, 3>(row, row).setZero();
    return jac;
  }
  require_mode(s_before, leg, false, "touchdown reset");
  const Vec3 euler = x.segment<3>(si::kEuler);
  const JointAngles q = x.segment<3>(row);
  const Vec3 foot_body = foot_position_in_body(params, leg, q);
  const auto dr = rotation_euler_partials(euler);
  for (int i = 0; i < 3; ++i) jac.block<3, 1>(row, si::kEuler + i) = dr[i] * foot_body;
  jac.block<3, 3>(row, si::kPosition) = Mat3::Identity();
  jac.block<3, 3>(row, row) = rotation_from_euler(euler) * leg_jacobian(params, leg, q);
  return jac;
}

}  // namespace hkdmpc
