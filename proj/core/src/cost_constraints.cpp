#include "hkdmpc/cost_constraints.hpp"

#include <cmath>
#include <stdexcept>

namespace hkdmpc {

namespace si = state_index;
namespace ci = control_index;

namespace {

template <typename M>
void require_psd(const M& m, const char* what, bool strict) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument(std::string(what) + " must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<M> es(m);
  const double min_eig = es.eigenvalues().minCoeff();
  if (strict ? !(min_eig > 0.0) : min_eig < -1e-12) {
    throw std::invalid_argument(std::string(what) +
                                (strict ? " must be positive definite" : " must be PSD"));
  }
}

// Adds value/derivatives of d^T W d with d = v - v_ref to a state block.
template <int N>
double add_state_quadratic(const StateVector& x, const StateVector& x_ref, int offset,
                           const Eigen::Matrix<double, N, N>& w, double scale, StageCost* out) {
  const Eigen::Matrix<double, N, 1> d = x.segment<N>(offset) - x_ref.segment<N>(offset);
  const Eigen::Matrix<double, N, 1> wd = w * d;
  if (out) {
    out->lx.segment<N>(offset) += 2.0 * scale * wd;
    out->lxx.block<N, N>(offset, offset) += 2.0 * scale * w;
  }
  return scale * d.dot(wd);
}

double add_control_quadratic(const ControlVector& u, const ControlVector& u_ref, int offset,
                             const Mat3& w, double scale, StageCost* out) {
  const Vec3 d = u.segment<3>(offset) - u_ref.segment<3>(offset);
  const Vec3 wd = w * d;
  if (out) {
    out->lu.segment<3>(offset) += 2.0 * scale * wd;
    out->luu.block<3, 3>(offset, offset) += 2.0 * scale * w;
  }
  return scale * d.dot(wd);
}

double state_terms(const StateVector& x, const StateVector& x_ref, const ContactFlags& s,
                   const CostWeights& w, double scale, StageCost* out) {
  double value = add_state_quadratic<kBodyDim>(x, x_ref, 0, w.body, scale, out);
  for (int j = 0; j < kNumLegs; ++j) {
    const Mat3& wj = s.stance[j] ? w.stance_foot : w.swing_joint;
    value += add_state_quadratic<3>(x, x_ref, si::leg(j), wj, scale, out);
  }
  return value;
}

}  // namespace

void CostWeights::validate() const {
  require_psd(body, "body weight", false);
  require_psd(swing_joint, "swing joint weight", false);
  require_psd(stance_foot, "stance foot weight", false);
  require_psd(grf, "GRF weight", true);
  require_psd(joint_velocity, "joint velocity weight", true);
  if (inactive_control < 0.0) throw std::invalid_argument("inactive control weight must be >= 0");
  if (!(terminal_scale >= 0.0)) throw std::invalid_argument("terminal scale must be >= 0");
}

void StageCost::set_zero() {
  value = 0.0;
  lx.setZero();
  lu.setZero();
  lxx.setZero();
  luu.setZero();
  lux.setZero();
}

double running_cost(const StateVector& x, const ControlVector& u, const StateVector& x_ref,
                    const ControlVector& u_ref, const ContactFlags& s, const CostWeights& w,
                    double dt, StageCost* out) {
  double value = state_terms(x, x_ref, s, w, dt, out);
  const Mat3 inactive = w.inactive_control * Mat3::Identity();
  for (int j = 0; j < kNumLegs; ++j) {
    if (s.stance[j]) {
      value += add_control_quadratic(u, u_ref, ci::grf(j), w.grf, dt, out);
      value += add_control_quadratic(u, u_ref, ci::joint_vel(j), inactive, dt, out);
    } else {
      value += add_control_quadratic(u, u_ref, ci::grf(j), inactive, dt, out);
      value += add_control_quadratic(u, u_ref, ci::joint_vel(j), w.joint_velocity, dt, out);
    }
  }
  if (out) out->value += value;
  return value;
}

double terminal_cost(const StateVector& x, const StateVector& x_ref, const ContactFlags& s,
                     const CostWeights& w, StageCost* out) {
  const double value = state_terms(x, x_ref, s, w, w.terminal_scale, out);
  if (out) out->value += value;
  return value;
}

double touchdown_residual(const StateVector& x, Leg leg, const RobotParams& params,
                          StateVector* gradient) {
  const int row = si::leg(index_of(leg));
  const Vec3 euler = x.segment<3>(si::kEuler);
  const JointAngles q = x.segment<3>(row);
  const Vec3 foot_body = foot_position_in_body(params, leg, q);
  const Mat3 r = rotation_from_euler(euler);
  if (gradient) {
    gradient->setZero();
    const auto dr = rotation_euler_partials(euler);
    for (int i = 0; i < 3; ++i) (*gradient)[si::kEuler + i] = (dr[i] * foot_body).z();
    (*gradient)[si::kPosition + 2] = 1.0;
    gradient->segment<3>(row) = (r * leg_jacobian(params, leg, q)).row(2).transpose();
  }
  return x[si::kPosition + 2] + (r * foot_body).z();
}

std::vector<double> grf_residuals(const ControlVector& u, const ContactFlags& s, double mu) {
  std::vector<double> out;
  out.reserve(5 * kNumLegs);
  for (int j = 0; j < kNumLegs; ++j) {
    if (!s.stance[j]) continue;
    const Vec3 f = u.segment<3>(ci::grf(j));
    out.push_back(f.z());
    out.push_back(mu * f.z() - f.x());
    out.push_back(mu * f.z() + f.x());
    out.push_back(mu * f.z() - f.y());
    out.push_back(mu * f.z() + f.y());
  }
  return out;
}

double RelaxedBarrier::value(double z) const {
  if (z > delta) return -weight * std::log(z);
  const double r = (z - 2.0 * delta) / delta;
  return weight * (0.5 * (r * r - 1.0) - std::log(delta));
}

double RelaxedBarrier::first(double z) const {
  if (z > delta) return -weight / z;
  return weight * (z - 2.0 * delta) / (delta * delta);
}

double RelaxedBarrier::second(double z) const {
  if (z > delta) return weight / (z * z);
  return weight / (delta * delta);
}

double add_grf_barrier(const ControlVector& u, const ContactFlags& s, double mu,
                       const RelaxedBarrier& barrier, double dt, StageCost* out) {
  // Rows of the residual map acting on (lx, ly, lz).
  static const std::array<Vec3, 5> kUnit{Vec3(0, 0, 1), Vec3(-1, 0, 0), Vec3(1, 0, 0),
                                         Vec3(0, -1, 0), Vec3(0, 1, 0)};
  double value = 0.0;
  for (int j = 0; j < kNumLegs; ++j) {
    if (!s.stance[j]) continue;
    const Vec3 f = u.segment<3>(ci::grf(j));
    for (int i = 0; i < 5; ++i) {
      Vec3 a = kUnit[i];
      if (i > 0) a.z() = mu;
      const double c = a.dot(f);
      value += dt * barrier.value(c);
      if (out) {
        out->lu.segment<3>(ci::grf(j)) += dt * barrier.first(c) * a;
        out->luu.block<3, 3>(ci::grf(j), ci::grf(j)) += dt * barrier.second(c) * a * a.transpose();
      }
    }
  }
  if (out) out->value += value;
  return value;
}

}  // namespace hkdmpc
