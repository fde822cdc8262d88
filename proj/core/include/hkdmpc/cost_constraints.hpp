#pragma once

#include <vector>

#include "hkdmpc/hkd_dynamics.hpp"

namespace hkdmpc {

using BodyMatrix = Eigen::Matrix<double, kBodyDim, kBodyDim>;
using ControlHessian = Eigen::Matrix<double, kControlDim, kControlDim>;
using ControlStateMatrix = Eigen::Matrix<double, kControlDim, kStateDim>;

/// Quadratic tracking weights. Running terms are integrated (multiplied by
/// dt); the terminal cost uses `terminal_scale` instead.
struct CostWeights {
  BodyMatrix body = BodyMatrix::Identity();  // [euler, position, omega, velocity]
  Mat3 swing_joint = Mat3::Identity();       // swing-leg joint-angle deviation
  Mat3 stance_foot = Mat3::Identity();       // stance foothold deviation
  Mat3 grf = Mat3::Identity();               // stance GRF deviation
  /// Swing-leg joint-velocity command. Not part of the tracking cost proper;
  /// keeps the control Hessian nonsingular.
  Mat3 joint_velocity = 1e-3 * Mat3::Identity();
  /// Weight on gated-off controls (swing GRF, stance joint velocity).
  double inactive_control = 1e-6;
  double terminal_scale = 1.0;

  /// Throws std::invalid_argument if a matrix is asymmetric or not PSD/PD.
  void validate() const;
};

/// Value plus first and second derivatives of a stage cost.
struct StageCost {
  double value = 0.0;
  StateVector lx = StateVector::Zero();
  ControlVector lu = ControlVector::Zero();
  StateMatrix lxx = StateMatrix::Zero();
  ControlHessian luu = ControlHessian::Zero();
  ControlStateMatrix lux = ControlStateMatrix::Zero();

  void set_zero();
};

/// Running cost at one step. `x_ref` holds footholds for stance legs and
/// joint angles for swing legs, matching `s`. If `out` is null only the value
/// is computed.
double running_cost(const StateVector& x, const ControlVector& u, const StateVector& x_ref,
                    const ControlVector& u_ref, const ContactFlags& s, const CostWeights& w,
                    double dt, StageCost* out = nullptr);

double terminal_cost(const StateVector& x, const StateVector& x_ref, const ContactFlags& s,
                     const CostWeights& w, StageCost* out = nullptr);

/// World-frame height of the leg's foot computed from its joint angles.
/// `gradient` (if given) receives d/dx.
double touchdown_residual(const StateVector& x, Leg leg, const RobotParams& params,
                          StateVector* gradient = nullptr);

/// Linearized friction cone. Per stance leg, in leg order:
/// [lz, mu*lz - lx, mu*lz + lx, mu*lz - ly, mu*lz + ly]; feasible iff all >= 0.
std::vector<double> grf_residuals(const ControlVector& u, const ContactFlags& s, double mu);

/// Relaxed log barrier: -log(z) for z > delta, quadratic extension below.
struct RelaxedBarrier {
  double weight = 0.1;
  double delta = 1e-3;

  double value(double z) const;
  double first(double z) const;
  double second(double z) const;
};

/// Adds the dt-scaled barrier on every friction-cone residual to `out` and
/// returns its value.
double add_grf_barrier(const ControlVector& u, const ContactFlags& s, double mu,
                       const RelaxedBarrier& barrier, double dt, StageCost* out);

}  // namespace hkdmpc
