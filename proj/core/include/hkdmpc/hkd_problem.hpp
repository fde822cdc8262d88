#pragma once

#include <vector>

#include "hkdmpc/cost_constraints.hpp"
#include "hkdmpc/gait_schedule.hpp"
#include "hkdmpc/hsddp_solver.hpp"
#include "hkdmpc/reference_gen.hpp"

namespace hkdmpc {

/// Cost and constraint settings shared by every window of a run.
struct HkdProblemSettings {
  CostWeights weights;
  RelaxedBarrier barrier;
  double dt = 0.01;
};

/// One planning window of the HKD model cast as a multi-phase problem:
/// phases from the contact window, reset maps at contact changes, foot
/// height equalities at touchdowns and a friction-cone barrier on stance
/// GRFs.
class HkdProblem final : public ddp::MultiPhaseProblem {
 public:
  /// `x0` must already use the leg interpretation of `reference.flags[0]`.
  HkdProblem(const RobotParams& params, const HkdProblemSettings& settings,
             ReferenceTrajectory reference, const StateVector& x0);

  int state_dim() const override { return kStateDim; }
  int control_dim() const override { return kControlDim; }
  int horizon() const override { return reference_.size(); }
  const std::vector<ddp::PhaseSpan>& phases() const override { return spans_; }
  ddp::Vector initial_state() const override { return x0_; }

  ddp::Vector step(int k, const ddp::Vector& x, const ddp::Vector& u) const override;
  void linearize(int k, const ddp::Vector& x, const ddp::Vector& u, ddp::Matrix& a,
                 ddp::Matrix& b) const override;
  double running_cost(int k, const ddp::Vector& x, const ddp::Vector& u,
                      ddp::StageDerivatives* d) const override;
  double terminal_cost(const ddp::Vector& x, ddp::Vector* lx, ddp::Matrix* lxx) const override;

  ddp::Vector reset(int phase, const ddp::Vector& x_pre) const override;
  ddp::Matrix reset_jacobian(int phase, const ddp::Vector& x_pre) const override;

  int num_equalities(int phase) const override;
  void equalities(int phase, const ddp::Vector& x_pre, ddp::Vector& g,
                  ddp::Matrix* jac) const override;
  ddp::ConstraintKey equality_key(int phase, int component) const override;

  ddp::Vector initial_control(int k) const override { return reference_.u[k]; }

  const std::vector<Phase>& contact_phases() const { return phases_; }
  const ContactFlags& flags(int k) const { return reference_.flags[k]; }
  const ReferenceTrajectory& reference() const { return reference_; }
  const RobotParams& params() const { return params_; }
  int window_start() const { return reference_.window_start; }

  /// Legs constrained at the end of `phase`.
  const std::vector<Leg>& touchdown_legs(int phase) const { return touchdown_legs_[phase]; }

  /// Largest |foot height| over all touchdown constraints of `sol`.
  double max_touchdown_residual(const ddp::DdpSolution& sol) const;
  /// Smallest friction-cone residual over all stance steps of `sol`.
  double min_friction_residual(const ddp::DdpSolution& sol) const;

 private:
  const RobotParams& params_;
  HkdProblemSettings settings_;
  ReferenceTrajectory reference_;
  StateVector terminal_reference_;
  ddp::Vector x0_;
  std::vector<Phase> phases_;
  std::vector<ddp::PhaseSpan> spans_;
  std::vector<std::vector<Leg>> touchdown_legs_;
};

/// Re-interprets leg variables of a measured state whose contact status is
/// `current` for the planning contact status `target`: a leg entering stance
/// gets its foot position projected to the ground, a leg entering swing gets
/// the default joint angles.
StateVector align_to_contact(const StateVector& x, const ContactFlags& current,
                             const ContactFlags& target, const RobotParams& params);

}  // namespace hkdmpc
