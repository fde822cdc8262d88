#include "hkdmpc/hkd_problem.hpp"

#include <algorithm>
#include <limits>

namespace hkdmpc {

namespace si = state_index;

HkdProblem::HkdProblem(const RobotParams& params, const HkdProblemSettings& settings,
                       ReferenceTrajectory reference, const StateVector& x0)
    : params_(params), settings_(settings), reference_(std::move(reference)), x0_(x0) {
  const int n = reference_.size();
  if (n < 1) throw InvalidSpec("planning window must contain at least one step");

  std::vector<ContactFlags> cols(reference_.flags.begin(), reference_.flags.begin() + n);
  phases_ = segment_phases(ContactSchedule(settings_.dt, 0.0, std::move(cols)));
  for (const Phase& ph : phases_) spans_.push_back({ph.start, ph.end});

  touchdown_legs_.resize(phases_.size());
  for (std::size_t i = 0; i < phases_.size(); ++i) {
    const Phase& ph = phases_[i];
    const ContactFlags& after = (i + 1 < phases_.size()) ? phases_[i + 1].flags : reference_.flags[n];
    for (Leg leg : kAllLegs) {
      if (!ph.flags[leg] && after[leg]) touchdown_legs_[i].push_back(leg);
    }
  }

  // The terminal state keeps the last phase's leg interpretation.
  terminal_reference_ = reference_.x[n];
  const ContactFlags& last = reference_.flags[n - 1];
  for (Leg leg : kAllLegs) {
    if (last[leg] != reference_.flags[n][leg]) {
      terminal_reference_.segment<3>(si::leg(index_of(leg))) =
          reference_.x[n - 1].segment<3>(si::leg(index_of(leg)));
    }
  }
}

ddp::Vector HkdProblem::step(int k, const ddp::Vector& x, const ddp::Vector& u) const {
  return integrate_step(x, u, reference_.flags[k], settings_.dt, params_);
}

void HkdProblem::linearize(int k, const ddp::Vector& x, const ddp::Vector& u, ddp::Matrix& a,
                           ddp::Matrix& b) const {
  StateMatrix af;
  ControlMatrix bf;
  linearize_step(x, u, reference_.flags[k], settings_.dt, params_, af, bf);
  a = af;
  b = bf;
}

double HkdProblem::running_cost(int k, const ddp::Vector& x, const ddp::Vector& u,
                                ddp::StageDerivatives* d) const {
  const StateVector xs = x;
  const ControlVector us = u;
  const ContactFlags& s = reference_.flags[k];
  if (!d) {
    return hkdmpc::running_cost(xs, us, reference_.x[k], reference_.u[k], s, settings_.weights,
                                settings_.dt) +
           add_grf_barrier(us, s, params_.friction_coefficient, settings_.barrier, settings_.dt,
                           nullptr);
  }
  StageCost c;
  hkdmpc::running_cost(xs, us, reference_.x[k], reference_.u[k], s, settings_.weights,
                       settings_.dt, &c);
  add_grf_barrier(us, s, params_.friction_coefficient, settings_.barrier, settings_.dt, &c);
  d->lx = c.lx;
  d->lu = c.lu;
  d->lxx = c.lxx;
  d->luu = c.luu;
  d->lux = c.lux;
  return c.value;
}

double HkdProblem::terminal_cost(const ddp::Vector& x, ddp::Vector* lx, ddp::Matrix* lxx) const {
  const StateVector xs = x;
  const ContactFlags& s = reference_.flags[horizon() - 1];
  if (!lx && !lxx) return hkdmpc::terminal_cost(xs, terminal_reference_, s, settings_.weights);
  StageCost c;
  hkdmpc::terminal_cost(xs, terminal_reference_, s, settings_.weights, &c);
  if (lx) *lx += c.lx;
  if (lxx) *lxx += c.lxx;
  return c.value;
}

ddp::Vector HkdProblem::reset(int phase, const ddp::Vector& x_pre) const {
  StateVector x = x_pre;
  ContactFlags s = phases_[phase].flags;
  for (Leg leg : kAllLegs) {
    switch (phases_[phase].events[index_of(leg)]) {
      case LegEvent::Touchdown:
        x = reset_touchdown(x, leg, s, params_);
        s[leg] = true;
        break;
      case LegEvent::Takeoff:
        x = reset_takeoff(x, leg, s, params_);
        s[leg] = false;
        break;
      case LegEvent::None:
        break;
    }
  }
  return x;
}

ddp::Matrix HkdProblem::reset_jacobian(int phase, const ddp::Vector& x_pre) const {
  StateVector x = x_pre;
  ContactFlags s = phases_[phase].flags;
  StateMatrix jac = StateMatrix::Identity();
  for (Leg leg : kAllLegs) {
    const LegEvent e = phases_[phase].events[index_of(leg)];
    if (e == LegEvent::None) continue;
    const ResetKind kind = e == LegEvent::Touchdown ? ResetKind::Touchdown : ResetKind::Takeoff;
    jac = (hkdmpc::reset_jacobian(x, leg, kind, s, params_) * jac).eval();
    x = kind == ResetKind::Touchdown ? reset_touchdown(x, leg, s, params_)
                                     : reset_takeoff(x, leg, s, params_);
    s[leg] = kind == ResetKind::Touchdown;
  }
  return jac;
}

int HkdProblem::num_equalities(int phase) const {
  return static_cast<int>(touchdown_legs_[phase].size());
}

void HkdProblem::equalities(int phase, const ddp::Vector& x_pre, ddp::Vector& g,
                            ddp::Matrix* jac) const {
  const auto& legs = touchdown_legs_[phase];
  const int m = static_cast<int>(legs.size());
  const StateVector xs = x_pre;
  g.resize(m);
  if (jac) jac->resize(m, kStateDim);
  StateVector grad;
  for (int c = 0; c < m; ++c) {
    g[c] = touchdown_residual(xs, legs[c], params_, jac ? &grad : nullptr);
    if (jac) jac->row(c) = grad.transpose();
  }
}

ddp::ConstraintKey HkdProblem::equality_key(int phase, int component) const {
  return {static_cast<std::int64_t>(reference_.window_start + phases_[phase].end),
          index_of(touchdown_legs_[phase][component])};
}

double HkdProblem::max_touchdown_residual(const ddp::DdpSolution& sol) const {
  double worst = 0.0;
  for (std::size_t i = 0; i < phases_.size(); ++i) {
    for (Leg leg : touchdown_legs_[i]) {
      worst = std::max(worst, std::abs(touchdown_residual(sol.x_pre[i], leg, params_)));
    }
  }
  return worst;
}

double HkdProblem::min_friction_residual(const ddp::DdpSolution& sol) const {
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < horizon(); ++k) {
    for (double r : grf_residuals(sol.u[k], reference_.flags[k], params_.friction_coefficient)) {
      worst = std::min(worst, r);
    }
  }
  return worst;
}

StateVector align_to_contact(const StateVector& x, const ContactFlags& current,
                             const ContactFlags& target, const RobotParams& params) {
  StateVector out = x;
  const BodyPose pose{x.segment<3>(si::kEuler), x.segment<3>(si::kPosition)};
  for (Leg leg : kAllLegs) {
    const int row = si::leg(index_of(leg));
    if (!current[leg] && target[leg]) {
      Vec3 foot = foot_position_in_world(params, leg, x.segment<3>(row), pose);
      foot.z() = 0.0;
      out.segment<3>(row) = foot;
    } else if (current[leg] && !target[leg]) {
      out.segment<3>(row) = params.default_joints(leg);
    }
  }
  return out;
}

}  // namespace hkdmpc
