#include "hkdmpc/hsddp_solver.hpp"

#include <algorithm>
#include <cmath>

namespace hkdmpc::ddp {

void StageDerivatives::resize(int nx, int nu) {
  lx.resize(nx);
  lu.resize(nu);
  lxx.resize(nx, nx);
  luu.resize(nu, nu);
  lux.resize(nu, nx);
  set_zero();
}

void StageDerivatives::set_zero() {
  lx.setZero();
  lu.setZero();
  lxx.setZero();
  luu.setZero();
  lux.setZero();
}

Vector MultiPhaseProblem::reset(int, const Vector& x_pre) const { return x_pre; }

Matrix MultiPhaseProblem::reset_jacobian(int, const Vector& x_pre) const {
  return Matrix::Identity(x_pre.size(), x_pre.size());
}

int MultiPhaseProblem::num_equalities(int) const { return 0; }

void MultiPhaseProblem::equalities(int, const Vector&, Vector& g, Matrix* jac) const {
  g.resize(0);
  if (jac) jac->resize(0, state_dim());
}

ConstraintKey MultiPhaseProblem::equality_key(int phase, int component) const {
  return {phase, component};
}

Vector MultiPhaseProblem::initial_control(int) const { return Vector::Zero(control_dim()); }

void SolverOptions::validate() const {
  if (max_iterations < 1 || max_inner_iterations < 1 || max_outer_iterations < 1) {
    throw std::invalid_argument("iteration caps must be positive");
  }
  if (!(line_search_decay > 0.0 && line_search_decay < 1.0)) {
    throw std::invalid_argument("line-search decay must lie in (0, 1)");
  }
  if (!(min_step > 0.0 && min_step <= 1.0)) throw std::invalid_argument("min_step in (0, 1]");
  if (regularization_init < 0.0 || !(regularization_min > 0.0) ||
      !(regularization_max > regularization_min) || !(regularization_growth > 1.0)) {
    throw std::invalid_argument("invalid regularization schedule");
  }
  if (!(penalty_init > 0.0) || !(penalty_growth >= 1.0) || !(penalty_max >= penalty_init)) {
    throw std::invalid_argument("invalid penalty schedule");
  }
  if (!(constraint_tolerance > 0.0) || !(cost_tolerance >= 0.0) || !(expected_tolerance >= 0.0)) {
    throw std::invalid_argument("tolerances must be nonnegative");
  }
  if (!(divergence_bound > 0.0)) throw std::invalid_argument("divergence bound must be positive");
}

HsddpSolver::HsddpSolver(SolverOptions options) { set_options(std::move(options)); }

void HsddpSolver::set_options(SolverOptions options) {
  options.validate();
  options_ = std::move(options);
  penalty_ = options_.penalty_init;
}

void HsddpSolver::set_augmented_lagrangian(MultiplierMap multipliers, double penalty) {
  multipliers_ = std::move(multipliers);
  penalty_ = penalty;
}

double HsddpSolver::augmented_terms(const MultiPhaseProblem& problem, int phase,
                                    const Vector& x_pre, Vector* grad, Matrix* hess) const {
  const int m = problem.num_equalities(phase);
  if (m == 0) return 0.0;
  Vector g;
  Matrix jac;
  problem.equalities(phase, x_pre, g, (grad || hess) ? &jac : nullptr);
  double value = 0.0;
  for (int c = 0; c < m; ++c) {
    const auto it = multipliers_.find(problem.equality_key(phase, c));
    const double lambda = it == multipliers_.end() ? 0.0 : it->second;
    value += lambda * g[c] + 0.5 * penalty_ * g[c] * g[c];
    if (grad) grad->noalias() += (lambda + penalty_ * g[c]) * jac.row(c).transpose();
    if (hess) hess->noalias() += penalty_ * jac.row(c).transpose() * jac.row(c);
  }
  return value;
}

double HsddpSolver::max_violation(const MultiPhaseProblem& problem, const DdpSolution& sol) const {
  double worst = 0.0;
  const int n_phases = static_cast<int>(problem.phases().size());
  Vector g;
  for (int i = 0; i < n_phases; ++i) {
    if (problem.num_equalities(i) == 0) continue;
    problem.equalities(i, sol.x_pre[i], g, nullptr);
    if (g.size() > 0) worst = std::max(worst, g.cwiseAbs().maxCoeff());
  }
  return worst;
}

namespace {

void check_state(int k, const Vector& x, double bound) {
  if (!x.allFinite()) throw RolloutDiverged(k, "non-finite state");
  if (x.lpNorm<Eigen::Infinity>() > bound) throw RolloutDiverged(k, "state norm exceeds bound");
}

}  // namespace

DdpSolution HsddpSolver::rollout(const MultiPhaseProblem& problem, const std::vector<Vector>& u,
                                 const std::vector<Matrix>* gains,
                                 const std::vector<Vector>* x_nominal) {
  const auto& phases = problem.phases();
  const int n = problem.horizon();
  const int n_phases = static_cast<int>(phases.size());
  DdpSolution sol;
  sol.x.resize(n + 1);
  sol.u.resize(n);
  sol.x_pre.resize(n_phases);

  Vector x = problem.initial_state();
  double cost = 0.0;
  for (int i = 0; i < n_phases; ++i) {
    for (int k = phases[i].start; k < phases[i].end; ++k) {
      sol.x[k] = x;
      Vector uk = u[k];
      if (gains && x_nominal) uk.noalias() += (*gains)[k] * (x - (*x_nominal)[k]);
      sol.u[k] = uk;
      try {
        cost += problem.running_cost(k, x, uk, nullptr);
        x = problem.step(k, x, uk);
      } catch (const RolloutDiverged&) {
        throw;
      } catch (const std::exception& e) {
        throw RolloutDiverged(k, e.what());
      }
      check_state(k + 1, x, options_.divergence_bound);
    }
    sol.x_pre[i] = x;
    cost += augmented_terms(problem, i, x, nullptr, nullptr);
    if (i + 1 < n_phases) {
      try {
        x = problem.reset(i, x);
      } catch (const std::exception& e) {
        throw RolloutDiverged(phases[i].end, e.what());
      }
    }
  }
  sol.x[n] = x;
  cost += problem.terminal_cost(x, nullptr, nullptr);
  if (!std::isfinite(cost)) throw RolloutDiverged(n, "non-finite cost");
  sol.cost = cost;
  sol.multipliers = multipliers_;
  sol.penalty = penalty_;
  return sol;
}

void HsddpSolver::finalize_cost(const MultiPhaseProblem& problem, DdpSolution& sol) const {
  double cost = 0.0;
  const auto& phases = problem.phases();
  for (int k = 0; k < problem.horizon(); ++k) cost += problem.running_cost(k, sol.x[k], sol.u[k], nullptr);
  for (int i = 0; i < static_cast<int>(phases.size()); ++i) {
    cost += augmented_terms(problem, i, sol.x_pre[i], nullptr, nullptr);
  }
  cost += problem.terminal_cost(sol.x.back(), nullptr, nullptr);
  sol.cost = cost;
}

BackwardPass HsddpSolver::backward_sweep(const MultiPhaseProblem& problem,
                                         const DdpSolution& nominal, double regularization) {
  const auto& phases = problem.phases();
  const int nx = problem.state_dim();
  const int nu = problem.control_dim();
  const int n = problem.horizon();
  const int n_phases = static_cast<int>(phases.size());

  BackwardPass pass;
  pass.gains.resize(n);
  pass.feedforward.resize(n);

  Vector vx = Vector::Zero(nx);
  Matrix vxx = Matrix::Zero(nx, nx);
  problem.terminal_cost(nominal.x[n], &vx, &vxx);
  augmented_terms(problem, n_phases - 1, nominal.x_pre[n_phases - 1], &vx, &vxx);

  StageDerivatives d;
  d.resize(nx, nu);
  Matrix a(nx, nx), b(nx, nu);
  Vector qx(nx), qu(nu);
  Matrix qxx(nx, nx), quu(nu, nu), qux(nu, nx), vxx_a(nx, nx), vxx_b(nx, nu);
  Eigen::LLT<Matrix> llt(nu);
  const Matrix reg = regularization * Matrix::Identity(nu, nu);

  for (int i = n_phases - 1; i >= 0; --i) {
    for (int k = phases[i].end - 1; k >= phases[i].start; --k) {
      d.set_zero();
      problem.running_cost(k, nominal.x[k], nominal.u[k], &d);
      problem.linearize(k, nominal.x[k], nominal.u[k], a, b);

      vxx_a.noalias() = vxx * a;
      vxx_b.noalias() = vxx * b;
      qx = d.lx;
      qx.noalias() += a.transpose() * vx;
      qu = d.lu;
      qu.noalias() += b.transpose() * vx;
      qxx = d.lxx;
      qxx.noalias() += a.transpose() * vxx_a;
      quu = d.luu;
      quu.noalias() += b.transpose() * vxx_b;
      qux = d.lux;
      qux.noalias() += b.transpose() * vxx_a;

      llt.compute(quu + reg);
      if (llt.info() != Eigen::Success) {
        throw NonPositiveCurvature("Quu not positive definite at step " + std::to_string(k));
      }
      Vector& kff = pass.feedforward[k];
      Matrix& gain = pass.gains[k];
      kff = -llt.solve(qu);
      gain = -llt.solve(qux);
      if (!kff.allFinite() || !gain.allFinite()) {
        throw NonPositiveCurvature("non-finite gains at step " + std::to_string(k));
      }

      pass.dv1 += kff.dot(qu);
      pass.dv2 += 0.5 * kff.dot(quu * kff);

      // V = Q + K^T Quu k + K^T Qu + Qux^T k (and the matching Hessian terms).
      const Matrix quu_gain = quu * gain;
      vx = qx;
      vx.noalias() += gain.transpose() * (quu * kff);
      vx.noalias() += gain.transpose() * qu;
      vx.noalias() += qux.transpose() * kff;
      vxx = qxx;
      vxx.noalias() += gain.transpose() * quu_gain;
      vxx.noalias() += gain.transpose() * qux;
      vxx.noalias() += qux.transpose() * gain;
      vxx = 0.5 * (vxx + vxx.transpose()).eval();
    }
    if (i > 0) {
      // Pull the value function back through the reset at the end of phase i-1.
      const Matrix jr = problem.reset_jacobian(i - 1, nominal.x_pre[i - 1]);
      vx = (jr.transpose() * vx).eval();
      vxx = (jr.transpose() * vxx * jr).eval();
      augmented_terms(problem, i - 1, nominal.x_pre[i - 1], &vx, &vxx);
    }
  }
  pass.vx0 = vx;
  pass.vxx0 = vxx;
  return pass;
}

DdpSolution HsddpSolver::forward_sweep(const MultiPhaseProblem& problem,
                                       const DdpSolution& nominal, const BackwardPass& pass,
                                       double alpha, bool use_feedback) {
  const int n = problem.horizon();
  std::vector<Vector> u(n);
  for (int k = 0; k < n; ++k) u[k] = nominal.u[k] + alpha * pass.feedforward[k];
  DdpSolution sol = use_feedback ? rollout(problem, u, &pass.gains, &nominal.x)
                                 : rollout(problem, u);
  sol.gains = pass.gains;
  sol.feedforward = pass.feedforward;
  return sol;
}

void HsddpSolver::update_multipliers(const MultiPhaseProblem& problem, DdpSolution& sol) {
  const int n_phases = static_cast<int>(problem.phases().size());
  Vector g;
  for (int i = 0; i < n_phases; ++i) {
    const int m = problem.num_equalities(i);
    if (m == 0) continue;
    problem.equalities(i, sol.x_pre[i], g, nullptr);
    for (int c = 0; c < m; ++c) multipliers_[problem.equality_key(i, c)] += penalty_ * g[c];
  }
  penalty_ = std::min(penalty_ * options_.penalty_growth, options_.penalty_max);
}

DdpSolution HsddpSolver::solve(const MultiPhaseProblem& problem,
                               const std::optional<WarmStart>& warm) {
  const int n = problem.horizon();
  const int nx = problem.state_dim();
  const int nu = problem.control_dim();
  const int n_phases = static_cast<int>(problem.phases().size());

  // Multipliers for constraints present in this problem; unmatched keys start at zero.
  multipliers_.clear();
  for (int i = 0; i < n_phases; ++i) {
    for (int c = 0; c < problem.num_equalities(i); ++c) {
      const ConstraintKey key = problem.equality_key(i, c);
      double value = 0.0;
      if (warm) {
        if (auto it = warm->multipliers.find(key); it != warm->multipliers.end()) value = it->second;
      }
      multipliers_[key] = value;
    }
  }
  penalty_ = options_.penalty_init;

  std::vector<Vector> u0(n);
  for (int k = 0; k < n; ++k) u0[k] = problem.initial_control(k);

  DdpSolution current;
  bool warm_diverged = false;
  if (warm && static_cast<int>(warm->u.size()) == n) {
    try {
      const bool fb = options_.feedback_warm_start && static_cast<int>(warm->gains.size()) == n &&
                      static_cast<int>(warm->x.size()) >= n;
      current = fb ? rollout(problem, warm->u, &warm->gains, &warm->x) : rollout(problem, warm->u);
    } catch (const RolloutDiverged&) {
      warm_diverged = true;
      current = rollout(problem, u0);
    }
  } else {
    current = rollout(problem, u0);
  }
  current.warm_start_rollout_diverged = warm_diverged;
  current.first_rollout_cost = current.cost;
  current.gains.assign(n, Matrix::Zero(nu, nx));
  current.feedforward.assign(n, Vector::Zero(nu));

  std::vector<TraceEntry> trace;
  double reg = options_.regularization_init;
  int iterations = 0;
  int accepted = 0;
  int outer = 0;
  bool inner_converged = false;
  double violation = max_violation(problem, current);

  for (outer = 0; outer < options_.max_outer_iterations; ++outer) {
    trace.push_back({outer, iterations, current.cost, violation, 0.0, reg});
    inner_converged = false;
    int inner = 0;
    while (iterations < options_.max_iterations && inner < options_.max_inner_iterations) {
      BackwardPass pass;
      bool have_pass = false;
      while (!have_pass) {
        try {
          pass = backward_sweep(problem, current, reg);
          have_pass = true;
        } catch (const NonPositiveCurvature&) {
          reg = std::max(reg * options_.regularization_growth, options_.regularization_min);
          if (reg > options_.regularization_max) break;
        }
      }
      if (!have_pass) break;
      ++iterations;
      ++inner;
      current.gains = pass.gains;
      current.feedforward = pass.feedforward;

      if (pass.expected_decrease(1.0) < options_.expected_tolerance) {
        inner_converged = true;
        break;
      }

      bool accepted_step = false;
      for (double alpha = 1.0; alpha >= options_.min_step; alpha *= options_.line_search_decay) {
        try {
          DdpSolution trial = forward_sweep(problem, current, pass, alpha, true);
          if (trial.cost < current.cost) {
            const double decrease = current.cost - trial.cost;
            const double previous = current.cost;
            trial.warm_start_rollout_diverged = current.warm_start_rollout_diverged;
            trial.first_rollout_cost = current.first_rollout_cost;
            current = std::move(trial);
            ++accepted;
            accepted_step = true;
            reg = reg / options_.regularization_growth;
            if (reg < options_.regularization_min) reg = 0.0;
            trace.push_back({outer, iterations, current.cost, max_violation(problem, current), alpha, reg});
            if (decrease < options_.cost_tolerance * std::max(1.0, std::abs(previous))) {
              inner_converged = true;
            }
            break;
          }
        } catch (const RolloutDiverged&) {
          // backtrack
        }
      }
      if (!accepted_step) {
        reg = std::max(reg * options_.regularization_growth, options_.regularization_min);
        if (reg > options_.regularization_max) break;
        continue;
      }
      if (inner_converged) break;
    }

    violation = max_violation(problem, current);
    if (violation < options_.constraint_tolerance) break;
    update_multipliers(problem, current);
    finalize_cost(problem, current);
    if (iterations >= options_.max_iterations) {
      ++outer;
      break;
    }
  }

  current.max_violation = violation;
  current.multipliers = multipliers_;
  current.penalty = penalty_;
  current.iterations = iterations;
  current.accepted_steps = accepted;
  current.outer_iterations = std::min(outer + 1, options_.max_outer_iterations);
  current.status = (inner_converged && violation < options_.constraint_tolerance)
                       ? SolveStatus::Converged
                       : SolveStatus::NotConverged;
  current.trace = std::move(trace);
  return current;
}

WarmStart shift_solution(const DdpSolution& previous, int shift, int horizon) {
  WarmStart w;
  const int n_prev = previous.horizon();
  if (n_prev == 0) return w;
  w.u.resize(horizon);
  w.gains.resize(horizon);
  w.x.resize(horizon + 1);
  for (int k = 0; k < horizon; ++k) {
    const int src = std::min(k + shift, n_prev - 1);
    w.u[k] = previous.u[src];
    if (!previous.gains.empty()) w.gains[k] = previous.gains[src];
  }
  for (int k = 0; k <= horizon; ++k) w.x[k] = previous.x[std::min(k + shift, n_prev)];
  if (previous.gains.empty()) w.gains.clear();
  w.multipliers = previous.multipliers;
  return w;
}

}  // namespace hkdmpc::ddp
