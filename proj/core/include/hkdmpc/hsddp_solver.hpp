#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hkdmpc::ddp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct PhaseSpan {
  int start = 0;  // first step of the phase
  int end = 0;    // one past the last step; the boundary state lives at `end`
};

/// Identifies one scalar equality constraint across replans. For the HKD
/// problem `boundary` is the absolute touchdown step and `component` the leg.
struct ConstraintKey {
  std::int64_t boundary = 0;
  int component = 0;
  auto operator<=>(const ConstraintKey&) const = default;
};

using MultiplierMap = std::map<ConstraintKey, double>;

/// Stage-cost derivative block filled by MultiPhaseProblem::running_cost.
struct StageDerivatives {
  Vector lx, lu;
  Matrix lxx, luu, lux;  // lux is control x state

  void resize(int nx, int nu);
  void set_zero();
};

/// Multi-phase optimal control problem with fixed switching times. Within
/// phase i the state evolves by `step`; at the end of every phase but the
/// last the reset map is applied. Equality constraints live at phase ends
/// and are handled by the augmented Lagrangian loop.
class MultiPhaseProblem {
 public:
  virtual ~MultiPhaseProblem() = default;

  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;
  virtual int horizon() const = 0;
  virtual const std::vector<PhaseSpan>& phases() const = 0;
  virtual Vector initial_state() const = 0;

  virtual Vector step(int k, const Vector& x, const Vector& u) const = 0;
  virtual void linearize(int k, const Vector& x, const Vector& u, Matrix& a, Matrix& b) const = 0;

  /// Returns the stage cost; fills derivatives (already zeroed) when `d` is set.
  virtual double running_cost(int k, const Vector& x, const Vector& u,
                              StageDerivatives* d) const = 0;
  virtual double terminal_cost(const Vector& x, Vector* lx, Matrix* lxx) const = 0;

  /// Reset applied at the end of phase `phase` (never called for the last).
  virtual Vector reset(int phase, const Vector& x_pre) const;
  virtual Matrix reset_jacobian(int phase, const Vector& x_pre) const;

  virtual int num_equalities(int phase) const;
  /// g(x_pre) and, if `jac` is set, dg/dx (rows = constraints).
  virtual void equalities(int phase, const Vector& x_pre, Vector& g, Matrix* jac) const;
  virtual ConstraintKey equality_key(int phase, int component) const;

  /// Control used for cold starts.
  virtual Vector initial_control(int k) const;
};

class NonPositiveCurvature : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RolloutDiverged : public std::runtime_error {
 public:
  RolloutDiverged(int step, const std::string& why)
      : std::runtime_error("rollout diverged at step " + std::to_string(step) + ": " + why),
        step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

struct SolverOptions {
  int max_iterations = 100;      // backward sweeps across all outer iterations
  int max_inner_iterations = 100;
  int max_outer_iterations = 10;

  double line_search_decay = 0.5;
  double min_step = 1e-4;

  double regularization_init = 0.0;
  double regularization_min = 1e-8;
  double regularization_max = 1e8;
  double regularization_growth = 10.0;

  double cost_tolerance = 1e-7;       // relative cost decrease ending an inner loop
  double expected_tolerance = 1e-10;  // absolute model decrease ending an inner loop
  double constraint_tolerance = 1e-4;

  double penalty_init = 1e3;
  double penalty_growth = 10.0;
  double penalty_max = 1e9;

  bool feedback_warm_start = true;
  double divergence_bound = 1e4;

  /// Throws std::invalid_argument on nonsensical settings.
  void validate() const;
};

enum class SolveStatus { Converged, NotConverged };

struct TraceEntry {
  int outer = 0;
  int iteration = 0;   // backward-sweep count at the time of the entry
  double cost = 0.0;   // augmented-Lagrangian cost
  double violation = 0.0;
  double step = 0.0;   // accepted line-search step; 0 marks an outer-loop start
  double regularization = 0.0;
};

struct DdpSolution {
  std::vector<Vector> x;      // horizon + 1; post-reset at phase starts
  std::vector<Vector> u;      // horizon
  std::vector<Vector> x_pre;  // one per phase, state before the phase-end reset
  std::vector<Matrix> gains;  // u = u* + K (x - x*)
  std::vector<Vector> feedforward;

  double cost = 0.0;          // augmented-Lagrangian cost
  double max_violation = 0.0;
  MultiplierMap multipliers;
  double penalty = 0.0;

  int iterations = 0;
  int accepted_steps = 0;
  int outer_iterations = 0;
  SolveStatus status = SolveStatus::NotConverged;
  bool warm_start_rollout_diverged = false;
  double first_rollout_cost = 0.0;
  std::vector<TraceEntry> trace;

  int horizon() const { return static_cast<int>(u.size()); }
  bool converged() const { return status == SolveStatus::Converged; }
};

/// Initial guess for a replan: previous controls, gains and nominal states
/// aligned with the new window.
struct WarmStart {
  std::vector<Vector> u;
  std::vector<Matrix> gains;
  std::vector<Vector> x;
  MultiplierMap multipliers;
};

/// Output of one backward sweep.
struct BackwardPass {
  std::vector<Matrix> gains;
  std::vector<Vector> feedforward;
  double dv1 = 0.0;  // sum k^T Qu
  double dv2 = 0.0;  // sum 1/2 k^T Quu k
  Matrix vxx0;       // value Hessian at the initial state
  Vector vx0;

  /// Model-predicted decrease for line-search step alpha (>= 0).
  double expected_decrease(double alpha) const { return -(alpha * dv1 + alpha * alpha * dv2); }
};

/// Hybrid-systems DDP with an augmented-Lagrangian outer loop. One instance
/// is used by one caller at a time.
class HsddpSolver {
 public:
  explicit HsddpSolver(SolverOptions options = {});

  const SolverOptions& options() const { return options_; }
  void set_options(SolverOptions options);

  /// Cold start from problem.initial_control() unless `warm` is given.
  DdpSolution solve(const MultiPhaseProblem& problem,
                    const std::optional<WarmStart>& warm = std::nullopt);

  /// Sets the multipliers/penalty used by the augmented cost in the
  /// lower-level calls below.
  void set_augmented_lagrangian(MultiplierMap multipliers, double penalty);

  /// Rollout of `u` (plus feedback about `x_nominal` when gains are given)
  /// from the problem's initial state. Throws RolloutDiverged.
  DdpSolution rollout(const MultiPhaseProblem& problem, const std::vector<Vector>& u,
                      const std::vector<Matrix>* gains = nullptr,
                      const std::vector<Vector>* x_nominal = nullptr);

  /// One backward sweep around `nominal`; throws NonPositiveCurvature when
  /// Quu is not positive definite after adding `regularization`.
  BackwardPass backward_sweep(const MultiPhaseProblem& problem, const DdpSolution& nominal,
                              double regularization);

  /// u_k = u*_k + alpha * du_k (+ K_k (x_k - x*_k) if use_feedback).
  DdpSolution forward_sweep(const MultiPhaseProblem& problem, const DdpSolution& nominal,
                            const BackwardPass& pass, double alpha, bool use_feedback);

  /// Maximum absolute equality residual along a solution.
  double max_violation(const MultiPhaseProblem& problem, const DdpSolution& sol) const;

 private:
  double augmented_terms(const MultiPhaseProblem& problem, int phase, const Vector& x_pre,
                         Vector* grad, Matrix* hess) const;
  void finalize_cost(const MultiPhaseProblem& problem, DdpSolution& sol) const;
  void update_multipliers(const MultiPhaseProblem& problem, DdpSolution& sol);

  SolverOptions options_;
  MultiplierMap multipliers_;
  double penalty_ = 0.0;
};

/// Shifts a previous solution by `shift` steps onto a window of `horizon`
/// steps, holding the final entries.
WarmStart shift_solution(const DdpSolution& previous, int shift, int horizon);

}  // namespace hkdmpc::ddp
