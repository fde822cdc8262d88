#pragma once

#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "hkdmpc/hsddp_solver.hpp"

namespace hkdmpc::testing {

using ddp::Matrix;
using ddp::Vector;

/// Central-difference Jacobian of f at x.
inline Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x,
                          double h = 1e-6) {
  const Vector f0 = f(x);
  Matrix jac(f0.size(), x.size());
  Vector xp = x, xm = x;
  for (int i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    jac.col(i) = (f(xp) - f(xm)) / (2.0 * h);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return jac;
}

/// Central-difference gradient of a scalar function.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                          double h = 1e-6) {
  Vector g(x.size());
  Vector xp = x, xm = x;
  for (int i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return g;
}

/// Frobenius-norm relative error of `value` against `reference`.
inline double rel_err(const Matrix& value, const Matrix& reference) {
  const double denom = reference.norm();
  const double diff = (value - reference).norm();
  return denom > 1e-12 ? diff / denom : diff;
}

inline Matrix random_spd(int n, std::mt19937_64& rng, double floor = 0.1) {
  std::normal_distribution<double> nd;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = nd(rng);
  return a * a.transpose() / n + floor * Matrix::Identity(n, n);
}

inline Matrix random_matrix(int r, int c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix a(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) a(i, j) = nd(rng);
  return a;
}

inline Vector random_vector(int n, std::mt19937_64& rng, double scale = 1.0) {
  return random_matrix(n, 1, rng, scale);
}

/// Time-varying linear dynamics with quadratic cost
///   l_k = 1/2 x'Qx + 1/2 u'Ru + x'S'u + q'x + r'u,  l_N = 1/2 x'Qf x + qf'x
/// and optional phase boundaries with linear resets x+ = M_i x-.
class LqProblem final : public ddp::MultiPhaseProblem {
 public:
  int nx = 0, nu = 0, n = 0;
  std::vector<Matrix> a, b;
  Matrix q, r, s, qf;
  Vector qv, rv, qfv;
  Vector x0;
  std::vector<ddp::PhaseSpan> spans;
  std::vector<Matrix> resets;  // one per boundary

  static LqProblem random(int nx, int nu, int n, std::mt19937_64& rng) {
    LqProblem p;
    p.nx = nx;
    p.nu = nu;
    p.n = n;
    for (int k = 0; k < n; ++k) {
      // Near-identity, mildly unstable dynamics keep the value function well scaled.
      p.a.push_back(Matrix::Identity(nx, nx) + random_matrix(nx, nx, rng, 0.05));
      p.b.push_back(random_matrix(nx, nu, rng, 0.3));
    }
    p.q = random_spd(nx, rng);
    p.r = random_spd(nu, rng, 0.5);
    p.s = random_matrix(nu, nx, rng, 0.02);
    p.qf = random_spd(nx, rng);
    p.qv = random_vector(nx, rng, 0.1);
    p.rv = random_vector(nu, rng, 0.1);
    p.qfv = random_vector(nx, rng, 0.1);
    p.x0 = random_vector(nx, rng);
    p.spans = {{0, n}};
    return p;
  }

  int state_dim() const override { return nx; }
  int control_dim() const override { return nu; }
  int horizon() const override { return n; }
  const std::vector<ddp::PhaseSpan>& phases() const override { return spans; }
  Vector initial_state() const override { return x0; }

  Vector step(int k, const Vector& x, const Vector& u) const override {
    return a[k] * x + b[k] * u;
  }
  void linearize(int k, const Vector&, const Vector&, Matrix& ak, Matrix& bk) const override {
    ak = a[k];
    bk = b[k];
  }
  double running_cost(int, const Vector& x, const Vector& u,
                      ddp::StageDerivatives* d) const override {
    if (d) {
      d->lx = q * x + s.transpose() * u + qv;
      d->lu = r * u + s * x + rv;
      d->lxx = q;
      d->luu = r;
      d->lux = s;
    }
    return 0.5 * x.dot(q * x) + 0.5 * u.dot(r * u) + u.dot(s * x) + qv.dot(x) + rv.dot(u);
  }
  double terminal_cost(const Vector& x, Vector* lx, Matrix* lxx) const override {
    if (lx) *lx += qf * x + qfv;
    if (lxx) *lxx += qf;
    return 0.5 * x.dot(qf * x) + qfv.dot(x);
  }
  Vector reset(int phase, const Vector& x) const override { return resets[phase] * x; }
  Matrix reset_jacobian(int phase, const Vector&) const override { return resets[phase]; }
  Vector initial_control(int) const override { return Vector::Zero(nu); }
};

/// Discrete Riccati recursion for LqProblem (resets included).
struct RiccatiSolution {
  std::vector<Matrix> gains;       // u = K x + k
  std::vector<Vector> feedforward;
  std::vector<Vector> x;
  std::vector<Vector> u;
  double cost = 0.0;
  Matrix p0;
  Vector p0v;
};

inline RiccatiSolution riccati(const LqProblem& p) {
  RiccatiSolution out;
  out.gains.resize(p.n);
  out.feedforward.resize(p.n);
  Matrix pm = p.qf;
  Vector pv = p.qfv;
  double c = 0.0;
  for (int i = static_cast<int>(p.spans.size()) - 1; i >= 0; --i) {
    for (int k = p.spans[i].end - 1; k >= p.spans[i].start; --k) {
      const Matrix& a = p.a[k];
      const Matrix& b = p.b[k];
      const Matrix quu = p.r + b.transpose() * pm * b;
      const Matrix qux = p.s + b.transpose() * pm * a;
      const Matrix qxx = p.q + a.transpose() * pm * a;
      const Vector qu = p.rv + b.transpose() * pv;
      const Vector qx = p.qv + a.transpose() * pv;
      const Eigen::LLT<Matrix> llt(quu);
      const Matrix kk = -llt.solve(qux);
      const Vector kf = -llt.solve(qu);
      out.gains[k] = kk;
      out.feedforward[k] = kf;
      c += 0.5 * kf.dot(quu * kf) + kf.dot(qu);
      pv = qx + kk.transpose() * quu * kf + kk.transpose() * qu + qux.transpose() * kf;
      pm = qxx + kk.transpose() * quu * kk + kk.transpose() * qux + qux.transpose() * kk;
      pm = 0.5 * (pm + pm.transpose());
    }
    if (i > 0) {
      const Matrix& m = p.resets[i - 1];
      pm = m.transpose() * pm * m;
      pv = m.transpose() * pv;
    }
  }
  out.p0 = pm;
  out.p0v = pv;
  out.cost = 0.5 * p.x0.dot(pm * p.x0) + pv.dot(p.x0) + c;

  out.x.resize(p.n + 1);
  out.u.resize(p.n);
  Vector x = p.x0;
  for (std::size_t i = 0; i < p.spans.size(); ++i) {
    for (int k = p.spans[i].start; k < p.spans[i].end; ++k) {
      out.x[k] = x;
      out.u[k] = out.gains[k] * x + out.feedforward[k];
      x = p.a[k] * x + p.b[k] * out.u[k];
    }
    if (i + 1 < p.spans.size()) x = p.resets[i] * x;
  }
  out.x[p.n] = x;
  return out;
}

/// Double integrator with effort cost and an equality on the final state.
class DoubleIntegrator final : public ddp::MultiPhaseProblem {
 public:
  double dt = 0.1;
  int n = 30;
  double effort = 1.0;
  double state_weight = 0.1;
  Vector x0 = Vector::Zero(2);
  Vector target = Vector::Zero(2);
  std::vector<ddp::PhaseSpan> spans;

  DoubleIntegrator() : spans{{0, 30}} {}
  DoubleIntegrator(int steps, double step, Vector start, Vector goal)
      : dt(step), n(steps), x0(std::move(start)), target(std::move(goal)), spans{{0, steps}} {}

  Matrix a() const {
    Matrix m(2, 2);
    m << 1.0, dt, 0.0, 1.0;
    return m;
  }
  Matrix b() const {
    Matrix m(2, 1);
    m << 0.5 * dt * dt, dt;
    return m;
  }

  int state_dim() const override { return 2; }
  int control_dim() const override { return 1; }
  int horizon() const override { return n; }
  const std::vector<ddp::PhaseSpan>& phases() const override { return spans; }
  Vector initial_state() const override { return x0; }
  Vector step(int, const Vector& x, const Vector& u) const override { return a() * x + b() * u; }
  void linearize(int, const Vector&, const Vector&, Matrix& ak, Matrix& bk) const override {
    ak = a();
    bk = b();
  }
  double running_cost(int, const Vector& x, const Vector& u,
                      ddp::StageDerivatives* d) const override {
    if (d) {
      d->lx = state_weight * x;
      d->lu = effort * u;
      d->lxx = state_weight * Matrix::Identity(2, 2);
      d->luu = effort * Matrix::Identity(1, 1);
    }
    return 0.5 * state_weight * x.squaredNorm() + 0.5 * effort * u.squaredNorm();
  }
  double terminal_cost(const Vector& x, Vector* lx, Matrix* lxx) const override {
    if (lx) *lx += state_weight * x;
    if (lxx) *lxx += state_weight * Matrix::Identity(2, 2);
    return 0.5 * state_weight * x.squaredNorm();
  }
  int num_equalities(int) const override { return 2; }
  void equalities(int, const Vector& x, Vector& g, Matrix* jac) const override {
    g = x - target;
    if (jac) *jac = Matrix::Identity(2, 2);
  }
  ddp::ConstraintKey equality_key(int, int c) const override { return {n, c}; }
  Vector initial_control(int) const override { return Vector::Zero(1); }

  /// Exact minimizer from the KKT system of the condensed QP.
  struct Kkt {
    Vector u;
    std::vector<Vector> x;
    Vector multiplier;
  };
  Kkt kkt() const {
    const Matrix am = a(), bm = b();
    // x_k = Phi_k x0 + G_k z
    std::vector<Matrix> phi(n + 1), g(n + 1);
    phi[0] = Matrix::Identity(2, 2);
    g[0] = Matrix::Zero(2, n);
    for (int k = 0; k < n; ++k) {
      phi[k + 1] = am * phi[k];
      g[k + 1] = am * g[k];
      g[k + 1].col(k) += bm;
    }
    Matrix h = effort * Matrix::Identity(n, n);
    Vector f = Vector::Zero(n);
    for (int k = 1; k <= n; ++k) {
      h += state_weight * g[k].transpose() * g[k];
      f += state_weight * g[k].transpose() * phi[k] * x0;
    }
    Matrix kkt = Matrix::Zero(n + 2, n + 2);
    kkt.topLeftCorner(n, n) = h;
    kkt.topRightCorner(n, 2) = g[n].transpose();
    kkt.bottomLeftCorner(2, n) = g[n];
    Vector rhs(n + 2);
    rhs.head(n) = -f;
    rhs.tail(2) = target - phi[n] * x0;
    const Vector sol = kkt.fullPivLu().solve(rhs);
    Kkt out;
    out.u = sol.head(n);
    out.multiplier = sol.tail(2);
    out.x.resize(n + 1);
    for (int k = 0; k <= n; ++k) out.x[k] = phi[k] * x0 + g[k] * out.u;
    return out;
  }
};

}  // namespace hkdmpc::testing
