#include "ssca/subproblem.hpp"

#include <algorithm>

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace ssca {

void InnerSolverConfig::validate() const {
  if (!(tol > 0.0)) throw std::invalid_argument("inner solver tol must be positive");
  if (max_iters < 1) throw std::invalid_argument("inner solver max_iters must be at least 1");
  if (!(smoothing_mu >= 0.0)) throw std::invalid_argument("smoothing_mu must be non-negative");
  if (!(prox_tau >= 0.0)) throw std::invalid_argument("prox_tau must be non-negative");
}

namespace {

// Smoothed hinge: 0 below zero, v^2 / (2 mu) on (0, mu], v - mu/2 above. mu = 0 is the hinge.
double hinge(double v, double mu) {
  if (v <= 0.0) return 0.0;
  if (v <= mu) return v * v / (2.0 * mu);
  return v - 0.5 * mu;
}

double hinge_slope(double v, double mu) {
  if (v <= 0.0) return 0.0;
  if (v <= mu) return v / mu;
  return 1.0;
}

class PenaltyObjective {
 public:
  PenaltyObjective(const SurrogateState& objective, std::span<const SurrogateState> constraints,
                   double rho, double mu, double tau, Vector center)
      : objective_(objective),
        constraints_(constraints),
        rho_(rho),
        mu_(mu),
        tau_(tau),
        center_(std::move(center)) {}

  // Smoothed value.
  double value(const Vector& x, double mu) const {
    evaluate(x);
    double f = cache_objective_ + prox(x);
    for (double v : cache_constraints_) f += rho_ * hinge(v, mu);
    return f;
  }
  double value(const Vector& x) const { return value(x, mu_); }
  double exact_value(const Vector& x) const { return value(x, 0.0); }

  // Gradient of the smoothed objective (a subgradient when mu = 0, with slope 0 at the kink).
  void gradient(const Vector& x, Vector& g) const {
    evaluate(x);
    g.setZero(x.size());
    objective_.accumulate_gradient(x, 1.0, g);
    if (tau_ > 0.0) g += tau_ * (x - center_);
    for (std::size_t i = 0; i < constraints_.size(); ++i) {
      const double slope = hinge_slope(cache_constraints_[i], mu_);
      if (slope != 0.0) constraints_[i].accumulate_gradient(x, rho_ * slope, g);
    }
  }

  // First-order pieces at x for the exact-hinge SQP step: g0 is the gradient of objective + prox,
  // row i of jac is grad f_bar_i and c_i = f_bar_i(x).
  void first_order(const Vector& x, Vector& g0, Matrix& jac, Vector& c) const {
    evaluate_first_order(x);
    g0 = cache_g0_;
    if (tau_ > 0.0) g0 += tau_ * (x - center_);
    jac = cache_jac_;
    c = Eigen::Map<const Vector>(cache_constraints_.data(),
                                 static_cast<Eigen::Index>(cache_constraints_.size()));
  }

  // exact_value that also fills the derivative cache, for points whose gradient is likely needed.
  double exact_value_first_order(const Vector& x) const {
    evaluate_first_order(x);
    return exact_value(x);
  }

  // Hessian of objective + prox + sum_i lambda_i f_bar_i at x.
  void curvature(const Vector& x, const Vector& lambda, Matrix& b0) const {
    const Eigen::Index n = x.size();
    b0.setZero(n, n);
    objective_.accumulate_hessian(x, 1.0, b0);
    if (tau_ > 0.0) b0.diagonal().array() += tau_;
    for (std::size_t i = 0; i < constraints_.size(); ++i) {
      const double li = lambda[static_cast<Eigen::Index>(i)];
      if (li > 0.0) constraints_[i].accumulate_hessian(x, li, b0);
    }
  }

  double rho() const { return rho_; }

  // One-sided derivatives of the unsmoothed objective for one-dimensional x.
  std::pair<double, double> one_sided_derivatives(const Vector& x) const {
    Vector g = Vector::Zero(1);
    objective_.accumulate_gradient(x, 1.0, g);
    double left = g[0] + tau_ * (x[0] - center_[0]);
    double right = left;
    for (std::size_t i = 0; i < constraints_.size(); ++i) {
      Vector gi = Vector::Zero(1);
      const double v = checked(constraints_[i].accumulate(x, 1.0, gi), i + 1);
      const double d = rho_ * gi[0];
      if (v > 0.0) {
        left += d;
        right += d;
      } else if (v == 0.0) {
        left += std::min(0.0, d);
        right += std::max(0.0, d);
      }
    }
    return {left, right};
  }

  std::size_t constraint_count() const { return constraints_.size(); }

  Vector constraint_values(const Vector& x) const {
    evaluate(x);
    return Eigen::Map<const Vector>(cache_constraints_.data(),
                                    static_cast<Eigen::Index>(cache_constraints_.size()));
  }

  Vector slacks(const Vector& x) const {
    evaluate(x);
    Vector s(static_cast<Eigen::Index>(constraints_.size()));
    for (std::size_t i = 0; i < constraints_.size(); ++i) {
      s[static_cast<Eigen::Index>(i)] = std::max(0.0, cache_constraints_[i]);
    }
    return s;
  }

 private:
  double prox(const Vector& x) const {
    return tau_ > 0.0 ? 0.5 * tau_ * (x - center_).squaredNorm() : 0.0;
  }

  // Caches surrogate values at the last evaluated point; line searches and derivative passes
  // usually hit the same point twice.
  bool cached(const Vector& x) const {
    return cache_valid_ && cache_x_.size() == x.size() && cache_x_ == x;
  }

  void evaluate(const Vector& x) const {
    if (cached(x)) return;
    cache_objective_ = checked(objective_.eval(x), 0);
    cache_constraints_.resize(constraints_.size());
    for (std::size_t i = 0; i < constraints_.size(); ++i) {
      cache_constraints_[i] = checked(constraints_[i].eval(x), i + 1);
    }
    cache_x_ = x;
    cache_valid_ = true;
    cache_has_gradients_ = false;
  }

  // Values and raw surrogate gradients in one pass over the components.
  void evaluate_first_order(const Vector& x) const {
    if (cached(x) && cache_has_gradients_) return;
    const Eigen::Index n = x.size();
    const auto m = static_cast<Eigen::Index>(constraints_.size());
    cache_g0_.setZero(n);
    cache_objective_ = checked(objective_.accumulate(x, 1.0, cache_g0_), 0);
    cache_constraints_.resize(constraints_.size());
    cache_jac_.resize(m, n);
    Vector gi(n);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto k = static_cast<std::size_t>(i);
      gi.setZero();
      cache_constraints_[k] = checked(constraints_[k].accumulate(x, 1.0, gi), k + 1);
      cache_jac_.row(i) = gi.transpose();
    }
    cache_x_ = x;
    cache_valid_ = true;
    cache_has_gradients_ = true;
  }

  static double checked(double v, std::size_t index) {
    if (!std::isfinite(v)) {
      if (index == 0) throw SubproblemError("non-finite value in the objective surrogate", 0);
      throw SubproblemError("non-finite value in constraint surrogate " + std::to_string(index),
                            index);
    }
    return v;
  }

  const SurrogateState& objective_;
  std::span<const SurrogateState> constraints_;
  double rho_;
  double mu_;
  double tau_;
  Vector center_;
  mutable bool cache_valid_ = false;
  mutable Vector cache_x_;
  mutable double cache_objective_ = 0.0;
  mutable std::vector<double> cache_constraints_;
  mutable bool cache_has_gradients_ = false;
  mutable Vector cache_g0_;
  mutable Matrix cache_jac_;
};

double fixed_point_gap(const FeasibleSet& set, const Vector& x, const Vector& g) {
  Vector y = x - g;
  set.project_in_place(y);
  return max_abs(y - x);
}

struct Iterate {
  Vector x;
  int iters = 0;
  double residual = 0.0;
};

Iterate projected_gradient(const PenaltyObjective& f, const FeasibleSet& set, Vector x,
                           const InnerSolverConfig& cfg) {
  constexpr double kMinStep = 1e-14;
  constexpr double kMaxStep = 1e14;
  Vector g(x.size());
  Vector y(x.size());
  Vector gy(x.size());
  double fx = f.value(x);
  f.gradient(x, g);
  double step = 1.0;
  Iterate out;
  for (out.iters = 0; out.iters < cfg.max_iters; ++out.iters) {
    out.residual = fixed_point_gap(set, x, g);
    if (out.residual <= cfg.tol) break;
    bool accepted = false;
    double fy = fx;
    for (int ls = 0; ls < 80; ++ls) {
      y = x - step * g;
      set.project_in_place(y);
      const Vector d = y - x;
      if (max_abs(d) == 0.0) break;
      fy = f.value(y);
      if (fy <= fx + g.dot(d) + d.squaredNorm() / (2.0 * step)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    f.gradient(y, gy);
    const Vector s = y - x;
    const double sy = s.dot(gy - g);
    step = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, kMinStep, kMaxStep)
                    : std::min(2.0 * step, kMaxStep);
    x.swap(y);
    g.swap(gy);
    fx = fy;
  }
  if (out.iters == cfg.max_iters) out.residual = fixed_point_gap(set, x, g);
  out.x = std::move(x);
  return out;
}

// Dense primal-dual interior-point method (Mehrotra predictor-corrector) for
//   min 1/2 z'Qz + q'z  s.t.  A z <= b.
// Small problems only. Returns false if it fails to converge.
bool solve_dense_qp(const Matrix& Q, const Vector& q, const Matrix& A, const Vector& b, Vector& z,
                    Vector& lambda) {
  const Eigen::Index N = Q.rows();
  const Eigen::Index M = A.rows();
  z = Vector::Zero(N);
  Vector sl = (b - A * z).cwiseMax(1.0);
  lambda = Vector::Ones(M);
  const double scale_p = 1.0 + max_abs(b);
  const double scale_d = 1.0 + max_abs(q);
  Vector rd(N), rp(M), rc(M), dz(N), dl(M), ds(M), rhs(N);
  Matrix K(N, N);
  auto max_step = [](const Vector& v, const Vector& dv) {
    double alpha = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
    }
    return alpha;
  };
  for (int it = 0; it < 80; ++it) {
    rd.noalias() = Q * z + q + A.transpose() * lambda;
    rp.noalias() = A * z + sl - b;
    const double mu = sl.dot(lambda) / static_cast<double>(M);
    const double ep = max_abs(rp) / scale_p;
    const double ed = max_abs(rd) / scale_d;
    if (ep <= 1e-11 && ed <= 1e-9 && mu <= 1e-13 * scale_d) return true;
    // The reduced system gets ill-conditioned once mu underflows; accept what we have.
    if (mu <= 1e-20 * scale_d) return ep <= 1e-8 && ed <= 1e-6;
    const Vector d = lambda.cwiseQuotient(sl);
    K.noalias() = Q + A.transpose() * d.asDiagonal() * A;
    K.diagonal().array() += 1e-14 * (1.0 + K.diagonal().cwiseAbs().maxCoeff());
    const Eigen::LDLT<Matrix> ldlt(K);
    auto solve = [&](const Vector& r_c) {
      rhs = -rd - A.transpose() * (d.cwiseProduct(rp) - r_c.cwiseQuotient(sl));
      dz = ldlt.solve(rhs);
      dl = d.cwiseProduct(A * dz + rp) - r_c.cwiseQuotient(sl);
      ds = -(r_c + sl.cwiseProduct(dl)).cwiseQuotient(lambda);
    };
    rc = sl.cwiseProduct(lambda);
    solve(rc);
    const double a_aff = std::min(max_step(sl, ds), max_step(lambda, dl));
    const double mu_aff =
        (sl + a_aff * ds).dot(lambda + a_aff * dl) / static_cast<double>(M);
    const double sigma = std::pow(mu_aff / mu, 3.0);
    rc = sl.cwiseProduct(lambda) + ds.cwiseProduct(dl) - Vector::Constant(M, sigma * mu);
    solve(rc);
    if (!dz.allFinite() || !dl.allFinite()) return false;
    const double alpha = std::min(1.0, 0.995 * std::min(max_step(sl, ds), max_step(lambda, dl)));
    z += alpha * dz;
    lambda += alpha * dl;
    sl += alpha * ds;
    sl = sl.cwiseMax(1e-300);
    lambda = lambda.cwiseMax(1e-300);
  }
  return false;
}

// SQP on the exact hinge for boxes: each step minimizes the quadratic model of the objective
// plus rho * sum max(0, linearized constraint) over the box (an l1 QP with elastic variables),
// followed by Armijo backtracking on the exact penalized value. Multipliers from the QP weight
// the constraint curvature in the next model and pick the subgradient used for the residual.
Iterate sqp_newton(const PenaltyObjective& f, const FeasibleSet& set, Vector x,
                   const InnerSolverConfig& cfg) {
  const Eigen::Index n = x.size();
  const auto m = static_cast<Eigen::Index>(f.constraint_count());
  const double rho = f.rho();
  const Vector& lo = set.lower();
  const Vector& hi = set.upper();

  std::vector<Eigen::Index> free;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (hi[j] > lo[j]) free.push_back(j);
  }
  const auto nf = static_cast<Eigen::Index>(free.size());

  double phi = f.exact_value_first_order(x);
  Vector lambda(m);
  {
    const Vector s0 = f.slacks(x);
    for (Eigen::Index i = 0; i < m; ++i) lambda[i] = s0[i] > 0.0 ? rho : 0.0;
  }
  Vector g0, c, g(n), y(n), z, mult;
  Matrix B, J;
  // Constraints within kink_tol of zero count as sitting on the kink; the QP solves are only
  // accurate to about this level.
  auto kink_tol = [&] { return 1e-8 * (1.0 + std::abs(phi)); };
  // Residual with the subgradient picked by the current multipliers on kinked constraints.
  auto residual_at = [&](const Vector& at) {
    f.first_order(at, g0, J, c);
    const double tol = kink_tol();
    Vector lam_hat(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      lam_hat[i] = c[i] > tol ? rho : (c[i] < -tol ? 0.0 : std::clamp(lambda[i], 0.0, rho));
    }
    g.noalias() = g0 + J.transpose() * lam_hat;
    return fixed_point_gap(set, at, g);
  };
  Iterate out;
  for (out.iters = 0; out.iters < cfg.max_iters; ++out.iters) {
    out.residual = residual_at(x);
    if (out.residual <= cfg.tol || nf == 0) break;
    f.curvature(x, lambda, B);

    // Variables: free coordinates of d, then one elastic t_i per constraint. `cc` are the
    // constraint offsets (c for the plain step, shifted for the second-order correction).
    const Eigen::Index N = nf + m;
    const Eigen::Index M = 2 * m + 2 * nf;
    Matrix Q = Matrix::Zero(N, N);
    Vector q(N);
    Matrix A = Matrix::Zero(M, N);
    Vector b(M);
    for (Eigen::Index a = 0; a < nf; ++a) {
      q[a] = g0[free[a]];
      for (Eigen::Index bb = 0; bb < nf; ++bb) Q(a, bb) = B(free[a], free[bb]);
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      q[nf + i] = rho;
      for (Eigen::Index a = 0; a < nf; ++a) A(i, a) = J(i, free[a]);
      A(i, nf + i) = -1.0;
      A(m + i, nf + i) = -1.0;
      b[m + i] = 0.0;
    }
    for (Eigen::Index a = 0; a < nf; ++a) {
      const Eigen::Index j = free[a];
      A(2 * m + a, a) = 1.0;
      b[2 * m + a] = hi[j] - x[j];
      A(2 * m + nf + a, a) = -1.0;
      b[2 * m + nf + a] = x[j] - lo[j];
    }
    // Keep the model strictly convex in d.
    const double reg = 1e-12 * (1.0 + Q.diagonal().cwiseAbs().maxCoeff());
    Q.topLeftCorner(nf, nf).diagonal().array() += reg;
    auto qp_step = [&](const Vector& cc, Vector& d, Vector& lam) {
      b.head(m) = -cc;
      if (!solve_dense_qp(Q, q, A, b, z, mult)) return false;
      d.setZero(n);
      for (Eigen::Index a = 0; a < nf; ++a) d[free[a]] = z[a];
      lam.resize(m);
      for (Eigen::Index i = 0; i < m; ++i) lam[i] = std::clamp(mult[i], 0.0, rho);
      return true;
    };

    Vector d, lam_new;
    if (!qp_step(c, d, lam_new)) break;
    const Vector cd = c + J * d;
    double pred = -g0.dot(d) - 0.5 * d.dot(B * d);
    for (Eigen::Index i = 0; i < m; ++i) {
      pred += rho * (std::max(0.0, c[i]) - std::max(0.0, cd[i]));
    }
    // Predicted decrease at rounding level: nothing left to gain.
    if (!(pred > 1e-15 * (1.0 + std::abs(phi))) || max_abs(d) == 0.0) break;

    y = x + d;
    set.project_in_place(y);
    double phi_y = f.exact_value_first_order(y);
    bool accepted = phi_y <= phi - 1e-4 * pred;
    if (!accepted && m > 0) {
      // Second-order correction: re-solve with the constraint offsets shifted by the
      // linearization error observed at x + d.
      const Vector soc_c = f.constraint_values(y) - J * d;
      Vector d_soc, lam_soc;
      if (qp_step(soc_c, d_soc, lam_soc)) {
        y = x + d_soc;
        set.project_in_place(y);
        phi_y = f.exact_value(y);
        if (phi_y <= phi - 1e-4 * pred) {
          accepted = true;
          lam_new = lam_soc;
        }
      }
    }
    double step = 1.0;
    for (int ls = 0; ls < 50 && !accepted; ++ls) {
      step *= 0.5;
      y = x + step * d;
      set.project_in_place(y);
      phi_y = f.exact_value(y);
      accepted = phi_y <= phi - 1e-4 * step * pred;
    }
    if (!accepted) break;
    x.swap(y);
    phi = phi_y;
    lambda = lam_new;
  }
  if (out.iters == cfg.max_iters) out.residual = residual_at(x);
  out.x = std::move(x);
  return out;
}

Iterate projected_subgradient(const PenaltyObjective& f, const FeasibleSet& set, Vector x,
                              const InnerSolverConfig& cfg) {
  double radius = 1.0;
  if (set.is_box()) radius = std::max(1e-12, max_abs(set.upper() - set.lower()));
  Vector g(x.size());
  Iterate out;
  Vector best = x;
  double best_value = f.exact_value(x);
  for (out.iters = 0; out.iters < cfg.max_iters; ++out.iters) {
    f.gradient(x, g);
    if (fixed_point_gap(set, x, g) <= cfg.tol) break;
    const double norm = g.norm();
    x -= (radius / std::sqrt(static_cast<double>(out.iters) + 1.0) / norm) * g;
    set.project_in_place(x);
    const double v = f.exact_value(x);
    if (v < best_value) {
      best_value = v;
      best = x;
    }
  }
  f.gradient(best, g);
  out.residual = fixed_point_gap(set, best, g);
  out.x = std::move(best);
  return out;
}

// Exact minimization of a one-dimensional convex function on [lo, hi] by an Illinois-safeguarded
// secant search on one-sided derivatives. The residual is the subgradient fixed-point gap, or the
// final bracket width when the minimizer sits at a kink between two bracket points.
Iterate scalar_search(const PenaltyObjective& f, const FeasibleSet& set,
                      const InnerSolverConfig& cfg) {
  Iterate out;
  Vector x(1);
  auto gap_at = [&](double left, double right, double at) {
    const double g = (left <= 0.0 && right >= 0.0) ? 0.0 : (right < 0.0 ? right : left);
    return std::abs(std::clamp(at - g, set.lower()[0], set.upper()[0]) - at);
  };

  double lo = set.lower()[0];
  double hi = set.upper()[0];
  x[0] = hi;
  auto [hl, hr] = f.one_sided_derivatives(x);
  out.iters = 1;
  if (hl <= 0.0 || lo == hi) {
    out.x = x;
    out.residual = gap_at(hl, hr, hi);
    return out;
  }
  x[0] = lo;
  auto [ll, lr] = f.one_sided_derivatives(x);
  out.iters = 2;
  if (lr >= 0.0) {
    out.x = x;
    out.residual = gap_at(ll, lr, lo);
    return out;
  }
  // Invariant: right derivative at lo < 0 < left derivative at hi.
  double dlo = lr;
  double dhi = hl;
  int side = 0;
  while (out.iters < cfg.max_iters) {
    const double width = hi - lo;
    double t = lo - dlo * width / (dhi - dlo);
    if (!(t > lo + 1e-3 * width && t < hi - 1e-3 * width)) t = lo + 0.5 * width;
    x[0] = t;
    auto [l, r] = f.one_sided_derivatives(x);
    ++out.iters;
    if ((l <= 0.0 && r >= 0.0) || (std::abs(l) <= cfg.tol && std::abs(r) <= cfg.tol)) {
      out.x = x;
      out.residual = gap_at(l, r, t);
      return out;
    }
    if (r < 0.0) {
      lo = t;
      dlo = r;
      if (side == -1) dhi *= 0.5;
      side = -1;
    } else {
      hi = t;
      dhi = l;
      if (side == 1) dlo *= 0.5;
      side = 1;
    }
    if (hi - lo <= cfg.tol) break;
  }
  // Pick the better bracket end by exact value.
  Vector a(1), b(1);
  a[0] = lo;
  b[0] = hi;
  const bool take_lo = f.exact_value(a) <= f.exact_value(b);
  out.x = take_lo ? a : b;
  auto [l, r] = f.one_sided_derivatives(out.x);
  out.residual = std::min(gap_at(l, r, out.x[0]), hi - lo);
  return out;
}

}  // namespace

SubproblemSolution solve_subproblem(const SurrogateState& objective,
                                    std::span<const SurrogateState> constraints, double rho,
                                    const FeasibleSet& set, const Vector& warm,
                                    const InnerSolverConfig& config, const Vector* guess) {
  config.validate();
  if (!(rho > 0.0)) throw std::invalid_argument("penalty rho must be positive");
  if (objective.dimension() != set.dimension()) {
    throw std::invalid_argument("objective surrogate dimension differs from the feasible set");
  }
  for (const SurrogateState& c : constraints) {
    if (c.dimension() != set.dimension()) {
      throw std::invalid_argument("constraint surrogate dimension differs from the feasible set");
    }
  }
  Vector start = set.project(warm);
  const PenaltyObjective f(objective, constraints, rho, config.smoothing_mu, config.prox_tau, start);

  const bool scalar = config.step_rule != StepRule::kDiminishing && set.dimension() == 1 &&
                      set.is_box();
  Vector init = start;
  if (!scalar && guess != nullptr && static_cast<std::size_t>(guess->size()) == set.dimension()) {
    init = set.project(*guess);
  }

  Iterate it;
  if (config.step_rule == StepRule::kDiminishing) {
    it = projected_subgradient(f, set, init, config);
  } else if (scalar) {
    it = scalar_search(f, set, config);
  } else if (config.step_rule == StepRule::kNewton && set.is_box()) {
    it = sqp_newton(f, set, init, config);
  } else {
    // Smoothing continuation: a tiny mu alone makes the gradient steps crawl along the kinks.
    it.x = init;
    double mu = std::max(config.smoothing_mu, 1e-2);
    while (true) {
      const PenaltyObjective fm(objective, constraints, rho, mu, config.prox_tau, start);
      InnerSolverConfig stage = config;
      stage.max_iters = config.max_iters - it.iters;
      const int spent = it.iters;
      it = projected_gradient(fm, set, std::move(it.x), stage);
      it.iters += spent;
      if (mu <= config.smoothing_mu || it.iters >= config.max_iters) break;
      mu = std::max(config.smoothing_mu, 0.1 * mu);
    }
  }

  // Never return something worse than the warm start.
  set.project_in_place(it.x);
  double value = f.exact_value(it.x);
  if (init.size() != start.size() || init != start || it.x != start) {
    const double start_value = f.exact_value(start);
    if (start_value < value) {
      it.x = start;
      value = start_value;
    }
  }

  SubproblemSolution sol;
  sol.x_bar = std::move(it.x);
  sol.s = f.slacks(sol.x_bar);
  sol.residual = it.residual;
  sol.inner_iters = it.iters;
  sol.objective = value;
  return sol;
}

SubproblemSolution solve_block_subproblem(std::size_t k, const SurrogateState& objective,
                                          std::span<const SurrogateState> constraints, double rho,
                                          const FeasibleSet& set, const Vector& warm,
                                          const InnerSolverConfig& config, const Vector* guess) {
  try {
    return solve_subproblem(objective, constraints, rho, set, warm, config, guess);
  } catch (const SubproblemError& e) {
    throw SubproblemError("block " + std::to_string(k) + ": " + e.what(), e.index());
  }
}

Vector recover_slacks(std::span<const SurrogateState> constraints, const Vector& x) {
  Vector s(static_cast<Eigen::Index>(constraints.size()));
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    s[static_cast<Eigen::Index>(i)] = std::max(0.0, constraints[i].eval(x));
  }
  return s;
}

}  // namespace ssca
