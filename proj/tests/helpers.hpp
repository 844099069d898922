#pragma once

#include <cmath>
#include <algorithm>
#include <functional>
#include <memory>
#include <vector>

#include "ssca/driver.hpp"
#include "ssca/problem.hpp"
#include "ssca/surrogate.hpp"

namespace testing {

using ssca::ComponentPtr;
using ssca::Matrix;
using ssca::Vector;

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Central differences with h = 1e-5 (1 + |x_i|).
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-5 * (1.0 + std::abs(x[i]));
    Vector a = x, b = x;
    a[i] += h;
    b[i] -= h;
    g[i] = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

// sum_i c_i (x_i - a_i)^2 + l.x + off
inline ComponentPtr quad(const Vector& c, const Vector& a, const Vector& l, double off = 0.0) {
  return std::make_shared<ssca::QuadraticComponent>(c, a, l, off);
}
inline ComponentPtr quad1(double c, double a, double l = 0.0, double off = 0.0) {
  return quad(vec({c}), vec({a}), vec({l}), off);
}
inline ComponentPtr constant(std::size_t n, double v) {
  return quad(Vector::Zero(static_cast<Eigen::Index>(n)), Vector::Zero(static_cast<Eigen::Index>(n)),
              Vector::Zero(static_cast<Eigen::Index>(n)), v);
}

// Deterministic problem on a box whose per-sample functions and surrogates are fixed quadratics
// (the surrogates are the functions themselves).
struct QuadSpec {
  Vector c, a, l;
  double off = 0.0;
  double value(const Vector& x) const {
    return (c.array() * (x - a).array().square()).sum() + l.dot(x) + off;
  }
  Vector grad(const Vector& x) const {
    return (2.0 * c.array() * (x - a).array() + l.array()).matrix();
  }
};

inline ssca::StochasticProblem deterministic_problem(const QuadSpec& obj,
                                                     const std::vector<QuadSpec>& cons,
                                                     const Vector& lo, const Vector& hi) {
  ssca::StochasticProblem p;
  p.dimension = static_cast<std::size_t>(lo.size());
  p.feasible_set = ssca::FeasibleSet::box(lo, hi);
  p.sampler = [](ssca::Rng&) { return ssca::Sample{}; };
  p.objective = {[obj](const Vector& x, const ssca::Sample&) { return obj.value(x); },
                 [obj](const Vector& x, const ssca::Sample&) { return obj.grad(x); }};
  p.objective_surrogate = [obj](const Vector&, const ssca::Sample&) {
    return quad(obj.c, obj.a, obj.l, obj.off);
  };
  for (const auto& q : cons) {
    p.constraints.push_back({[q](const Vector& x, const ssca::Sample&) { return q.value(x); },
                             [q](const Vector& x, const ssca::Sample&) { return q.grad(x); }});
    p.constraint_surrogates.push_back(
        [q](const Vector&, const ssca::Sample&) { return quad(q.c, q.a, q.l, q.off); });
  }
  return p;
}

// The x^2 objective with the constraint 1 - x <= 0 on [0, 10].
inline ssca::StochasticProblem square_with_floor() {
  return deterministic_problem({vec({1}), vec({0}), vec({0})}, {{vec({0}), vec({0}), vec({-1}), 1.0}},
                               vec({0}), vec({10}));
}

// State holding one component with weight 1.
inline ssca::SurrogateState single(ComponentPtr c) {
  return ssca::SurrogateState(c->dimension()).updated(std::move(c), 1.0);
}

// Dense grid over a box followed by zoomed grids around the incumbent. Exact enough for convex
// objectives whose minimizer is not at a grid-hostile kink; the result is an upper bound on the
// true minimum in every case.
inline double grid_minimum(const std::function<double(const Vector&)>& f, const Vector& lo, const Vector& hi) {
  const auto n = lo.size();
  Vector a = lo, b = hi;
  Vector best = 0.5 * (lo + hi);
  double best_v = f(best);
  const int pts = n == 1 ? 2001 : (n == 2 ? 161 : 41);
  for (int round = 0; round < 12; ++round) {
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    Vector x(n);
    while (true) {
      for (Eigen::Index j = 0; j < n; ++j) x[j] = a[j] + (b[j] - a[j]) * idx[static_cast<std::size_t>(j)] / (pts - 1);
      const double v = f(x);
      if (v < best_v) {
        best_v = v;
        best = x;
      }
      Eigen::Index j = 0;
      while (j < n && ++idx[static_cast<std::size_t>(j)] == pts) idx[static_cast<std::size_t>(j++)] = 0;
      if (j == n) break;
    }
    // Shrink around the incumbent, staying in the box.
    for (Eigen::Index j = 0; j < n; ++j) {
      const double half = 4.0 * (b[j] - a[j]) / (pts - 1);
      a[j] = std::max(lo[j], best[j] - half);
      b[j] = std::min(hi[j], best[j] + half);
    }
  }
  return best_v;
}

}  // namespace testing
