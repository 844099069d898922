#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "ssca/feasible_set.hpp"
#include "ssca/surrogate.hpp"
#include "ssca/types.hpp"

namespace ssca {

enum class StepRule { kDiminishing, kBacktracking, kNewton };

/// Settings of the inner convex solver.
///
/// kNewton (boxes only; other sets fall back to kBacktracking) runs SQP on the exact hinge: each
/// step solves a small l1 QP built from the objective Hessian and the linearized constraints,
/// then backtracks on the penalized value with a second-order correction. kBacktracking runs
/// projected gradient with Barzilai-Borwein steps and Armijo backtracking on the hinge smoothed
/// by smoothing_mu (quadratic on (0, mu]). kDiminishing runs plain projected subgradient with
/// 1/sqrt(j) steps and best-iterate tracking. One-dimensional boxes under kNewton or
/// kBacktracking are solved exactly by a safeguarded secant search on one-sided derivatives.
/// prox_tau > 0 adds tau/2 ||x - warm||^2.
struct InnerSolverConfig {
  int max_iters = 2000;
  double tol = 1e-7;
  double smoothing_mu = 1e-6;
  StepRule step_rule = StepRule::kNewton;
  double prox_tau = 0.0;

  void validate() const;
};

struct SubproblemSolution {
  Vector x_bar;
  /// s_i = max(0, f_bar_i(x_bar)).
  Vector s;
  /// Projected-gradient fixed-point gap ||P(x - g) - x||_inf at x_bar.
  double residual = 0.0;
  int inner_iters = 0;
  /// f_bar_0(x_bar) + rho * sum s_i + prox term.
  double objective = 0.0;
};

/// Raised when a surrogate evaluates to a non-finite value. index is 0 for the objective and
/// i >= 1 for constraint i.
class SubproblemError : public std::runtime_error {
 public:
  SubproblemError(const std::string& what, std::size_t index)
      : std::runtime_error(what), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

/// min_{x in set} f_bar_0(x) + rho * sum_i max(0, f_bar_i(x)), warm-started at `warm`.
/// `guess`, when given, is where the inner iterations start (e.g. the previous solution); the
/// prox center and the monotone safeguard still refer to `warm`.
SubproblemSolution solve_subproblem(const SurrogateState& objective,
                                    std::span<const SurrogateState> constraints, double rho,
                                    const FeasibleSet& set, const Vector& warm,
                                    const InnerSolverConfig& config,
                                    const Vector* guess = nullptr);

/// Same contract restricted to block k; errors carry the block index in their message.
SubproblemSolution solve_block_subproblem(std::size_t k, const SurrogateState& objective,
                                          std::span<const SurrogateState> constraints, double rho,
                                          const FeasibleSet& set, const Vector& warm,
                                          const InnerSolverConfig& config,
                                          const Vector* guess = nullptr);

/// s_i = max(0, f_bar_i(x)).
Vector recover_slacks(std::span<const SurrogateState> constraints, const Vector& x);

}  // namespace ssca
