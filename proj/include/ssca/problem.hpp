#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "ssca/feasible_set.hpp"
#include "ssca/rng.hpp"
#include "ssca/types.hpp"

namespace ssca {

/// One realization of the random vector xi, flattened.
struct Sample {
  std::uint64_t id = 0;
  std::vector<double> values;
};

/// A convex function of x built from one sample around one anchor point: the per-sample
/// approximation that the surrogate recursion averages.
class ConvexComponent {
 public:
  ConvexComponent(Vector anchor, std::uint64_t sample_id)
      : anchor_(std::move(anchor)), sample_id_(sample_id) {}
  virtual ~ConvexComponent() = default;

  virtual std::size_t dimension() const = 0;
  virtual double value(const Vector& x) const = 0;
  /// Returns the value at x and adds weight * gradient to `grad`.
  virtual double accumulate(const Vector& x, double weight, Vector& grad) const = 0;
  /// Adds weight * gradient to `grad` without computing the value.
  virtual void accumulate_gradient(const Vector& x, double weight, Vector& grad) const {
    accumulate(x, weight, grad);
  }
  /// Adds weight * Hessian to `hess`. The default differentiates the gradient numerically.
  virtual void accumulate_hessian(const Vector& x, double weight, Matrix& hess) const;
  /// Gradient and Hessian in one pass.
  virtual void accumulate_second_order(const Vector& x, double weight, Vector& grad,
                                       Matrix& hess) const {
    accumulate_gradient(x, weight, grad);
    accumulate_hessian(x, weight, hess);
  }

  Vector gradient(const Vector& x) const;

  const Vector& anchor() const { return anchor_; }
  std::uint64_t sample_id() const { return sample_id_; }

 private:
  Vector anchor_;
  std::uint64_t sample_id_;
};

using ComponentPtr = std::shared_ptr<const ConvexComponent>;

/// sum_i curvature_i * (x_i - center_i)^2 + linear.x + offset, with curvature_i >= 0.
class QuadraticComponent final : public ConvexComponent {
 public:
  QuadraticComponent(Vector curvature, Vector center, Vector linear, double offset,
                     Vector anchor = {}, std::uint64_t sample_id = 0);

  std::size_t dimension() const override { return static_cast<std::size_t>(center_.size()); }
  double value(const Vector& x) const override;
  double accumulate(const Vector& x, double weight, Vector& grad) const override;
  void accumulate_hessian(const Vector& x, double weight, Matrix& hess) const override;

 private:
  Vector curvature_;
  Vector center_;
  Vector linear_;
  double offset_;
};

/// Convex component given by closures; used for ad hoc surrogates and tests.
class FunctionComponent final : public ConvexComponent {
 public:
  using ValueFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&)>;

  FunctionComponent(std::size_t dimension, ValueFn value, GradientFn gradient, Vector anchor = {},
                    std::uint64_t sample_id = 0);

  std::size_t dimension() const override { return dimension_; }
  double value(const Vector& x) const override { return value_(x); }
  double accumulate(const Vector& x, double weight, Vector& grad) const override;

 private:
  std::size_t dimension_;
  ValueFn value_;
  GradientFn gradient_;
};

/// Restricts a component defined on block coordinates [begin, begin + size) to the full vector.
class BlockEmbeddedComponent final : public ConvexComponent {
 public:
  BlockEmbeddedComponent(ComponentPtr inner, std::size_t full_dimension, std::size_t begin);

  std::size_t dimension() const override { return full_dimension_; }
  double value(const Vector& x) const override;
  double accumulate(const Vector& x, double weight, Vector& grad) const override;
  void accumulate_hessian(const Vector& x, double weight, Matrix& hess) const override;

 private:
  ComponentPtr inner_;
  std::size_t full_dimension_;
  std::size_t begin_;
};

/// Per-sample function g_i(x, xi) with its gradient in x.
struct StochasticFunction {
  std::function<double(const Vector&, const Sample&)> value;
  std::function<Vector(const Vector&, const Sample&)> gradient;
};

/// Builds the convex approximation g_hat_i(., anchor, xi).
using SurrogateBuilder = std::function<ComponentPtr(const Vector& anchor, const Sample&)>;
using Sampler = std::function<Sample(Rng&)>;

struct IndexRange {
  std::size_t begin = 0;
  std::size_t size = 0;
};

/// Partition of x into K contiguous blocks and the number of constraints owned by each block.
/// Constraints are numbered block by block: block 0 owns the first constraint_counts[0] indices.
struct BlockStructure {
  std::vector<IndexRange> ranges;
  std::vector<std::size_t> constraint_counts;

  std::size_t block_count() const { return ranges.size(); }
  /// Throws std::invalid_argument unless the ranges are ordered, disjoint and cover 0..n-1.
  void validate(std::size_t dimension, std::size_t constraint_count) const;
  /// First constraint index owned by block k.
  std::size_t first_constraint(std::size_t k) const;

  static BlockStructure singletons(std::size_t n, std::size_t constraints_per_block);
  static BlockStructure whole(std::size_t n, std::size_t constraint_count);
};

std::vector<Vector> split_blocks(const Vector& x, const BlockStructure& blocks);

/// min E[g_0(x, xi)] s.t. E[g_i(x, xi)] <= 0, x in X.
///
/// Without block structure, every surrogate builder produces components over the full x. With
/// block structure, constraint builder i produces components over the coordinates of the block
/// that owns constraint i, and block_objective_surrogates[k] produces the block-k objective
/// surrogate over block k's coordinates (other coordinates pinned at the anchor).
struct StochasticProblem {
  std::size_t dimension = 0;
  FeasibleSet feasible_set;
  Sampler sampler;
  StochasticFunction objective;
  std::vector<StochasticFunction> constraints;
  SurrogateBuilder objective_surrogate;
  std::vector<SurrogateBuilder> constraint_surrogates;
  std::optional<BlockStructure> blocks;
  std::vector<SurrogateBuilder> block_objective_surrogates;
  std::optional<Vector> initial_point;

  std::size_t constraint_count() const { return constraints.size(); }
  /// Throws std::invalid_argument describing the first inconsistency found.
  void validate() const;
  /// initial_point if set, else the projection of the origin.
  Vector default_initial_point() const;
  /// Constraint surrogate i expressed over the full vector, embedding block components if needed.
  ComponentPtr full_constraint_component(std::size_t i, const Vector& anchor,
                                         const Sample& sample) const;
};

struct PenaltyConfig {
  double rho = 0.5;
  double rho_growth = 1.0;

  void validate() const;
};

/// f_0(x) + rho * sum_i s_i subject to f_i(x) <= s_i, s_i >= 0. Slacks are never stored; for a
/// given x the optimal slack is max(0, f_i(x)).
class PenalizedProblem {
 public:
  PenalizedProblem(const StochasticProblem& problem, PenaltyConfig config);

  const StochasticProblem& problem() const { return *problem_; }
  double rho() const { return config_.rho; }
  std::size_t slack_count() const { return problem_->constraint_count(); }

  /// f0 + rho * sum(slacks).
  double objective(double f0, std::span<const double> slacks) const;
  /// f0 + rho * sum max(0, f_i): the objective with slacks eliminated.
  double hinge_objective(double f0, std::span<const double> constraint_values) const;
  /// Per-sample penalized objective g_0(x, xi) + rho * sum max(0, g_i(x, xi)).
  double sample_objective(const Vector& x, const Sample& sample) const;

 private:
  const StochasticProblem* problem_;
  PenaltyConfig config_;
};

/// Throws std::invalid_argument if rho <= 0 or rho_growth < 1.
PenalizedProblem penalize(const StochasticProblem& problem, const PenaltyConfig& config);

}  // namespace ssca
