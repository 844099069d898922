#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "ssca/problem.hpp"
#include "ssca/types.hpp"

namespace ssca {

/// Recursively averaged surrogate
///   f_bar^t(x) = (1 - omega_t) f_bar^{t-1}(x) + omega_t g_hat(x, x^{t-1}, xi^t),  f_bar^0 = 0,
/// stored as a weighted list of convex components. Components whose weight falls below
/// prune_threshold are dropped; beyond max_components the lightest ones are dropped. Surviving
/// weights are never renormalized.
class SurrogateState {
 public:
  static constexpr double kDefaultPruneThreshold = 1e-8;
  static constexpr std::size_t kDefaultMaxComponents = 10000;

  explicit SurrogateState(std::size_t dimension, double prune_threshold = kDefaultPruneThreshold,
                          std::size_t max_components = kDefaultMaxComponents);

  /// One recursion step with a single component. Throws std::invalid_argument unless
  /// omega in (0, 1] and the component has the state's dimension.
  SurrogateState updated(ComponentPtr component, double omega) const&;
  SurrogateState updated(ComponentPtr component, double omega) &&;
  /// One recursion step whose new term is the mean of a minibatch of components.
  SurrogateState updated(std::span<const ComponentPtr> batch, double omega) &&;

  SurrogateState pruned() const&;
  SurrogateState pruned() &&;

  double eval(const Vector& x) const;
  Vector grad(const Vector& x) const;
  /// Returns the value and adds scale * gradient to `grad`.
  double accumulate(const Vector& x, double scale, Vector& grad) const;
  void accumulate_gradient(const Vector& x, double scale, Vector& grad) const;
  void accumulate_hessian(const Vector& x, double scale, Matrix& hess) const;
  void accumulate_second_order(const Vector& x, double scale, Vector& grad, Matrix& hess) const;

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  long iteration() const { return iteration_; }
  double weight(std::size_t j) const { return scale_ * entries_[j].raw_weight; }
  const ConvexComponent& component(std::size_t j) const { return *entries_[j].component; }
  double weight_sum() const;
  /// Mass dropped by the most recent prune.
  double last_pruned_mass() const { return last_pruned_mass_; }
  double total_pruned_mass() const { return total_pruned_mass_; }
  double prune_threshold() const { return prune_threshold_; }
  std::size_t max_components() const { return max_components_; }

 private:
  struct Entry {
    double raw_weight;
    ComponentPtr component;
  };

  void step(std::span<const ComponentPtr> batch, double omega);
  void prune_in_place();

  std::size_t dimension_;
  double prune_threshold_;
  std::size_t max_components_;
  long iteration_ = 0;
  // Actual weight of entry j is scale_ * raw_weight; scaling all weights by (1 - omega) is O(1).
  double scale_ = 1.0;
  std::vector<Entry> entries_;
  double last_pruned_mass_ = 0.0;
  double total_pruned_mass_ = 0.0;
};

SurrogateState surrogate_update(const SurrogateState& state, ComponentPtr component, double omega);
double surrogate_eval(const SurrogateState& state, const Vector& x);
Vector surrogate_grad(const SurrogateState& state, const Vector& x);
SurrogateState prune(const SurrogateState& state);

}  // namespace ssca
