#include "ssca/surrogate.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ssca {

namespace {
constexpr double kRescaleBelow = 1e-200;
}

SurrogateState::SurrogateState(std::size_t dimension, double prune_threshold,
                               std::size_t max_components)
    : dimension_(dimension), prune_threshold_(prune_threshold), max_components_(max_components) {
  if (prune_threshold < 0.0) throw std::invalid_argument("prune threshold must be non-negative");
  if (max_components == 0) throw std::invalid_argument("max_components must be positive");
}

SurrogateState SurrogateState::updated(ComponentPtr component, double omega) const& {
  SurrogateState next = *this;
  return std::move(next).updated(std::move(component), omega);
}

SurrogateState SurrogateState::updated(ComponentPtr component, double omega) && {
  const ComponentPtr batch[1] = {std::move(component)};
  step(batch, omega);
  return std::move(*this);
}

SurrogateState SurrogateState::updated(std::span<const ComponentPtr> batch, double omega) && {
  step(batch, omega);
  return std::move(*this);
}

void SurrogateState::step(std::span<const ComponentPtr> batch, double omega) {
  if (!(omega > 0.0 && omega <= 1.0)) {
    throw std::invalid_argument("surrogate update: omega must lie in (0, 1], got " +
                                std::to_string(omega));
  }
  if (batch.empty()) throw std::invalid_argument("surrogate update: empty batch");
  for (const ComponentPtr& c : batch) {
    if (!c || c->dimension() != dimension_) {
      throw std::invalid_argument("surrogate update: component dimension mismatch");
    }
  }
  if (omega == 1.0) {
    entries_.clear();
    scale_ = 1.0;
  } else {
    scale_ *= 1.0 - omega;
    if (scale_ < kRescaleBelow) {
      for (Entry& e : entries_) e.raw_weight *= scale_;
      scale_ = 1.0;
    }
  }
  const double each = omega / static_cast<double>(batch.size());
  for (const ComponentPtr& c : batch) entries_.push_back({each / scale_, c});
  ++iteration_;
  prune_in_place();
}

SurrogateState SurrogateState::pruned() const& {
  SurrogateState next = *this;
  next.prune_in_place();
  return next;
}

SurrogateState SurrogateState::pruned() && {
  prune_in_place();
  return std::move(*this);
}

void SurrogateState::prune_in_place() {
  double removed = 0.0;
  if (prune_threshold_ > 0.0) {
    const double raw_threshold = prune_threshold_ / scale_;
    std::erase_if(entries_, [&](const Entry& e) {
      if (e.raw_weight < raw_threshold) {
        removed += scale_ * e.raw_weight;
        return true;
      }
      return false;
    });
  }
  if (entries_.size() > max_components_) {
    // Drop the lightest entries; ties go to the older entry. Order of survivors is kept.
    std::vector<std::size_t> order(entries_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t excess = entries_.size() - max_components_;
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(excess - 1),
                     order.end(), [&](std::size_t a, std::size_t b) {
                       if (entries_[a].raw_weight != entries_[b].raw_weight) {
                         return entries_[a].raw_weight < entries_[b].raw_weight;
                       }
                       return a < b;
                     });
    std::vector<char> drop(entries_.size(), 0);
    for (std::size_t i = 0; i < excess; ++i) drop[order[i]] = 1;
    std::size_t j = 0;
    std::erase_if(entries_, [&](const Entry& e) {
      const bool d = drop[j++] != 0;
      if (d) removed += scale_ * e.raw_weight;
      return d;
    });
  }
  last_pruned_mass_ = removed;
  total_pruned_mass_ += removed;
}

double SurrogateState::eval(const Vector& x) const {
  double sum = 0.0;
  for (const Entry& e : entries_) sum += e.raw_weight * e.component->value(x);
  return scale_ * sum;
}

Vector SurrogateState::grad(const Vector& x) const {
  Vector g = Vector::Zero(static_cast<Eigen::Index>(dimension_));
  accumulate_gradient(x, 1.0, g);
  return g;
}

double SurrogateState::accumulate(const Vector& x, double scale, Vector& grad) const {
  double sum = 0.0;
  const double s = scale * scale_;
  for (const Entry& e : entries_) sum += e.raw_weight * e.component->accumulate(x, s * e.raw_weight, grad);
  return scale_ * sum;
}

void SurrogateState::accumulate_gradient(const Vector& x, double scale, Vector& grad) const {
  const double s = scale * scale_;
  for (const Entry& e : entries_) e.component->accumulate_gradient(x, s * e.raw_weight, grad);
}

void SurrogateState::accumulate_hessian(const Vector& x, double scale, Matrix& hess) const {
  const double s = scale * scale_;
  for (const Entry& e : entries_) e.component->accumulate_hessian(x, s * e.raw_weight, hess);
}

void SurrogateState::accumulate_second_order(const Vector& x, double scale, Vector& grad,
                                             Matrix& hess) const {
  const double s = scale * scale_;
  for (const Entry& e : entries_) e.component->accumulate_second_order(x, s * e.raw_weight, grad, hess);
}

double SurrogateState::weight_sum() const {
  double sum = 0.0;
  for (const Entry& e : entries_) sum += e.raw_weight;
  return scale_ * sum;
}

SurrogateState surrogate_update(const SurrogateState& state, ComponentPtr component, double omega) {
  return state.updated(std::move(component), omega);
}

double surrogate_eval(const SurrogateState& state, const Vector& x) { return state.eval(x); }

Vector surrogate_grad(const SurrogateState& state, const Vector& x) { return state.grad(x); }

SurrogateState prune(const SurrogateState& state) { return state.pruned(); }

}  // namespace ssca
