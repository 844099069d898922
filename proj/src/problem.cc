#include "ssca/problem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ssca {

Vector ConvexComponent::gradient(const Vector& x) const {
  Vector grad = Vector::Zero(x.size());
  accumulate_gradient(x, 1.0, grad);
  return grad;
}

void ConvexComponent::accumulate_hessian(const Vector& x, double weight, Matrix& hess) const {
  const Eigen::Index n = x.size();
  Vector probe = x;
  Vector plus(n), minus(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = 1e-6 * (1.0 + std::abs(x[i]));
    plus.setZero();
    minus.setZero();
    probe[i] = x[i] + h;
    accumulate_gradient(probe, 1.0, plus);
    probe[i] = x[i] - h;
    accumulate_gradient(probe, 1.0, minus);
    probe[i] = x[i];
    hess.col(i) += weight * (plus - minus) / (2.0 * h);
  }
}

QuadraticComponent::QuadraticComponent(Vector curvature, Vector center, Vector linear, double offset,
                                       Vector anchor, std::uint64_t sample_id)
    : ConvexComponent(std::move(anchor), sample_id),
      curvature_(std::move(curvature)),
      center_(std::move(center)),
      linear_(std::move(linear)),
      offset_(offset) {
  if (curvature_.size() != center_.size() || linear_.size() != center_.size()) {
    throw std::invalid_argument("quadratic component: inconsistent dimensions");
  }
  if ((curvature_.array() < 0.0).any()) {
    throw std::invalid_argument("quadratic component: negative curvature is not convex");
  }
}

double QuadraticComponent::value(const Vector& x) const {
  return (curvature_.array() * (x - center_).array().square()).sum() + linear_.dot(x) + offset_;
}

double QuadraticComponent::accumulate(const Vector& x, double weight, Vector& grad) const {
  const Vector d = x - center_;
  grad.array() += weight * (2.0 * curvature_.array() * d.array() + linear_.array());
  return (curvature_.array() * d.array().square()).sum() + linear_.dot(x) + offset_;
}

void QuadraticComponent::accumulate_hessian(const Vector&, double weight, Matrix& hess) const {
  hess.diagonal() += 2.0 * weight * curvature_;
}

FunctionComponent::FunctionComponent(std::size_t dimension, ValueFn value, GradientFn gradient,
                                     Vector anchor, std::uint64_t sample_id)
    : ConvexComponent(std::move(anchor), sample_id),
      dimension_(dimension),
      value_(std::move(value)),
      gradient_(std::move(gradient)) {}

double FunctionComponent::accumulate(const Vector& x, double weight, Vector& grad) const {
  grad += weight * gradient_(x);
  return value_(x);
}

BlockEmbeddedComponent::BlockEmbeddedComponent(ComponentPtr inner, std::size_t full_dimension,
                                               std::size_t begin)
    : ConvexComponent(inner->anchor(), inner->sample_id()),
      inner_(std::move(inner)),
      full_dimension_(full_dimension),
      begin_(begin) {
  if (begin_ + inner_->dimension() > full_dimension_) {
    throw std::invalid_argument("embedded block component exceeds the full dimension");
  }
}

double BlockEmbeddedComponent::value(const Vector& x) const {
  return inner_->value(x.segment(static_cast<Eigen::Index>(begin_),
                                 static_cast<Eigen::Index>(inner_->dimension())));
}

double BlockEmbeddedComponent::accumulate(const Vector& x, double weight, Vector& grad) const {
  const auto b = static_cast<Eigen::Index>(begin_);
  const auto n = static_cast<Eigen::Index>(inner_->dimension());
  Vector local_grad = Vector::Zero(n);
  const double v = inner_->accumulate(x.segment(b, n), weight, local_grad);
  grad.segment(b, n) += local_grad;
  return v;
}

void BlockEmbeddedComponent::accumulate_hessian(const Vector& x, double weight, Matrix& hess) const {
  const auto b = static_cast<Eigen::Index>(begin_);
  const auto n = static_cast<Eigen::Index>(inner_->dimension());
  Matrix local = Matrix::Zero(n, n);
  inner_->accumulate_hessian(x.segment(b, n), weight, local);
  hess.block(b, b, n, n) += local;
}

void BlockStructure::validate(std::size_t dimension, std::size_t constraint_count) const {
  if (ranges.empty()) throw std::invalid_argument("block structure has no blocks");
  if (constraint_counts.size() != ranges.size()) {
    throw std::invalid_argument("block structure: one constraint count per block required");
  }
  std::size_t next = 0;
  for (std::size_t k = 0; k < ranges.size(); ++k) {
    if (ranges[k].begin != next || ranges[k].size == 0) {
      throw std::invalid_argument("block " + std::to_string(k) +
                                  " is not contiguous with its predecessor or is empty");
    }
    next += ranges[k].size;
  }
  if (next != dimension) {
    throw std::invalid_argument("blocks cover " + std::to_string(next) + " of " +
                                std::to_string(dimension) + " coordinates");
  }
  std::size_t total = 0;
  for (std::size_t c : constraint_counts) total += c;
  if (total != constraint_count) {
    throw std::invalid_argument("per-block constraint counts do not sum to the constraint count");
  }
}

std::size_t BlockStructure::first_constraint(std::size_t k) const {
  std::size_t first = 0;
  for (std::size_t j = 0; j < k; ++j) first += constraint_counts.at(j);
  return first;
}

BlockStructure BlockStructure::singletons(std::size_t n, std::size_t constraints_per_block) {
  BlockStructure bs;
  for (std::size_t k = 0; k < n; ++k) {
    bs.ranges.push_back({k, 1});
    bs.constraint_counts.push_back(constraints_per_block);
  }
  return bs;
}

BlockStructure BlockStructure::whole(std::size_t n, std::size_t constraint_count) {
  return BlockStructure{{{0, n}}, {constraint_count}};
}

std::vector<Vector> split_blocks(const Vector& x, const BlockStructure& blocks) {
  std::size_t covered = 0;
  for (std::size_t k = 0; k < blocks.ranges.size(); ++k) {
    if (blocks.ranges[k].begin != covered) {
      throw std::invalid_argument("block ranges are not contiguous at block " + std::to_string(k));
    }
    covered += blocks.ranges[k].size;
  }
  if (covered != static_cast<std::size_t>(x.size())) {
    throw std::invalid_argument("block ranges cover " + std::to_string(covered) +
                                " coordinates but x has " + std::to_string(x.size()));
  }
  std::vector<Vector> out;
  out.reserve(blocks.ranges.size());
  for (const IndexRange& r : blocks.ranges) {
    out.emplace_back(x.segment(static_cast<Eigen::Index>(r.begin), static_cast<Eigen::Index>(r.size)));
  }
  return out;
}

void StochasticProblem::validate() const {
  if (dimension == 0) throw std::invalid_argument("problem dimension must be positive");
  if (feasible_set.dimension() != dimension) {
    throw std::invalid_argument("feasible set dimension differs from problem dimension");
  }
  if (!sampler) throw std::invalid_argument("problem has no sampler");
  if (!objective.value) throw std::invalid_argument("problem has no objective function");
  if (!objective_surrogate && block_objective_surrogates.empty()) {
    throw std::invalid_argument("problem has no objective surrogate builder");
  }
  if (constraint_surrogates.size() != constraints.size()) {
    throw std::invalid_argument("one surrogate builder per constraint is required");
  }
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    if (!constraints[i].value || !constraint_surrogates[i]) {
      throw std::invalid_argument("constraint " + std::to_string(i + 1) + " is incomplete");
    }
  }
  if (blocks) {
    blocks->validate(dimension, constraints.size());
    if (!block_objective_surrogates.empty() &&
        block_objective_surrogates.size() != blocks->block_count()) {
      throw std::invalid_argument("one block objective surrogate per block is required");
    }
  }
  if (initial_point && !feasible_set.contains(*initial_point, 1e-12)) {
    throw std::invalid_argument("initial point lies outside the feasible set");
  }
}

Vector StochasticProblem::default_initial_point() const {
  if (initial_point) return *initial_point;
  return feasible_set.project(Vector::Zero(static_cast<Eigen::Index>(dimension)));
}

ComponentPtr StochasticProblem::full_constraint_component(std::size_t i, const Vector& anchor,
                                                          const Sample& sample) const {
  if (!blocks) return constraint_surrogates.at(i)(anchor, sample);
  std::size_t owner = 0;
  std::size_t first = 0;
  while (i >= first + blocks->constraint_counts.at(owner)) {
    first += blocks->constraint_counts[owner];
    ++owner;
  }
  const IndexRange& r = blocks->ranges[owner];
  if (r.size == dimension) return constraint_surrogates[i](anchor, sample);
  return std::make_shared<BlockEmbeddedComponent>(constraint_surrogates[i](anchor, sample),
                                                  dimension, r.begin);
}

void PenaltyConfig::validate() const {
  if (!(rho > 0.0)) throw std::invalid_argument("penalty rho must be positive");
  if (!(rho_growth >= 1.0)) throw std::invalid_argument("penalty rho_growth must be at least 1");
}

PenalizedProblem::PenalizedProblem(const StochasticProblem& problem, PenaltyConfig config)
    : problem_(&problem), config_(config) {
  config_.validate();
}

double PenalizedProblem::objective(double f0, std::span<const double> slacks) const {
  double sum = 0.0;
  for (double s : slacks) sum += s;
  return f0 + config_.rho * sum;
}

double PenalizedProblem::hinge_objective(double f0, std::span<const double> constraint_values) const {
  double sum = 0.0;
  for (double v : constraint_values) sum += std::max(0.0, v);
  return f0 + config_.rho * sum;
}

double PenalizedProblem::sample_objective(const Vector& x, const Sample& sample) const {
  std::vector<double> values;
  values.reserve(problem_->constraints.size());
  for (const StochasticFunction& g : problem_->constraints) values.push_back(g.value(x, sample));
  return hinge_objective(problem_->objective.value(x, sample), values);
}

PenalizedProblem penalize(const StochasticProblem& problem, const PenaltyConfig& config) {
  return PenalizedProblem(problem, config);
}

}  // namespace ssca
