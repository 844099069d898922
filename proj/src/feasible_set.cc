#include "ssca/feasible_set.hpp"

#include <stdexcept>
#include <string>

namespace ssca {

FeasibleSet FeasibleSet::box(Vector lower, Vector upper) {
  if (lower.size() != upper.size()) {
    throw std::invalid_argument("box bounds have different dimensions");
  }
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(lower[i] <= upper[i])) {
      throw std::invalid_argument("box lower bound exceeds upper bound at coordinate " +
                                  std::to_string(i));
    }
  }
  FeasibleSet set;
  set.dimension_ = static_cast<std::size_t>(lower.size());
  set.lower_ = std::move(lower);
  set.upper_ = std::move(upper);
  return set;
}

FeasibleSet FeasibleSet::generic(std::size_t dimension, Projector projector) {
  if (!projector) throw std::invalid_argument("generic feasible set needs a projector");
  FeasibleSet set;
  set.dimension_ = dimension;
  set.projector_ = std::move(projector);
  return set;
}

Vector FeasibleSet::project(const Vector& y) const {
  Vector out = y;
  project_in_place(out);
  return out;
}

void FeasibleSet::project_in_place(Vector& y) const {
  if (static_cast<std::size_t>(y.size()) != dimension_) {
    throw std::invalid_argument("projection: expected dimension " + std::to_string(dimension_) +
                                ", got " + std::to_string(y.size()));
  }
  if (projector_) {
    y = projector_(y);
    return;
  }
  y = y.cwiseMax(lower_).cwiseMin(upper_);
}

bool FeasibleSet::contains(const Vector& x, double tol) const {
  if (static_cast<std::size_t>(x.size()) != dimension_) return false;
  if (projector_) return max_abs(projector_(x) - x) <= tol;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] < lower_[i] - tol || x[i] > upper_[i] + tol) return false;
  }
  return true;
}

FeasibleSet FeasibleSet::slice(std::size_t begin, std::size_t size) const {
  if (projector_) throw std::logic_error("only box sets can be sliced into blocks");
  if (begin + size > dimension_) throw std::out_of_range("block slice exceeds set dimension");
  const auto b = static_cast<Eigen::Index>(begin);
  const auto n = static_cast<Eigen::Index>(size);
  return box(lower_.segment(b, n), upper_.segment(b, n));
}

Vector FeasibleSet::random_point(Rng& rng) const {
  Vector x(static_cast<Eigen::Index>(dimension_));
  if (projector_) {
    std::normal_distribution<double> normal;
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = normal(rng);
    return projector_(x);
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    x[i] = lower_[i] + (upper_[i] - lower_[i]) * uniform01(rng);
  }
  return x;
}

}  // namespace ssca
