#pragma once

#include <cstddef>
#include <functional>

#include "ssca/rng.hpp"
#include "ssca/types.hpp"

namespace ssca {

/// Compact convex set X with a Euclidean projection. Boxes are built in; any other set is
/// represented by a user-supplied projection operator.
class FeasibleSet {
 public:
  using Projector = std::function<Vector(const Vector&)>;

  /// Box [lower, upper]. Throws std::invalid_argument unless lower <= upper componentwise.
  static FeasibleSet box(Vector lower, Vector upper);
  static FeasibleSet generic(std::size_t dimension, Projector projector);

  bool is_box() const { return !projector_; }
  std::size_t dimension() const { return dimension_; }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }

  /// Throws std::invalid_argument on dimension mismatch.
  Vector project(const Vector& y) const;
  /// In-place clamp for boxes; generic sets fall back to project().
  void project_in_place(Vector& y) const;
  bool contains(const Vector& x, double tol = 0.0) const;

  /// Coordinates [begin, begin + size) of a box, as a box of its own.
  FeasibleSet slice(std::size_t begin, std::size_t size) const;

  /// Uniform point for boxes; projected standard normal draw otherwise.
  Vector random_point(Rng& rng) const;

 private:
  std::size_t dimension_ = 0;
  Vector lower_;
  Vector upper_;
  Projector projector_;
};

}  // namespace ssca
