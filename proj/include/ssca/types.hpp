#pragma once

#include <Eigen/Core>

namespace ssca {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Infinity norm that is zero for empty vectors.
inline double max_abs(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace ssca
