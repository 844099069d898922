#include "ssca/stepsize.hpp"

#include <cmath>
#include <stdexcept>

namespace ssca {

bool StepsizeSchedule::satisfies_conditions() const {
  return exponent > 0.5 && exponent <= 1.0 && scale > 0.0 && offset >= 0;
}

void StepsizeSchedule::validate() const {
  if (!(scale > 0.0)) throw std::invalid_argument("stepsize scale must be positive");
  if (!(exponent > 0.0)) throw std::invalid_argument("stepsize exponent must be positive");
  if (offset < 0) throw std::invalid_argument("stepsize offset must be non-negative");
}

double schedule_value(const StepsizeSchedule& s, std::int64_t t) {
  if (t < 1) throw std::invalid_argument("stepsize index must be at least 1");
  return s.scale * std::pow(static_cast<double>(t + s.offset), -s.exponent);
}

}  // namespace ssca
