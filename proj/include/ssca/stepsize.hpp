#pragma once

#include <cstdint>

namespace ssca {

/// Power-law stepsize scale * (t + offset)^(-exponent).
///
/// For exponent in (0.5, 1] the sequence is positive, tends to zero, is not summable and is
/// square summable. A gamma schedule with a larger exponent than the omega schedule also gives
/// gamma_t / omega_t -> 0.
struct StepsizeSchedule {
  double exponent = 0.6;
  double scale = 1.0;
  std::int64_t offset = 0;

  static StepsizeSchedule default_omega() { return {0.6, 1.0, 0}; }
  static StepsizeSchedule default_gamma() { return {0.9, 1.0, 0}; }

  /// True when the power law meets the diminishing-stepsize conditions.
  bool satisfies_conditions() const;
  void validate() const;
};

/// Throws std::invalid_argument for t < 1.
double schedule_value(const StepsizeSchedule& s, std::int64_t t);

}  // namespace ssca
