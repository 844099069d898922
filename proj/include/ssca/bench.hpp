#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "ssca/driver.hpp"
#include "ssca/wireless.hpp"

namespace ssca::bench {

enum class ProblemKind { kProblem7, kProblem8, kCustomToy };

/// Noisy separable quadratic used to exercise the campaign machinery without the wireless model:
/// g_0(x, xi) = sum_i (x_i - target_i - noise * xi_i)^2 with xi_i ~ Uniform[-1, 1], x in
/// [lower, upper]^n, and optionally sum_i x_i <= sum_max.
struct ToyConfig {
  std::size_t dimension = 2;
  std::vector<double> target = {1.0, 2.0};
  double noise = 0.0;
  double lower = 0.0;
  double upper = 10.0;
  std::optional<double> sum_max;

  void validate() const;
};

struct ExperimentConfig {
  ProblemKind problem = ProblemKind::kProblem7;
  wireless::NetworkModel model = wireless::NetworkModel::reference_five_pair();
  ToyConfig toy;
  RunConfig run;
  int paths = 1;
  long reference_iters = 20000;
  double report_threshold = 0.02;
  /// Monte Carlo draws for the constraint margins and sum rate at x*.
  long margin_samples = 100000;
  /// Write x_1..x_n columns into the per-path traces.
  bool write_iterates = true;
  /// Paths solved concurrently; 0 means one per hardware thread. Results do not depend on it.
  int path_threads = 1;

  void validate() const;
};

/// Parse or validation failure. For parse errors line/column are 1-based; field names the
/// offending key path for validation errors.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, std::string field = {})
      : std::runtime_error(what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

const char* to_string(ProblemKind kind);

/// Parses a JSON config; unknown keys anywhere are errors. `origin` prefixes error messages.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "config");
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

StochasticProblem build_problem(const ExperimentConfig& cfg);
Algorithm algorithm_for(ProblemKind kind);

struct PathSummary {
  int index = 0;
  std::uint64_t seed = 0;
  /// Length of the measured run.
  long iterations = 0;
  bool converged = false;
  bool stationary = false;
  /// First t of the measured trace from which ||x^s - p*||_1 / ||p*||_1 <= threshold holds for
  /// every later s of that trace, p* being the reference run's final iterate; empty when the
  /// last measured iterate is still outside.
  std::optional<long> iters_to_threshold;
  double slack_l1 = 0.0;
  /// Per constraint: MC rate (lower bound for problem8) minus requirement at x*. Empty for the toy.
  std::vector<double> margins;
  std::vector<double> margin_std_errors;
  double sum_rate = 0.0;
  double sum_rate_std_error = 0.0;
  double elapsed_s = 0.0;
  double seconds_per_iteration = 0.0;
  Vector x_star;
  Vector reference;
};

struct CampaignSummary {
  std::vector<PathSummary> paths;
  long reference_iters = 0;
  double threshold = 0.0;
  int reached = 0;
  /// Over paths that reached the threshold; NaN when none did.
  double median_iters_to_threshold = 0.0;
  double mean_iters_to_threshold = 0.0;
  double mean_iterations = 0.0;
  double fraction_slack_zero = 0.0;
  /// Wall clock of the campaign so far (reference runs included); 0 when timing is off.
  double total_elapsed_s = 0.0;
};

/// First index t (1-based trace row) such that every later row up to the end of `trace` is within
/// `threshold` relative l1 error of `reference`. Returns trace.size() + 1 if even the last row
/// is outside.
long settle_iteration(const std::vector<TraceRow>& trace, const Vector& reference, double threshold);

using ProgressFn = std::function<void(const PathSummary&)>;

/// Runs every path: a reference run of reference_iters iterations without early stopping, then
/// the measured run with the configured stopping rule, both on the same per-path seed. Writes
/// path_XXX.csv (measured trace), summary.csv and summary.json into out_dir when it is non-empty.
CampaignSummary run_campaign(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                             const ProgressFn& progress = {});

/// Reads path_*.csv from in_dir (and per-path references from summary.json when present,
/// otherwise each trace's last iterate) and writes t,median,q1,q3,min,max of the relative error.
/// Throws std::runtime_error if no traces are found.
void emit_plot_data(const std::filesystem::path& in_dir, const std::filesystem::path& out_file);

/// Trace CSV header for an n-dimensional run.
std::string trace_header(std::size_t n, bool with_iterates);

}  // namespace ssca::bench
