#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "ssca/problem.hpp"
#include "ssca/stepsize.hpp"
#include "ssca/subproblem.hpp"
#include "ssca/surrogate.hpp"
#include "ssca/types.hpp"

namespace ssca {

struct RunConfig {
  long max_outer_iters = 5000;
  /// Stop once max(step gap, windowed mean slack sum) <= stop_residual.
  double stop_residual = 1e-4;
  /// When false the run always executes max_outer_iters iterations (reference runs).
  bool stop_early = true;
  long slack_window = 50;
  StepsizeSchedule gamma = StepsizeSchedule::default_gamma();
  StepsizeSchedule omega = StepsizeSchedule::default_omega();
  PenaltyConfig penalty;
  InnerSolverConfig inner;
  std::uint64_t seed = 1;
  int restarts = 1;
  double slack_zero_tol = 1e-6;
  int minibatch = 1;
  double prune_threshold = SurrogateState::kDefaultPruneThreshold;
  std::size_t max_components = SurrogateState::kDefaultMaxComponents;
  /// Worker threads for the per-block solves of the parallel algorithm.
  int block_threads = 1;
  /// Store x in every trace row.
  bool record_iterates = true;
  /// Fill elapsed_s from the wall clock; when false elapsed_s is 0 and traces are bitwise
  /// reproducible.
  bool record_time = true;

  void validate() const;
};

struct TraceRow {
  long t = 0;
  Vector x;
  /// Running omega-weighted average of g_0(x^{t-1}, xi^t).
  double objective = 0.0;
  double slack_sum = 0.0;
  /// ||x_bar^t - x^{t-1}||_inf.
  double step_gap = 0.0;
  double residual = 0.0;
  double elapsed = 0.0;
  /// Inner iterations spent on this iteration's subproblem(s).
  long inner_iters = 0;
};

struct IterateTrace {
  std::vector<TraceRow> rows;
};

using TraceSink = std::function<void(const TraceRow&)>;

/// Surrogates at termination: one objective state per block (a single one for the plain
/// algorithm) and the constraint states owned by each block.
struct SurrogateSnapshot {
  std::vector<SurrogateState> objective;
  std::vector<std::vector<SurrogateState>> constraints;
};

struct RunResult {
  Vector x_star;
  Vector s_star;
  bool converged = false;
  /// converged and ||s_star||_1 <= slack_zero_tol.
  bool stationary_for_original = false;
  long iterations = 0;
  int attempts = 1;
  double rho = 0.0;
  IterateTrace trace;
  SurrogateSnapshot surrogates;

  double slack_sum() const { return s_star.sum(); }
  double final_objective() const { return trace.rows.empty() ? 0.0 : trace.rows.back().objective; }
};

enum class Algorithm { kSsca, kParallelSsca };

/// x = (1 - gamma) x_prev + gamma x_bar. Throws std::invalid_argument unless gamma in (0, 1].
Vector average_iterate(const Vector& x_prev, const Vector& x_bar, double gamma);

/// Sequential algorithm on the full vector. The initial point defaults to
/// problem.default_initial_point().
RunResult run_ssca(const StochasticProblem& problem, const RunConfig& config,
                   const TraceSink& sink = {}, std::optional<Vector> x0 = std::nullopt);

/// Block algorithm: K block subproblems per iteration against one snapshot, then averaging.
/// Throws std::invalid_argument if the problem has no block structure.
RunResult run_parallel_ssca(const StochasticProblem& problem, const RunConfig& config,
                            const TraceSink& sink = {}, std::optional<Vector> x0 = std::nullopt);

/// Repeats runs from uniform random starting points, growing rho after each attempt whose slack
/// is not zero, until a run is stationary for the original problem or config.restarts attempts
/// are spent. Returns the best attempt by (slack sum, objective).
RunResult multi_restart(const StochasticProblem& problem, const RunConfig& config,
                        Algorithm algorithm = Algorithm::kSsca);

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Monte Carlo mean of g_0(x, xi) over n_samples fresh draws.
Estimate objective_estimate(const StochasticProblem& problem, const Vector& x, long n_samples,
                            std::uint64_t seed);

/// Re-solves the final subproblem with frozen surrogates, warm-started at x_star; returns x_bar.
Vector resolve_at_solution(const StochasticProblem& problem, const RunResult& result,
                           const RunConfig& config);

}  // namespace ssca
