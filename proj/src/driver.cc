#include "ssca/driver.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <string>
#include <thread>

namespace ssca {

void RunConfig::validate() const {
  if (max_outer_iters < 1) throw std::invalid_argument("max_outer_iters must be at least 1");
  if (!(stop_residual > 0.0)) throw std::invalid_argument("stop_residual must be positive");
  if (slack_window < 1) throw std::invalid_argument("slack_window must be at least 1");
  if (restarts < 1) throw std::invalid_argument("restarts must be at least 1");
  if (!(slack_zero_tol >= 0.0)) throw std::invalid_argument("slack_zero_tol must be non-negative");
  if (minibatch < 1) throw std::invalid_argument("minibatch must be at least 1");
  if (block_threads < 1) throw std::invalid_argument("block_threads must be at least 1");
  gamma.validate();
  omega.validate();
  penalty.validate();
  inner.validate();
}

Vector average_iterate(const Vector& x_prev, const Vector& x_bar, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("averaging stepsize must lie in (0, 1], got " + std::to_string(gamma));
  }
  if (x_prev.size() != x_bar.size()) throw std::invalid_argument("averaging: dimension mismatch");
  if (gamma == 1.0) return x_bar;
  // Clamped to the segment so rounding never leaves a box that contains both endpoints.
  const Vector x = x_prev + gamma * (x_bar - x_prev);
  return x.cwiseMax(x_prev.cwiseMin(x_bar)).cwiseMin(x_prev.cwiseMax(x_bar));
}

namespace {

using Clock = std::chrono::steady_clock;

std::vector<Sample> draw_samples(const StochasticProblem& problem, const RunConfig& cfg, long t) {
  Rng rng(derive_seed(cfg.seed, kIterationStream, static_cast<std::uint64_t>(t)));
  std::vector<Sample> batch;
  batch.reserve(static_cast<std::size_t>(cfg.minibatch));
  for (int b = 0; b < cfg.minibatch; ++b) {
    Sample s = problem.sampler(rng);
    s.id = static_cast<std::uint64_t>(t) * static_cast<std::uint64_t>(cfg.minibatch) +
           static_cast<std::uint64_t>(b);
    batch.push_back(std::move(s));
  }
  return batch;
}

SurrogateState fresh_state(std::size_t dimension, const RunConfig& cfg) {
  return SurrogateState(dimension, cfg.prune_threshold, cfg.max_components);
}

SurrogateState update_with(SurrogateState state, const std::vector<Sample>& batch, double omega,
                           const std::function<ComponentPtr(const Sample&)>& build) {
  std::vector<ComponentPtr> comps;
  comps.reserve(batch.size());
  for (const Sample& s : batch) comps.push_back(build(s));
  return std::move(state).updated(std::span<const ComponentPtr>(comps), omega);
}

struct StepOutcome {
  Vector x_bar;
  Vector s;
  long inner_iters = 0;
};

// Shared outer loop. `step` updates the surrogates with the batch at anchor x^{t-1} and returns
// the subproblem solution.
template <typename StepFn, typename SlackFn>
RunResult outer_loop(const StochasticProblem& problem, const RunConfig& cfg, const TraceSink& sink,
                     Vector x, StepFn&& step, SlackFn&& final_slacks) {
  const auto start = Clock::now();
  RunResult result;
  result.rho = cfg.penalty.rho;
  std::deque<double> window;
  double window_sum = 0.0;
  double tracked_objective = 0.0;
  if (cfg.stop_early) result.trace.rows.reserve(1024);
  else result.trace.rows.reserve(static_cast<std::size_t>(cfg.max_outer_iters));

  for (long t = 1; t <= cfg.max_outer_iters; ++t) {
    const double omega = schedule_value(cfg.omega, t);
    const double gamma = schedule_value(cfg.gamma, t);
    if (omega > 1.0 || gamma > 1.0) {
      throw std::invalid_argument("stepsize exceeds 1 at iteration " + std::to_string(t));
    }
    const std::vector<Sample> batch = draw_samples(problem, cfg, t);

    double sampled = 0.0;
    for (const Sample& s : batch) sampled += problem.objective.value(x, s);
    sampled /= static_cast<double>(batch.size());
    tracked_objective = (1.0 - omega) * tracked_objective + omega * sampled;

    StepOutcome out;
    try {
      out = step(x, batch, omega);
    } catch (const SubproblemError& e) {
      throw SubproblemError("iteration " + std::to_string(t) + ": " + e.what(), e.index());
    }

    TraceRow row;
    row.t = t;
    row.inner_iters = out.inner_iters;
    row.step_gap = max_abs(out.x_bar - x);
    x = average_iterate(x, out.x_bar, gamma);
    row.objective = tracked_objective;
    row.slack_sum = out.s.sum();
    window.push_back(row.slack_sum);
    window_sum += row.slack_sum;
    if (static_cast<long>(window.size()) > cfg.slack_window) {
      window_sum -= window.front();
      window.pop_front();
    }
    const double mean_slack = std::max(0.0, window_sum / static_cast<double>(window.size()));
    row.residual = std::max(row.step_gap, mean_slack);
    if (cfg.record_iterates) row.x = x;
    if (cfg.record_time) row.elapsed = std::chrono::duration<double>(Clock::now() - start).count();
    if (sink) sink(row);
    result.iterations = t;
    const bool done = cfg.stop_early && t >= cfg.slack_window && row.residual <= cfg.stop_residual;
    result.trace.rows.push_back(std::move(row));
    if (done) {
      result.converged = true;
      break;
    }
  }
  result.x_star = x;
  result.s_star = final_slacks(x);
  result.stationary_for_original =
      result.converged && result.s_star.cwiseAbs().sum() <= cfg.slack_zero_tol;
  return result;
}

Vector initial_point(const StochasticProblem& problem, const std::optional<Vector>& x0) {
  Vector x = x0 ? *x0 : problem.default_initial_point();
  if (static_cast<std::size_t>(x.size()) != problem.dimension) {
    throw std::invalid_argument("initial point has the wrong dimension");
  }
  return problem.feasible_set.project(x);
}

template <typename Fn>
void for_each_block(std::size_t count, int threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t k = w; k < count; k += workers) fn(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& th : pool) th.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

RunResult run_ssca(const StochasticProblem& problem, const RunConfig& config, const TraceSink& sink,
                   std::optional<Vector> x0) {
  config.validate();
  problem.validate();
  if (!problem.objective_surrogate) {
    throw std::invalid_argument("run_ssca needs a full-vector objective surrogate builder");
  }
  const std::size_t n = problem.dimension;
  const std::size_t m = problem.constraint_count();
  SurrogateState objective = fresh_state(n, config);
  std::vector<SurrogateState> constraints(m, fresh_state(n, config));
  Vector last_bar;

  auto step = [&](const Vector& anchor, const std::vector<Sample>& batch, double omega) {
    objective = update_with(std::move(objective), batch, omega, [&](const Sample& s) {
      return problem.objective_surrogate(anchor, s);
    });
    for (std::size_t i = 0; i < m; ++i) {
      constraints[i] = update_with(std::move(constraints[i]), batch, omega, [&](const Sample& s) {
        return problem.full_constraint_component(i, anchor, s);
      });
    }
    SubproblemSolution sol =
        solve_subproblem(objective, constraints, config.penalty.rho, problem.feasible_set, anchor,
                         config.inner, last_bar.size() > 0 ? &last_bar : nullptr);
    last_bar = sol.x_bar;
    return StepOutcome{std::move(sol.x_bar), std::move(sol.s), sol.inner_iters};
  };
  auto slacks = [&](const Vector& x) { return recover_slacks(constraints, x); };

  RunResult result = outer_loop(problem, config, sink, initial_point(problem, x0), step, slacks);
  result.surrogates.objective.push_back(std::move(objective));
  result.surrogates.constraints.push_back(std::move(constraints));
  return result;
}

RunResult run_parallel_ssca(const StochasticProblem& problem, const RunConfig& config,
                            const TraceSink& sink, std::optional<Vector> x0) {
  config.validate();
  problem.validate();
  if (!problem.blocks) throw std::invalid_argument("run_parallel_ssca needs a block structure");
  const BlockStructure& blocks = *problem.blocks;
  const std::size_t K = blocks.block_count();
  if (problem.block_objective_surrogates.empty() &&
      !(K == 1 && problem.objective_surrogate)) {
    throw std::invalid_argument("run_parallel_ssca needs per-block objective surrogate builders");
  }
  auto objective_builder = [&](std::size_t k) -> const SurrogateBuilder& {
    return problem.block_objective_surrogates.empty() ? problem.objective_surrogate
                                                      : problem.block_objective_surrogates[k];
  };

  std::vector<SurrogateState> objective;
  std::vector<std::vector<SurrogateState>> constraints(K);
  std::vector<FeasibleSet> sets;
  std::vector<Vector> last_bar(K);
  for (std::size_t k = 0; k < K; ++k) {
    objective.push_back(fresh_state(blocks.ranges[k].size, config));
    constraints[k].assign(blocks.constraint_counts[k], fresh_state(blocks.ranges[k].size, config));
    sets.push_back(problem.feasible_set.slice(blocks.ranges[k].begin, blocks.ranges[k].size));
  }

  auto segment = [&](const Vector& x, std::size_t k) -> Vector {
    return x.segment(static_cast<Eigen::Index>(blocks.ranges[k].begin),
                     static_cast<Eigen::Index>(blocks.ranges[k].size));
  };

  auto step = [&](const Vector& anchor, const std::vector<Sample>& batch, double omega) {
    std::vector<SubproblemSolution> solutions(K);
    for_each_block(K, config.block_threads, [&](std::size_t k) {
      objective[k] = update_with(std::move(objective[k]), batch, omega, [&](const Sample& s) {
        return objective_builder(k)(anchor, s);
      });
      const std::size_t first = blocks.first_constraint(k);
      for (std::size_t i = 0; i < constraints[k].size(); ++i) {
        constraints[k][i] =
            update_with(std::move(constraints[k][i]), batch, omega, [&](const Sample& s) {
              return problem.constraint_surrogates[first + i](anchor, s);
            });
      }
      solutions[k] = solve_block_subproblem(k, objective[k], constraints[k], config.penalty.rho,
                                            sets[k], segment(anchor, k), config.inner,
                                            last_bar[k].size() > 0 ? &last_bar[k] : nullptr);
      last_bar[k] = solutions[k].x_bar;
    });
    StepOutcome out{Vector(anchor.size()), Vector(static_cast<Eigen::Index>(problem.constraint_count()))};
    for (std::size_t k = 0; k < K; ++k) {
      out.inner_iters += solutions[k].inner_iters;
      out.x_bar.segment(static_cast<Eigen::Index>(blocks.ranges[k].begin),
                        static_cast<Eigen::Index>(blocks.ranges[k].size)) = solutions[k].x_bar;
      out.s.segment(static_cast<Eigen::Index>(blocks.first_constraint(k)),
                    static_cast<Eigen::Index>(blocks.constraint_counts[k])) = solutions[k].s;
    }
    return out;
  };
  auto slacks = [&](const Vector& x) {
    Vector s(static_cast<Eigen::Index>(problem.constraint_count()));
    for (std::size_t k = 0; k < K; ++k) {
      s.segment(static_cast<Eigen::Index>(blocks.first_constraint(k)),
                static_cast<Eigen::Index>(blocks.constraint_counts[k])) =
          recover_slacks(constraints[k], segment(x, k));
    }
    return s;
  };

  RunResult result = outer_loop(problem, config, sink, initial_point(problem, x0), step, slacks);
  result.surrogates.objective = std::move(objective);
  result.surrogates.constraints = std::move(constraints);
  return result;
}

RunResult multi_restart(const StochasticProblem& problem, const RunConfig& config,
                        Algorithm algorithm) {
  config.validate();
  RunConfig cfg = config;
  std::optional<RunResult> best;
  int attempts = 0;
  for (int attempt = 0; attempt < config.restarts; ++attempt) {
    Rng rng(derive_seed(config.seed, kRestartStream, static_cast<std::uint64_t>(attempt)));
    const Vector x0 = problem.feasible_set.random_point(rng);
    cfg.seed = derive_seed(config.seed, kIterationStream, static_cast<std::uint64_t>(attempt));
    RunResult r = algorithm == Algorithm::kSsca ? run_ssca(problem, cfg, {}, x0)
                                                : run_parallel_ssca(problem, cfg, {}, x0);
    r.rho = cfg.penalty.rho;
    attempts = attempt + 1;
    const bool done = r.stationary_for_original;
    if (!best || r.slack_sum() < best->slack_sum() ||
        (r.slack_sum() == best->slack_sum() && r.final_objective() < best->final_objective())) {
      best = std::move(r);
    }
    if (done) break;
    cfg.penalty.rho *= cfg.penalty.rho_growth;
  }
  best->attempts = attempts;
  return std::move(*best);
}

Estimate objective_estimate(const StochasticProblem& problem, const Vector& x, long n_samples,
                            std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("objective_estimate needs at least one sample");
  Rng rng(derive_seed(seed, kEstimateStream, 0));
  double mean = 0.0;
  double m2 = 0.0;
  for (long i = 0; i < n_samples; ++i) {
    const double v = problem.objective.value(x, problem.sampler(rng));
    const double delta = v - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (v - mean);
  }
  Estimate e;
  e.mean = mean;
  if (n_samples > 1) {
    const double var = m2 / static_cast<double>(n_samples - 1);
    e.std_error = std::sqrt(var / static_cast<double>(n_samples));
  }
  return e;
}

Vector resolve_at_solution(const StochasticProblem& problem, const RunResult& result,
                           const RunConfig& config) {
  const SurrogateSnapshot& snap = result.surrogates;
  const bool full = snap.objective.size() == 1 && snap.constraints.size() == 1 &&
                    snap.objective[0].dimension() == problem.dimension;
  if (full) {
    return solve_subproblem(snap.objective[0], snap.constraints[0], result.rho,
                            problem.feasible_set, result.x_star, config.inner)
        .x_bar;
  }
  if (!problem.blocks || snap.objective.size() != problem.blocks->block_count()) {
    throw std::invalid_argument("surrogate snapshot does not match the problem structure");
  }
  const BlockStructure& blocks = *problem.blocks;
  Vector x_bar(result.x_star.size());
  for (std::size_t k = 0; k < blocks.block_count(); ++k) {
    const auto b = static_cast<Eigen::Index>(blocks.ranges[k].begin);
    const auto n = static_cast<Eigen::Index>(blocks.ranges[k].size);
    x_bar.segment(b, n) =
        solve_block_subproblem(k, snap.objective[k], snap.constraints[k], result.rho,
                               problem.feasible_set.slice(blocks.ranges[k].begin, blocks.ranges[k].size),
                               result.x_star.segment(b, n), config.inner)
            .x_bar;
  }
  return x_bar;
}

}  // namespace ssca
