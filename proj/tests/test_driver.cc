#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "helpers.hpp"
#include "ssca/wireless.hpp"

using namespace ssca;
using testing::vec;

namespace {

// (x_1 - 1 - xi)^2 + (x_2 - 2)^2 with xi ~ U[-1, 1], subject to x_1 + x_2 <= 2.5 on [0, 10]^2.
StochasticProblem noisy_toy() {
  StochasticProblem p;
  p.dimension = 2;
  p.feasible_set = FeasibleSet::box(Vector::Zero(2), Vector::Constant(2, 10.0));
  p.sampler = [](Rng& rng) { return Sample{0, {2.0 * uniform01(rng) - 1.0}}; };
  auto value = [](const Vector& x, const Sample& s) {
    return std::pow(x[0] - 1 - s.values[0], 2) + std::pow(x[1] - 2, 2);
  };
  auto grad = [](const Vector& x, const Sample& s) {
    return vec({2 * (x[0] - 1 - s.values[0]), 2 * (x[1] - 2)});
  };
  p.objective = {value, grad};
  p.objective_surrogate = [](const Vector&, const Sample& s) {
    return testing::quad(vec({1, 1}), vec({1 + s.values[0], 2}), vec({0, 0}));
  };
  p.constraints.push_back({[](const Vector& x, const Sample&) { return x.sum() - 2.5; },
                           [](const Vector&, const Sample&) { return vec({1, 1}); }});
  p.constraint_surrogates.push_back([](const Vector&, const Sample&) {
    return testing::quad(vec({0, 0}), vec({0, 0}), vec({1, 1}), -2.5);
  });
  return p;
}

RunConfig quiet(long iters) {
  RunConfig cfg;
  cfg.max_outer_iters = iters;
  cfg.record_time = false;
  return cfg;
}

}  // namespace

TEST_CASE("average_iterate") {
  CHECK(average_iterate(vec({1, 2}), vec({5, 6}), 1.0) == vec({5, 6}));
  CHECK(average_iterate(vec({3}), vec({3}), 0.3) == vec({3}));
  CHECK(average_iterate(vec({0}), vec({10}), 0.25)[0] == 2.5);
  CHECK_THROWS_AS(average_iterate(vec({0}), vec({1}), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(average_iterate(vec({0}), vec({1}), 1.5), std::invalid_argument);
  CHECK_THROWS_AS(average_iterate(vec({0}), vec({1, 2}), 0.5), std::invalid_argument);
}

TEST_CASE("deterministic quadratic reaches its minimum") {
  const auto p = testing::deterministic_problem({vec({1}), vec({2}), vec({0})}, {}, vec({0}), vec({10}));
  RunConfig cfg = quiet(500);
  cfg.stop_early = false;
  const RunResult r = run_ssca(p, cfg);
  REQUIRE(r.trace.rows.size() == 500);
  CHECK(std::abs(r.trace.rows[499].x[0] - 2.0) <= 1e-3);
  CHECK(r.s_star.size() == 0);
  CHECK(resolve_at_solution(p, r, cfg)[0] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("constant infeasible constraint is identified by its slack") {
  const auto p = testing::deterministic_problem({vec({1}), vec({2}), vec({0})},
                                                {{vec({0}), vec({0}), vec({0}), 1.0}}, vec({0}),
                                                vec({10}));
  RunConfig cfg = quiet(300);
  cfg.penalty.rho = 1.0;
  const RunResult r = run_ssca(p, cfg);
  REQUIRE(r.s_star.size() == 1);
  CHECK(std::abs(r.s_star[0] - 1.0) <= 1e-6);
  CHECK_FALSE(r.stationary_for_original);
  CHECK(std::abs(r.x_star[0] - 2.0) <= 1e-3);
}

TEST_CASE("one block reproduces the sequential algorithm") {
  auto p = noisy_toy();
  p.blocks = BlockStructure::whole(2, 1);
  RunConfig cfg = quiet(400);
  cfg.seed = 17;
  const RunResult a = run_ssca(p, cfg);
  const RunResult b = run_parallel_ssca(p, cfg);
  REQUIRE(a.trace.rows.size() == b.trace.rows.size());
  for (std::size_t i = 0; i < a.trace.rows.size(); ++i) {
    CHECK(a.trace.rows[i].x == b.trace.rows[i].x);
    CHECK(a.trace.rows[i].slack_sum == b.trace.rows[i].slack_sum);
  }
  CHECK(a.x_star == b.x_star);
}

TEST_CASE("separable problem solved block by block") {
  StochasticProblem p;
  p.dimension = 3;
  p.feasible_set = FeasibleSet::box(Vector::Zero(3), Vector::Constant(3, 10.0));
  p.sampler = [](Rng&) { return Sample{}; };
  p.objective = {[](const Vector& x, const Sample&) { return (x - vec({1, 2, 3})).squaredNorm(); },
                 [](const Vector& x, const Sample&) { return Vector(2.0 * (x - vec({1, 2, 3}))); }};
  p.blocks = BlockStructure::singletons(3, 0);
  for (int k = 0; k < 3; ++k) {
    p.block_objective_surrogates.push_back(
        [k](const Vector&, const Sample&) { return testing::quad1(1.0, k + 1.0); });
  }
  const RunResult r = run_parallel_ssca(p, quiet(500));
  CHECK((r.x_star - vec({1, 2, 3})).cwiseAbs().maxCoeff() <= 1e-3);
  CHECK(resolve_at_solution(p, r, quiet(500)) == vec({1, 2, 3}));
  CHECK_THROWS_AS(run_parallel_ssca(testing::square_with_floor(), quiet(10)), std::invalid_argument);
}

TEST_CASE("multi_restart") {
  SUBCASE("first attempt already slack-free") {
    RunConfig cfg = quiet(300);
    cfg.penalty = {10.0, 2.0};
    cfg.restarts = 5;
    const RunResult r = multi_restart(testing::square_with_floor(), cfg);
    CHECK(r.attempts == 1);
    CHECK(r.stationary_for_original);
    CHECK(r.x_star[0] == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("unsatisfiable constraint exhausts the restarts") {
    const auto p = testing::deterministic_problem({vec({1}), vec({2}), vec({0})},
                                                  {{vec({0}), vec({0}), vec({0}), 1.0}}, vec({0}),
                                                  vec({10}));
    RunConfig cfg = quiet(200);
    cfg.restarts = 3;
    cfg.penalty = {1.0, 2.0};
    const RunResult r = multi_restart(p, cfg);
    CHECK(r.attempts == 3);
    CHECK_FALSE(r.stationary_for_original);
    CHECK(r.s_star[0] == doctest::Approx(1.0));
  }
  SUBCASE("penalty doubled until the constraint holds") {
    // Hinge stationarity of x^2 + rho max(0, 1 - x): x = rho / 2 while rho < 2, so rho = 0.5
    // leaves s = 0.75 and rho = 1 leaves s = 0.5; rho = 2 gives x = 1.
    const auto p = testing::square_with_floor();
    RunConfig cfg = quiet(300);
    cfg.penalty = {0.5, 1.0};
    CHECK(run_ssca(p, cfg).s_star[0] == doctest::Approx(0.75).epsilon(1e-6));
    cfg.penalty.rho = 1.0;
    CHECK(run_ssca(p, cfg).s_star[0] == doctest::Approx(0.5).epsilon(1e-6));

    cfg.penalty = {0.5, 2.0};
    cfg.restarts = 5;
    const RunResult r = multi_restart(p, cfg);
    CHECK(r.attempts == 3);
    CHECK(r.rho == 2.0);
    CHECK(r.stationary_for_original);
    CHECK(r.x_star[0] == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("objective_estimate") {
  const auto det = testing::deterministic_problem({vec({1}), vec({2}), vec({0})}, {}, vec({0}), vec({10}));
  const Estimate e = objective_estimate(det, vec({5}), 100, 3);
  CHECK(e.mean == 9.0);
  CHECK(e.std_error == 0.0);
  CHECK_THROWS_AS(objective_estimate(det, vec({5}), 0, 3), std::invalid_argument);

  StochasticProblem coin = det;
  coin.sampler = [](Rng& rng) { return Sample{0, {uniform01(rng) < 0.5 ? 0.0 : 1.0}}; };
  coin.objective.value = [](const Vector&, const Sample& s) { return s.values[0]; };
  const Estimate small = objective_estimate(coin, vec({0}), 100, 1);
  const Estimate big = objective_estimate(coin, vec({0}), 1000000, 1);
  CHECK(std::abs(big.mean - 0.5) <= 3 * big.std_error + 1e-12);
  CHECK(big.std_error == doctest::Approx(0.5 / 1000.0).epsilon(1e-3));
  CHECK(big.std_error < small.std_error);
  CHECK(objective_estimate(coin, vec({0}), 1000, 9).mean == objective_estimate(coin, vec({0}), 1000, 9).mean);
}

TEST_CASE("trace invariants and sink") {
  const auto p = noisy_toy();
  RunConfig cfg = quiet(600);
  cfg.seed = 4;
  std::vector<TraceRow> seen;
  const RunResult r = run_ssca(p, cfg, [&](const TraceRow& row) { seen.push_back(row); });
  REQUIRE(seen.size() == r.trace.rows.size());
  long prev_t = 0;
  for (std::size_t i = 0; i < seen.size(); ++i) {
    const TraceRow& row = r.trace.rows[i];
    CHECK(row.t == prev_t + 1);
    prev_t = row.t;
    CHECK(row.slack_sum >= 0.0);
    CHECK(row.residual >= row.step_gap);
    CHECK(row.elapsed == 0.0);
    CHECK(p.feasible_set.contains(row.x));
    CHECK(seen[i].x == row.x);
  }
  // Constrained optimum of the expected objective: projection of (1, 2) onto x_1 + x_2 <= 2.5.
  CHECK((r.x_star - vec({0.75, 1.75})).cwiseAbs().maxCoeff() < 0.05);

  cfg.record_iterates = false;
  const RunResult bare = run_ssca(p, cfg);
  CHECK(bare.trace.rows.front().x.size() == 0);
  CHECK(bare.x_star == r.x_star);
}

TEST_CASE("stop rule") {
  const auto p = testing::square_with_floor();
  RunConfig cfg = quiet(5000);
  cfg.penalty.rho = 10.0;
  const RunResult r = run_ssca(p, cfg);
  CHECK(r.converged);
  CHECK(r.stationary_for_original);
  CHECK(r.iterations >= cfg.slack_window);
  CHECK(r.iterations < 5000);
  CHECK(r.trace.rows.back().residual <= cfg.stop_residual);

  cfg.stop_early = false;
  cfg.max_outer_iters = 120;
  const RunResult full = run_ssca(p, cfg);
  CHECK(full.iterations == 120);
  CHECK_FALSE(full.converged);
}

TEST_CASE("wireless runs are feasible at every iterate and reproducible") {
  const auto model = wireless::NetworkModel::reference_five_pair();
  const auto p7 = wireless::build_problem7(model);
  const auto p8 = wireless::build_problem8(model);
  RunConfig cfg = quiet(150);
  cfg.stop_early = false;
  cfg.inner.prox_tau = 1e-4;
  cfg.seed = 99;

  const RunResult a = run_ssca(p7, cfg);
  const RunResult b = run_ssca(p7, cfg);
  for (std::size_t i = 0; i < a.trace.rows.size(); ++i) {
    CHECK(p7.feasible_set.contains(a.trace.rows[i].x));
    CHECK(a.trace.rows[i].x == b.trace.rows[i].x);
    CHECK(a.trace.rows[i].objective == b.trace.rows[i].objective);
  }

  const RunResult serial = run_parallel_ssca(p8, cfg);
  cfg.block_threads = 4;
  const RunResult threaded = run_parallel_ssca(p8, cfg);
  REQUIRE(serial.trace.rows.size() == threaded.trace.rows.size());
  for (std::size_t i = 0; i < serial.trace.rows.size(); ++i) {
    CHECK(p8.feasible_set.contains(serial.trace.rows[i].x));
    CHECK(serial.trace.rows[i].x == threaded.trace.rows[i].x);
    CHECK(serial.trace.rows[i].slack_sum == threaded.trace.rows[i].slack_sum);
  }

  // Re-solving with the final surrogates lands near x*: the step gap closes as gamma decays.
  const Vector x_bar = resolve_at_solution(p8, serial, cfg);
  CHECK(p8.feasible_set.contains(x_bar));
  CHECK((x_bar - serial.x_star).cwiseAbs().maxCoeff() <= serial.trace.rows.back().step_gap + 1e-3);

  RunResult broken = serial;
  broken.surrogates.objective.pop_back();
  CHECK_THROWS_AS(resolve_at_solution(p8, broken, cfg), std::invalid_argument);
}
