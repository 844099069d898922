#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "helpers.hpp"
#include "ssca/stepsize.hpp"
#include "ssca/surrogate.hpp"
#include "ssca/wireless.hpp"

using namespace ssca;
using testing::vec;

TEST_CASE("empty and simple states") {
  const SurrogateState empty(2);
  CHECK(empty.eval(vec({1, 2})) == 0.0);
  CHECK(empty.grad(vec({1, 2})) == Vector::Zero(2));

  const auto one = SurrogateState(1).updated(testing::quad1(1.0, 0.5), 1.0);
  CHECK(one.eval(vec({2})) == 2.25);

  // Weights 0.4 / 0.6 on values 1 and 2.
  const auto two = SurrogateState(1)
                       .updated(testing::constant(1, 1.0), 1.0)
                       .updated(testing::constant(1, 2.0), 0.6);
  REQUIRE(two.size() == 2);
  CHECK(two.weight(0) == doctest::Approx(0.4));
  CHECK(two.weight(1) == doctest::Approx(0.6));
  CHECK(two.eval(vec({7})) == doctest::Approx(1.6));

  const auto sq = SurrogateState(1).updated(testing::quad1(1.0, 3.0), 1.0);
  CHECK(sq.grad(vec({5}))[0] == doctest::Approx(4.0));

  CHECK_THROWS_AS(SurrogateState(1).updated(testing::constant(1, 1.0), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(SurrogateState(1).updated(testing::constant(1, 1.0), 1.5), std::invalid_argument);
  CHECK_THROWS_AS(SurrogateState(2).updated(testing::constant(1, 1.0), 0.5), std::invalid_argument);
}

TEST_CASE("recursion equals the unrolled weighted sum") {
  Rng rng(5);
  const auto omega = StepsizeSchedule::default_omega();
  for (int T : {1, 7, 50}) {
    SurrogateState s(2, 0.0, std::numeric_limits<std::size_t>::max());
    std::vector<ComponentPtr> comps;
    for (int t = 1; t <= T; ++t) {
      const Vector c = vec({uniform01(rng) + 0.1, uniform01(rng) + 0.1});
      const Vector a = vec({4 * uniform01(rng) - 2, 4 * uniform01(rng) - 2});
      comps.push_back(testing::quad(c, a, vec({uniform01(rng), -uniform01(rng)}), uniform01(rng)));
      s = std::move(s).updated(comps.back(), schedule_value(omega, t));
    }
    for (int probe = 0; probe < 5; ++probe) {
      const Vector x = vec({3 * uniform01(rng), -3 * uniform01(rng)});
      double direct = 0.0;
      for (int t = 1; t <= T; ++t) {
        double w = schedule_value(omega, t);
        for (int u = t + 1; u <= T; ++u) w *= 1.0 - schedule_value(omega, u);
        direct += w * comps[t - 1]->value(x);
      }
      CHECK(std::abs(s.eval(x) - direct) <= 1e-12 * std::max(1.0, std::abs(direct)));
    }
  }
}

TEST_CASE("constant components are a fixed point") {
  const auto omega = StepsizeSchedule::default_omega();
  SurrogateState s(1, 0.0, std::numeric_limits<std::size_t>::max());
  SurrogateState pruned(1);
  for (int t = 1; t <= 300; ++t) {
    s = std::move(s).updated(testing::constant(1, 2.5), schedule_value(omega, t));
    pruned = std::move(pruned).updated(testing::constant(1, 2.5), schedule_value(omega, t));
    CHECK(s.eval(vec({0.3})) == doctest::Approx(2.5).epsilon(1e-12));
    // Pruning drops mass without renormalizing; the loss is bounded by the pruned weights.
    CHECK(std::abs(pruned.eval(vec({0.3})) - 2.5) <= 2.5 * (1.0 - pruned.weight_sum()) + 1e-12);
  }
  CHECK(pruned.size() < s.size());
}

TEST_CASE("pruning") {
  // The first component decays to weight 1e-9 < 1e-8 and is dropped without renormalizing.
  const auto s = SurrogateState(1, 1e-8)
                     .updated(testing::constant(1, 1.0), 1.0)
                     .updated(testing::constant(1, 2.0), 1.0 - 1e-9);
  CHECK(s.size() == 1);
  CHECK(s.last_pruned_mass() == doctest::Approx(1e-9).epsilon(1e-6));
  CHECK(s.weight_sum() == doctest::Approx(1.0 - 1e-9).epsilon(1e-15));

  // Nothing below the threshold: unchanged.
  const auto kept = SurrogateState(1, 1e-8)
                        .updated(testing::constant(1, 1.0), 1.0)
                        .updated(testing::constant(1, 2.0), 0.5);
  CHECK(kept.size() == 2);
  CHECK(kept.last_pruned_mass() == 0.0);
  CHECK(kept.pruned().size() == 2);

  // Cap: 10001 components, the lightest one goes.
  SurrogateState capped(1, 0.0, 10000);
  capped = std::move(capped).updated(testing::constant(1, 1.0), 1.0);
  const double w = 1e-5;
  for (int t = 0; t < 10000; ++t) capped = std::move(capped).updated(testing::constant(1, 0.0), w);
  CHECK(capped.size() == 10000);
  CHECK(capped.last_pruned_mass() == doctest::Approx(w * std::pow(1.0 - w, 9999)).epsilon(1e-9));
  // The oldest (heaviest) component survives.
  double max_w = 0.0;
  for (std::size_t j = 0; j < capped.size(); ++j) max_w = std::max(max_w, capped.weight(j));
  CHECK(max_w == doctest::Approx(std::pow(1.0 - w, 10000)).epsilon(1e-9));
}

TEST_CASE("stepsize schedules") {
  const auto omega = StepsizeSchedule::default_omega();
  const auto gamma = StepsizeSchedule::default_gamma();
  CHECK(schedule_value(omega, 1) == 1.0);
  CHECK(schedule_value(gamma, 1) == 1.0);
  CHECK(schedule_value({0.5, 2.0, 3}, 1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(schedule_value(omega, 0), std::invalid_argument);
  CHECK(omega.satisfies_conditions());
  CHECK(gamma.satisfies_conditions());
  CHECK_FALSE(StepsizeSchedule{0.5, 1.0, 0}.satisfies_conditions());
  CHECK_FALSE(StepsizeSchedule{1.2, 1.0, 0}.satisfies_conditions());

  double prev_ratio = 2.0;
  for (std::int64_t t = 1; t <= 1000000; t += (t < 1000 ? 1 : 997)) {
    const double g = schedule_value(gamma, t);
    const double w = schedule_value(omega, t);
    const double ratio = g / w;
    CHECK(ratio == doctest::Approx(std::pow(static_cast<double>(t), -0.3)).epsilon(1e-12));
    CHECK(ratio < prev_ratio);
    prev_ratio = ratio;
  }
  CHECK(prev_ratio < 0.02);
}

TEST_CASE("wireless surrogate after one update is tangent at the initial point") {
  const auto model = wireless::NetworkModel::reference_five_pair();
  Rng rng(9);
  const auto H = wireless::sample_channels(model, rng);
  const Vector p0 = model.power_vector();
  const auto s = SurrogateState(5).updated(wireless::surrogate_g0(model, p0, H), 1.0);
  double direct = 0.0;
  for (std::size_t k = 0; k < 5; ++k) {
    // Independent SINR evaluation.
    double interf = model.noise_vars[k];
    for (std::size_t j = 0; j < 5; ++j) {
      if (j != k) interf += H.gain(k, j) * p0[static_cast<Eigen::Index>(j)];
    }
    direct -= std::log1p(H.gain(k, k) * p0[static_cast<Eigen::Index>(k)] / interf);
  }
  CHECK(s.eval(p0) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("surrogate gradient matches finite differences") {
  const auto model = wireless::NetworkModel::reference_five_pair();
  Rng rng(21);
  SurrogateState s(5);
  const auto omega = StepsizeSchedule::default_omega();
  for (int t = 1; t <= 40; ++t) {
    Vector anchor(5);
    for (int j = 0; j < 5; ++j) anchor[j] = 100.0 * uniform01(rng);
    s = std::move(s).updated(wireless::surrogate_g0(model, anchor, wireless::sample_channels(model, rng)),
                             schedule_value(omega, t));
  }
  for (int probe = 0; probe < 10; ++probe) {
    Vector p(5);
    for (int j = 0; j < 5; ++j) p[j] = 1.0 + 98.0 * uniform01(rng);
    const Vector g = s.grad(p);
    const Vector fd = testing::fd_gradient([&](const Vector& x) { return s.eval(x); }, p);
    CHECK((g - fd).cwiseAbs().maxCoeff() <= 1e-4 * (1.0 + g.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("strong convexity carries over to the average") {
  Rng rng(2);
  const double mu = 0.3;
  SurrogateState s(2);
  for (int t = 1; t <= 30; ++t) {
    // Every component has curvature >= mu in every direction (Hessian 2c with c >= mu / 2).
    const Vector c = vec({mu / 2 + uniform01(rng), mu / 2 + uniform01(rng)});
    s = std::move(s).updated(testing::quad(c, vec({uniform01(rng), uniform01(rng)}), vec({0, 0})),
                             std::pow(t, -0.6));
  }
  for (int i = 0; i < 100; ++i) {
    const Vector x = vec({4 * uniform01(rng) - 2, 4 * uniform01(rng) - 2});
    Vector d = vec({uniform01(rng) - 0.5, uniform01(rng) - 0.5});
    d.normalize();
    const double h = 0.1;
    const double second = (s.eval(x + h * d) - 2 * s.eval(x) + s.eval(x - h * d)) / (h * h);
    CHECK(second >= mu * s.weight_sum() * (1 - 1e-9));
  }
}

TEST_CASE("averaged surrogate approaches the expectation at a frozen anchor") {
  const auto model = wireless::NetworkModel::reference_five_pair();
  Vector xhat(5);
  xhat << 80, 20, 60, 100, 40;
  // Reference f_0(xhat) by plain Monte Carlo.
  Rng ref_rng(12345);
  double mean = 0.0;
  const long n = 1000000;
  for (long i = 0; i < n; ++i) {
    mean -= wireless::instantaneous_sum_rate(model, xhat, wireless::sample_channels(model, ref_rng));
  }
  mean /= static_cast<double>(n);

  const auto omega = StepsizeSchedule::default_omega();
  std::vector<double> err200, err2000;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(derive_seed(seed, kIterationStream, 0));
    SurrogateState s(5);
    for (int t = 1; t <= 2000; ++t) {
      s = std::move(s).updated(wireless::surrogate_g0(model, xhat, wireless::sample_channels(model, rng)),
                               schedule_value(omega, t));
      if (t == 200) err200.push_back(std::abs(s.eval(xhat) - mean));
    }
    err2000.push_back(std::abs(s.eval(xhat) - mean));
  }
  std::sort(err200.begin(), err200.end());
  std::sort(err2000.begin(), err2000.end());
  const double med200 = 0.5 * (err200[9] + err200[10]);
  const double med2000 = 0.5 * (err2000[9] + err2000[10]);
  MESSAGE("median |f_bar - f| at t = 200: ", med200, ", at t = 2000: ", med2000);
  CHECK(med2000 < med200);
}
