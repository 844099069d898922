#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "helpers.hpp"
#include "ssca/wireless.hpp"

using namespace ssca;
using testing::vec;

TEST_CASE("box projection") {
  const auto box5 = FeasibleSet::box(Vector::Zero(5), Vector::Constant(5, 100.0));
  CHECK(box5.project(Vector::Constant(5, 50.0)) == Vector::Constant(5, 50.0));

  const auto box1 = FeasibleSet::box(vec({0}), vec({100}));
  CHECK(box1.project(vec({-3}))[0] == 0.0);

  const auto box2 = FeasibleSet::box(vec({0, 0}), vec({1, 1}));
  CHECK(box2.project(vec({2, 0.5})) == vec({1, 0.5}));

  CHECK_THROWS_AS(box2.project(vec({1, 2, 3})), std::invalid_argument);
  CHECK_THROWS_AS(FeasibleSet::box(vec({1}), vec({0})), std::invalid_argument);
}

TEST_CASE("projection is idempotent and nonexpansive") {
  const auto box = FeasibleSet::box(vec({-1, 0, 2}), vec({1, 5, 2}));
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    Vector y1(3), y2(3);
    for (int j = 0; j < 3; ++j) {
      y1[j] = 20.0 * uniform01(rng) - 10.0;
      y2[j] = 20.0 * uniform01(rng) - 10.0;
    }
    const Vector p1 = box.project(y1);
    const Vector p2 = box.project(y2);
    CHECK(box.contains(p1));
    CHECK(box.project(p1) == p1);
    CHECK((p1 - p2).norm() <= (y1 - y2).norm() + 1e-12);
  }
}

TEST_CASE("generic sets use the supplied projection") {
  // Unit Euclidean ball.
  const auto ball = FeasibleSet::generic(2, [](const Vector& y) {
    const double n = y.norm();
    return n <= 1.0 ? y : Vector(y / n);
  });
  CHECK_FALSE(ball.is_box());
  const Vector p = ball.project(vec({3, 4}));
  CHECK(p[0] == doctest::Approx(0.6));
  CHECK(p[1] == doctest::Approx(0.8));
}

TEST_CASE("split_blocks") {
  const Vector x = vec({1, 2, 3, 4, 5});
  const auto singles = split_blocks(x, BlockStructure::singletons(5, 1));
  REQUIRE(singles.size() == 5);
  for (int k = 0; k < 5; ++k) CHECK(singles[k][0] == k + 1);

  const auto whole = split_blocks(x, BlockStructure::whole(5, 0));
  REQUIRE(whole.size() == 1);
  CHECK(whole[0] == x);

  BlockStructure two{{{0, 2}, {2, 2}}, {0, 0}};
  const auto pairs = split_blocks(vec({1, 2, 3, 4}), two);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0] == vec({1, 2}));
  CHECK(pairs[1] == vec({3, 4}));

  BlockStructure gap{{{0, 2}, {3, 1}}, {0, 0}};
  CHECK_THROWS_AS(gap.validate(4, 0), std::invalid_argument);
  CHECK_THROWS_AS(split_blocks(vec({1, 2, 3, 4}), gap), std::invalid_argument);
  BlockStructure overlap{{{0, 3}, {2, 2}}, {0, 0}};
  CHECK_THROWS_AS(overlap.validate(4, 0), std::invalid_argument);
}

TEST_CASE("penalty reformulation") {
  const auto toy = testing::square_with_floor();
  CHECK_THROWS_AS(penalize(toy, {0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(penalize(toy, {-1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(penalize(toy, {1.0, 0.5}), std::invalid_argument);

  const auto unconstrained = testing::deterministic_problem(
      {vec({1}), vec({3}), vec({0})}, {}, vec({0}), vec({10}));
  const auto pen0 = penalize(unconstrained, {0.5, 1.0});
  CHECK(pen0.slack_count() == 0);
  for (double x : {0.0, 1.5, 7.0}) {
    const Vector xv = vec({x});
    CHECK(pen0.sample_objective(xv, {}) == (x - 3) * (x - 3));
  }

  const auto pen = penalize(toy, {2.0, 1.0});
  const std::vector<double> feasible = {-0.5, 0.0};
  CHECK(pen.hinge_objective(4.0, feasible) == 4.0);
  const std::vector<double> zero_slack = {0.0, 0.0};
  CHECK(pen.objective(4.0, zero_slack) == 4.0);
  const std::vector<double> violated = {0.25, -1.0};
  CHECK(pen.hinge_objective(4.0, violated) == doctest::Approx(4.5));
  // x = 0.5: g_0 = 0.25, g_1 = 0.5.
  CHECK(pen.sample_objective(vec({0.5}), {}) == doctest::Approx(0.25 + 2.0 * 0.5));

  const auto p7 = wireless::build_problem7(wireless::NetworkModel::reference_five_pair());
  const auto pen7 = penalize(p7, {0.5, 1.0});
  CHECK(pen7.slack_count() == 5);
  CHECK(pen7.rho() == 0.5);
}

TEST_CASE("component gradients match finite differences") {
  Rng rng(3);
  const auto q = testing::quad(vec({1, 0.5, 0}), vec({1, -2, 3}), vec({0.1, 0.2, -1}), 4.0);
  const auto f = std::make_shared<FunctionComponent>(
      2, [](const Vector& x) { return std::exp(x[0]) + x[0] * x[0] * x[1] * x[1]; },
      [](const Vector& x) {
        return testing::vec({std::exp(x[0]) + 2 * x[0] * x[1] * x[1], 2 * x[0] * x[0] * x[1]});
      });
  const BlockEmbeddedComponent embedded(testing::quad1(2.0, 1.0, 0.5), 4, 2);
  for (int i = 0; i < 20; ++i) {
    Vector x3(3), x2(2), x4(4);
    for (int j = 0; j < 3; ++j) x3[j] = 4 * uniform01(rng) - 2;
    for (int j = 0; j < 2; ++j) x2[j] = 2 * uniform01(rng) - 1;
    for (int j = 0; j < 4; ++j) x4[j] = 4 * uniform01(rng) - 2;
    auto rel = [](const Vector& a, const Vector& b) {
      return (a - b).cwiseAbs().maxCoeff() / (1.0 + b.cwiseAbs().maxCoeff());
    };
    CHECK(rel(q->gradient(x3), testing::fd_gradient([&](const Vector& v) { return q->value(v); }, x3)) < 1e-5);
    CHECK(rel(f->gradient(x2), testing::fd_gradient([&](const Vector& v) { return f->value(v); }, x2)) < 1e-5);
    const Vector ge = embedded.gradient(x4);
    CHECK(ge[0] == 0.0);
    CHECK(ge[1] == 0.0);
    CHECK(rel(ge, testing::fd_gradient([&](const Vector& v) { return embedded.value(v); }, x4)) < 1e-5);

    // Numerical Hessian of a closure-defined component against the analytic one.
    Matrix h = Matrix::Zero(2, 2);
    f->accumulate_hessian(x2, 1.0, h);
    Matrix exact(2, 2);
    exact << std::exp(x2[0]) + 2 * x2[1] * x2[1], 4 * x2[0] * x2[1], 4 * x2[0] * x2[1],
        2 * x2[0] * x2[0];
    CHECK((h - exact).cwiseAbs().maxCoeff() < 1e-5 * (1.0 + exact.cwiseAbs().maxCoeff()));
  }
  CHECK_THROWS_AS(testing::quad(vec({-1}), vec({0}), vec({0})), std::invalid_argument);
}

TEST_CASE("problem validation") {
  auto p = testing::square_with_floor();
  CHECK_NOTHROW(p.validate());
  CHECK(p.default_initial_point() == vec({0}));
  p.constraint_surrogates.clear();
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
