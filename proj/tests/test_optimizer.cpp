#include <doctest.h>

#include <atomic>
#include <cmath>

#include "volrate/optimizer.hpp"

using namespace volrate::calib;

namespace {

double sphere(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double rosenbrock(std::span<const double> x) {
  return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
}

Bounds box(std::size_t dim, double lo, double hi) {
  return {std::vector<double>(dim, lo), std::vector<double>(dim, hi)};
}

// Convex quadratic with a non-diagonal Hessian and minimiser (0.3, -0.2, 0.5).
const std::vector<double> kQuadOpt{0.3, -0.2, 0.5};
double quadratic(std::span<const double> x) {
  const double a = x[0] - kQuadOpt[0], b = x[1] - kQuadOpt[1], c = x[2] - kQuadOpt[2];
  return 2.0 * a * a + b * b + 3.0 * c * c + a * b + 0.5 * b * c;
}

}  // namespace

TEST_CASE("differential evolution finds the sphere minimum") {
  OptimizerConfig cfg;
  cfg.de_generations = 200;
  cfg.de_stagnation = 200;
  const auto r = differential_evolution(sphere, box(5, -5.0, 5.0), cfg);
  CHECK(r.generations <= 200);
  for (double v : r.best) CHECK(std::abs(v) < 1e-3);
}

TEST_CASE("differential evolution finds the rosenbrock minimum") {
  OptimizerConfig cfg;
  cfg.de_generations = 300;
  cfg.de_stagnation = 300;
  const auto r = differential_evolution(rosenbrock, box(2, -2.0, 2.0), cfg);
  CHECK(std::abs(r.best[0] - 1.0) < 1e-2);
  CHECK(std::abs(r.best[1] - 1.0) < 1e-2);
}

TEST_CASE("differential evolution is deterministic under a seed and thread count") {
  OptimizerConfig cfg;
  cfg.de_generations = 60;
  cfg.de_seed = 1234;
  const auto a = differential_evolution(rosenbrock, box(2, -2.0, 2.0), cfg);
  const auto b = differential_evolution(rosenbrock, box(2, -2.0, 2.0), cfg);
  cfg.threads = 4;
  const auto c = differential_evolution(rosenbrock, box(2, -2.0, 2.0), cfg);
  CHECK(a.best == b.best);
  CHECK(a.best == c.best);
  CHECK(a.value == c.value);
  CHECK(a.evaluations == c.evaluations);
  cfg.de_seed = 4321;
  const auto d = differential_evolution(rosenbrock, box(2, -2.0, 2.0), cfg);
  CHECK(a.best != d.best);
}

TEST_CASE("differential evolution only evaluates inside the bounds") {
  const Bounds b{{-1.0, 0.5, 10.0}, {2.0, 0.6, 12.0}};
  std::atomic<int> outside{0};
  const Objective f = [&](std::span<const double> x) {
    if (!b.contains(x)) ++outside;
    return std::pow(x[0] - 3.0, 2) + std::pow(x[1], 2) + std::pow(x[2] - 20.0, 2);
  };
  OptimizerConfig cfg;
  cfg.threads = 3;
  const auto r = differential_evolution(f, b, cfg);
  CHECK(outside.load() == 0);
  CHECK(r.best[0] == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(r.best[2] == doctest::Approx(12.0).epsilon(1e-3));
}

TEST_CASE("seeded members enter the population") {
  OptimizerConfig cfg;
  cfg.de_generations = 0;
  const auto r = differential_evolution(sphere, box(3, -5.0, 5.0), cfg, {{0.0, 0.0, 0.0}});
  CHECK(r.value == 0.0);
}

TEST_CASE("objective that is never usable") {
  const Objective f = [](std::span<const double>) { return kPenaltyValue; };
  CHECK_THROWS_AS(differential_evolution(f, box(2, 0.0, 1.0), OptimizerConfig{}),
                  NoFiniteObjective);
  const Objective g = [](std::span<const double>) { return std::nan(""); };
  CHECK_THROWS_AS(differential_evolution(g, box(2, 0.0, 1.0), OptimizerConfig{}),
                  NoFiniteObjective);
}

TEST_CASE("configuration and bounds validation") {
  OptimizerConfig cfg;
  cfg.de_population = 5;
  CHECK_THROWS(cfg.validate(2));
  cfg = {};
  cfg.tolerance = 0.0;
  CHECK_THROWS(cfg.validate(2));
  CHECK(OptimizerConfig{}.population(5) == 75);
  CHECK_THROWS(Bounds({{0.0, 1.0}, {1.0, 1.0}}).validate());
  CHECK_THROWS(Bounds({{0.0}, {1.0, 2.0}}).validate());
}

TEST_CASE("local refine stays at an optimum") {
  const auto r = local_refine(quadratic, kQuadOpt, box(3, -1.0, 1.0), OptimizerConfig{});
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(r.x[i] - kQuadOpt[i]) < 1e-8);
  CHECK(r.value <= quadratic(kQuadOpt));
}

TEST_CASE("local refine converges on a quadratic") {
  const std::vector<double> start{0.4, -0.1, 0.4};
  const auto r = local_refine(quadratic, start, box(3, -1.0, 1.0), OptimizerConfig{});
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(r.x[i] - kQuadOpt[i]) < 1e-8);
  CHECK(r.value <= quadratic(start));
  REQUIRE(!r.history.empty());
  CHECK(r.history.front() == quadratic(start));
  for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] <= r.history[i - 1]);
}

TEST_CASE("local refine respects active bounds") {
  const Bounds b{{0.4, -1.0, -1.0}, {1.0, 1.0, 1.0}};
  const std::vector<double> start{0.9, 0.5, 0.9};
  const auto r = local_refine(quadratic, start, b, OptimizerConfig{});
  CHECK(r.x[0] == doctest::Approx(0.4));
  CHECK(b.contains(r.x));
  CHECK(r.value <= quadratic(start));
}

TEST_CASE("local refine rejects starts outside the box") {
  CHECK_THROWS(local_refine(quadratic, std::vector<double>{2.0, 0.0, 0.0}, box(3, -1.0, 1.0),
                            OptimizerConfig{}));
}

TEST_CASE("local refine never returns a worse point") {
  const Objective bumpy = [](std::span<const double> x) {
    return std::sin(25.0 * x[0]) * std::cos(17.0 * x[1]) + x[0] * x[0];
  };
  for (double a : {-0.8, -0.3, 0.2, 0.7}) {
    const std::vector<double> start{a, -a / 2};
    const auto r = local_refine(bumpy, start, box(2, -1.0, 1.0), OptimizerConfig{});
    CHECK(r.value <= bumpy(start));
  }
}

TEST_CASE("least squares refine solves rosenbrock residuals") {
  const Residuals res = [](std::span<const double> x) {
    return std::vector<double>{10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]};
  };
  const std::vector<double> start{-1.2, 1.0};
  const auto r = least_squares_refine(res, start, box(2, -2.0, 2.0), OptimizerConfig{});
  CHECK(std::abs(r.x[0] - 1.0) < 1e-8);
  CHECK(std::abs(r.x[1] - 1.0) < 1e-8);
  CHECK(r.value < 1e-16);
  for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] < r.history[i - 1]);
}

TEST_CASE("least squares refine on a bounded linear fit") {
  // Fit y = a + b t to exact data with a = 2, b = -3, but b is boxed to [-1, 1].
  const Residuals res = [](std::span<const double> x) {
    std::vector<double> r;
    for (double t = 0.0; t <= 1.0; t += 0.1) r.push_back(x[0] + x[1] * t - (2.0 - 3.0 * t));
    return r;
  };
  const auto r = least_squares_refine(res, std::vector<double>{0.0, 0.0},
                                      Bounds{{-5.0, -1.0}, {5.0, 1.0}}, OptimizerConfig{});
  CHECK(r.x[1] == doctest::Approx(-1.0));
  // With b pinned at -1 the best intercept is the mean of 2 - 2t over the grid.
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-8));
}
