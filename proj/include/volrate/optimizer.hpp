#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace volrate::calib {

/// Objective values at or above this are treated as "no usable price".
inline constexpr double kPenaltyValue = 1e6;

struct Bounds {
  std::vector<double> lower;
  std::vector<double> upper;

  void validate() const;
  std::size_t dimension() const noexcept { return lower.size(); }
  bool contains(std::span<const double> x) const;
  std::vector<double> clamp(std::span<const double> x) const;
};

struct OptimizerConfig {
  int de_population = 0;  // 0 selects 15 x dimension
  int de_generations = 300;
  std::uint64_t de_seed = 42;
  int de_stagnation = 50;     // generations in which neither the best nor the mean improves
  double de_weight = 0.8;     // F
  double de_crossover = 0.9;  // CR
  int local_max_iter = 200;
  double tolerance = 1e-10;
  int threads = 1;

  void validate(std::size_t dimension) const;
  int population(std::size_t dimension) const;
};

using Objective = std::function<double(std::span<const double>)>;

class NoFiniteObjective : public std::runtime_error {
 public:
  NoFiniteObjective() : std::runtime_error("objective is non-finite everywhere it was sampled") {}
};

struct DeResult {
  std::vector<double> best;
  double value = 0.0;
  int generations = 0;
  std::size_t evaluations = 0;
};

/// DE/rand/1/bin. Trial vectors are drawn on one thread; evaluations within a generation may
/// run in parallel. Optional seed members replace the first population slots.
DeResult differential_evolution(const Objective& objective, const Bounds& bounds,
                                const OptimizerConfig& cfg,
                                const std::vector<std::vector<double>>& seeds = {});

struct RefineResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
  std::vector<double> history;  // objective after each accepted step, starting with f(start)
};

/// Bounded quasi-Newton descent (projected BFGS, central-difference gradients, Armijo
/// backtracking along the projected path). Never returns a point worse than `start`.
RefineResult local_refine(const Objective& objective, std::span<const double> start,
                          const Bounds& bounds, const OptimizerConfig& cfg);

using Residuals = std::function<std::vector<double>(std::span<const double>)>;

/// Bounded Levenberg-Marquardt on a residual vector, Jacobian by central differences.
/// The reported value is the sum of squared residuals.
RefineResult least_squares_refine(const Residuals& residuals, std::span<const double> start,
                                  const Bounds& bounds, const OptimizerConfig& cfg);

}  // namespace volrate::calib
