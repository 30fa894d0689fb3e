#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "volrate/market_data.hpp"
#include "volrate/montecarlo.hpp"
#include "volrate/optimizer.hpp"
#include "volrate/random.hpp"

namespace volrate::rates {

/// dr = kappa (theta - r) dt + sigma sqrt(r) dW.
struct CirParams {
  double kappa = 1.0;
  double theta = 0.03;
  double sigma = 0.1;
  double r0 = 0.01;

  void validate() const;
  bool feller_satisfied() const noexcept { return 2.0 * kappa * theta > sigma * sigma; }
  double feller_margin() const noexcept { return 2.0 * kappa * theta - sigma * sigma; }
  double half_life() const;
  double conditional_mean(double r_start, double dt) const;
  double conditional_variance(double r_start, double dt) const;
};

struct BondCoefficients {
  double a = 1.0;  // A(0,T)
  double b = 0.0;  // B(0,T)
};

/// A and B of P(0,T) = A e^{-B r0}, written in terms of e^{-gamma T} so large kappa T and
/// vanishing sigma both stay finite.
BondCoefficients cir_bond_coefficients(const CirParams& params, double t);
double cir_bond_price(const CirParams& params, double t);

class InsufficientPoints : public std::invalid_argument {
 public:
  InsufficientPoints() : std::invalid_argument("zero curve needs at least three points") {}
};

class NonMonotoneTenors : public std::invalid_argument {
 public:
  NonMonotoneTenors() : std::invalid_argument("zero curve tenors must be distinct and increasing") {}
};

/// Continuously compounded zero curve on a natural cubic spline in tenor (years).
class ZeroCurve {
 public:
  ZeroCurve(std::vector<double> tenors, std::vector<double> rates);

  double rate(double t) const;
  double discount(double t) const;
  double min_tenor() const { return tenors_.front(); }
  double max_tenor() const { return tenors_.back(); }
  const std::vector<double>& tenors() const { return tenors_; }
  const std::vector<double>& rates() const { return rates_; }
  /// Multiples of one week (1/52 year) inside [min_tenor, max_tenor].
  std::vector<double> weekly_grid() const;

 private:
  std::vector<double> tenors_;
  std::vector<double> rates_;
  std::vector<double> second_;  // spline second derivatives at the knots
};

ZeroCurve build_zero_curve(const std::vector<market::RatePoint>& points);

/// Parameter layout [kappa, theta, sigma, r0].
calib::Bounds default_cir_bounds(double theta_cap = 0.05);

struct CirCalibration {
  CirParams params;
  double mse = 0.0;        // discount-factor MSE, no penalty
  double objective = 0.0;  // MSE plus Feller penalty
  double rmse_bp = 0.0;    // zero-rate RMSE in basis points
  double mae_bp = 0.0;
  std::size_t objective_evals = 0;
  bool converged = false;
  bool feller_satisfied = false;
  std::vector<double> grid;
  std::vector<double> market_rates;
  std::vector<double> model_rates;
};

inline constexpr double kFellerPenaltyWeight = 10.0;

/// Least squares on weekly discount factors with theta <= theta_cap and a soft Feller penalty.
/// A bounds argument overrides the default box; its theta upper bound is clipped to theta_cap.
CirCalibration calibrate_cir(const ZeroCurve& curve, const calib::OptimizerConfig& cfg,
                             double theta_cap = 0.05,
                             const calib::Bounds& bounds = calib::Bounds{});

/// Per-path summaries of a simulated short-rate run. Full trajectories are kept only for the
/// first `stored` paths.
struct RatePaths {
  double horizon = 0.0;
  int n_steps = 0;
  std::vector<double> terminal;        // r_T per path
  std::vector<double> integral;        // trapezoid integral of r over [0, T] per path
  std::vector<std::vector<double>> sample;  // first paths, n_steps + 1 points each
  double dt() const { return horizon / n_steps; }
};

/// Full-truncation Euler; reported rates are max(r, 0).
RatePaths simulate_cir_euler(const CirParams& params, double horizon, const mc::PathConfig& cfg,
                             std::size_t stored = 0);

/// Draw from the exact transition law: scaled noncentral chi-square as a Poisson mixture of gammas.
double sample_cir_exact(const CirParams& params, double r_start, double dt, PathRng& rng);

RatePaths simulate_cir_exact(const CirParams& params, double horizon, const mc::PathConfig& cfg,
                             std::size_t stored = 0);

struct RateDistribution {
  double mean = 0.0;
  double median = 0.0;
  double p05 = 0.0;
  double p95 = 0.0;
  double min = 0.0;
  double mean_df = 0.0;
  double df_std_error = 0.0;
  double flat_df = 0.0;
  double df_gap = 0.0;   // mean_df / flat_df - 1
  double bond_df = 0.0;  // closed-form P(0, horizon)
  double horizon = 0.0;
  std::size_t n_paths = 0;
};

RateDistribution discount_stats(const RatePaths& paths, const CirParams& params, double flat_rate);

/// Linear-interpolated sample quantile, q in [0, 1].
double quantile(std::vector<double> xs, double q);

}  // namespace volrate::rates
