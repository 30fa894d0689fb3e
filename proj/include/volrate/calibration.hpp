#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "volrate/fourier_pricing.hpp"
#include "volrate/market_data.hpp"
#include "volrate/models.hpp"
#include "volrate/optimizer.hpp"

namespace volrate::calib {

enum class PricerChoice { LewisIntegral, CarrMadanFft };

std::string pricer_name(PricerChoice choice);

enum class PutHandling {
  Direct,         // puts priced as puts
  SyntheticCall,  // put quotes converted through parity, priced as calls
};

struct PricingSetup {
  PricerChoice method = PricerChoice::LewisIntegral;
  fourier::IntegrationConfig integration;
  fourier::FftConfig fft;
  PutHandling puts = PutHandling::Direct;
};

/// Maps a parameter vector to one model price per quote. Failed prices come back as NaN.
using ChainPricer =
    std::function<std::vector<double>(std::span<const double> params, const market::QuoteSet&)>;

// Parameter layouts: Heston [kappa, theta, sigma, rho, v0]; Bates appends [lambda, mu_j, sigma_j].
inline constexpr std::size_t kHestonDim = 5;
inline constexpr std::size_t kBatesDim = 8;
std::vector<std::string> heston_param_names();
std::vector<std::string> bates_param_names();
models::HestonParams heston_from_vector(std::span<const double> x);
models::BatesParams bates_from_vector(std::span<const double> x);
std::vector<double> to_vector(const models::HestonParams& p);
std::vector<double> to_vector(const models::BatesParams& p);

Bounds default_heston_bounds();
Bounds default_bates_bounds();

ChainPricer heston_chain_pricer(const PricingSetup& setup);
ChainPricer bates_chain_pricer(const PricingSetup& setup);

/// Prices every quote of a chain for fixed model parameters.
std::vector<double> model_prices(const models::BatesParams& params, const market::QuoteSet& quotes,
                                 const PricingSetup& setup);

/// Put quotes replaced by parity-implied calls; calls untouched.
market::QuoteSet with_synthetic_calls(const market::QuoteSet& quotes);

struct PriceErrors {
  double mse = 0.0;
  double mae = 0.0;
  std::vector<double> model;      // per quote, in input order
  std::vector<double> residuals;  // model - market, in input order
};

/// Per-quote penalty added to the squared-error sum for a non-finite model price.
inline constexpr double kQuotePenalty = 1e6;

class EmptyQuoteSet : public std::invalid_argument {
 public:
  EmptyQuoteSet() : std::invalid_argument("quote set is empty") {}
};

/// Mean squared and mean absolute price error. Accumulation runs in quote-key order so the
/// result does not depend on the order of the quotes.
PriceErrors price_mse(std::span<const double> params, const market::QuoteSet& quotes,
                      const ChainPricer& pricer);

struct StageLog {
  std::string name;
  std::vector<double> params;
  double mse = 0.0;
  double mae = 0.0;
  std::size_t evaluations = 0;
};

struct CalibrationResult {
  std::vector<std::string> names;
  std::vector<double> params;
  double mse = 0.0;
  double mae = 0.0;
  std::size_t n_quotes = 0;
  std::size_t objective_evals = 0;
  bool converged = false;
  double feller_margin = 0.0;
  std::vector<double> model_prices;
  std::vector<double> residuals;
  std::vector<StageLog> stages;
};

/// DE global search followed by bounded local refinement over the Heston parameters.
CalibrationResult calibrate_heston(const market::QuoteSet& quotes, const PricingSetup& setup,
                                   const OptimizerConfig& cfg,
                                   const Bounds& bounds = default_heston_bounds());

/// Heston stage, then jumps with Heston fixed, then all eight parameters jointly.
/// Each stage's MSE is no worse than the previous one.
CalibrationResult calibrate_bates_sequential(const market::QuoteSet& quotes,
                                             const PricingSetup& setup,
                                             const OptimizerConfig& cfg,
                                             const Bounds& bounds = default_bates_bounds());

}  // namespace volrate::calib
