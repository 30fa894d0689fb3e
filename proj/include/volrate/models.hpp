#pragma once

#include <complex>
#include <functional>
#include <stdexcept>

#include "volrate/market_data.hpp"

namespace volrate::models {

using Complex = std::complex<double>;

/// Risk-neutral Heston parameters. Variance quantities are annualised.
struct HestonParams {
  double kappa = 1.0;   // mean-reversion speed
  double theta = 0.04;  // long-run variance
  double sigma = 0.0;   // vol-of-vol
  double rho = 0.0;
  double v0 = 0.04;

  void validate() const;
  /// 2 kappa theta - sigma^2; reported, never enforced for equity fits.
  double feller_margin() const noexcept { return 2.0 * kappa * theta - sigma * sigma; }
  /// Integral of the deterministic variance path theta + (v0 - theta) e^{-kappa t} over [0, t].
  double integrated_mean_variance(double t) const noexcept;
};

/// Compound-Poisson lognormal jumps: intensity lambda, log-jump ~ N(mu_j, sigma_j^2).
struct JumpParams {
  double lambda = 0.0;
  double mu_j = 0.0;
  double sigma_j = 0.0;

  void validate() const;
};

struct BatesParams {
  HestonParams heston;
  JumpParams jumps;

  void validate() const { heston.validate(); jumps.validate(); }
};

struct CfArgument {
  Complex u;
  double t_maturity = 0.0;
  market::MarketContext context;
};

class NonFiniteResult : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Below this vol-of-vol the CF uses the deterministic-variance limit.
inline constexpr double kSigmaDegenerate = 1e-8;

/// k_bar = E[e^J - 1] = e^{mu_j + sigma_j^2 / 2} - 1.
double jump_compensator(const JumpParams& jumps);

/// CF of ln S_T, E[exp(iu ln S_T)], including the ln S0 + rT level.
Complex heston_cf(const HestonParams& params, const CfArgument& arg);
/// Heston CF times the compound-Poisson factor and the -iu lambda k_bar T drift correction.
Complex bates_cf(const BatesParams& params, const CfArgument& arg);

/// CF of ln S_T bound to one maturity and market; the pricers' input.
using CharacteristicFunction = std::function<Complex(Complex)>;

CharacteristicFunction make_heston_cf(const HestonParams& params, double t,
                                      const market::MarketContext& context);
CharacteristicFunction make_bates_cf(const BatesParams& params, double t,
                                     const market::MarketContext& context);

double norm_cdf(double x);

/// Black-Scholes value; vol = 0 or T = 0 gives discounted intrinsic on the forward.
double bs_price(market::OptionKind kind, double spot, double strike, double rate, double vol,
                double t);

}  // namespace volrate::models
