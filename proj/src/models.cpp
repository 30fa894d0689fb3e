#include "volrate/models.hpp"

#include <algorithm>
#include <cmath>

namespace volrate::models {

namespace {

constexpr Complex kI(0.0, 1.0);

// (1 - e^{-z}) / z, analytic at z = 0.
Complex one_minus_exp_over(Complex z) {
  if (std::abs(z) < 1e-5) return 1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0;
  return (1.0 - std::exp(-z)) / z;
}

// log(1 + w) / w on the principal branch, analytic at w = 0.
Complex log1p_over(Complex w) {
  if (std::abs(w) < 1e-8) return 1.0 - w / 2.0 + w * w / 3.0;
  const Complex u = 1.0 + w;
  const Complex du = u - 1.0;
  if (du == 0.0) return 1.0;
  return std::log(u) / du;
}

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

// Exponent of the Heston CF without the iu(ln S0 + rT) level term.
Complex heston_log_cf_core(const HestonParams& p, Complex u, double t) {
  const Complex iu = kI * u;
  const Complex s = iu + u * u;

  if (p.sigma < kSigmaDegenerate) {
    // Deterministic variance: Gaussian log-return with integrated variance.
    return -0.5 * s * p.integrated_mean_variance(t);
  }

  const double sigma2 = p.sigma * p.sigma;
  const Complex beta = p.kappa - p.rho * p.sigma * iu;
  const Complex d = std::sqrt(beta * beta + sigma2 * s);
  const Complex plus = beta + d;
  const Complex minus = beta - d;

  // m = (beta - d) / sigma^2 without the cancellation in beta - d.
  const Complex m = std::abs(plus) >= std::abs(minus) ? -s / plus : minus / sigma2;

  const Complex e = std::exp(-d * t);
  const Complex decay_over_d = t * one_minus_exp_over(d * t);  // (1 - e^{-dt}) / d
  const Complex q = plus - minus * e;

  // log((1 - g e^{-dt}) / (1 - g)) = log1p(w), g = (beta - d)/(beta + d).
  const Complex w = 0.5 * sigma2 * m * decay_over_d;
  const Complex c = p.kappa * p.theta * m * (t - log1p_over(w) * decay_over_d);
  const Complex dcoef = -s * (1.0 - e) / q;
  return c + dcoef * p.v0;
}

}  // namespace

void HestonParams::validate() const {
  if (!(kappa > 0.0)) throw std::invalid_argument("heston kappa must be positive");
  if (!(theta > 0.0)) throw std::invalid_argument("heston theta must be positive");
  if (!(sigma >= 0.0)) throw std::invalid_argument("heston sigma must be non-negative");
  if (!(v0 > 0.0)) throw std::invalid_argument("heston v0 must be positive");
  if (!(rho >= -1.0 && rho <= 1.0)) throw std::invalid_argument("heston rho must lie in [-1, 1]");
  if (!std::isfinite(kappa) || !std::isfinite(theta) || !std::isfinite(sigma) ||
      !std::isfinite(v0)) {
    throw std::invalid_argument("heston parameters must be finite");
  }
}

double HestonParams::integrated_mean_variance(double t) const noexcept {
  const double x = kappa * t;
  const double decay = std::abs(x) < 1e-10 ? t : -std::expm1(-x) / kappa;
  return theta * t + (v0 - theta) * decay;
}

void JumpParams::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("jump intensity must be non-negative");
  }
  if (!(sigma_j >= 0.0) || !std::isfinite(sigma_j)) {
    throw std::invalid_argument("jump volatility must be non-negative");
  }
  if (!std::isfinite(mu_j)) throw std::invalid_argument("mean jump must be finite");
}

double jump_compensator(const JumpParams& jumps) {
  return std::expm1(jumps.mu_j + 0.5 * jumps.sigma_j * jumps.sigma_j);
}

Complex heston_cf(const HestonParams& params, const CfArgument& arg) {
  const Complex iu = kI * arg.u;
  const double level = std::log(arg.context.spot) + arg.context.risk_free_rate * arg.t_maturity;
  const Complex value = std::exp(iu * level + heston_log_cf_core(params, arg.u, arg.t_maturity));
  if (!finite(value)) throw NonFiniteResult("heston characteristic function overflowed");
  return value;
}

Complex bates_cf(const BatesParams& params, const CfArgument& arg) {
  const auto& j = params.jumps;
  const Complex u = arg.u;
  const Complex iu = kI * u;
  const double t = arg.t_maturity;
  const double level = std::log(arg.context.spot) + arg.context.risk_free_rate * t;

  Complex exponent = iu * level + heston_log_cf_core(params.heston, u, t);
  if (j.lambda != 0.0) {
    const Complex jump_cf = std::exp(iu * j.mu_j - 0.5 * u * u * j.sigma_j * j.sigma_j);
    exponent += j.lambda * t * (jump_cf - 1.0) - iu * j.lambda * jump_compensator(j) * t;
  }
  const Complex value = std::exp(exponent);
  if (!finite(value)) throw NonFiniteResult("bates characteristic function overflowed");
  return value;
}

CharacteristicFunction make_heston_cf(const HestonParams& params, double t,
                                      const market::MarketContext& context) {
  return [params, t, context](Complex u) { return heston_cf(params, {u, t, context}); };
}

CharacteristicFunction make_bates_cf(const BatesParams& params, double t,
                                     const market::MarketContext& context) {
  return [params, t, context](Complex u) { return bates_cf(params, {u, t, context}); };
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double bs_price(market::OptionKind kind, double spot, double strike, double rate, double vol,
                double t) {
  if (!(spot > 0.0) || !(strike > 0.0)) throw std::invalid_argument("spot and strike must be positive");
  if (vol < 0.0 || t < 0.0) throw std::invalid_argument("vol and maturity must be non-negative");
  const double df = std::exp(-rate * t);
  const double forward = spot * std::exp(rate * t);
  const double sd = vol * std::sqrt(t);
  if (sd == 0.0) {
    const double intrinsic = kind == market::OptionKind::Call ? forward - strike : strike - forward;
    return df * std::max(intrinsic, 0.0);
  }
  const double d1 = (std::log(forward / strike) + 0.5 * sd * sd) / sd;
  const double d2 = d1 - sd;
  if (kind == market::OptionKind::Call) return df * (forward * norm_cdf(d1) - strike * norm_cdf(d2));
  return df * (strike * norm_cdf(-d2) - forward * norm_cdf(-d1));
}

}  // namespace volrate::models
