#include "volrate/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace volrate::calib {

namespace {

using market::OptionKind;
using market::QuoteSet;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct StageOutcome {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
};

StageOutcome run_stage(const Objective& objective, const Bounds& bounds,
                       const OptimizerConfig& cfg, const std::vector<std::vector<double>>& seeds) {
  const auto global = differential_evolution(objective, bounds, cfg, seeds);
  const auto local = local_refine(objective, global.best, bounds, cfg);
  return {local.x, local.value, global.evaluations + local.evaluations, local.converged};
}

Bounds slice(const Bounds& b, std::size_t first, std::size_t count) {
  Bounds out;
  out.lower.assign(b.lower.begin() + first, b.lower.begin() + first + count);
  out.upper.assign(b.upper.begin() + first, b.upper.begin() + first + count);
  return out;
}

void check_chain(const QuoteSet& quotes) {
  if (quotes.empty()) throw EmptyQuoteSet();
  if (quotes.distinct_strikes() < 5) {
    throw std::invalid_argument("calibration needs quotes at five or more distinct strikes");
  }
}

void fill_result(CalibrationResult& r, const QuoteSet& quotes, const ChainPricer& pricer) {
  const auto errors = price_mse(r.params, quotes, pricer);
  r.mse = errors.mse;
  r.mae = errors.mae;
  r.model_prices = errors.model;
  r.residuals = errors.residuals;
  r.n_quotes = quotes.size();
  r.feller_margin = heston_from_vector(r.params).feller_margin();
}

}  // namespace

std::string pricer_name(PricerChoice choice) {
  return choice == PricerChoice::LewisIntegral ? "lewis" : "fft";
}

std::vector<std::string> heston_param_names() { return {"kappa", "theta", "sigma", "rho", "v0"}; }

std::vector<std::string> bates_param_names() {
  auto names = heston_param_names();
  names.insert(names.end(), {"lambda", "mu_j", "sigma_j"});
  return names;
}

models::HestonParams heston_from_vector(std::span<const double> x) {
  if (x.size() < kHestonDim) throw std::invalid_argument("heston vector needs 5 entries");
  return {x[0], x[1], x[2], x[3], x[4]};
}

models::BatesParams bates_from_vector(std::span<const double> x) {
  models::BatesParams p;
  p.heston = heston_from_vector(x);
  if (x.size() >= kBatesDim) p.jumps = {x[5], x[6], x[7]};
  return p;
}

std::vector<double> to_vector(const models::HestonParams& p) {
  return {p.kappa, p.theta, p.sigma, p.rho, p.v0};
}

std::vector<double> to_vector(const models::BatesParams& p) {
  auto v = to_vector(p.heston);
  v.insert(v.end(), {p.jumps.lambda, p.jumps.mu_j, p.jumps.sigma_j});
  return v;
}

Bounds default_heston_bounds() {
  return {{0.01, 1e-3, 1e-6, -0.999, 1e-3}, {20.0, 1.0, 2.0, 0.999, 1.0}};
}

Bounds default_bates_bounds() {
  auto b = default_heston_bounds();
  b.lower.insert(b.lower.end(), {0.0, -0.5, 1e-6});
  b.upper.insert(b.upper.end(), {5.0, 0.5, 1.0});
  return b;
}

std::vector<double> model_prices(const models::BatesParams& params, const QuoteSet& quotes,
                                 const PricingSetup& setup) {
  std::vector<double> out(quotes.size(), kNaN);
  try {
    params.validate();
  } catch (const std::invalid_argument&) {
    return out;
  }
  const auto& ctx = quotes.context();
  std::map<int, std::vector<std::size_t>> by_maturity;
  for (std::size_t i = 0; i < quotes.size(); ++i) by_maturity[quotes[i].maturity_days].push_back(i);

  for (const auto& [days, idx] : by_maturity) {
    const double t = market::year_fraction(days, ctx);
    std::vector<double> strikes;
    std::vector<OptionKind> kinds;
    for (auto i : idx) {
      strikes.push_back(quotes[i].strike);
      kinds.push_back(quotes[i].kind);
    }
    const auto cf = models::make_bates_cf(params, t, ctx);
    try {
      const auto prices =
          setup.method == PricerChoice::LewisIntegral
              ? fourier::european_strip_fourier(cf, ctx.spot, strikes, kinds, ctx.risk_free_rate, t,
                                                setup.integration)
              : fourier::carr_madan_strip(cf, ctx.spot, strikes, kinds, ctx.risk_free_rate, t,
                                          setup.fft);
      for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]] = prices[k].value;
    } catch (const fourier::IntegrationDiverged&) {
    } catch (const fourier::NonFiniteGrid&) {
    } catch (const fourier::StrikeOutOfGrid&) {
    } catch (const models::NonFiniteResult&) {
    }
  }
  return out;
}

ChainPricer heston_chain_pricer(const PricingSetup& setup) {
  return [setup](std::span<const double> x, const QuoteSet& quotes) {
    models::BatesParams p;
    p.heston = heston_from_vector(x);
    return model_prices(p, quotes, setup);
  };
}

ChainPricer bates_chain_pricer(const PricingSetup& setup) {
  return [setup](std::span<const double> x, const QuoteSet& quotes) {
    if (x.size() < kBatesDim) throw std::invalid_argument("bates vector needs 8 entries");
    return model_prices(bates_from_vector(x), quotes, setup);
  };
}

QuoteSet with_synthetic_calls(const QuoteSet& quotes) {
  std::vector<market::OptionQuote> converted;
  converted.reserve(quotes.size());
  for (const auto& q : quotes.quotes()) {
    converted.push_back(q.kind == OptionKind::Put
                            ? market::put_to_synthetic_call(q, quotes.context())
                            : q);
  }
  // A put and a call at the same (K, T) collapse onto one key; keep the first.
  std::vector<market::OptionQuote> unique;
  for (const auto& q : converted) {
    const bool seen = std::any_of(unique.begin(), unique.end(), [&](const auto& u) {
      return market::quote_key(u) == market::quote_key(q);
    });
    if (!seen) unique.push_back(q);
  }
  return QuoteSet(quotes.context(), std::move(unique));
}

PriceErrors price_mse(std::span<const double> params, const QuoteSet& quotes,
                      const ChainPricer& pricer) {
  if (quotes.empty()) throw EmptyQuoteSet();
  PriceErrors e;
  e.model = pricer(params, quotes);
  e.residuals.resize(quotes.size());

  std::vector<std::size_t> order(quotes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return market::quote_key(quotes[a]) < market::quote_key(quotes[b]);
  });

  double sq = 0.0;
  double abs_sum = 0.0;
  for (auto i : order) {
    const double r = e.model[i] - quotes[i].price;
    e.residuals[i] = r;
    if (std::isfinite(r)) {
      sq += r * r;
      abs_sum += std::abs(r);
    } else {
      sq += kQuotePenalty;
      abs_sum += std::sqrt(kQuotePenalty);
    }
  }
  const auto n = static_cast<double>(quotes.size());
  e.mse = sq / n;
  e.mae = abs_sum / n;
  return e;
}

CalibrationResult calibrate_heston(const QuoteSet& quotes, const PricingSetup& setup,
                                   const OptimizerConfig& cfg, const Bounds& bounds) {
  check_chain(quotes);
  if (bounds.dimension() != kHestonDim) throw std::invalid_argument("heston bounds need 5 entries");
  const QuoteSet working =
      setup.puts == PutHandling::SyntheticCall ? with_synthetic_calls(quotes) : quotes;
  const auto pricer = heston_chain_pricer(setup);
  const Objective objective = [&](std::span<const double> x) {
    return price_mse(x, working, pricer).mse;
  };

  const auto stage = run_stage(objective, bounds, cfg, {});
  CalibrationResult r;
  r.names = heston_param_names();
  r.params = stage.x;
  r.objective_evals = stage.evaluations;
  r.converged = stage.converged && stage.value < kPenaltyValue;
  fill_result(r, working, pricer);
  r.stages.push_back({"heston", r.params, r.mse, r.mae, stage.evaluations});
  return r;
}

CalibrationResult calibrate_bates_sequential(const QuoteSet& quotes, const PricingSetup& setup,
                                             const OptimizerConfig& cfg, const Bounds& bounds) {
  check_chain(quotes);
  if (bounds.dimension() != kBatesDim) throw std::invalid_argument("bates bounds need 8 entries");
  const QuoteSet working =
      setup.puts == PutHandling::SyntheticCall ? with_synthetic_calls(quotes) : quotes;
  const auto pricer = bates_chain_pricer(setup);
  auto full_mse = [&](std::span<const double> x) { return price_mse(x, working, pricer).mse; };

  CalibrationResult r;
  r.names = bates_param_names();
  std::size_t evals = 0;

  // Stage 1: diffusion parameters with jumps switched off.
  const auto heston_bounds = slice(bounds, 0, kHestonDim);
  const std::vector<double> no_jumps{0.0, std::clamp(0.0, bounds.lower[6], bounds.upper[6]),
                                     bounds.lower[7]};
  const Objective stage1_obj = [&](std::span<const double> h) {
    std::vector<double> x(h.begin(), h.end());
    x.insert(x.end(), no_jumps.begin(), no_jumps.end());
    return full_mse(x);
  };
  const auto s1 = run_stage(stage1_obj, heston_bounds, cfg, {});
  evals += s1.evaluations;
  std::vector<double> current = s1.x;
  current.insert(current.end(), no_jumps.begin(), no_jumps.end());
  double current_mse = full_mse(current);
  r.stages.push_back({"heston", current, current_mse, price_mse(current, working, pricer).mae,
                      s1.evaluations});

  // Stage 2: jump parameters with the diffusion fixed; the jump-free point seeds DE.
  const auto jump_bounds = slice(bounds, kHestonDim, 3);
  const std::vector<double> fixed_heston(current.begin(), current.begin() + kHestonDim);
  const Objective stage2_obj = [&](std::span<const double> j) {
    std::vector<double> x = fixed_heston;
    x.insert(x.end(), j.begin(), j.end());
    return full_mse(x);
  };
  const auto s2 = run_stage(stage2_obj, jump_bounds, cfg, {no_jumps});
  evals += s2.evaluations;
  if (s2.value < current_mse) {
    std::copy(s2.x.begin(), s2.x.end(), current.begin() + kHestonDim);
    current_mse = full_mse(current);
  }
  r.stages.push_back({"jumps", current, current_mse, price_mse(current, working, pricer).mae,
                      s2.evaluations});

  // Stage 3: joint re-optimisation seeded with the stage-2 point.
  const Objective stage3_obj = full_mse;
  const auto s3 = run_stage(stage3_obj, bounds, cfg, {current});
  evals += s3.evaluations;
  if (s3.value < current_mse) {
    current = s3.x;
    current_mse = s3.value;
  }
  r.stages.push_back({"joint", current, current_mse, price_mse(current, working, pricer).mae,
                      s3.evaluations});

  r.params = current;
  r.objective_evals = evals;
  r.converged = s3.converged && current_mse < kPenaltyValue;
  fill_result(r, working, pricer);
  return r;
}

}  // namespace volrate::calib
