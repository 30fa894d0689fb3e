#include "volrate/rates_cir.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "volrate/parallel.hpp"

namespace volrate::rates {

namespace {

constexpr double kWeek = 1.0 / 52.0;

CirParams cir_from(std::span<const double> x) { return {x[0], x[1], x[2], x[3]}; }

template <class Step>
RatePaths simulate(const CirParams& params, double horizon, const mc::PathConfig& cfg,
                   std::size_t stored, Step&& step) {
  cfg.validate();
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("horizon must be positive");
  }
  RatePaths out;
  out.horizon = horizon;
  out.n_steps = cfg.steps_for(horizon, 250);
  const auto n = static_cast<std::size_t>(cfg.n_paths);
  out.terminal.resize(n);
  out.integral.resize(n);
  stored = std::min(stored, n);
  out.sample.assign(stored, std::vector<double>(static_cast<std::size_t>(out.n_steps) + 1));
  const double dt = out.dt();

  parallel_for(n, cfg.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      PathRng rng(cfg.seed, i);
      double r = params.r0;
      double shown = std::max(r, 0.0);
      double area = 0.0;
      if (i < stored) out.sample[i][0] = shown;
      for (int j = 1; j <= out.n_steps; ++j) {
        r = step(r, dt, rng);
        const double next = std::max(r, 0.0);
        area += 0.5 * (shown + next) * dt;
        shown = next;
        if (i < stored) out.sample[i][static_cast<std::size_t>(j)] = shown;
      }
      out.terminal[i] = shown;
      out.integral[i] = area;
    }
  });
  return out;
}

}  // namespace

void CirParams::validate() const {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("cir kappa must be positive");
  if (!(theta > 0.0) || !std::isfinite(theta)) throw std::invalid_argument("cir theta must be positive");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("cir sigma must be positive");
  if (!(r0 >= 0.0) || !std::isfinite(r0)) throw std::invalid_argument("cir r0 must be non-negative");
}

double CirParams::half_life() const {
  if (!(kappa > 0.0)) throw std::invalid_argument("half-life needs kappa > 0");
  return std::log(2.0) / kappa;
}

double CirParams::conditional_mean(double r_start, double dt) const {
  return theta + (r_start - theta) * std::exp(-kappa * dt);
}

double CirParams::conditional_variance(double r_start, double dt) const {
  const double e = std::exp(-kappa * dt);
  return r_start * (sigma * sigma / kappa) * (e - e * e) +
         theta * (sigma * sigma / (2.0 * kappa)) * (1.0 - e) * (1.0 - e);
}

BondCoefficients cir_bond_coefficients(const CirParams& p, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("maturity must be non-negative");
  if (!(p.kappa > 0.0) || !(p.theta >= 0.0) || !(p.sigma >= 0.0)) {
    throw std::invalid_argument("invalid cir parameters");
  }
  if (t == 0.0) return {1.0, 0.0};
  const double s2 = p.sigma * p.sigma;
  const double gamma = std::sqrt(p.kappa * p.kappa + 2.0 * s2);
  // gamma - kappa without cancellation, and its ratio to sigma^2.
  const double delta_per_s2 = 2.0 / (p.kappa + gamma);
  const double delta = s2 * delta_per_s2;
  const double decay = std::exp(-gamma * t);
  const double one_minus = -std::expm1(-gamma * t);
  const double denom = p.kappa + gamma + delta * decay;

  BondCoefficients c;
  c.b = 2.0 * one_minus / denom;
  // ln A = (2 kappa theta / sigma^2) [ -log1p(y) - delta T / 2 ], y = -delta (1 - e^{-gamma T}) / (2 gamma).
  const double y_per_s2 = -delta_per_s2 * one_minus / (2.0 * gamma);
  const double y = y_per_s2 * s2;
  const double log1p_ratio = y == 0.0 ? 1.0 : std::log1p(y) / y;
  const double log_a = 2.0 * p.kappa * p.theta * (-log1p_ratio * y_per_s2 - 0.5 * delta_per_s2 * t);
  c.a = std::exp(log_a);
  return c;
}

double cir_bond_price(const CirParams& params, double t) {
  const auto c = cir_bond_coefficients(params, t);
  return c.a * std::exp(-c.b * params.r0);
}

ZeroCurve::ZeroCurve(std::vector<double> tenors, std::vector<double> rates)
    : tenors_(std::move(tenors)), rates_(std::move(rates)) {
  if (tenors_.size() != rates_.size()) throw std::invalid_argument("tenor and rate counts differ");
  if (tenors_.size() < 3) throw InsufficientPoints();
  for (std::size_t i = 0; i < tenors_.size(); ++i) {
    if (!std::isfinite(tenors_[i]) || !std::isfinite(rates_[i])) {
      throw std::invalid_argument("curve points must be finite");
    }
    if (i > 0 && !(tenors_[i] > tenors_[i - 1])) throw NonMonotoneTenors();
  }
  if (tenors_.front() < kWeek - 1e-12) throw std::invalid_argument("shortest tenor is one week");

  // Natural spline: tridiagonal system for interior second derivatives (Thomas algorithm).
  const std::size_t n = tenors_.size();
  second_.assign(n, 0.0);
  std::vector<double> diag(n, 0.0), upper(n, 0.0), rhs(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = tenors_[i] - tenors_[i - 1];
    const double h1 = tenors_[i + 1] - tenors_[i];
    diag[i] = 2.0 * (h0 + h1);
    upper[i] = h1;
    rhs[i] = 6.0 * ((rates_[i + 1] - rates_[i]) / h1 - (rates_[i] - rates_[i - 1]) / h0);
    if (i > 1) {
      const double w = h0 / diag[i - 1];
      diag[i] -= w * upper[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
  }
  for (std::size_t i = n - 2; i >= 1; --i) {
    second_[i] = (rhs[i] - upper[i] * second_[i + 1]) / diag[i];
    if (i == 1) break;
  }
}

double ZeroCurve::rate(double t) const {
  const double tol = 1e-12;
  if (!(t >= min_tenor() - tol && t <= max_tenor() + tol)) {
    throw std::out_of_range("tenor outside the curve");
  }
  t = std::clamp(t, min_tenor(), max_tenor());
  auto it = std::upper_bound(tenors_.begin(), tenors_.end(), t);
  std::size_t hi = static_cast<std::size_t>(it - tenors_.begin());
  hi = std::clamp<std::size_t>(hi, 1, tenors_.size() - 1);
  const std::size_t lo = hi - 1;
  const double h = tenors_[hi] - tenors_[lo];
  const double a = (tenors_[hi] - t) / h;
  const double b = (t - tenors_[lo]) / h;
  return a * rates_[lo] + b * rates_[hi] +
         ((a * a * a - a) * second_[lo] + (b * b * b - b) * second_[hi]) * h * h / 6.0;
}

double ZeroCurve::discount(double t) const { return std::exp(-rate(t) * t); }

std::vector<double> ZeroCurve::weekly_grid() const {
  std::vector<double> grid;
  for (int k = 1;; ++k) {
    const double t = k * kWeek;
    if (t > max_tenor() + 1e-12) break;
    if (t >= min_tenor() - 1e-12) grid.push_back(std::min(t, max_tenor()));
  }
  return grid;
}

ZeroCurve build_zero_curve(const std::vector<market::RatePoint>& points) {
  if (points.size() < 3) throw InsufficientPoints();
  std::vector<double> tenors, rates;
  for (const auto& p : points) {
    tenors.push_back(p.tenor_months / 12.0);
    rates.push_back(p.rate);
  }
  return ZeroCurve(std::move(tenors), std::move(rates));
}

calib::Bounds default_cir_bounds(double theta_cap) {
  return {{0.01, 1e-4, 1e-3, 0.0}, {10.0, theta_cap, 1.0, 0.2}};
}

CirCalibration calibrate_cir(const ZeroCurve& curve, const calib::OptimizerConfig& cfg,
                             double theta_cap, const calib::Bounds& bounds_in) {
  if (!(theta_cap > 0.0)) throw std::invalid_argument("theta cap must be positive");
  if (curve.max_tenor() < 0.5 - 1e-9) {
    throw std::invalid_argument("curve must span at least six months");
  }
  calib::Bounds bounds = bounds_in.dimension() == 0 ? default_cir_bounds(theta_cap) : bounds_in;
  if (bounds.dimension() != 4) throw std::invalid_argument("cir bounds need 4 entries");
  bounds.upper[1] = std::min(bounds.upper[1], theta_cap);
  bounds.validate();

  CirCalibration out;
  out.grid = curve.weekly_grid();
  std::vector<double> market_df;
  for (double t : out.grid) {
    out.market_rates.push_back(curve.rate(t));
    market_df.push_back(curve.discount(t));
  }
  const auto n = static_cast<double>(out.grid.size());
  // Residuals whose sum of squares is the penalised objective.
  const calib::Residuals residuals = [&](std::span<const double> x) {
    const auto p = cir_from(x);
    std::vector<double> r(out.grid.size() + 1);
    const double scale = 1.0 / std::sqrt(n);
    for (std::size_t i = 0; i < out.grid.size(); ++i) {
      r[i] = scale * (cir_bond_price(p, out.grid[i]) - market_df[i]);
    }
    r.back() = std::sqrt(kFellerPenaltyWeight) * std::max(0.0, -p.feller_margin());
    return r;
  };
  auto df_mse = [&](const CirParams& p) {
    double sq = 0.0;
    for (std::size_t i = 0; i < out.grid.size(); ++i) {
      const double e = cir_bond_price(p, out.grid[i]) - market_df[i];
      sq += e * e;
    }
    return sq / n;
  };
  const calib::Objective objective = [&](std::span<const double> x) {
    const auto p = cir_from(x);
    const double f = df_mse(p);
    const double violation = std::max(0.0, -p.feller_margin());
    const double value = f + kFellerPenaltyWeight * violation * violation;
    return std::isfinite(value) ? value : calib::kPenaltyValue;
  };

  const auto global = calib::differential_evolution(objective, bounds, cfg);
  const auto local = calib::least_squares_refine(residuals, global.best, bounds, cfg);
  out.params = cir_from(local.x);
  out.objective = local.value;
  out.mse = df_mse(out.params);
  out.objective_evals = global.evaluations + local.evaluations;
  out.converged = local.converged;
  out.feller_satisfied = out.params.feller_satisfied();

  double sq = 0.0, abs_sum = 0.0;
  for (std::size_t i = 0; i < out.grid.size(); ++i) {
    const double t = out.grid[i];
    const double model = -std::log(cir_bond_price(out.params, t)) / t;
    out.model_rates.push_back(model);
    const double e_bp = (model - out.market_rates[i]) * 1e4;
    sq += e_bp * e_bp;
    abs_sum += std::abs(e_bp);
  }
  out.rmse_bp = std::sqrt(sq / n);
  out.mae_bp = abs_sum / n;
  return out;
}

RatePaths simulate_cir_euler(const CirParams& params, double horizon, const mc::PathConfig& cfg,
                             std::size_t stored) {
  if (!(params.kappa >= 0.0 && params.theta >= 0.0 && params.sigma >= 0.0 && params.r0 >= 0.0)) {
    throw std::invalid_argument("invalid cir parameters");
  }
  return simulate(params, horizon, cfg, stored, [&](double r, double dt, PathRng& rng) {
    std::normal_distribution<double> normal;
    const double rp = std::max(r, 0.0);
    return r + params.kappa * (params.theta - rp) * dt +
           params.sigma * std::sqrt(rp) * std::sqrt(dt) * normal(rng);
  });
}

double sample_cir_exact(const CirParams& params, double r_start, double dt, PathRng& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const double s2 = params.sigma * params.sigma;
  const double one_minus = -std::expm1(-params.kappa * dt);
  const double c = s2 * one_minus / (4.0 * params.kappa);
  const double dof = 4.0 * params.kappa * params.theta / s2;
  const double nc = std::max(r_start, 0.0) * std::exp(-params.kappa * dt) / c;
  int mix = 0;
  if (nc > 0.0) {
    std::poisson_distribution<int> poisson(0.5 * nc);
    mix = poisson(rng);
  }
  const double shape = 0.5 * dof + mix;
  if (!(shape > 0.0)) return 0.0;
  std::gamma_distribution<double> gamma(shape, 2.0);
  return c * gamma(rng);
}

RatePaths simulate_cir_exact(const CirParams& params, double horizon, const mc::PathConfig& cfg,
                             std::size_t stored) {
  params.validate();
  return simulate(params, horizon, cfg, stored, [&](double r, double dt, PathRng& rng) {
    return sample_cir_exact(params, r, dt, rng);
  });
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level must lie in [0, 1]");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

RateDistribution discount_stats(const RatePaths& paths, const CirParams& params, double flat_rate) {
  const std::size_t n = paths.terminal.size();
  if (n < 2 || paths.integral.size() != n) throw std::invalid_argument("need at least two paths");
  RateDistribution d;
  d.n_paths = n;
  d.horizon = paths.horizon;
  const auto count = static_cast<double>(n);
  d.mean = pairwise_sum(paths.terminal) / count;
  std::vector<double> sorted = paths.terminal;
  std::sort(sorted.begin(), sorted.end());
  d.min = sorted.front();
  d.median = quantile(sorted, 0.5);
  d.p05 = quantile(sorted, 0.05);
  d.p95 = quantile(sorted, 0.95);

  std::vector<double> df(n);
  std::transform(paths.integral.begin(), paths.integral.end(), df.begin(),
                 [](double area) { return std::exp(-area); });
  d.mean_df = pairwise_sum(df) / count;
  std::vector<double> dev(n);
  std::transform(df.begin(), df.end(), dev.begin(),
                 [&](double x) { return (x - d.mean_df) * (x - d.mean_df); });
  d.df_std_error = std::sqrt(pairwise_sum(dev) / (count - 1.0) / count);
  d.flat_df = std::exp(-flat_rate * paths.horizon);
  d.df_gap = d.mean_df / d.flat_df - 1.0;
  d.bond_df = cir_bond_price(params, paths.horizon);
  return d;
}

}  // namespace volrate::rates
