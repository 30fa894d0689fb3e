// Independent reference computations for the tests. Nothing here calls the library's pricers or
// simulators; the random streams come from std::mt19937_64.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

/// Composite Simpson rule on [a, b] with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Black-Scholes call by integrating the payoff against the lognormal density of S_T.
inline double bs_call_by_quadrature(double spot, double strike, double rate, double vol,
                                    double t) {
  const double m = std::log(spot) + (rate - 0.5 * vol * vol) * t;
  const double s = vol * std::sqrt(t);
  auto integrand = [&](double x) {
    const double z = (x - m) / s;
    const double density = std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * std::numbers::pi));
    return std::max(std::exp(x) - strike, 0.0) * density;
  };
  const double lo = std::log(strike);
  return std::exp(-rate * t) * simpson(integrand, lo, m + 12.0 * s, 200000);
}

struct Mean {
  double mean = 0.0;
  double se = 0.0;
};

inline Mean mean_and_se(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  const double m = s / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  const double var = ss / static_cast<double>(xs.size() - 1);
  return {m, std::sqrt(var / static_cast<double>(xs.size()))};
}

struct EquityModel {
  double kappa, theta, sigma, rho, v0;
  double lambda = 0.0, mu_j = 0.0, sigma_j = 0.0;
};

/// Terminal log-prices from a plain Euler scheme: full-truncation variance, exact log step
/// for the diffusion, jumps drawn one by one.
inline std::vector<double> terminal_log_prices(const EquityModel& m, double spot, double rate,
                                               double t, int steps, int paths,
                                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double dt = t / steps;
  std::poisson_distribution<int> poisson(m.lambda * dt);
  const double kbar = std::exp(m.mu_j + 0.5 * m.sigma_j * m.sigma_j) - 1.0;
  const double c = std::sqrt(1.0 - m.rho * m.rho);
  std::vector<double> out(static_cast<std::size_t>(paths));
  for (auto& x_out : out) {
    double x = std::log(spot);
    double v = m.v0;
    for (int k = 0; k < steps; ++k) {
      const double z1 = normal(rng);
      const double z2 = m.rho * z1 + c * normal(rng);
      const double vp = std::max(v, 0.0);
      x += (rate - m.lambda * kbar - 0.5 * vp) * dt + std::sqrt(vp * dt) * z1;
      if (m.lambda > 0.0) {
        const int jumps = poisson(rng);
        for (int j = 0; j < jumps; ++j) x += m.mu_j + m.sigma_j * normal(rng);
      }
      v += m.kappa * (m.theta - vp) * dt + m.sigma * std::sqrt(vp * dt) * z2;
    }
    x_out = x;
  }
  return out;
}

/// Deterministic short-rate path r(t) = theta + (r0 - theta) e^{-kappa t}.
inline double ode_rate(double kappa, double theta, double r0, double t) {
  return theta + (r0 - theta) * std::exp(-kappa * t);
}

}  // namespace oracle
