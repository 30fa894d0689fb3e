#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "volrate/fourier_pricing.hpp"

using namespace volrate;
using namespace volrate::fourier;
using market::MarketContext;
using market::OptionKind;
using models::BatesParams;
using models::HestonParams;

namespace {

const MarketContext kCtx{232.90, 0.015, 250};
const double kSpot = kCtx.spot;
const double kRate = kCtx.risk_free_rate;

// Fitted parameter sets used as realistic regimes.
const HestonParams kShortFit{0.3981, 0.08748, 0.0, 0.9906, 0.1016};
const HestonParams kMidFit{15.53, 0.1589, 0.00103, -0.00819, 0.04806};
const HestonParams kParityFit{6.011, 0.2027, 0.020265, -0.04184, 0.0027255};
const BatesParams kBatesFit{{15.562, 0.15865, 0.000017, -0.00571, 0.04832},
                            {0.0, -0.00592, 0.0000548}};

HestonParams random_heston(std::mt19937_64& rng) {
  auto u = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  return {u(0.2, 10.0), u(0.01, 0.4), u(0.0, 1.2), u(-0.95, 0.95), u(0.01, 0.4)};
}

double deterministic_vol(const HestonParams& p, double t) {
  return std::sqrt(p.integrated_mean_variance(t) / t);
}

}  // namespace

TEST_CASE("probabilities at extreme strikes") {
  const double t = 0.24;
  const auto cf = models::make_heston_cf({2.0, 0.05, 0.4, -0.6, 0.04}, t, kCtx);
  const auto low = heston_probabilities(cf, kSpot, kSpot * 1e-9, kRate, t);
  CHECK(low.p1 == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(low.p2 == doctest::Approx(1.0).epsilon(1e-6));
  const auto high = heston_probabilities(cf, kSpot, kSpot * 1e6, kRate, t);
  CHECK(std::abs(high.p1) < 1e-6);
  CHECK(std::abs(high.p2) < 1e-6);
}

TEST_CASE("deterministic variance prices like black-scholes on the mean variance") {
  const double t = 0.06;
  const auto cf = models::make_heston_cf(kShortFit, t, kCtx);
  const double bs = models::bs_price(OptionKind::Call, kSpot, kSpot, kRate,
                                     deterministic_vol(kShortFit, t), t);
  CHECK(std::abs(european_call_fourier(cf, kSpot, kSpot, kRate, t) - bs) < 1e-3);
}

TEST_CASE("mid-maturity fit reprices the quoted strike") {
  const auto cf = models::make_heston_cf(kMidFit, 0.24, kCtx);
  CHECK(european_call_fourier(cf, kSpot, 235.0, kRate, 0.24) == doctest::Approx(15.81).epsilon(0.02 / 15.81));
}

TEST_CASE("parity-data fit agrees with its black-scholes proxy") {
  // Vol-of-vol 0.02 is small enough that the mean-variance proxy holds to a few cents.
  const double t = 0.24;
  const auto cf = models::make_heston_cf(kParityFit, t, kCtx);
  const double bs =
      models::bs_price(OptionKind::Call, kSpot, 235.0, kRate, deterministic_vol(kParityFit, t), t);
  const double price = european_call_fourier(cf, kSpot, 235.0, kRate, t);
  CHECK(std::abs(price - bs) < 0.02);
  CHECK(price == doctest::Approx(13.5698).epsilon(1e-4));
}

TEST_CASE("deep in the money call is the discounted forward intrinsic") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10; ++i) {
    const auto p = random_heston(rng);
    const double t = 0.5;
    const auto cf = models::make_heston_cf(p, t, kCtx);
    CHECK(std::abs(european_call_fourier(cf, kSpot, 1.0, kRate, t) -
                   (kSpot - std::exp(-kRate * t))) < 1e-4);
    CHECK(std::abs(european_put_fourier(cf, kSpot, kSpot * 1e-9, kRate, t)) < 1e-6);
  }
}

TEST_CASE("put-call parity and no-arbitrage bounds") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 60; ++i) {
    const auto p = random_heston(rng);
    const double t = 0.05 + 1.5 * u(rng);
    const double k = kSpot * (0.6 + 0.8 * u(rng));
    const auto cf = models::make_heston_cf(p, t, kCtx);
    const double call = european_call_fourier(cf, kSpot, k, kRate, t);
    const double put = european_put_fourier(cf, kSpot, k, kRate, t);
    const double pv = k * std::exp(-kRate * t);
    CHECK(std::abs(call - put - (kSpot - pv)) < 1e-9);
    CHECK(call >= std::max(kSpot - pv, 0.0) - 1e-9);
    CHECK(call <= kSpot);
    CHECK(put >= std::max(pv - kSpot, 0.0) - 1e-9);
    CHECK(put <= pv);
  }
}

TEST_CASE("european put under the fitted jump model") {
  const double t = 0.28, k = 221.255;
  const auto cf = models::make_bates_cf(kBatesFit, t, kCtx);
  const double put = european_put_fourier(cf, kSpot, k, kRate, t);
  CHECK(put == doctest::Approx(11.8867893).epsilon(1e-8));

  const auto& h = kBatesFit.heston;
  const auto& j = kBatesFit.jumps;
  const auto x = oracle::terminal_log_prices(
      {h.kappa, h.theta, h.sigma, h.rho, h.v0, j.lambda, j.mu_j, j.sigma_j}, kSpot, kRate, t, 70,
      1000000, 41);
  std::vector<double> payoff(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    payoff[i] = std::exp(-kRate * t) * std::max(k - std::exp(x[i]), 0.0);
  }
  const auto mc = oracle::mean_and_se(payoff);
  CHECK(std::abs(put - mc.mean) < 3.0 * mc.se);
}

TEST_CASE("european put with active jumps against simulation") {
  BatesParams p = kBatesFit;
  p.jumps = {2.0, -0.1, 0.15};
  const double t = 0.28, k = 221.255;
  const double put = european_put_fourier(models::make_bates_cf(p, t, kCtx), kSpot, k, kRate, t);
  CHECK(put == doctest::Approx(15.1034001).epsilon(1e-8));
  const auto& h = p.heston;
  const auto x = oracle::terminal_log_prices(
      {h.kappa, h.theta, h.sigma, h.rho, h.v0, p.jumps.lambda, p.jumps.mu_j, p.jumps.sigma_j},
      kSpot, kRate, t, 70, 1000000, 43);
  std::vector<double> payoff(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    payoff[i] = std::exp(-kRate * t) * std::max(k - std::exp(x[i]), 0.0);
  }
  const auto mc = oracle::mean_and_se(payoff);
  CHECK(std::abs(put - mc.mean) < 3.0 * mc.se);
}

TEST_CASE("carr-madan grid geometry") {
  const FftConfig cfg;
  const double t = 0.24;
  const auto grid = carr_madan_grid(models::make_heston_cf(kMidFit, t, kCtx), kSpot, kRate, t, cfg);
  REQUIRE(grid.size() == static_cast<std::size_t>(cfg.n_grid));
  const double dk = 2.0 * M_PI / (cfg.n_grid * cfg.eta);
  CHECK(cfg.log_strike_spacing() == dk);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    CHECK(grid[i].log_strike - grid[i - 1].log_strike == doctest::Approx(dk).epsilon(1e-9));
  }
  const double centre = 0.5 * (grid.front().log_strike + grid.back().log_strike);
  CHECK(std::abs(centre - std::log(kSpot)) < dk);
}

TEST_CASE("grid prices are monotone and convex in strike") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) {
    const auto p = random_heston(rng);
    const double t = 0.25;
    const auto grid = carr_madan_grid(models::make_heston_cf(p, t, kCtx), kSpot, kRate, t);
    const std::size_t lo = grid.size() / 4, hi = 3 * grid.size() / 4;
    // The grid is uniform in log-strike, so convexity is checked on slopes in K itself.
    auto slope = [&](std::size_t j) {
      return (grid[j + 1].call_price - grid[j].call_price) /
             (std::exp(grid[j + 1].log_strike) - std::exp(grid[j].log_strike));
    };
    for (std::size_t j = lo + 1; j < hi; ++j) {
      CHECK(grid[j].call_price <= grid[j - 1].call_price + 1e-6 * kSpot);
      const double dk = std::exp(grid[j + 1].log_strike) - std::exp(grid[j - 1].log_strike);
      CHECK((slope(j) - slope(j - 1)) * dk >= -1e-6 * kSpot);
    }
  }
}

TEST_CASE("grid interpolation at a node returns the node value") {
  const double t = 0.24;
  const auto grid = carr_madan_grid(models::make_heston_cf(kMidFit, t, kCtx), kSpot, kRate, t);
  for (std::size_t j : {grid.size() / 2, grid.size() / 2 + 17, grid.size() / 2 - 100}) {
    CHECK(interpolate_grid(grid, std::exp(grid[j].log_strike)) == grid[j].call_price);
  }
  CHECK_THROWS_AS(interpolate_grid(grid, kSpot * 1e-6), StrikeOutOfGrid);
  CHECK_THROWS_AS(interpolate_grid(grid, kSpot * 1e6), StrikeOutOfGrid);
}

TEST_CASE("carr-madan agrees with the integral pricer") {
  for (const auto& p : {kShortFit, kMidFit, kParityFit}) {
    for (double t : {0.06, 0.24}) {
      const auto cf = models::make_heston_cf(p, t, kCtx);
      for (double k : {kSpot, 235.0, 0.9 * kSpot, 1.1 * kSpot}) {
        CHECK(std::abs(carr_madan_price(cf, kSpot, k, kRate, t) -
                       european_call_fourier(cf, kSpot, k, kRate, t)) < 0.01);
      }
    }
  }
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const auto p = random_heston(rng);
    const double t = 0.04 + 0.5 * u(rng);
    const double k = kSpot * (0.7 + 0.6 * u(rng));
    const auto cf = models::make_heston_cf(p, t, kCtx);
    CHECK(std::abs(carr_madan_price(cf, kSpot, k, kRate, t) -
                   european_call_fourier(cf, kSpot, k, kRate, t)) < 0.01);
  }
}

TEST_CASE("damping exponent barely moves the at-the-money price") {
  const double t = 0.24;
  const auto cf = models::make_heston_cf(kMidFit, t, kCtx);
  FftConfig cfg;
  cfg.alpha = 1.5;
  const double mid = carr_madan_price(cf, kSpot, kSpot, kRate, t, cfg);
  for (double a : {1.0, 2.0}) {
    cfg.alpha = a;
    CHECK(std::abs(carr_madan_price(cf, kSpot, kSpot, kRate, t, cfg) - mid) < 0.005);
  }
}

TEST_CASE("doubling quadrature nodes leaves prices unchanged") {
  IntegrationConfig coarse, fine;
  fine.n_points = 2 * coarse.n_points;
  for (const auto& p : {kShortFit, kMidFit, kParityFit, kBatesFit.heston}) {
    for (double t : {0.06, 0.24, 0.48}) {
      const auto cf = models::make_heston_cf(p, t, kCtx);
      for (double m : {0.85, 1.0, 1.15}) {
        const double k = m * kSpot;
        CHECK(std::abs(european_call_fourier(cf, kSpot, k, kRate, t, coarse) -
                       european_call_fourier(cf, kSpot, k, kRate, t, fine)) < 1e-6);
      }
    }
  }
}

TEST_CASE("strip pricing matches single-strike pricing") {
  const double t = 0.24;
  const auto cf = models::make_bates_cf(kBatesFit, t, kCtx);
  const std::vector<double> strikes{200.0, 221.255, 235.0, 260.0};
  const std::vector<OptionKind> kinds{OptionKind::Call, OptionKind::Put, OptionKind::Call,
                                      OptionKind::Put};
  const auto strip = european_strip_fourier(cf, kSpot, strikes, kinds, kRate, t);
  const auto fft = carr_madan_strip(cf, kSpot, strikes, kinds, kRate, t);
  for (std::size_t i = 0; i < strikes.size(); ++i) {
    const double single = kinds[i] == OptionKind::Call
                              ? european_call_fourier(cf, kSpot, strikes[i], kRate, t)
                              : european_put_fourier(cf, kSpot, strikes[i], kRate, t);
    CHECK(strip[i].value == doctest::Approx(single).epsilon(1e-12));
    CHECK(std::abs(fft[i].value - single) < 0.01);
  }
}

TEST_CASE("configuration validation") {
  IntegrationConfig ic;
  ic.umax = 0.0;
  CHECK_THROWS(ic.validate());
  ic = {};
  ic.n_points = 32;
  CHECK_THROWS(ic.validate());
  FftConfig fc;
  fc.n_grid = 1000;
  CHECK_THROWS(fc.validate());
  fc = {};
  fc.alpha = 0.0;
  CHECK_THROWS(fc.validate());
  fc = {};
  fc.eta = -1.0;
  CHECK_THROWS(fc.validate());
}

TEST_CASE("gauss-legendre rule integrates polynomials exactly") {
  const auto& rule = gauss_legendre(16);
  REQUIRE(rule.nodes.size() == 16);
  for (int deg = 0; deg <= 31; ++deg) {
    double s = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * std::pow(rule.nodes[i], deg);
    const double exact = deg % 2 ? 0.0 : 2.0 / (deg + 1);
    CHECK(s == doctest::Approx(exact).epsilon(1e-13));
  }
}
