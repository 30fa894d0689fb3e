#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "volrate/models.hpp"

using namespace volrate;
using namespace volrate::models;
using market::MarketContext;
using market::OptionKind;

namespace {

const MarketContext kCtx{232.90, 0.015, 250};

struct RandomParams {
  std::mt19937_64 rng;
  explicit RandomParams(std::uint64_t seed) : rng(seed) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

  HestonParams heston() {
    return {uniform(0.1, 10.0), uniform(0.01, 0.5), uniform(0.0, 1.5), uniform(-0.99, 0.99),
            uniform(0.01, 0.5)};
  }
  BatesParams bates() {
    return {heston(), {uniform(0.0, 3.0), uniform(-0.3, 0.2), uniform(0.0, 0.4)}};
  }
};

Complex cf_at(const BatesParams& p, Complex u, double t) { return bates_cf(p, {u, t, kCtx}); }

}  // namespace

TEST_CASE("jump compensator") {
  CHECK(jump_compensator({0.5, 0.0, 0.0}) == 0.0);
  CHECK(jump_compensator({0.5, std::log(2.0), 0.0}) == doctest::Approx(1.0).epsilon(1e-15));
  const double expected = std::expm1(-0.00504 + 0.5 * 0.0000417 * 0.0000417);
  CHECK(jump_compensator({0.0, -0.00504, 0.0000417}) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(jump_compensator({0.0, -0.00504, 0.0000417}) == doctest::Approx(-0.005027).epsilon(1e-4));
}

TEST_CASE("parameter validation") {
  CHECK_NOTHROW(HestonParams{0.3981, 0.08748, 0.0, 0.9906, 0.1016}.validate());
  CHECK_THROWS(HestonParams{0.0, 0.04, 0.1, 0.0, 0.04}.validate());
  CHECK_THROWS(HestonParams{1.0, 0.0, 0.1, 0.0, 0.04}.validate());
  CHECK_THROWS(HestonParams{1.0, 0.04, -0.1, 0.0, 0.04}.validate());
  CHECK_THROWS(HestonParams{1.0, 0.04, 0.1, 1.01, 0.04}.validate());
  CHECK_THROWS(HestonParams{1.0, 0.04, 0.1, 0.0, 0.0}.validate());
  CHECK_THROWS(JumpParams{-1.0, 0.0, 0.1}.validate());
  CHECK_THROWS(JumpParams{1.0, 0.0, -0.1}.validate());
  CHECK(HestonParams{2.0, 0.05, 0.4, 0.0, 0.04}.feller_margin() ==
        doctest::Approx(2.0 * 2.0 * 0.05 - 0.16));
}

TEST_CASE("characteristic function normalisation and forward identity") {
  RandomParams draw(101);
  for (int i = 0; i < 50; ++i) {
    const auto p = draw.bates();
    const double t = draw.uniform(0.02, 2.0);
    CAPTURE(i);
    const Complex at_zero = cf_at(p, 0.0, t);
    CHECK(std::abs(at_zero - Complex(1.0, 0.0)) < 1e-12);
    const double forward = kCtx.spot * std::exp(kCtx.risk_free_rate * t);
    const Complex at_minus_i = cf_at(p, Complex(0.0, -1.0), t);
    CHECK(std::abs(at_minus_i - forward) / forward < 1e-8);
    const Complex h = heston_cf(p.heston, {Complex(0.0, -1.0), t, kCtx});
    CHECK(std::abs(h - forward) / forward < 1e-8);
  }
}

TEST_CASE("characteristic function is bounded by one on the real line") {
  RandomParams draw(202);
  for (int i = 0; i < 20; ++i) {
    const auto p = draw.bates();
    const double t = draw.uniform(0.02, 2.0);
    for (double u = 0.1; u <= 200.0; u += 0.1) {
      CHECK(std::abs(cf_at(p, u, t)) <= 1.0 + 1e-12);
      CHECK(std::abs(heston_cf(p.heston, {u, t, kCtx})) <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("conjugate symmetry") {
  RandomParams draw(303);
  for (int i = 0; i < 20; ++i) {
    const auto p = draw.bates();
    const double t = draw.uniform(0.02, 2.0);
    for (double u : {0.3, 1.0, 7.5, 40.0, 150.0}) {
      CHECK(std::abs(cf_at(p, -u, t) - std::conj(cf_at(p, u, t))) < 1e-12);
    }
  }
}

TEST_CASE("zero intensity reduces to the pure diffusion") {
  RandomParams draw(404);
  for (int i = 0; i < 20; ++i) {
    auto p = draw.bates();
    p.jumps.lambda = 0.0;
    const double t = draw.uniform(0.02, 2.0);
    for (double u : {0.5, 3.0, 25.0}) {
      const Complex b = cf_at(p, u, t);
      const Complex h = heston_cf(p.heston, {u, t, kCtx});
      CHECK(std::abs(b - h) <= 1e-15 * std::abs(h));
    }
  }
}

TEST_CASE("bates is continuous in the jump intensity") {
  RandomParams draw(505);
  for (int i = 0; i < 20; ++i) {
    auto p = draw.bates();
    p.jumps.lambda = 1e-12;
    const double t = draw.uniform(0.02, 2.0);
    for (double u : {0.5, 3.0, 25.0}) {
      const Complex b = cf_at(p, u, t);
      const Complex h = heston_cf(p.heston, {u, t, kCtx});
      CHECK(std::abs(b - h) < 1e-9 * std::abs(h) + 1e-300);
    }
  }
}

TEST_CASE("vanishing vol-of-vol is continuous across the degenerate threshold") {
  HestonParams p{0.3981, 0.08748, 0.0, 0.9906, 0.1016};
  for (double u : {0.5, 2.0, 20.0}) {
    p.sigma = 0.0;
    const Complex limit = heston_cf(p, {u, 0.06, kCtx});
    p.sigma = 2e-8;
    const Complex near = heston_cf(p, {u, 0.06, kCtx});
    CHECK(std::abs(limit - near) < 1e-7);
  }
}

TEST_CASE("heston cf matches a simulated expectation at near-zero vol-of-vol") {
  const HestonParams p{0.3981, 0.08748, 1e-8, 0.9906, 0.1016};
  const double t = 0.06;
  const auto x = oracle::terminal_log_prices({p.kappa, p.theta, p.sigma, p.rho, p.v0}, kCtx.spot,
                                             kCtx.risk_free_rate, t, 60, 1000000, 17);
  std::vector<double> re(x.size()), im(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    re[i] = std::cos(x[i]);
    im[i] = std::sin(x[i]);
  }
  const auto mre = oracle::mean_and_se(re);
  const auto mim = oracle::mean_and_se(im);
  const Complex phi = heston_cf(p, {1.0, t, kCtx});
  CHECK(std::abs(phi.real() - mre.mean) < 4.0 * mre.se);
  CHECK(std::abs(phi.imag() - mim.mean) < 4.0 * mim.se);
}

TEST_CASE("bates cf matches a simulated expectation") {
  const HestonParams h{15.562, 0.15865, 0.000017, -0.00571, 0.04832};
  const double t = 0.24;
  for (const JumpParams j : {JumpParams{0.0, -0.00592, 0.0000548}, JumpParams{2.0, -0.1, 0.15}}) {
    CAPTURE(j.lambda);
    const BatesParams p{h, j};
    const auto x = oracle::terminal_log_prices(
        {h.kappa, h.theta, h.sigma, h.rho, h.v0, j.lambda, j.mu_j, j.sigma_j}, kCtx.spot,
        kCtx.risk_free_rate, t, 60, 1000000, 29);
    std::vector<double> re(x.size()), im(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      re[i] = std::cos(x[i]);
      im[i] = std::sin(x[i]);
    }
    const auto mre = oracle::mean_and_se(re);
    const auto mim = oracle::mean_and_se(im);
    const Complex phi = cf_at(p, 1.0, t);
    CHECK(std::abs(phi.real() - mre.mean) < 3.0 * mre.se);
    CHECK(std::abs(phi.imag() - mim.mean) < 3.0 * mim.se);
  }
}

TEST_CASE("black-scholes") {
  CHECK(bs_price(OptionKind::Call, 100.0, 90.0, 0.0, 0.0, 1.0) == doctest::Approx(10.0));
  CHECK(bs_price(OptionKind::Put, 100.0, 90.0, 0.0, 0.0, 1.0) == 0.0);
  CHECK(bs_price(OptionKind::Call, 100.0, 90.0, 0.05, 0.3, 0.0) == doctest::Approx(10.0));

  const double quad = oracle::bs_call_by_quadrature(100.0, 100.0, 0.0, 0.2, 1.0);
  CHECK(quad == doctest::Approx(7.9656).epsilon(1e-5));
  CHECK(std::abs(bs_price(OptionKind::Call, 100.0, 100.0, 0.0, 0.2, 1.0) - quad) < 1e-4);
  const double quad2 = oracle::bs_call_by_quadrature(232.90, 221.255, 0.015, 0.31, 0.28);
  CHECK(std::abs(bs_price(OptionKind::Call, 232.90, 221.255, 0.015, 0.31, 0.28) - quad2) < 1e-6);

  SUBCASE("parity") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
      const double s = 50.0 + 200.0 * u(rng), k = 50.0 + 200.0 * u(rng);
      const double r = -0.01 + 0.08 * u(rng), vol = 0.6 * u(rng), t = 3.0 * u(rng);
      const double diff = bs_price(OptionKind::Call, s, k, r, vol, t) -
                          bs_price(OptionKind::Put, s, k, r, vol, t);
      CHECK(std::abs(diff - (s - k * std::exp(-r * t))) < 1e-12 * s);
    }
  }
}

TEST_CASE("integrated mean variance") {
  const HestonParams p{2.0, 0.05, 0.4, -0.6, 0.04};
  const double t = 0.7;
  const double quad = oracle::simpson(
      [&](double s) { return p.theta + (p.v0 - p.theta) * std::exp(-p.kappa * s); }, 0.0, t, 1000);
  CHECK(p.integrated_mean_variance(t) == doctest::Approx(quad).epsilon(1e-12));
}
