#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "volrate/fourier_pricing.hpp"
#include "volrate/market_data.hpp"

using namespace volrate;
using namespace volrate::market;

namespace {

const MarketContext kCtx{232.90, 0.015, 250};

QuoteSet parse(const std::string& text, const MarketContext& ctx = kCtx) {
  std::istringstream in(text);
  return parse_option_chain(in, ctx);
}

}  // namespace

TEST_CASE("chain rows map field by field") {
  const auto qs = parse("kind,strike,maturity_days,price\nC,232.90,15,6.10\nP,221.26,70,2.00\n");
  REQUIRE(qs.size() == 2);
  CHECK(qs[0].kind == OptionKind::Call);
  CHECK(qs[0].strike == 232.90);
  CHECK(qs[0].maturity_days == 15);
  CHECK(qs[0].price == 6.10);
  CHECK(qs.year_fraction(0) == doctest::Approx(0.06).epsilon(1e-15));
  CHECK(qs[1].kind == OptionKind::Put);
  CHECK(qs.year_fraction(1) == doctest::Approx(0.28).epsilon(1e-15));
}

TEST_CASE("comment and blank lines are skipped") {
  const auto qs = parse("# synthetic\n\nkind,strike,maturity_days,price\n\nC,235,60,16.05\n");
  CHECK(qs.size() == 1);
}

TEST_CASE("duplicate keys are rejected") {
  CHECK_THROWS_AS(parse("kind,strike,maturity_days,price\nC,235,60,16\nC,235,60,16.1\n"),
                  DuplicateQuote);
  // Same strike and maturity with a different kind is a distinct key.
  CHECK(parse("kind,strike,maturity_days,price\nC,235,60,16\nP,235,60,16.1\n").size() == 2);
}

TEST_CASE("malformed rows report their line") {
  const std::string header = "kind,strike,maturity_days,price\n";
  const char* bad[] = {"X,235,60,1\n", "C,-1,60,1\n", "C,235,0,1\n", "C,235,60,-2\n",
                       "C,235,60\n",   "C,abc,60,1\n", "C,235,6.5,1\n"};
  for (const char* row : bad) {
    CAPTURE(row);
    try {
      parse(header + "C,230,60,5\n" + row);
      FAIL("expected MalformedRow");
    } catch (const MalformedRow& e) {
      CHECK(e.line() == 3);
    }
  }
  CHECK_THROWS_AS(parse("strike,kind,maturity_days,price\nC,230,60,5\n"), MalformedRow);
}

TEST_CASE("empty chains are rejected") {
  CHECK_THROWS_AS(parse("kind,strike,maturity_days,price\n"), EmptyChain);
  CHECK_THROWS_AS(parse(""), EmptyChain);
}

TEST_CASE("missing chain file is a market data error") {
  CHECK_THROWS_AS(load_option_chain("/nonexistent/chain.csv", kCtx), MarketDataError);
}

TEST_CASE("context validation") {
  CHECK_THROWS(MarketContext{0.0, 0.01, 250}.validate());
  CHECK_THROWS(MarketContext{100.0, 0.01, 0}.validate());
  CHECK_NOTHROW(MarketContext{100.0, -0.005, 250}.validate());
}

TEST_CASE("year fraction") {
  CHECK(year_fraction(15, kCtx) == 0.06);
  CHECK(year_fraction(0, kCtx) == 0.0);
  CHECK(year_fraction(70, kCtx) == 0.28);
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> days(0, 5000);
  for (int i = 0; i < 200; ++i) {
    const int a = days(rng), b = days(rng);
    CHECK(year_fraction(a + b, kCtx) ==
          doctest::Approx(year_fraction(a, kCtx) + year_fraction(b, kCtx)).epsilon(1e-15));
  }
}

TEST_CASE("put to synthetic call") {
  SUBCASE("zero rate at the money") {
    const MarketContext ctx{100.0, 0.0, 250};
    const auto c = put_to_synthetic_call({OptionKind::Put, 100.0, 60, 5.0, false}, ctx);
    CHECK(c.kind == OptionKind::Call);
    CHECK(c.price == doctest::Approx(5.0).epsilon(1e-15));
    CHECK_FALSE(c.stale);
  }
  SUBCASE("hand-evaluated parity") {
    // 14.75 + 232.90 - 235 exp(-0.015 * 0.24) = 13.494479...
    const auto c = put_to_synthetic_call({OptionKind::Put, 235.0, 60, 14.75, false}, kCtx);
    CHECK(c.price == doctest::Approx(13.4945).epsilon(1e-5));
    CHECK(c.strike == 235.0);
    CHECK(c.maturity_days == 60);
  }
  SUBCASE("negative parity value is floored and flagged") {
    const auto c = put_to_synthetic_call({OptionKind::Put, 400.0, 60, 1.0, false}, kCtx);
    CHECK(c.price == 0.0);
    CHECK(c.stale);
  }
  SUBCASE("calls are rejected") {
    CHECK_THROWS_AS(put_to_synthetic_call({OptionKind::Call, 235.0, 60, 1.0, false}, kCtx),
                    KindMismatch);
  }
}

TEST_CASE("parity roundtrip on model prices") {
  models::HestonParams h{2.0, 0.05, 0.4, -0.6, 0.04};
  for (int days : {15, 60, 120}) {
    const double t = year_fraction(days, kCtx);
    const auto cf = models::make_heston_cf(h, t, kCtx);
    for (double m : {0.85, 1.0, 1.15}) {
      const double k = m * kCtx.spot;
      const double call = fourier::european_call_fourier(cf, kCtx.spot, k, kCtx.risk_free_rate, t);
      const double put = call - kCtx.spot + k * std::exp(-kCtx.risk_free_rate * t);
      const auto back = put_to_synthetic_call({OptionKind::Put, k, days, put, false}, kCtx);
      // Relative to the larger leg: parity subtracts prices of that size.
      CHECK(std::abs(back.price - call) <= 1e-12 * std::max(call, put));
    }
  }
}

TEST_CASE("chain write and reload is idempotent") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<OptionQuote> quotes;
  for (int i = 0; i < 40; ++i) {
    quotes.push_back({i % 3 ? OptionKind::Call : OptionKind::Put, 150.0 + 200.0 * u(rng),
                      1 + i % 7 * 20, 30.0 * u(rng), false});
  }
  const QuoteSet original(kCtx, quotes);
  std::ostringstream first;
  write_option_chain(first, original);
  const auto reloaded = parse(first.str());
  REQUIRE(reloaded.size() == original.size());
  for (std::size_t i = 0; i < original.size(); ++i) {
    CHECK(reloaded[i].kind == original[i].kind);
    CHECK(reloaded[i].strike == original[i].strike);
    CHECK(reloaded[i].maturity_days == original[i].maturity_days);
    CHECK(reloaded[i].price == original[i].price);
  }
  std::ostringstream second;
  write_option_chain(second, reloaded);
  CHECK(first.str() == second.str());
}

TEST_CASE("format_double round-trips") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = std::exp(u(rng)) * (i % 2 ? 1 : -1);
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("maturity filter and strike count") {
  const auto qs = parse(
      "kind,strike,maturity_days,price\nC,230,15,5\nC,235,15,3\nC,230,60,9\nP,240,60,8\n");
  CHECK(qs.maturities() == std::vector<int>{15, 60});
  CHECK(qs.distinct_strikes() == 3);
  const auto sixty = qs.filter_maturity({60});
  CHECK(sixty.size() == 2);
  for (const auto& q : sixty.quotes()) CHECK(q.maturity_days == 60);
}

TEST_CASE("rate curve parsing") {
  std::istringstream cont("tenor_months,rate\n1,0.02\n6,0.025\n12,0.03\n");
  const auto pts = parse_rate_curve(cont);
  REQUIRE(pts.size() == 3);
  CHECK(pts[1].tenor_months == 6.0);
  CHECK(pts[1].rate == 0.025);

  std::istringstream simple("tenor_months,rate\n6,0.04\n");
  const auto s = parse_rate_curve(simple, Compounding::Simple);
  CHECK(s[0].rate == doctest::Approx(std::log(1.02) / 0.5).epsilon(1e-14));

  std::istringstream bad("tenor_months,rate\n0,0.04\n");
  CHECK_THROWS_AS(parse_rate_curve(bad), MalformedRow);
  std::istringstream empty("tenor_months,rate\n");
  CHECK_THROWS_AS(parse_rate_curve(empty), MarketDataError);
}
