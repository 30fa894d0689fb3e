#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace volrate::market {

enum class OptionKind { Call, Put };

char kind_code(OptionKind kind);
std::string kind_name(OptionKind kind);

/// Spot, continuously compounded rate and the trading-day count base.
struct MarketContext {
  double spot = 0.0;
  double risk_free_rate = 0.0;
  int trading_days_per_year = 250;

  void validate() const;
};

struct OptionQuote {
  OptionKind kind = OptionKind::Call;
  double strike = 0.0;
  int maturity_days = 0;
  double price = 0.0;
  // Set when a parity conversion produced a negative price that was floored.
  bool stale = false;

  void validate() const;
};

/// Ordering key used for duplicate detection and order-independent reductions.
using QuoteKey = std::tuple<int, double, int>;
QuoteKey quote_key(const OptionQuote& q);

double year_fraction(int maturity_days, const MarketContext& context);

class MarketDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedRow : public MarketDataError {
 public:
  MalformedRow(std::size_t line, const std::string& why);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DuplicateQuote : public MarketDataError {
 public:
  explicit DuplicateQuote(const OptionQuote& q);
};

class EmptyChain : public MarketDataError {
 public:
  EmptyChain() : MarketDataError("option chain contains no valid rows") {}
};

class KindMismatch : public MarketDataError {
 public:
  KindMismatch() : MarketDataError("expected a put quote") {}
};

/// Immutable, duplicate-free set of quotes sharing one market context.
class QuoteSet {
 public:
  QuoteSet(MarketContext context, std::vector<OptionQuote> quotes);

  const MarketContext& context() const noexcept { return context_; }
  const std::vector<OptionQuote>& quotes() const noexcept { return quotes_; }
  std::size_t size() const noexcept { return quotes_.size(); }
  bool empty() const noexcept { return quotes_.empty(); }
  const OptionQuote& operator[](std::size_t i) const { return quotes_[i]; }

  double year_fraction(std::size_t i) const;
  /// Distinct maturities in ascending order.
  std::vector<int> maturities() const;
  QuoteSet filter_maturity(const std::vector<int>& days) const;
  std::size_t distinct_strikes() const;

 private:
  MarketContext context_;
  std::vector<OptionQuote> quotes_;
};

// Option chain CSV: header `kind,strike,maturity_days,price`, kind in {C,P}.
QuoteSet parse_option_chain(std::istream& in, const MarketContext& context);
QuoteSet load_option_chain(const std::filesystem::path& path, const MarketContext& context);
void write_option_chain(std::ostream& out, const QuoteSet& quotes);

/// C = P + S0 - K e^{-rT}; negative results are floored at zero and flagged stale.
OptionQuote put_to_synthetic_call(const OptionQuote& quote, const MarketContext& context);

enum class Compounding { Continuous, Simple };

struct RatePoint {
  double tenor_months = 0.0;
  double rate = 0.0;
};

// Rate curve CSV: header `tenor_months,rate`, rates as decimals.
std::vector<RatePoint> parse_rate_curve(std::istream& in,
                                        Compounding compounding = Compounding::Continuous);
std::vector<RatePoint> load_rate_curve(const std::filesystem::path& path,
                                       Compounding compounding = Compounding::Continuous);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

}  // namespace volrate::market
