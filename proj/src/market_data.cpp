#include "volrate/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string_view>

namespace volrate::market {

namespace {

std::string_view trim(std::string_view s) {
  const auto not_space = [](char c) { return c != ' ' && c != '\t' && c != '\r' && c != '\n'; };
  while (!s.empty() && !not_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && !not_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

bool parse_number(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

std::string describe(const OptionQuote& q) {
  std::ostringstream os;
  os << kind_code(q.kind) << ',' << format_double(q.strike) << ',' << q.maturity_days;
  return os.str();
}

}  // namespace

char kind_code(OptionKind kind) { return kind == OptionKind::Call ? 'C' : 'P'; }

std::string kind_name(OptionKind kind) { return kind == OptionKind::Call ? "call" : "put"; }

void MarketContext::validate() const {
  if (!(spot > 0.0) || !std::isfinite(spot)) throw std::invalid_argument("spot must be positive");
  if (!std::isfinite(risk_free_rate)) throw std::invalid_argument("risk-free rate must be finite");
  if (trading_days_per_year <= 0) throw std::invalid_argument("trading_days_per_year must be positive");
}

void OptionQuote::validate() const {
  if (!(strike > 0.0) || !std::isfinite(strike)) throw std::invalid_argument("strike must be positive");
  if (maturity_days <= 0) throw std::invalid_argument("maturity_days must be positive");
  if (!(price >= 0.0) || !std::isfinite(price)) throw std::invalid_argument("price must be non-negative");
}

QuoteKey quote_key(const OptionQuote& q) {
  return {q.kind == OptionKind::Call ? 0 : 1, q.strike, q.maturity_days};
}

double year_fraction(int maturity_days, const MarketContext& context) {
  if (maturity_days < 0) throw std::invalid_argument("maturity_days must be non-negative");
  return static_cast<double>(maturity_days) / static_cast<double>(context.trading_days_per_year);
}

MalformedRow::MalformedRow(std::size_t line, const std::string& why)
    : MarketDataError("malformed row at line " + std::to_string(line) + ": " + why), line_(line) {}

DuplicateQuote::DuplicateQuote(const OptionQuote& q)
    : MarketDataError("duplicate quote " + describe(q)) {}

QuoteSet::QuoteSet(MarketContext context, std::vector<OptionQuote> quotes)
    : context_(context), quotes_(std::move(quotes)) {
  context_.validate();
  std::set<QuoteKey> seen;
  for (const auto& q : quotes_) {
    q.validate();
    if (!seen.insert(quote_key(q)).second) throw DuplicateQuote(q);
  }
}

double QuoteSet::year_fraction(std::size_t i) const {
  return market::year_fraction(quotes_.at(i).maturity_days, context_);
}

std::vector<int> QuoteSet::maturities() const {
  std::vector<int> days;
  for (const auto& q : quotes_) days.push_back(q.maturity_days);
  std::sort(days.begin(), days.end());
  days.erase(std::unique(days.begin(), days.end()), days.end());
  return days;
}

QuoteSet QuoteSet::filter_maturity(const std::vector<int>& days) const {
  std::vector<OptionQuote> kept;
  for (const auto& q : quotes_) {
    if (std::find(days.begin(), days.end(), q.maturity_days) != days.end()) kept.push_back(q);
  }
  if (kept.empty()) throw EmptyChain();
  return QuoteSet(context_, std::move(kept));
}

std::size_t QuoteSet::distinct_strikes() const {
  std::set<double> strikes;
  for (const auto& q : quotes_) strikes.insert(q.strike);
  return strikes.size();
}

QuoteSet parse_option_chain(std::istream& in, const MarketContext& context) {
  context.validate();
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<OptionQuote> quotes;

  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto fields = split_fields(text);
    if (!header_seen) {
      header_seen = true;
      if (fields.size() == 4 && fields[0] == "kind" && fields[1] == "strike" &&
          fields[2] == "maturity_days" && fields[3] == "price") {
        continue;
      }
      throw MalformedRow(line_no, "expected header kind,strike,maturity_days,price");
    }
    if (fields.size() != 4) throw MalformedRow(line_no, "expected 4 fields");

    OptionQuote q;
    if (fields[0] == "C" || fields[0] == "c") {
      q.kind = OptionKind::Call;
    } else if (fields[0] == "P" || fields[0] == "p") {
      q.kind = OptionKind::Put;
    } else {
      throw MalformedRow(line_no, "kind must be C or P");
    }
    if (!parse_number(fields[1], q.strike) || !(q.strike > 0.0)) {
      throw MalformedRow(line_no, "strike must be a positive number");
    }
    if (!parse_int(fields[2], q.maturity_days) || q.maturity_days <= 0) {
      throw MalformedRow(line_no, "maturity_days must be a positive integer");
    }
    if (!parse_number(fields[3], q.price) || q.price < 0.0) {
      throw MalformedRow(line_no, "price must be a non-negative number");
    }
    quotes.push_back(q);
  }
  if (quotes.empty()) throw EmptyChain();
  return QuoteSet(context, std::move(quotes));
}

QuoteSet load_option_chain(const std::filesystem::path& path, const MarketContext& context) {
  std::ifstream in(path);
  if (!in) throw MarketDataError("cannot open option chain " + path.string());
  return parse_option_chain(in, context);
}

void write_option_chain(std::ostream& out, const QuoteSet& quotes) {
  out << "kind,strike,maturity_days,price\n";
  for (const auto& q : quotes.quotes()) {
    out << kind_code(q.kind) << ',' << format_double(q.strike) << ',' << q.maturity_days << ','
        << format_double(q.price) << '\n';
  }
}

OptionQuote put_to_synthetic_call(const OptionQuote& quote, const MarketContext& context) {
  if (quote.kind != OptionKind::Put) throw KindMismatch();
  const double t = year_fraction(quote.maturity_days, context);
  const double call =
      quote.price + context.spot - quote.strike * std::exp(-context.risk_free_rate * t);
  OptionQuote out = quote;
  out.kind = OptionKind::Call;
  out.stale = quote.stale;
  if (call < 0.0) {
    out.price = 0.0;
    out.stale = true;
  } else {
    out.price = call;
  }
  return out;
}

std::vector<RatePoint> parse_rate_curve(std::istream& in, Compounding compounding) {
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<RatePoint> points;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto fields = split_fields(text);
    if (!header_seen) {
      header_seen = true;
      if (fields.size() == 2 && fields[0] == "tenor_months" && fields[1] == "rate") continue;
      throw MalformedRow(line_no, "expected header tenor_months,rate");
    }
    if (fields.size() != 2) throw MalformedRow(line_no, "expected 2 fields");
    RatePoint p;
    if (!parse_number(fields[0], p.tenor_months) || !(p.tenor_months > 0.0)) {
      throw MalformedRow(line_no, "tenor_months must be positive");
    }
    if (!parse_number(fields[1], p.rate)) throw MalformedRow(line_no, "rate must be a number");
    if (compounding == Compounding::Simple) {
      const double tau = p.tenor_months / 12.0;
      const double growth = 1.0 + p.rate * tau;
      if (!(growth > 0.0)) throw MalformedRow(line_no, "simple rate implies non-positive growth");
      p.rate = std::log(growth) / tau;
    }
    points.push_back(p);
  }
  if (points.empty()) throw MarketDataError("rate curve contains no rows");
  return points;
}

std::vector<RatePoint> load_rate_curve(const std::filesystem::path& path, Compounding compounding) {
  std::ifstream in(path);
  if (!in) throw MarketDataError("cannot open rate curve " + path.string());
  return parse_rate_curve(in, compounding);
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc{}) return std::to_string(x);
  return std::string(buf, ptr);
}

}  // namespace volrate::market
