#include <algorithm>
#include <cmath>
#include <memory>

#include "cli_common.hpp"
#include "volrate/fourier_pricing.hpp"
#include "volrate/montecarlo.hpp"

namespace volrate::cli {

namespace {

struct StrikeOptions {
  double strike = 0.0;
  double moneyness = 0.0;
  int maturity_days = 20;
};

void add_strike_options(CLI::App* cmd, StrikeOptions& o) {
  auto* k = cmd->add_option("--strike", o.strike, "Strike price");
  auto* m = cmd->add_option("--moneyness", o.moneyness, "Strike as a fraction of spot");
  k->excludes(m);
  cmd->add_option("--maturity-days", o.maturity_days, "Maturity in trading days")
      ->capture_default_str();
}

// No strike flag means at the money.
double resolve_strike(const StrikeOptions& o, double spot) {
  if (o.strike > 0.0) return o.strike;
  if (o.moneyness > 0.0) return o.moneyness * spot;
  if (o.strike < 0.0 || o.moneyness < 0.0) throw InputError("strike must be positive");
  return spot;
}

struct EuropeanOptions {
  std::string params;
  std::string kind = "call";
  std::string method = "both";
  StrikeOptions strike;
  MarketOptions market;
};

void run_european(Session& s, const EuropeanOptions& o) {
  auto manifest = start_manifest(s, "price-european");
  manifest.inputs.push_back(digest_input(o.params));
  const auto params = equity_params_from_json(read_json_file(o.params));
  const auto ctx = o.market.context();
  const auto kind = parse_kind(o.kind);
  const double k = resolve_strike(o.strike, ctx.spot);
  if (o.strike.maturity_days < 1) throw InputError("maturity-days must be positive");
  if (o.method != "lewis" && o.method != "fft" && o.method != "both") {
    throw InputError("method must be lewis, fft or both");
  }
  const double t = market::year_fraction(o.strike.maturity_days, ctx);
  manifest.config = {{"params", o.params}, {"kind", o.kind}, {"method", o.method},
                     {"strike", k}, {"maturity_days", o.strike.maturity_days},
                     {"market", o.market.to_json()}};

  const auto cf = models::make_bates_cf(params, t, ctx);
  const std::vector<double> strikes{k};
  const std::vector<market::OptionKind> kinds{kind};
  Json prices = Json::object();
  Json floored = Json::object();
  if (o.method != "fft") {
    const auto p = fourier::european_strip_fourier(cf, ctx.spot, strikes, kinds,
                                                   ctx.risk_free_rate, t);
    prices["lewis"] = p[0].value;
    floored["lewis"] = p[0].floored;
  }
  if (o.method != "lewis") {
    const auto p = fourier::carr_madan_strip(cf, ctx.spot, strikes, kinds, ctx.risk_free_rate, t);
    prices["fft"] = p[0].value;
    floored["fft"] = p[0].floored;
  }
  Json body;
  body["params"] = to_json(params);
  body["kind"] = market::kind_name(kind);
  body["strike"] = k;
  body["maturity_days"] = o.strike.maturity_days;
  body["t"] = t;
  body["prices"] = prices;
  body["floored"] = floored;
  if (prices.size() == 2) {
    body["difference"] = prices["lewis"].get<double>() - prices["fft"].get<double>();
  }
  emit(s, manifest, body);
}

struct AsianOptions {
  std::string params;
  std::string kind = "call";
  StrikeOptions strike;
  int paths = 0;
  int steps = 0;
  double fee = 0.04;
  bool scan = false;
  std::vector<std::size_t> scan_counts{25000, 50000, 100000, 175000, 200000};
  int bins = 40;
  MarketOptions market;
};

Json estimate_json(const mc::McEstimate& e) {
  return {{"fair_price", e.fair_price}, {"std_error", e.std_error},  {"ci_low", e.ci_low},
          {"ci_high", e.ci_high},       {"n_paths_used", e.n_paths_used},
          {"elapsed_seconds", e.elapsed_seconds}};
}

Json histogram_json(const std::vector<double>& xs, int bins) {
  const double hi = *std::max_element(xs.begin(), xs.end());
  const double width = hi > 0.0 ? hi / bins : 1.0;
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  for (double x : xs) {
    const auto b = std::min<std::size_t>(static_cast<std::size_t>(x / width), counts.size() - 1);
    ++counts[b];
  }
  Json rows = Json::array();
  for (int b = 0; b < bins; ++b) {
    rows.push_back({{"bin_low", b * width}, {"bin_high", (b + 1) * width},
                    {"count", counts[static_cast<std::size_t>(b)]}});
  }
  return {{"n_paths", xs.size()}, {"bins", rows}};
}

void run_asian(Session& s, const AsianOptions& o) {
  auto manifest = start_manifest(s, "price-asian");
  manifest.inputs.push_back(digest_input(o.params));
  if (o.bins < 1) throw InputError("bins must be positive");
  if (o.strike.maturity_days < 1) throw InputError("maturity-days must be positive");
  mc::AsianRequest req;
  req.kind = parse_kind(o.kind);
  req.params = equity_params_from_json(read_json_file(o.params));
  req.context = o.market.context();
  req.strike = resolve_strike(o.strike, req.context.spot);
  req.maturity = market::year_fraction(o.strike.maturity_days, req.context);
  // Per-product defaults: 175k paths for the call, 120k for the put.
  req.paths.n_paths = o.paths > 0 ? o.paths : (req.kind == market::OptionKind::Call ? 175000 : 120000);
  req.paths.n_steps = o.steps > 0 ? o.steps : o.strike.maturity_days;
  req.paths.seed = s.seed;
  req.paths.threads = s.threads;
  req.fees.fee_fraction = o.fee;
  manifest.config = {{"params", o.params},
                     {"kind", o.kind},
                     {"strike", req.strike},
                     {"maturity_days", o.strike.maturity_days},
                     {"paths", req.paths.n_paths},
                     {"steps", req.paths.n_steps},
                     {"fee", o.fee},
                     {"scan", o.scan},
                     {"scan_counts", o.scan_counts},
                     {"bins", o.bins},
                     {"market", o.market.to_json()}};

  const auto t0 = std::chrono::steady_clock::now();
  const auto payoffs = mc::asian_discounted_payoffs(req);
  auto estimate = mc::estimate_from_samples(payoffs);
  estimate.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto report = mc::mc_report(estimate, req.fees);
  if (!std::isfinite(estimate.fair_price)) throw NumericalFailure("non-finite Monte Carlo price");

  Json body;
  body["params"] = to_json(req.params);
  body["kind"] = market::kind_name(req.kind);
  body["strike"] = req.strike;
  body["maturity_days"] = o.strike.maturity_days;
  body["n_steps"] = req.paths.n_steps;
  body["estimate"] = estimate_json(estimate);
  body["client_price"] = report.client_total;
  body["report"] = {{"fair_value", report.fair_value},   {"fee_fraction", report.fee_fraction},
                    {"fee_amount", report.fee_amount},   {"client_total", report.client_total},
                    {"fee_share", report.fee_share}};
  body["histogram"] = histogram_json(payoffs, o.bins);
  if (o.scan) {
    Json rows = Json::array();
    for (const auto& p : mc::convergence_scan(req, o.scan_counts)) {
      rows.push_back(estimate_json(p.estimate));
    }
    body["scan"] = rows;
  }
  emit(s, manifest, body);
}

}  // namespace

void add_price_commands(CLI::App& app, Session& s) {
  auto eu = std::make_shared<EuropeanOptions>();
  auto* e = app.add_subcommand("price-european", "European option via Fourier inversion and FFT");
  e->add_option("--params", eu->params, "Model parameter JSON (Heston or Bates)")->required();
  e->add_option("--kind", eu->kind, "call or put")->capture_default_str();
  e->add_option("--method", eu->method, "lewis, fft or both")->capture_default_str();
  add_strike_options(e, eu->strike);
  add_market_options(e, eu->market);
  e->callback([&s, eu] { run_european(s, *eu); });

  auto as = std::make_shared<AsianOptions>();
  auto* a = app.add_subcommand("price-asian", "Arithmetic-average Asian option by Monte Carlo");
  a->add_option("--params", as->params, "Model parameter JSON (Heston or Bates)")->required();
  a->add_option("--kind", as->kind, "call or put")->capture_default_str();
  add_strike_options(a, as->strike);
  a->add_option("--paths", as->paths, "Path count (0: 175000 for calls, 120000 for puts)")
      ->capture_default_str();
  a->add_option("--steps", as->steps, "Time steps (0: one per trading day)")->capture_default_str();
  a->add_option("--fee", as->fee, "Client fee fraction")->capture_default_str();
  a->add_flag("--scan", as->scan, "Emit a convergence scan");
  a->add_option("--scan-counts", as->scan_counts, "Increasing path counts for --scan");
  a->add_option("--bins", as->bins, "Payoff histogram bins")->capture_default_str();
  add_market_options(a, as->market);
  a->callback([&s, as] { run_asian(s, *as); });
}

}  // namespace volrate::cli
