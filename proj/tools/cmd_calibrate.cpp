#include <cmath>
#include <memory>

#include "cli_common.hpp"
#include "volrate/calibration.hpp"

namespace volrate::cli {

namespace {

struct CalibrateOptions {
  std::string chain;
  std::string method = "lewis";
  bool compare = false;
  std::string puts = "direct";
  std::vector<int> maturities;
  int population = 0;
  int generations = 300;
  int stagnation = 50;
  MarketOptions market;
};

calib::PricerChoice parse_method(const std::string& name) {
  if (name == "lewis") return calib::PricerChoice::LewisIntegral;
  if (name == "fft") return calib::PricerChoice::CarrMadanFft;
  throw InputError("method must be lewis or fft");
}

Json named_params(const std::vector<std::string>& names, const std::vector<double>& values) {
  Json j = Json::object();
  for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = values[i];
  return j;
}

Json quotes_json(const market::QuoteSet& quotes, const calib::CalibrationResult& r) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < quotes.size(); ++i) {
    const auto& q = quotes[i];
    rows.push_back({{"kind", std::string(1, market::kind_code(q.kind))},
                    {"strike", q.strike},
                    {"maturity_days", q.maturity_days},
                    {"market", q.price},
                    {"model", r.model_prices[i]},
                    {"error", r.residuals[i]}});
  }
  return rows;
}

Json result_json(const calib::CalibrationResult& r) {
  Json j;
  j["params"] = named_params(r.names, r.params);
  j["mse"] = r.mse;
  j["mae"] = r.mae;
  j["n_quotes"] = r.n_quotes;
  j["objective_evals"] = r.objective_evals;
  j["converged"] = r.converged;
  j["feller_margin"] = r.feller_margin;
  Json stages = Json::array();
  for (const auto& st : r.stages) {
    stages.push_back({{"name", st.name},
                      {"params", named_params(r.names, st.params)},
                      {"mse", st.mse},
                      {"mae", st.mae},
                      {"evaluations", st.evaluations}});
  }
  j["stages"] = stages;
  return j;
}

Json comparison_json(const calib::CalibrationResult& a, const std::string& a_name,
                     const calib::CalibrationResult& b, const std::string& b_name) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < a.names.size(); ++i) {
    const double pct = a.params[i] != 0.0
                           ? 100.0 * std::abs(b.params[i] - a.params[i]) / std::abs(a.params[i])
                           : (b.params[i] == 0.0 ? 0.0 : INFINITY);
    rows.push_back({{"name", a.names[i]}, {a_name, a.params[i]}, {b_name, b.params[i]},
                    {"pct_diff", pct}});
  }
  return {{"methods", {a_name, b_name}},
          {"params", rows},
          {"mse", {{a_name, a.mse}, {b_name, b.mse}}},
          {"mae", {{a_name, a.mae}, {b_name, b.mae}}}};
}

void run_equity(Session& s, const CalibrateOptions& o, bool bates) {
  const std::string command = bates ? "calibrate-bates" : "calibrate-heston";
  auto manifest = start_manifest(s, command);
  manifest.inputs.push_back(digest_input(o.chain));
  const auto ctx = o.market.context();
  auto chain = market::load_option_chain(o.chain, ctx);
  if (!o.maturities.empty()) chain = chain.filter_maturity(o.maturities);

  calib::PricingSetup setup;
  setup.method = parse_method(o.method);
  if (o.puts == "synthetic") {
    setup.puts = calib::PutHandling::SyntheticCall;
  } else if (o.puts != "direct") {
    throw InputError("puts must be direct or synthetic");
  }
  calib::OptimizerConfig cfg;
  cfg.de_seed = s.seed;
  cfg.de_population = o.population;
  cfg.de_generations = o.generations;
  cfg.de_stagnation = o.stagnation;
  cfg.threads = s.threads;

  manifest.config = {{"chain", o.chain},         {"method", o.method},
                     {"compare", o.compare},     {"puts", o.puts},
                     {"maturities", o.maturities}, {"population", o.population},
                     {"generations", o.generations}, {"stagnation", o.stagnation},
                     {"market", o.market.to_json()}};

  auto calibrate = [&](const calib::PricingSetup& st) {
    return bates ? calib::calibrate_bates_sequential(chain, st, cfg)
                 : calib::calibrate_heston(chain, st, cfg);
  };
  const auto result = calibrate(setup);
  const auto working =
      setup.puts == calib::PutHandling::SyntheticCall ? calib::with_synthetic_calls(chain) : chain;

  Json body;
  body["model"] = bates ? "bates" : "heston";
  body["method"] = o.method;
  const Json fitted = result_json(result);
  for (auto it = fitted.begin(); it != fitted.end(); ++it) body[it.key()] = it.value();
  body["quotes"] = quotes_json(working, result);
  bool failed = !std::isfinite(result.mse) || result.mse >= calib::kPenaltyValue;

  if (o.compare) {
    auto other = setup;
    other.method = setup.method == calib::PricerChoice::LewisIntegral
                       ? calib::PricerChoice::CarrMadanFft
                       : calib::PricerChoice::LewisIntegral;
    const auto second = calibrate(other);
    body["comparison"] =
        comparison_json(result, o.method, second, calib::pricer_name(other.method));
    failed = failed || !std::isfinite(second.mse) || second.mse >= calib::kPenaltyValue;
  }
  emit(s, manifest, body);
  if (failed) s.exit_code = 3;
}

CLI::App* add_equity(CLI::App& app, Session& s, bool bates) {
  auto opts = std::make_shared<CalibrateOptions>();
  auto* cmd = app.add_subcommand(bates ? "calibrate-bates" : "calibrate-heston",
                                 bates ? "Sequential Bates calibration to an option chain"
                                       : "Heston calibration to an option chain");
  cmd->add_option("--chain", opts->chain, "Option chain CSV (kind,strike,maturity_days,price)")
      ->required();
  cmd->add_option("--method", opts->method, "Pricer: lewis or fft")->capture_default_str();
  cmd->add_flag("--compare", opts->compare, "Also calibrate with the other pricer and compare");
  cmd->add_option("--puts", opts->puts, "Put quotes: direct or synthetic (parity calls)")
      ->capture_default_str();
  cmd->add_option("--maturity-days", opts->maturities, "Keep only these maturities");
  cmd->add_option("--population", opts->population, "DE population (0: 15 x dimension)")
      ->capture_default_str();
  cmd->add_option("--generations", opts->generations, "DE generation cap")->capture_default_str();
  cmd->add_option("--stagnation", opts->stagnation, "DE generations without improvement")
      ->capture_default_str();
  add_market_options(cmd, opts->market);
  cmd->callback([&s, opts, bates] { run_equity(s, *opts, bates); });
  return cmd;
}

}  // namespace

void add_calibrate_commands(CLI::App& app, Session& s) {
  add_equity(app, s, false);
  add_equity(app, s, true);
}

}  // namespace volrate::cli
