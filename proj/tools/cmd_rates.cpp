#include <cmath>
#include <fstream>
#include <memory>

#include "cli_common.hpp"
#include "volrate/rates_cir.hpp"

namespace volrate::cli {

namespace {

struct CirCalibrateOptions {
  std::string curve;
  std::string compounding = "cont";
  double theta_cap = 0.05;
  int population = 0;
  int generations = 300;
  int stagnation = 50;
};

market::Compounding parse_compounding(const std::string& name) {
  if (name == "cont") return market::Compounding::Continuous;
  if (name == "simple") return market::Compounding::Simple;
  throw InputError("compounding must be cont or simple");
}

void run_calibrate_cir(Session& s, const CirCalibrateOptions& o) {
  auto manifest = start_manifest(s, "calibrate-cir");
  manifest.inputs.push_back(digest_input(o.curve));
  manifest.config = {{"curve", o.curve},           {"compounding", o.compounding},
                     {"theta_cap", o.theta_cap},   {"population", o.population},
                     {"generations", o.generations}, {"stagnation", o.stagnation}};
  const auto points = market::load_rate_curve(o.curve, parse_compounding(o.compounding));
  const auto curve = rates::build_zero_curve(points);
  calib::OptimizerConfig cfg;
  cfg.de_seed = s.seed;
  cfg.de_population = o.population;
  cfg.de_generations = o.generations;
  cfg.de_stagnation = o.stagnation;
  cfg.threads = s.threads;
  const auto r = rates::calibrate_cir(curve, cfg, o.theta_cap);

  Json grid = Json::array();
  for (std::size_t i = 0; i < r.grid.size(); ++i) {
    const double t = r.grid[i];
    grid.push_back({{"tenor", t},
                    {"market_rate", r.market_rates[i]},
                    {"model_rate", r.model_rates[i]},
                    {"market_df", curve.discount(t)},
                    {"model_df", rates::cir_bond_price(r.params, t)}});
  }
  Json body;
  body["model"] = "cir";
  body["params"] = to_json(r.params);
  body["mse"] = r.mse;
  body["objective"] = r.objective;
  body["rmse_bp"] = r.rmse_bp;
  body["mae_bp"] = r.mae_bp;
  body["objective_evals"] = r.objective_evals;
  body["converged"] = r.converged;
  body["feller_satisfied"] = r.feller_satisfied;
  body["feller_margin"] = r.params.feller_margin();
  body["half_life"] = r.params.half_life();
  body["grid"] = grid;
  emit(s, manifest, body);
  if (!std::isfinite(r.objective) || r.objective >= calib::kPenaltyValue) s.exit_code = 3;
}

struct SimulateOptions {
  std::string params;
  int paths = 100000;
  int horizon_days = 250;
  int steps = 0;
  std::string scheme = "euler";
  double flat_rate = -1.0;
  std::string terminal_csv;
  int sample_paths = 10;
  int scatter_points = 2000;
};

void run_simulate(Session& s, const SimulateOptions& o) {
  auto manifest = start_manifest(s, "simulate-rates");
  manifest.inputs.push_back(digest_input(o.params));
  const auto params = cir_params_from_json(read_json_file(o.params));
  if (o.horizon_days < 1) throw InputError("horizon-days must be positive");
  if (o.sample_paths < 0 || o.scatter_points < 0) throw InputError("sample sizes must be >= 0");
  if (o.scheme != "euler" && o.scheme != "exact") throw InputError("scheme must be euler or exact");
  const double flat = o.flat_rate >= 0.0 ? o.flat_rate : params.r0;
  manifest.config = {{"params", o.params},         {"paths", o.paths},
                     {"horizon_days", o.horizon_days}, {"steps", o.steps},
                     {"scheme", o.scheme},         {"flat_rate", flat},
                     {"terminal_csv", o.terminal_csv}, {"sample_paths", o.sample_paths},
                     {"scatter_points", o.scatter_points}};

  mc::PathConfig cfg;
  cfg.n_paths = o.paths;
  cfg.n_steps = o.steps > 0 ? o.steps : o.horizon_days;
  cfg.seed = s.seed;
  cfg.threads = s.threads;
  const double horizon = o.horizon_days / 250.0;
  const auto stored = static_cast<std::size_t>(o.sample_paths);
  const auto paths = o.scheme == "euler" ? rates::simulate_cir_euler(params, horizon, cfg, stored)
                                         : rates::simulate_cir_exact(params, horizon, cfg, stored);
  const auto d = rates::discount_stats(paths, params, flat);
  if (!std::isfinite(d.mean) || !std::isfinite(d.mean_df)) {
    throw NumericalFailure("non-finite rate statistics");
  }

  if (!o.terminal_csv.empty()) {
    std::ofstream csv(o.terminal_csv, std::ios::binary);
    if (!csv) throw InputError("cannot write " + o.terminal_csv);
    csv << "path,terminal_rate,discount_factor\n";
    for (std::size_t i = 0; i < paths.terminal.size(); ++i) {
      csv << i << ',' << market::format_double(paths.terminal[i]) << ','
          << market::format_double(std::exp(-paths.integral[i])) << '\n';
    }
  }

  Json sample = Json::array();
  for (const auto& p : paths.sample) sample.push_back(p);
  Json scatter = Json::array();
  const std::size_t n_scatter = std::min(paths.terminal.size(),
                                         static_cast<std::size_t>(o.scatter_points));
  for (std::size_t i = 0; i < n_scatter; ++i) {
    scatter.push_back({{"terminal_rate", paths.terminal[i]},
                       {"discount_factor", std::exp(-paths.integral[i])}});
  }

  Json body;
  body["model"] = "cir";
  body["params"] = to_json(params);
  body["feller_satisfied"] = params.feller_satisfied();
  body["half_life"] = params.kappa > 0.0 ? params.half_life() : INFINITY;
  body["scheme"] = o.scheme;
  body["horizon"] = horizon;
  body["n_steps"] = paths.n_steps;
  body["distribution"] = {{"mean", d.mean},
                          {"median", d.median},
                          {"p05", d.p05},
                          {"p95", d.p95},
                          {"min", d.min},
                          {"mean_df", d.mean_df},
                          {"df_std_error", d.df_std_error},
                          {"flat_df", d.flat_df},
                          {"df_gap", d.df_gap},
                          {"bond_df", d.bond_df},
                          {"n_paths", d.n_paths}};
  body["sample_paths"] = {{"dt", paths.dt()}, {"paths", sample}};
  body["df_scatter"] = scatter;
  emit(s, manifest, body);
}

}  // namespace

void add_rates_commands(CLI::App& app, Session& s) {
  auto co = std::make_shared<CirCalibrateOptions>();
  auto* c = app.add_subcommand("calibrate-cir", "CIR fit to a zero curve on a weekly grid");
  c->add_option("--curve", co->curve, "Rate curve CSV (tenor_months,rate)")->required();
  c->add_option("--compounding", co->compounding, "Input quotes: cont or simple")
      ->capture_default_str();
  c->add_option("--theta-cap", co->theta_cap, "Upper bound on the long-run level")
      ->capture_default_str();
  c->add_option("--population", co->population, "DE population (0: 15 x dimension)")
      ->capture_default_str();
  c->add_option("--generations", co->generations, "DE generation cap")->capture_default_str();
  c->add_option("--stagnation", co->stagnation, "DE generations without improvement")
      ->capture_default_str();
  c->callback([&s, co] { run_calibrate_cir(s, *co); });

  auto so = std::make_shared<SimulateOptions>();
  auto* m = app.add_subcommand("simulate-rates", "Simulate CIR short rates and discount factors");
  m->add_option("--params", so->params, "CIR parameter JSON (kappa, theta, sigma, r0)")
      ->required();
  m->add_option("--paths", so->paths, "Path count")->capture_default_str();
  m->add_option("--horizon-days", so->horizon_days, "Horizon in trading days (250 per year)")
      ->capture_default_str();
  m->add_option("--steps", so->steps, "Time steps (0: daily)")->capture_default_str();
  m->add_option("--scheme", so->scheme, "euler or exact")->capture_default_str();
  m->add_option("--flat-rate", so->flat_rate, "Flat benchmark rate (default r0)");
  m->add_option("--terminal-csv", so->terminal_csv, "Write per-path terminal rates here");
  m->add_option("--sample-paths", so->sample_paths, "Full paths kept in the JSON")
      ->capture_default_str();
  m->add_option("--scatter-points", so->scatter_points, "Paths in the DF scatter table")
      ->capture_default_str();
  m->callback([&s, so] { run_simulate(s, *so); });
}

}  // namespace volrate::cli
