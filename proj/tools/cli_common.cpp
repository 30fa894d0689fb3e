#include "cli_common.hpp"

#include <fstream>
#include <iostream>

namespace volrate::cli {

namespace {

const Json& params_node(const Json& j) {
  if (!j.is_object()) throw InputError("parameter JSON must be an object");
  if (j.contains("params") && j["params"].is_object()) return j["params"];
  return j;
}

double required(const Json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw InputError(std::string("parameter JSON lacks numeric '") + key + "'");
  }
  return j[key].get<double>();
}

double optional(const Json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw InputError(std::string("'") + key + "' must be numeric");
  return j[key].get<double>();
}

}  // namespace

RunManifest start_manifest(const Session& s, const std::string& command) {
  RunManifest m;
  m.command = command;
  m.seed = s.seed;
  m.tool_version = tool_version();
  m.threads = s.threads;
  return m;
}

void emit(const Session& s, RunManifest manifest, const Json& body) {
  manifest.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - s.start).count();
  Json report;
  report["manifest"] = manifest.to_json();
  for (auto it = body.begin(); it != body.end(); ++it) report[it.key()] = it.value();
  const std::string text = report.dump(2) + "\n";
  if (s.out_path.empty()) {
    *s.out << text;
    return;
  }
  std::ofstream file(s.out_path, std::ios::binary);
  if (!file) throw InputError("cannot write " + s.out_path);
  file << text;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

models::BatesParams equity_params_from_json(const Json& j) {
  const Json& p = params_node(j);
  models::BatesParams out;
  out.heston = {required(p, "kappa"), required(p, "theta"), required(p, "sigma"),
                required(p, "rho"), required(p, "v0")};
  out.jumps = {optional(p, "lambda", 0.0), optional(p, "mu_j", 0.0), optional(p, "sigma_j", 0.0)};
  return out;
}

rates::CirParams cir_params_from_json(const Json& j) {
  const Json& p = params_node(j);
  return {required(p, "kappa"), required(p, "theta"), required(p, "sigma"), required(p, "r0")};
}

Json to_json(const models::BatesParams& p) {
  return {{"kappa", p.heston.kappa}, {"theta", p.heston.theta}, {"sigma", p.heston.sigma},
          {"rho", p.heston.rho},     {"v0", p.heston.v0},       {"lambda", p.jumps.lambda},
          {"mu_j", p.jumps.mu_j},    {"sigma_j", p.jumps.sigma_j}};
}

Json to_json(const rates::CirParams& p) {
  return {{"kappa", p.kappa}, {"theta", p.theta}, {"sigma", p.sigma}, {"r0", p.r0}};
}

market::MarketContext MarketOptions::context() const {
  market::MarketContext ctx{spot, rate, days_per_year};
  try {
    ctx.validate();
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }
  return ctx;
}

Json MarketOptions::to_json() const {
  return {{"spot", spot}, {"rate", rate}, {"days_per_year", days_per_year}};
}

void add_market_options(CLI::App* cmd, MarketOptions& opts) {
  cmd->add_option("--spot", opts.spot, "Spot price S0")->capture_default_str();
  cmd->add_option("--rate", opts.rate, "Continuously compounded risk-free rate")
      ->capture_default_str();
  cmd->add_option("--days-per-year", opts.days_per_year, "Trading days per year")
      ->capture_default_str();
}

market::OptionKind parse_kind(const std::string& name) {
  if (name == "call" || name == "C") return market::OptionKind::Call;
  if (name == "put" || name == "P") return market::OptionKind::Put;
  throw InputError("kind must be call or put");
}

}  // namespace volrate::cli
