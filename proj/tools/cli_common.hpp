#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "manifest.hpp"
#include "volrate/market_data.hpp"
#include "volrate/models.hpp"
#include "volrate/rates_cir.hpp"

namespace volrate::cli {

/// Bad flags, unreadable files, malformed JSON or CSV: exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation ran but produced no usable answer: exit code 3.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Session {
  std::uint64_t seed = 42;
  int threads = 1;
  std::string out_path;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
  int exit_code = 0;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

RunManifest start_manifest(const Session& s, const std::string& command);

/// Writes {"manifest": ..., body...} to --out or stdout.
void emit(const Session& s, RunManifest manifest, const Json& body);

Json read_json_file(const std::string& path);

/// Accepts either a bare parameter object or a report with a "params" member. Missing jump
/// keys default to zero intensity.
models::BatesParams equity_params_from_json(const Json& j);
rates::CirParams cir_params_from_json(const Json& j);

Json to_json(const models::BatesParams& p);
Json to_json(const rates::CirParams& p);

struct MarketOptions {
  double spot = 232.90;
  double rate = 0.015;
  int days_per_year = 250;

  market::MarketContext context() const;
  Json to_json() const;
};

void add_market_options(CLI::App* cmd, MarketOptions& opts);

market::OptionKind parse_kind(const std::string& name);

void add_calibrate_commands(CLI::App& app, Session& s);
void add_price_commands(CLI::App& app, Session& s);
void add_rates_commands(CLI::App& app, Session& s);
void add_report_commands(CLI::App& app, Session& s);

}  // namespace volrate::cli
