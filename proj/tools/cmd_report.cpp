#include <filesystem>
#include <fstream>
#include <map>
#include <memory>

#include "cli_common.hpp"
#include "volrate/rates_cir.hpp"

namespace volrate::cli {

namespace {

std::string num(const Json& v) {
  if (v.is_number()) return market::format_double(v.get<double>());
  if (v.is_null()) return "nan";
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : path_(path), file_(path, std::ios::binary) {
    if (!file_) throw InputError("cannot write " + path.string());
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) file_ << (i ? "," : "") << cells[i];
    file_ << '\n';
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream file_;
};

struct ReportOptions {
  std::vector<std::string> inputs;
  std::string dir;
};

void error_quantiles(const Json& quotes, const std::filesystem::path& path) {
  std::map<std::string, std::vector<double>> groups;
  for (const auto& q : quotes) {
    if (!q["error"].is_number()) continue;
    const double e = q["error"].get<double>();
    groups["all"].push_back(e);
    groups[std::to_string(q["maturity_days"].get<int>())].push_back(e);
  }
  CsvWriter csv(path, {"group", "count", "min", "q25", "median", "q75", "max"});
  for (const auto& [name, errs] : groups) {
    csv.row({name, std::to_string(errs.size()), market::format_double(rates::quantile(errs, 0.0)),
             market::format_double(rates::quantile(errs, 0.25)),
             market::format_double(rates::quantile(errs, 0.5)),
             market::format_double(rates::quantile(errs, 0.75)),
             market::format_double(rates::quantile(errs, 1.0))});
  }
}

std::vector<std::string> write_tables(const Json& report, const std::filesystem::path& dir,
                                      const std::string& stem) {
  std::vector<std::string> written;
  auto target = [&](const std::string& table) {
    auto p = dir / (stem + "_" + table + ".csv");
    written.push_back(p.string());
    return p;
  };
  if (report.contains("quotes")) {
    CsvWriter csv(target("market_vs_model"), {"strike", "maturity_days", "market", "model", "error"});
    for (const auto& q : report["quotes"]) {
      csv.row({num(q["strike"]), num(q["maturity_days"]), num(q["market"]), num(q["model"]),
               num(q["error"])});
    }
    error_quantiles(report["quotes"], target("error_quantiles"));
  }
  if (report.contains("scan")) {
    CsvWriter csv(target("convergence"), {"n_paths", "fair_price", "std_error", "ci_low", "ci_high"});
    for (const auto& r : report["scan"]) {
      csv.row({num(r["n_paths_used"]), num(r["fair_price"]), num(r["std_error"]), num(r["ci_low"]),
               num(r["ci_high"])});
    }
  }
  if (report.contains("histogram")) {
    CsvWriter csv(target("payoff_histogram"), {"bin_low", "bin_high", "count"});
    for (const auto& b : report["histogram"]["bins"]) {
      csv.row({num(b["bin_low"]), num(b["bin_high"]), num(b["count"])});
    }
  }
  if (report.contains("report")) {
    const auto& r = report["report"];
    const double client = r["client_total"].get<double>();
    auto share = [&](double x) { return market::format_double(client != 0.0 ? x / client : 0.0); };
    CsvWriter csv(target("fee_decomposition"), {"component", "amount", "share_of_client"});
    csv.row({"fair_value", num(r["fair_value"]), share(r["fair_value"].get<double>())});
    csv.row({"fee", num(r["fee_amount"]), share(r["fee_amount"].get<double>())});
    csv.row({"client_total", num(r["client_total"]), share(client)});
  }
  if (report.contains("sample_paths")) {
    const double dt = report["sample_paths"]["dt"].get<double>();
    CsvWriter csv(target("rate_paths"), {"path", "step", "time", "rate"});
    std::size_t i = 0;
    for (const auto& path : report["sample_paths"]["paths"]) {
      std::size_t j = 0;
      for (const auto& r : path) {
        csv.row({std::to_string(i), std::to_string(j), market::format_double(j * dt), num(r)});
        ++j;
      }
      ++i;
    }
  }
  if (report.contains("df_scatter")) {
    CsvWriter csv(target("df_scatter"), {"terminal_rate", "discount_factor"});
    for (const auto& p : report["df_scatter"]) {
      csv.row({num(p["terminal_rate"]), num(p["discount_factor"])});
    }
  }
  if (report.contains("grid")) {
    CsvWriter csv(target("curve_fit"), {"tenor", "market_rate", "model_rate", "market_df", "model_df"});
    for (const auto& g : report["grid"]) {
      csv.row({num(g["tenor"]), num(g["market_rate"]), num(g["model_rate"]), num(g["market_df"]),
               num(g["model_df"])});
    }
  }
  return written;
}

void run_report(Session& s, const ReportOptions& o) {
  auto manifest = start_manifest(s, "report");
  manifest.config = {{"inputs", o.inputs}, {"dir", o.dir}};
  std::vector<std::pair<std::string, Json>> reports;
  for (const auto& in : o.inputs) {
    manifest.inputs.push_back(digest_input(in));
    reports.emplace_back(in, read_json_file(in));
  }
  std::error_code ec;
  std::filesystem::create_directories(o.dir, ec);
  if (ec) throw InputError("cannot create " + o.dir);
  Json tables = Json::array();
  for (const auto& [path, report] : reports) {
    const auto stem = std::filesystem::path(path).stem().string();
    Json files = Json::array();
    for (const auto& f : write_tables(report, o.dir, stem)) files.push_back(f);
    tables.push_back({{"input", path}, {"tables", files}});
  }
  emit(s, manifest, {{"written", tables}});
}

struct VerifyOptions {
  std::string input;
};

void run_verify(Session& s, const VerifyOptions& o) {
  auto manifest = start_manifest(s, "verify");
  manifest.inputs.push_back(digest_input(o.input));
  manifest.config = {{"input", o.input}};
  const auto report = read_json_file(o.input);
  if (!report.contains("manifest") || !report["manifest"].contains("inputs")) {
    throw InputError(o.input + " has no manifest");
  }
  Json checked = Json::array();
  bool all_match = true;
  for (const auto& in : report["manifest"]["inputs"]) {
    const auto path = in["path"].get<std::string>();
    const auto expected = in["sha256"].get<std::string>();
    std::string actual;
    try {
      actual = sha256_file(path);
    } catch (const InputError&) {
      actual = "missing";
    }
    const bool match = actual == expected;
    all_match = all_match && match;
    checked.push_back({{"path", path}, {"expected", expected}, {"actual", actual}, {"match", match}});
  }
  emit(s, manifest, {{"verified", o.input}, {"checked", checked}, {"all_match", all_match}});
  if (!all_match) s.exit_code = 2;
}

}  // namespace

void add_report_commands(CLI::App& app, Session& s) {
  auto ro = std::make_shared<ReportOptions>();
  auto* r = app.add_subcommand("report", "Write plot-ready CSV tables from earlier JSON reports");
  r->add_option("--input", ro->inputs, "Report JSON files")->required();
  r->add_option("--dir", ro->dir, "Output directory for CSV tables")->required();
  r->callback([&s, ro] { run_report(s, *ro); });

  auto vo = std::make_shared<VerifyOptions>();
  auto* v = app.add_subcommand("verify", "Recompute a report's input digests");
  v->add_option("--input", vo->input, "Report JSON file")->required();
  v->callback([&s, vo] { run_verify(s, *vo); });
}

}  // namespace volrate::cli
