// Writes the synthetic fixtures under the given directory: an option chain priced from known
// Heston parameters, a zero curve from known CIR parameters, and parameter JSON files.
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "volrate/calibration.hpp"
#include "volrate/rates_cir.hpp"

namespace fs = std::filesystem;
using namespace volrate;

namespace {

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  std::ofstream(path) << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path dir = argc > 1 ? argv[1] : "fixtures";
  fs::create_directories(dir / "params");

  const market::MarketContext ctx{232.90, 0.015, 250};
  models::BatesParams truth;
  truth.heston = {2.0, 0.05, 0.4, -0.6, 0.04};
  std::vector<market::OptionQuote> quotes;
  for (int days : {15, 60, 120}) {
    for (int i = 0; i < 9; ++i) {
      market::OptionQuote q;
      q.kind = market::OptionKind::Call;
      q.strike = std::round(ctx.spot * (0.8 + 0.05 * i) * 100.0) / 100.0;
      q.maturity_days = days;
      quotes.push_back(q);
    }
  }
  const auto prices = calib::model_prices(truth, market::QuoteSet(ctx, quotes), {});
  for (std::size_t i = 0; i < quotes.size(); ++i) quotes[i].price = prices[i];
  {
    std::ofstream out(dir / "synth.csv");
    out << "# Heston kappa=2 theta=0.05 sigma=0.4 rho=-0.6 v0=0.04; S0=232.90 r=0.015\n";
    market::write_option_chain(out, market::QuoteSet(ctx, quotes));
  }

  const rates::CirParams cir{1.5, 0.03, 0.25, 0.01};
  {
    std::ofstream out(dir / "curve.csv");
    out << "# CIR kappa=1.5 theta=0.03 sigma=0.25 r0=0.01, continuous zero rates\n";
    out << "tenor_months,rate\n";
    for (int m = 1; m <= 12; ++m) {
      const double t = m / 12.0;
      out << m << ',' << market::format_double(-std::log(rates::cir_bond_price(cir, t)) / t)
          << '\n';
    }
  }

  write_json(dir / "params" / "heston_synth.json",
             {{"kappa", 2.0}, {"theta", 0.05}, {"sigma", 0.4}, {"rho", -0.6}, {"v0", 0.04}});
  write_json(dir / "params" / "heston_20d.json",
             {{"kappa", 0.3981}, {"theta", 0.08748}, {"sigma", 0.0}, {"rho", 0.9906},
              {"v0", 0.1016}});
  write_json(dir / "params" / "bates_70d.json",
             {{"kappa", 15.562}, {"theta", 0.15865}, {"sigma", 0.000017}, {"rho", -0.00571},
              {"v0", 0.04832}, {"lambda", 0.0}, {"mu_j", -0.00592}, {"sigma_j", 0.0000548}});
  write_json(dir / "params" / "cir_euribor.json",
             {{"kappa", 2.0}, {"theta", 0.0422}, {"sigma", 0.4110}, {"r0", 0.00404}});
  std::cout << "fixtures written to " << dir << '\n';
  return 0;
}
