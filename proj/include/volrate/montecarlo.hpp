#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "volrate/market_data.hpp"
#include "volrate/models.hpp"

namespace volrate::mc {

enum class Scheme { EulerFullTruncation };

struct PathConfig {
  int n_paths = 100000;
  int n_steps = 0;  // 0: one step per trading day
  std::uint64_t seed = 42;
  Scheme scheme = Scheme::EulerFullTruncation;
  int threads = 1;

  void validate() const;
  /// Step count for a horizon of t years under the context's day count.
  int steps_for(double t, int trading_days_per_year) const;
};

struct McEstimate {
  double fair_price = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_paths_used = 0;
  double elapsed_seconds = 0.0;
};

struct FeeSchedule {
  double fee_fraction = 0.04;

  void validate() const;
};

/// Row-major n_paths x (n_steps + 1) matrix of simulated prices.
class PathMatrix {
 public:
  PathMatrix(std::size_t paths, std::size_t columns)
      : paths_(paths), columns_(columns), data_(paths * columns) {}

  std::size_t paths() const noexcept { return paths_; }
  std::size_t columns() const noexcept { return columns_; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * columns_, columns_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * columns_, columns_}; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * columns_ + j]; }

 private:
  std::size_t paths_;
  std::size_t columns_;
  std::vector<double> data_;
};

/// Log-Euler price with full-truncation variance, correlated normals and lognormal jumps.
/// Drift is r - lambda k_bar; the Heston case is lambda = 0.
PathMatrix simulate_equity_paths(const models::BatesParams& params,
                                 const market::MarketContext& context, double t,
                                 const PathConfig& cfg);

struct AsianRequest {
  market::OptionKind kind = market::OptionKind::Call;
  models::BatesParams params;
  market::MarketContext context;
  double strike = 0.0;
  double maturity = 0.0;  // years
  PathConfig paths;
  FeeSchedule fees;
};

struct AsianQuote {
  McEstimate fair;
  double client_price = 0.0;
};

/// Discounted arithmetic-average payoffs, one per path, averaging all n_steps + 1 observations.
std::vector<double> asian_discounted_payoffs(const AsianRequest& request);

AsianQuote asian_price(const AsianRequest& request);

/// Sample mean, standard error and 95% interval of i.i.d. discounted payoffs.
McEstimate estimate_from_samples(std::span<const double> discounted);

struct ScanPoint {
  std::size_t n_paths = 0;
  McEstimate estimate;
};

/// Estimates on prefixes of one run of max(path_counts) paths.
std::vector<ScanPoint> convergence_scan(const AsianRequest& request,
                                        const std::vector<std::size_t>& path_counts);

struct McReport {
  double fair_value = 0.0;
  double fee_fraction = 0.0;
  double fee_amount = 0.0;
  double client_total = 0.0;
  double fee_share = 0.0;  // fee / client total
};

McReport mc_report(const McEstimate& estimate, const FeeSchedule& fees);

}  // namespace volrate::mc
