#include "volrate/montecarlo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>

#include "volrate/parallel.hpp"
#include "volrate/random.hpp"

namespace volrate::mc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Simulation accepts the zero-variance corner (v0 = theta = 0) that the pricing models reject.
void check_dynamics(const models::BatesParams& p) {
  const auto& h = p.heston;
  const bool finite = std::isfinite(h.kappa) && std::isfinite(h.theta) && std::isfinite(h.sigma) &&
                      std::isfinite(h.rho) && std::isfinite(h.v0);
  if (!finite) throw std::invalid_argument("simulation parameters must be finite");
  if (!(h.kappa >= 0.0 && h.theta >= 0.0 && h.sigma >= 0.0 && h.v0 >= 0.0)) {
    throw std::invalid_argument("kappa, theta, sigma and v0 must be non-negative");
  }
  if (!(h.rho >= -1.0 && h.rho <= 1.0)) throw std::invalid_argument("rho must lie in [-1, 1]");
  p.jumps.validate();
}

/// One path of the log-Euler / full-truncation scheme; visit(j, S_j) for j = 0..n_steps.
class EquityStepper {
 public:
  EquityStepper(const models::BatesParams& p, const market::MarketContext& ctx, double t,
                int n_steps)
      : p_(p), spot_(ctx.spot), n_steps_(n_steps), dt_(t / n_steps), sqrt_dt_(std::sqrt(dt_)) {
    const double lambda = p.jumps.lambda;
    drift_ = ctx.risk_free_rate - lambda * models::jump_compensator(p.jumps);
    rho_perp_ = std::sqrt(std::max(0.0, 1.0 - p.heston.rho * p.heston.rho));
    jump_rate_ = lambda * dt_;
  }

  template <class Visit>
  void run(PathRng& rng, Visit&& visit) const {
    std::normal_distribution<double> normal;
    std::poisson_distribution<int> arrivals(jump_rate_ > 0.0 ? jump_rate_ : 1.0);
    const auto& h = p_.heston;
    double x = std::log(spot_);
    double v = h.v0;
    visit(0, spot_);
    for (int j = 1; j <= n_steps_; ++j) {
      const double vp = std::max(v, 0.0);
      const double z1 = normal(rng);
      const double z2 = normal(rng);
      const double zv = h.rho * z1 + rho_perp_ * z2;
      const double root = std::sqrt(vp);
      x += (drift_ - 0.5 * vp) * dt_ + root * sqrt_dt_ * z1;
      if (jump_rate_ > 0.0) {
        const int n = arrivals(rng);
        if (n > 0) {
          // Sum of n i.i.d. N(mu_j, sigma_j^2) log-jumps.
          x += n * p_.jumps.mu_j + p_.jumps.sigma_j * std::sqrt(static_cast<double>(n)) * normal(rng);
        }
      }
      v += h.kappa * (h.theta - vp) * dt_ + h.sigma * root * sqrt_dt_ * zv;
      visit(j, std::exp(x));
    }
  }

 private:
  models::BatesParams p_;
  double spot_;
  int n_steps_;
  double dt_;
  double sqrt_dt_;
  double drift_ = 0.0;
  double rho_perp_ = 0.0;
  double jump_rate_ = 0.0;
};

int resolve_steps(const PathConfig& cfg, double t, const market::MarketContext& ctx) {
  return cfg.n_steps > 0 ? cfg.n_steps : cfg.steps_for(t, ctx.trading_days_per_year);
}

void check_request(const AsianRequest& r) {
  r.context.validate();
  r.paths.validate();
  r.fees.validate();
  check_dynamics(r.params);
  if (!(r.strike >= 0.0) || !std::isfinite(r.strike)) {
    throw std::invalid_argument("strike must be non-negative");
  }
  if (!(r.maturity > 0.0) || !std::isfinite(r.maturity)) {
    throw std::invalid_argument("maturity must be positive");
  }
}

std::vector<double> payoffs_for(const AsianRequest& r, std::size_t n_paths) {
  const int steps = resolve_steps(r.paths, r.maturity, r.context);
  const EquityStepper stepper(r.params, r.context, r.maturity, steps);
  const double discount = std::exp(-r.context.risk_free_rate * r.maturity);
  const bool call = r.kind == market::OptionKind::Call;
  const double k = r.strike;
  std::vector<double> out(n_paths);
  parallel_for(n_paths, r.paths.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      PathRng rng(r.paths.seed, i);
      double total = 0.0;
      stepper.run(rng, [&](int, double s) { total += s; });
      const double avg = total / (steps + 1);
      out[i] = discount * (call ? std::max(avg - k, 0.0) : std::max(k - avg, 0.0));
    }
  });
  return out;
}

}  // namespace

void PathConfig::validate() const {
  if (n_paths < 1000) throw std::invalid_argument("n_paths must be at least 1000");
  if (n_steps < 0) throw std::invalid_argument("n_steps must be positive (0 selects daily)");
  if (threads < 1) throw std::invalid_argument("threads must be at least 1");
}

int PathConfig::steps_for(double t, int trading_days_per_year) const {
  if (n_steps > 0) return n_steps;
  return std::max(1, static_cast<int>(std::lround(t * trading_days_per_year)));
}

void FeeSchedule::validate() const {
  if (!(fee_fraction >= 0.0) || !std::isfinite(fee_fraction)) {
    throw std::invalid_argument("fee fraction must be non-negative");
  }
}

PathMatrix simulate_equity_paths(const models::BatesParams& params,
                                 const market::MarketContext& context, double t,
                                 const PathConfig& cfg) {
  context.validate();
  cfg.validate();
  check_dynamics(params);
  if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("horizon must be positive");
  const int steps = resolve_steps(cfg, t, context);
  const EquityStepper stepper(params, context, t, steps);
  PathMatrix out(static_cast<std::size_t>(cfg.n_paths), static_cast<std::size_t>(steps) + 1);
  parallel_for(out.paths(), cfg.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      PathRng rng(cfg.seed, i);
      auto row = out.row(i);
      stepper.run(rng, [&](int j, double s) { row[static_cast<std::size_t>(j)] = s; });
    }
  });
  return out;
}

McEstimate estimate_from_samples(std::span<const double> discounted) {
  if (discounted.size() < 2) throw std::invalid_argument("need at least two samples");
  const auto n = static_cast<double>(discounted.size());
  const double mean = pairwise_sum(discounted) / n;
  std::vector<double> dev(discounted.size());
  std::transform(discounted.begin(), discounted.end(), dev.begin(),
                 [mean](double x) { return (x - mean) * (x - mean); });
  const double var = pairwise_sum(dev) / (n - 1.0);
  McEstimate e;
  e.fair_price = mean;
  e.std_error = std::sqrt(var / n);
  e.ci_low = mean - 1.96 * e.std_error;
  e.ci_high = mean + 1.96 * e.std_error;
  e.n_paths_used = discounted.size();
  return e;
}

std::vector<double> asian_discounted_payoffs(const AsianRequest& request) {
  check_request(request);
  return payoffs_for(request, static_cast<std::size_t>(request.paths.n_paths));
}

AsianQuote asian_price(const AsianRequest& request) {
  const auto start = Clock::now();
  const auto payoffs = asian_discounted_payoffs(request);
  AsianQuote q;
  q.fair = estimate_from_samples(payoffs);
  q.fair.elapsed_seconds = seconds_since(start);
  q.client_price = (1.0 + request.fees.fee_fraction) * q.fair.fair_price;
  return q;
}

std::vector<ScanPoint> convergence_scan(const AsianRequest& request,
                                        const std::vector<std::size_t>& path_counts) {
  check_request(request);
  if (path_counts.empty()) return {};
  for (std::size_t i = 0; i < path_counts.size(); ++i) {
    if (path_counts[i] < 2) throw std::invalid_argument("scan path counts must be at least 2");
    if (i > 0 && path_counts[i] <= path_counts[i - 1]) {
      throw std::invalid_argument("scan path counts must be increasing");
    }
  }
  const auto start = Clock::now();
  const auto payoffs = payoffs_for(request, path_counts.back());
  const double elapsed = seconds_since(start);
  std::vector<ScanPoint> out;
  out.reserve(path_counts.size());
  for (auto n : path_counts) {
    ScanPoint p{n, estimate_from_samples(std::span<const double>(payoffs).first(n))};
    p.estimate.elapsed_seconds = elapsed * static_cast<double>(n) / path_counts.back();
    out.push_back(p);
  }
  return out;
}

McReport mc_report(const McEstimate& estimate, const FeeSchedule& fees) {
  fees.validate();
  McReport r;
  r.fair_value = estimate.fair_price;
  r.fee_fraction = fees.fee_fraction;
  r.fee_amount = fees.fee_fraction * estimate.fair_price;
  r.client_total = (1.0 + fees.fee_fraction) * estimate.fair_price;
  r.fee_share = fees.fee_fraction / (1.0 + fees.fee_fraction);
  return r;
}

}  // namespace volrate::mc
