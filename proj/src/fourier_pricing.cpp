#include "volrate/fourier_pricing.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace volrate::fourier {

namespace {

using models::Complex;
using market::OptionKind;

constexpr Complex kI(0.0, 1.0);
constexpr int kPanelOrder = 16;
constexpr double kFloorTolerance = 1e-9;

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

Complex eval_cf(const CharacteristicFunction& cf, Complex u) {
  try {
    return cf(u);
  } catch (const models::NonFiniteResult& e) {
    throw IntegrationDiverged(e.what());
  }
}

// Panel count: the default split of n_points (scaled with any extension of the limit), refined
// so that one 16-node panel spans at most two periods of the strike oscillation e^{-iu ln(K/F)}.
int panel_count(const IntegrationConfig& cfg, double limit, double max_log_moneyness) {
  const int base = (cfg.n_points + kPanelOrder - 1) / kPanelOrder;
  const int scaled = static_cast<int>(std::ceil(base * limit / cfg.umax));
  const double freq = max_log_moneyness + 1.0;
  const int needed = static_cast<int>(std::ceil(limit * freq / (4.0 * std::numbers::pi)));
  return std::max(scaled, needed);
}

// Doubles the upper limit while the CF at the cut-off is still above the tail tolerance.
double truncation_limit(const CharacteristicFunction& cf, const IntegrationConfig& cfg) {
  double limit = cfg.umax;
  const double forward = std::abs(eval_cf(cf, -kI));
  for (int k = 0; k < cfg.max_doublings; ++k) {
    const double tail = std::max(std::abs(eval_cf(cf, Complex(limit, 0.0))),
                                 std::abs(eval_cf(cf, Complex(limit, -1.0))) / forward);
    if (!(tail > cfg.tail_tolerance)) break;
    limit *= 2.0;
  }
  return limit;
}

struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};

Quadrature composite_rule(double umax, int panels) {
  const auto& gl = gauss_legendre(kPanelOrder);
  Quadrature q;
  q.nodes.reserve(static_cast<std::size_t>(panels) * kPanelOrder);
  q.weights.reserve(q.nodes.capacity());
  const double h = umax / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * h;
    for (int i = 0; i < kPanelOrder; ++i) {
      q.nodes.push_back(mid + 0.5 * h * gl.nodes[i]);
      q.weights.push_back(0.5 * h * gl.weights[i]);
    }
  }
  return q;
}

// lim_{u->0} Re[e^{-iu ln K} phi_j(u) / (iu)] = E_j[ln S_T] - ln K.
double integrand_at_zero(const CharacteristicFunction& phi_j, double log_strike) {
  const double h = 1e-5;
  const Complex slope = (phi_j(Complex(h, 0.0)) - phi_j(Complex(-h, 0.0))) / (2.0 * h);
  return slope.imag() - log_strike;
}

struct CfSamples {
  Quadrature rule;
  std::vector<Complex> phi2;  // phi(u)
  std::vector<Complex> phi1;  // phi(u - i) / phi(-i)
  CharacteristicFunction normalised1;
};

CfSamples sample_cf(const CharacteristicFunction& cf, double umax, int panels) {
  CfSamples s;
  s.rule = composite_rule(umax, panels);
  const Complex forward = eval_cf(cf, -kI);
  if (!finite(forward) || std::abs(forward) == 0.0) {
    throw IntegrationDiverged("phi(-i) is not a usable normaliser");
  }
  s.normalised1 = [cf, forward](Complex u) { return eval_cf(cf, u - kI) / forward; };
  s.phi2.reserve(s.rule.nodes.size());
  s.phi1.reserve(s.rule.nodes.size());
  for (double u : s.rule.nodes) {
    s.phi2.push_back(eval_cf(cf, Complex(u, 0.0)));
    s.phi1.push_back(eval_cf(cf, Complex(u, -1.0)) / forward);
  }
  return s;
}

ProbPair probabilities_from(const CfSamples& s, const CharacteristicFunction& cf,
                            double log_strike) {
  double i1 = 0.0;
  double i2 = 0.0;
  for (std::size_t n = 0; n < s.rule.nodes.size(); ++n) {
    const double u = s.rule.nodes[n];
    double f1;
    double f2;
    if (u == 0.0) {
      f1 = integrand_at_zero(s.normalised1, log_strike);
      f2 = integrand_at_zero([&cf](Complex z) { return eval_cf(cf, z); }, log_strike);
    } else {
      const Complex rot = std::exp(-kI * (u * log_strike));
      f1 = (rot * s.phi1[n]).imag() / u;
      f2 = (rot * s.phi2[n]).imag() / u;
    }
    if (!std::isfinite(f1) || !std::isfinite(f2)) {
      throw IntegrationDiverged("non-finite integrand at u = " + std::to_string(u));
    }
    i1 += s.rule.weights[n] * f1;
    i2 += s.rule.weights[n] * f2;
  }
  ProbPair p{0.5 + i1 / std::numbers::pi, 0.5 + i2 / std::numbers::pi};
  p.p1 = std::clamp(p.p1, 0.0, 1.0);
  p.p2 = std::clamp(p.p2, 0.0, 1.0);
  return p;
}

FourierPrice price_from(OptionKind kind, const ProbPair& p, double spot, double strike,
                        double discount) {
  const double pv_strike = strike * discount;
  FourierPrice out;
  if (kind == OptionKind::Call) {
    out.value = spot * p.p1 - pv_strike * p.p2;
    const double lower = std::max(spot - pv_strike, 0.0);
    if (out.value < lower - kFloorTolerance) {
      out.value = lower;
      out.floored = true;
    }
  } else {
    out.value = pv_strike * (1.0 - p.p2) - spot * (1.0 - p.p1);
    const double lower = std::max(pv_strike - spot, 0.0);
    if (out.value < lower - kFloorTolerance) {
      out.value = lower;
      out.floored = true;
    }
  }
  return out;
}

void check_inputs(double spot, double strike, double t) {
  if (!(spot > 0.0) || !(strike > 0.0)) throw std::invalid_argument("spot and strike must be positive");
  if (!(t > 0.0)) throw std::invalid_argument("maturity must be positive");
}

// FFTW planning is not thread-safe; plans are cached per size and executed on fresh arrays.
class FftPlans {
 public:
  static FftPlans& instance() {
    static FftPlans plans;
    return plans;
  }

  fftw_plan forward(int n) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    auto* in = fftw_alloc_complex(static_cast<std::size_t>(n));
    auto* out = fftw_alloc_complex(static_cast<std::size_t>(n));
    fftw_plan plan = fftw_plan_dft_1d(n, in, out, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    plans_.emplace(n, plan);
    return plan;
  }

  ~FftPlans() {
    for (auto& [n, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mutex_;
  std::map<int, fftw_plan> plans_;
};

struct FftwDeleter {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwDeleter>;

}  // namespace

void IntegrationConfig::validate() const {
  if (!(umax > 0.0)) throw std::invalid_argument("umax must be positive");
  if (n_points < 64) throw std::invalid_argument("n_points must be at least 64");
  if (!(tail_tolerance >= 0.0)) throw std::invalid_argument("tail tolerance must be non-negative");
  if (max_doublings < 0) throw std::invalid_argument("max_doublings must be non-negative");
}

void FftConfig::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (n_grid < 2 || (n_grid & (n_grid - 1)) != 0) {
    throw std::invalid_argument("n_grid must be a power of two");
  }
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
}

double FftConfig::log_strike_spacing() const { return 2.0 * std::numbers::pi / (n_grid * eta); }

const GaussLegendreRule& gauss_legendre(int order) {
  static std::mutex mutex;
  static std::map<int, GaussLegendreRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(order);
  if (it != cache.end()) return it->second;

  GaussLegendreRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[order - 1 - i] = x;
    rule.weights[order - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return cache.emplace(order, std::move(rule)).first->second;
}

ProbPair heston_probabilities(const CharacteristicFunction& cf, double spot, double strike,
                              double rate, double t, const IntegrationConfig& cfg) {
  check_inputs(spot, strike, t);
  cfg.validate();
  const double log_moneyness = std::abs(std::log(spot / strike) + rate * t);
  const double limit = truncation_limit(cf, cfg);
  const auto samples = sample_cf(cf, limit, panel_count(cfg, limit, log_moneyness));
  return probabilities_from(samples, cf, std::log(strike));
}

double european_call_fourier(const CharacteristicFunction& cf, double spot, double strike,
                             double rate, double t, const IntegrationConfig& cfg) {
  const auto p = heston_probabilities(cf, spot, strike, rate, t, cfg);
  return price_from(OptionKind::Call, p, spot, strike, std::exp(-rate * t)).value;
}

double european_put_fourier(const CharacteristicFunction& cf, double spot, double strike,
                            double rate, double t, const IntegrationConfig& cfg) {
  const auto p = heston_probabilities(cf, spot, strike, rate, t, cfg);
  return price_from(OptionKind::Put, p, spot, strike, std::exp(-rate * t)).value;
}

std::vector<FourierPrice> european_strip_fourier(const CharacteristicFunction& cf, double spot,
                                                 std::span<const double> strikes,
                                                 std::span<const OptionKind> kinds, double rate,
                                                 double t, const IntegrationConfig& cfg) {
  if (strikes.size() != kinds.size()) throw std::invalid_argument("strikes/kinds size mismatch");
  cfg.validate();
  if (strikes.empty()) return {};
  double widest = 0.0;
  for (double k : strikes) {
    check_inputs(spot, k, t);
    widest = std::max(widest, std::abs(std::log(spot / k) + rate * t));
  }
  const double limit = truncation_limit(cf, cfg);
  const auto samples = sample_cf(cf, limit, panel_count(cfg, limit, widest));
  const double discount = std::exp(-rate * t);
  std::vector<FourierPrice> out;
  out.reserve(strikes.size());
  for (std::size_t i = 0; i < strikes.size(); ++i) {
    const auto p = probabilities_from(samples, cf, std::log(strikes[i]));
    out.push_back(price_from(kinds[i], p, spot, strikes[i], discount));
  }
  return out;
}

std::vector<GridPoint> carr_madan_grid(const CharacteristicFunction& cf, double spot, double rate,
                                       double t, const FftConfig& cfg) {
  cfg.validate();
  if (!(spot > 0.0) || !(t > 0.0)) throw std::invalid_argument("spot and maturity must be positive");

  const int n = cfg.n_grid;
  const double alpha = cfg.alpha;
  const double eta = cfg.eta;
  const double spacing = cfg.log_strike_spacing();
  const double k0 = std::log(spot) - 0.5 * n * spacing;
  const double discount = std::exp(-rate * t);

  FftwBuffer in(fftw_alloc_complex(static_cast<std::size_t>(n)));
  FftwBuffer out(fftw_alloc_complex(static_cast<std::size_t>(n)));
  for (int j = 0; j < n; ++j) {
    const double v = j * eta;
    Complex phi;
    try {
      phi = cf(Complex(v, -(alpha + 1.0)));
    } catch (const models::NonFiniteResult& e) {
      throw NonFiniteGrid(e.what());
    }
    const Complex denom(alpha * alpha + alpha - v * v, (2.0 * alpha + 1.0) * v);
    const double simpson = (3.0 + ((j % 2 == 1) ? 1.0 : -1.0) - (j == 0 ? 1.0 : 0.0)) / 3.0;
    const Complex x = discount * phi / denom * std::exp(-kI * (v * k0)) * (eta * simpson);
    in[j][0] = x.real();
    in[j][1] = x.imag();
  }
  fftw_execute_dft(FftPlans::instance().forward(n), in.get(), out.get());

  std::vector<GridPoint> grid(static_cast<std::size_t>(n));
  for (int u = 0; u < n; ++u) {
    const double k = k0 + u * spacing;
    const double price = std::exp(-alpha * k) / std::numbers::pi * out[u][0];
    if (!std::isfinite(price)) throw NonFiniteGrid("non-finite Carr-Madan price on grid");
    grid[u] = {k, price};
  }
  return grid;
}

double interpolate_grid(std::span<const GridPoint> grid, double strike) {
  const std::size_t n = grid.size();
  if (n < 4) throw StrikeOutOfGrid("grid too small to interpolate");
  const double k0 = grid.front().log_strike;
  const double spacing = grid[1].log_strike - k0;
  const double k = std::log(strike);
  const double pos = (k - k0) / spacing;
  if (!(pos >= 0.25 * (n - 1) && pos <= 0.75 * (n - 1))) {
    throw StrikeOutOfGrid("strike outside the central half of the Carr-Madan grid");
  }
  const double nearest = std::round(pos);
  if (std::abs(pos - nearest) < 1e-9) return grid[static_cast<std::size_t>(nearest)].call_price;

  const auto base = static_cast<std::size_t>(std::floor(pos)) - 1;
  const double x = pos - static_cast<double>(base);  // in (1, 2)
  double value = 0.0;
  for (std::size_t a = 0; a < 4; ++a) {
    double weight = 1.0;
    for (std::size_t b = 0; b < 4; ++b) {
      if (a != b) weight *= (x - static_cast<double>(b)) / (static_cast<double>(a) - static_cast<double>(b));
    }
    value += weight * grid[base + a].call_price;
  }
  return value;
}

double carr_madan_price(const CharacteristicFunction& cf, double spot, double strike, double rate,
                        double t, const FftConfig& cfg) {
  check_inputs(spot, strike, t);
  const auto grid = carr_madan_grid(cf, spot, rate, t, cfg);
  return interpolate_grid(grid, strike);
}

std::vector<FourierPrice> carr_madan_strip(const CharacteristicFunction& cf, double spot,
                                           std::span<const double> strikes,
                                           std::span<const OptionKind> kinds, double rate,
                                           double t, const FftConfig& cfg) {
  if (strikes.size() != kinds.size()) throw std::invalid_argument("strikes/kinds size mismatch");
  if (strikes.empty()) return {};
  const auto grid = carr_madan_grid(cf, spot, rate, t, cfg);
  const double discount = std::exp(-rate * t);
  std::vector<FourierPrice> out;
  out.reserve(strikes.size());
  for (std::size_t i = 0; i < strikes.size(); ++i) {
    check_inputs(spot, strikes[i], t);
    const double call = interpolate_grid(grid, strikes[i]);
    const double pv_strike = strikes[i] * discount;
    FourierPrice p;
    if (kinds[i] == OptionKind::Call) {
      p.value = call;
      const double lower = std::max(spot - pv_strike, 0.0);
      if (p.value < lower - kFloorTolerance) p = {lower, true};
    } else {
      p.value = call - spot + pv_strike;
      const double lower = std::max(pv_strike - spot, 0.0);
      if (p.value < lower - kFloorTolerance) p = {lower, true};
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace volrate::fourier
