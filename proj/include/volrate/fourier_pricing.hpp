#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "volrate/models.hpp"

namespace volrate::fourier {

using models::CharacteristicFunction;

/// Truncated transform integral on [0, umax] with composite 16-node Gauss-Legendre panels.
/// The limit is doubled (at most max_doublings times) while |phi| at the limit exceeds
/// tail_tolerance; slowly decaying CFs (short maturity, low variance) need it.
struct IntegrationConfig {
  double umax = 200.0;
  int n_points = 512;
  double tail_tolerance = 1e-9;
  int max_doublings = 5;

  void validate() const;
};

/// Carr-Madan settings; log-strike spacing is 2 pi / (n_grid eta).
struct FftConfig {
  double alpha = 1.5;
  int n_grid = 4096;
  double eta = 0.25;

  void validate() const;
  double log_strike_spacing() const;
};

struct ProbPair {
  double p1 = 0.0;
  double p2 = 0.0;
};

/// A price together with whether it had to be lifted to its no-arbitrage bound.
struct FourierPrice {
  double value = 0.0;
  bool floored = false;
};

struct GridPoint {
  double log_strike = 0.0;
  double call_price = 0.0;
};

class IntegrationDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonFiniteGrid : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StrikeOutOfGrid : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gil-Pelaez inversion: P2 under the CF itself, P1 under phi(u - i) / phi(-i).
ProbPair heston_probabilities(const CharacteristicFunction& cf, double spot, double strike,
                              double rate, double t, const IntegrationConfig& cfg = {});

double european_call_fourier(const CharacteristicFunction& cf, double spot, double strike,
                             double rate, double t, const IntegrationConfig& cfg = {});
double european_put_fourier(const CharacteristicFunction& cf, double spot, double strike,
                            double rate, double t, const IntegrationConfig& cfg = {});

/// Prices a strip of strikes at one maturity, sharing the CF evaluations.
std::vector<FourierPrice> european_strip_fourier(const CharacteristicFunction& cf, double spot,
                                                 std::span<const double> strikes,
                                                 std::span<const market::OptionKind> kinds,
                                                 double rate, double t,
                                                 const IntegrationConfig& cfg = {});

/// Damped call transform on n_grid log-strikes centred at ln S0.
std::vector<GridPoint> carr_madan_grid(const CharacteristicFunction& cf, double spot, double rate,
                                       double t, const FftConfig& cfg = {});

/// Cubic interpolation of the grid at ln K; K must sit in the central half of the grid.
double carr_madan_price(const CharacteristicFunction& cf, double spot, double strike, double rate,
                        double t, const FftConfig& cfg = {});

double interpolate_grid(std::span<const GridPoint> grid, double strike);

std::vector<FourierPrice> carr_madan_strip(const CharacteristicFunction& cf, double spot,
                                           std::span<const double> strikes,
                                           std::span<const market::OptionKind> kinds, double rate,
                                           double t, const FftConfig& cfg = {});

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussLegendreRule& gauss_legendre(int order);

}  // namespace volrate::fourier
