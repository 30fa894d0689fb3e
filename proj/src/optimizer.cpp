#include "volrate/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "volrate/parallel.hpp"

namespace volrate::calib {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_eval(const Objective& f, std::span<const double> x) {
  const double v = f(x);
  return std::isfinite(v) ? v : kInf;
}

std::vector<double> evaluate_all(const Objective& f, const std::vector<std::vector<double>>& xs,
                                 int threads) {
  std::vector<double> values(xs.size());
  parallel_for(xs.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) values[i] = safe_eval(f, xs[i]);
  });
  return values;
}

using Matrix = std::vector<std::vector<double>>;

Matrix identity(std::size_t n) {
  Matrix m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1.0;
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

void Bounds::validate() const {
  if (lower.size() != upper.size() || lower.empty()) {
    throw std::invalid_argument("bounds must be non-empty and of matching size");
  }
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!(lower[i] < upper[i])) throw std::invalid_argument("bounds require lower < upper");
  }
}

bool Bounds::contains(std::span<const double> x) const {
  if (x.size() != lower.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
  }
  return true;
}

std::vector<double> Bounds::clamp(std::span<const double> x) const {
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i], lower[i], upper[i]);
  return out;
}

void OptimizerConfig::validate(std::size_t dimension) const {
  if (population(dimension) < 10) throw std::invalid_argument("DE population must be at least 10");
  if (de_generations < 0) throw std::invalid_argument("DE generations must be non-negative");
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (local_max_iter < 0) throw std::invalid_argument("local_max_iter must be non-negative");
}

int OptimizerConfig::population(std::size_t dimension) const {
  return de_population > 0 ? de_population : static_cast<int>(15 * dimension);
}

DeResult differential_evolution(const Objective& objective, const Bounds& bounds,
                                const OptimizerConfig& cfg,
                                const std::vector<std::vector<double>>& seeds) {
  bounds.validate();
  const std::size_t dim = bounds.dimension();
  cfg.validate(dim);
  const auto np = static_cast<std::size_t>(cfg.population(dim));

  std::mt19937_64 rng(cfg.de_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, np - 1);
  std::uniform_int_distribution<std::size_t> pick_dim(0, dim - 1);

  Matrix pop(np, std::vector<double>(dim));
  for (std::size_t i = 0; i < np; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      pop[i][j] = bounds.lower[j] + unit(rng) * (bounds.upper[j] - bounds.lower[j]);
    }
  }
  for (std::size_t s = 0; s < seeds.size() && s < np; ++s) {
    if (seeds[s].size() != dim) throw std::invalid_argument("DE seed has wrong dimension");
    pop[s] = bounds.clamp(seeds[s]);
  }

  auto fitness = evaluate_all(objective, pop, cfg.threads);
  DeResult result;
  result.evaluations = np;

  const bool any_usable =
      std::any_of(fitness.begin(), fitness.end(), [](double v) { return v < kPenaltyValue; });
  if (!any_usable) throw NoFiniteObjective();

  auto best_index = [&] {
    std::size_t b = 0;
    for (std::size_t i = 1; i < np; ++i) {
      if (fitness[i] < fitness[b]) b = i;
    }
    return b;
  };

  std::size_t best = best_index();
  // Penalised members are clipped so the mean stays finite.
  auto mean_fitness = [&] {
    double sum = 0.0;
    for (double v : fitness) sum += std::min(v, kPenaltyValue);
    return sum / static_cast<double>(np);
  };
  double mean = mean_fitness();
  int flat = 0;
  Matrix trials(np, std::vector<double>(dim));
  for (int gen = 0; gen < cfg.de_generations; ++gen) {
    for (std::size_t i = 0; i < np; ++i) {
      std::size_t r1, r2, r3;
      do { r1 = pick(rng); } while (r1 == i);
      do { r2 = pick(rng); } while (r2 == i || r2 == r1);
      do { r3 = pick(rng); } while (r3 == i || r3 == r1 || r3 == r2);
      const std::size_t jrand = pick_dim(rng);
      for (std::size_t j = 0; j < dim; ++j) {
        const bool cross = unit(rng) < cfg.de_crossover || j == jrand;
        if (!cross) {
          trials[i][j] = pop[i][j];
          continue;
        }
        double v = pop[r1][j] + cfg.de_weight * (pop[r2][j] - pop[r3][j]);
        // Out-of-bounds components are pulled halfway back towards the base vector.
        if (v < bounds.lower[j]) v = 0.5 * (pop[r1][j] + bounds.lower[j]);
        if (v > bounds.upper[j]) v = 0.5 * (pop[r1][j] + bounds.upper[j]);
        trials[i][j] = v;
      }
    }
    const auto trial_fitness = evaluate_all(objective, trials, cfg.threads);
    result.evaluations += np;

    const double previous_best = fitness[best];
    for (std::size_t i = 0; i < np; ++i) {
      // Strict improvement only: on ties the earlier-evaluated member survives.
      if (trial_fitness[i] < fitness[i]) {
        pop[i] = trials[i];
        fitness[i] = trial_fitness[i];
      }
    }
    best = best_index();
    result.generations = gen + 1;

    // A generation is flat only if neither the best nor the population mean moved, so a strong
    // seed does not end the search while the rest of the population is still improving.
    const double gain = previous_best - fitness[best];
    const double previous_mean = mean;
    mean = mean_fitness();
    const double mean_gain = previous_mean - mean;
    if (gain <= cfg.tolerance * std::abs(previous_best) &&
        mean_gain <= cfg.tolerance * std::abs(previous_mean)) {
      if (++flat >= cfg.de_stagnation) break;
    } else {
      flat = 0;
    }
    if (fitness[best] == 0.0) break;
  }

  result.best = pop[best];
  result.value = fitness[best];
  return result;
}

RefineResult local_refine(const Objective& objective, std::span<const double> start,
                          const Bounds& bounds, const OptimizerConfig& cfg) {
  bounds.validate();
  const std::size_t dim = bounds.dimension();
  if (start.size() != dim) throw std::invalid_argument("start has wrong dimension");
  if (!bounds.contains(start)) throw std::invalid_argument("start lies outside the bounds");

  std::vector<double> width(dim);
  for (std::size_t j = 0; j < dim; ++j) width[j] = bounds.upper[j] - bounds.lower[j];

  RefineResult out;
  auto to_x = [&](std::span<const double> z) {
    std::vector<double> x(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      x[j] = std::clamp(bounds.lower[j] + z[j] * width[j], bounds.lower[j], bounds.upper[j]);
    }
    return x;
  };
  auto eval_z = [&](std::span<const double> z) {
    ++out.evaluations;
    return safe_eval(objective, to_x(z));
  };

  std::vector<double> z(dim);
  for (std::size_t j = 0; j < dim; ++j) z[j] = (start[j] - bounds.lower[j]) / width[j];

  // Central differences with a 1e-6 relative step, one-sided against a bound.
  auto gradient = [&](std::span<const double> zc, double fc) {
    std::vector<double> g(dim);
    std::vector<double> fplus(dim), fminus(dim), hz(dim);
    std::vector<int> mode(dim);
    const auto xc = to_x(zc);
    for (std::size_t j = 0; j < dim; ++j) {
      const double hx = 1e-6 * std::max(std::abs(xc[j]), 1e-3 * width[j]);
      hz[j] = hx / width[j];
      if (zc[j] - hz[j] >= 0.0 && zc[j] + hz[j] <= 1.0) {
        mode[j] = 0;
      } else if (zc[j] + hz[j] <= 1.0) {
        mode[j] = 1;
      } else {
        mode[j] = -1;
      }
    }
    parallel_for(dim, cfg.threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t j = begin; j < end; ++j) {
        std::vector<double> zp(zc.begin(), zc.end());
        if (mode[j] >= 0) {
          zp[j] = zc[j] + hz[j];
          fplus[j] = safe_eval(objective, to_x(zp));
        }
        if (mode[j] <= 0) {
          zp[j] = zc[j] - hz[j];
          fminus[j] = safe_eval(objective, to_x(zp));
        }
      }
    });
    for (std::size_t j = 0; j < dim; ++j) {
      if (mode[j] == 0) {
        g[j] = (fplus[j] - fminus[j]) / (2.0 * hz[j]);
        out.evaluations += 2;
      } else if (mode[j] == 1) {
        g[j] = (fplus[j] - fc) / hz[j];
        out.evaluations += 1;
      } else {
        g[j] = (fc - fminus[j]) / hz[j];
        out.evaluations += 1;
      }
      if (!std::isfinite(g[j])) g[j] = 0.0;
    }
    return g;
  };

  // The start is evaluated as given; mapping it through z may move it by an ulp.
  ++out.evaluations;
  double f = safe_eval(objective, start);
  out.history.push_back(f);
  if (!std::isfinite(f)) {
    out.x.assign(start.begin(), start.end());
    out.value = f;
    return out;
  }

  Matrix h = identity(dim);
  bool h_is_identity = true;
  std::vector<bool> active_prev(dim, false);
  auto g = gradient(z, f);
  int small_steps = 0;

  for (int iter = 0; iter < cfg.local_max_iter; ++iter) {
    std::vector<bool> active(dim);
    std::vector<double> pg(dim);
    double pg_norm = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      active[j] = (z[j] <= 0.0 && g[j] > 0.0) || (z[j] >= 1.0 && g[j] < 0.0);
      pg[j] = active[j] ? 0.0 : g[j];
      pg_norm = std::max(pg_norm, std::abs(pg[j]));
    }
    if (pg_norm == 0.0) {
      out.converged = true;
      break;
    }
    if (active != active_prev) {
      h = identity(dim);
      h_is_identity = true;
      active_prev = active;
    }

    bool accepted = false;
    std::vector<double> z_new(dim);
    double f_new = f;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      std::vector<double> p(dim, 0.0);
      for (std::size_t a = 0; a < dim; ++a) {
        if (active[a]) continue;
        for (std::size_t b = 0; b < dim; ++b) {
          if (!active[b]) p[a] -= h[a][b] * pg[b];
        }
      }
      if (dot(p, pg) >= 0.0) {
        for (std::size_t j = 0; j < dim; ++j) p[j] = -pg[j];
      }
      double max_step = 0.0;
      for (double v : p) max_step = std::max(max_step, std::abs(v));
      // A bare gradient step has the objective's units, so without curvature information the
      // trial step is a quarter of the box and backtracking finds the scale.
      double t = (h_is_identity || max_step > 0.25) ? 0.25 / max_step : 1.0;

      for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
        bool moved = false;
        for (std::size_t j = 0; j < dim; ++j) {
          z_new[j] = std::clamp(z[j] + t * p[j], 0.0, 1.0);
          moved = moved || z_new[j] != z[j];
        }
        if (!moved) break;
        double decrease = 0.0;
        for (std::size_t j = 0; j < dim; ++j) decrease += g[j] * (z_new[j] - z[j]);
        f_new = eval_z(z_new);
        if (f_new < f && f_new <= f + 1e-4 * decrease) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        if (h_is_identity) break;
        h = identity(dim);
        h_is_identity = true;
      }
    }
    if (!accepted) {
      // No descent possible at working precision.
      out.converged = true;
      break;
    }

    const auto g_new = gradient(z_new, f_new);
    std::vector<double> s(dim), y(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      s[j] = z_new[j] - z[j];
      y[j] = g_new[j] - g[j];
    }
    const double sy = dot(s, y);
    if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
      if (h_is_identity) {
        const double scale = sy / dot(y, y);
        for (std::size_t j = 0; j < dim; ++j) h[j][j] = scale;
      }
      const double rho = 1.0 / sy;
      std::vector<double> hy(dim, 0.0);
      for (std::size_t a = 0; a < dim; ++a) {
        for (std::size_t b = 0; b < dim; ++b) hy[a] += h[a][b] * y[b];
      }
      const double yhy = dot(y, hy);
      for (std::size_t a = 0; a < dim; ++a) {
        for (std::size_t b = 0; b < dim; ++b) {
          h[a][b] += (1.0 + rho * yhy) * rho * s[a] * s[b] - rho * (hy[a] * s[b] + s[a] * hy[b]);
        }
      }
      h_is_identity = false;
    }

    const double gain = f - f_new;
    z = z_new;
    g = g_new;
    f = f_new;
    out.history.push_back(f);
    out.iterations = iter + 1;

    if (f == 0.0) {
      out.converged = true;
      break;
    }
    if (gain <= cfg.tolerance * std::abs(f + gain)) {
      if (++small_steps >= 3) {
        out.converged = true;
        break;
      }
    } else {
      small_steps = 0;
    }
  }

  out.x = out.iterations > 0 ? to_x(z) : std::vector<double>(start.begin(), start.end());
  out.value = f;
  return out;
}

namespace {

// Gaussian elimination with partial pivoting; false when the system is singular.
bool solve_in_place(Matrix a, std::vector<double>& b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    if (!(std::abs(a[piv][c]) > 0.0)) return false;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double m = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= m * a[c][k];
      b[r] -= m * b[c];
    }
  }
  for (std::size_t c = n; c-- > 0;) {
    for (std::size_t k = c + 1; k < n; ++k) b[c] -= a[c][k] * b[k];
    b[c] /= a[c][c];
  }
  return std::all_of(b.begin(), b.end(), [](double v) { return std::isfinite(v); });
}

double sum_squares(const std::vector<double>& r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return std::isfinite(s) ? s : kInf;
}

}  // namespace

RefineResult least_squares_refine(const Residuals& residuals, std::span<const double> start,
                                  const Bounds& bounds, const OptimizerConfig& cfg) {
  bounds.validate();
  const std::size_t dim = bounds.dimension();
  if (start.size() != dim) throw std::invalid_argument("start has wrong dimension");
  if (!bounds.contains(start)) throw std::invalid_argument("start lies outside the bounds");

  std::vector<double> width(dim);
  for (std::size_t j = 0; j < dim; ++j) width[j] = bounds.upper[j] - bounds.lower[j];
  auto to_x = [&](std::span<const double> z) {
    std::vector<double> x(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      x[j] = std::clamp(bounds.lower[j] + z[j] * width[j], bounds.lower[j], bounds.upper[j]);
    }
    return x;
  };

  RefineResult out;
  std::vector<double> z(dim);
  for (std::size_t j = 0; j < dim; ++j) z[j] = (start[j] - bounds.lower[j]) / width[j];
  auto r = residuals(start);
  ++out.evaluations;
  double f = sum_squares(r);
  out.history.push_back(f);
  if (!std::isfinite(f)) {
    out.x.assign(start.begin(), start.end());
    out.value = f;
    return out;
  }
  const std::size_t m = r.size();

  double mu = 1e-3;
  int small_steps = 0;
  for (int iter = 0; iter < cfg.local_max_iter; ++iter) {
    // Jacobian columns in normalised coordinates.
    Matrix jac(dim, std::vector<double>(m, 0.0));
    const auto xc = to_x(z);
    parallel_for(dim, cfg.threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t j = begin; j < end; ++j) {
        const double hz = 1e-6 * std::max(std::abs(xc[j]), 1e-3 * width[j]) / width[j];
        std::vector<double> zp(z), zm(z);
        double span = 0.0;
        if (z[j] + hz <= 1.0) { zp[j] += hz; span += hz; }
        if (z[j] - hz >= 0.0) { zm[j] -= hz; span += hz; }
        const auto rp = zp[j] == z[j] ? r : residuals(to_x(zp));
        const auto rm = zm[j] == z[j] ? r : residuals(to_x(zm));
        for (std::size_t i = 0; i < m; ++i) jac[j][i] = (rp[i] - rm[i]) / span;
      }
    });
    out.evaluations += 2 * dim;

    std::vector<double> g(dim, 0.0);
    Matrix a(dim, std::vector<double>(dim, 0.0));
    for (std::size_t p = 0; p < dim; ++p) {
      g[p] = dot(jac[p], r);
      for (std::size_t q = 0; q < dim; ++q) a[p][q] = dot(jac[p], jac[q]);
    }
    std::vector<std::size_t> free;
    for (std::size_t j = 0; j < dim; ++j) {
      const bool pinned = (z[j] <= 0.0 && g[j] > 0.0) || (z[j] >= 1.0 && g[j] < 0.0);
      if (!pinned && g[j] != 0.0) free.push_back(j);
    }
    if (free.empty()) {
      out.converged = true;
      break;
    }
    double diag_max = 0.0;
    for (auto j : free) diag_max = std::max(diag_max, a[j][j]);

    bool accepted = false;
    std::vector<double> z_new(z);
    std::vector<double> r_new;
    double f_new = f;
    while (mu < 1e16) {
      Matrix sys(free.size(), std::vector<double>(free.size()));
      std::vector<double> rhs(free.size());
      for (std::size_t p = 0; p < free.size(); ++p) {
        for (std::size_t q = 0; q < free.size(); ++q) sys[p][q] = a[free[p]][free[q]];
        sys[p][p] += mu * std::max(a[free[p]][free[p]], 1e-12 * diag_max);
        rhs[p] = -g[free[p]];
      }
      if (solve_in_place(sys, rhs)) {
        z_new = z;
        for (std::size_t p = 0; p < free.size(); ++p) {
          z_new[free[p]] = std::clamp(z[free[p]] + rhs[p], 0.0, 1.0);
        }
        r_new = residuals(to_x(z_new));
        ++out.evaluations;
        f_new = sum_squares(r_new);
        if (f_new < f) {
          accepted = true;
          mu = std::max(mu / 3.0, 1e-12);
          break;
        }
      }
      mu *= 4.0;
    }
    if (!accepted) {
      out.converged = true;
      break;
    }
    const double gain = f - f_new;
    z = z_new;
    r = std::move(r_new);
    f = f_new;
    out.history.push_back(f);
    out.iterations = iter + 1;
    if (f == 0.0) {
      out.converged = true;
      break;
    }
    if (gain <= cfg.tolerance * (f + gain)) {
      if (++small_steps >= 3) {
        out.converged = true;
        break;
      }
    } else {
      small_steps = 0;
    }
  }
  out.x = out.iterations > 0 ? to_x(z) : std::vector<double>(start.begin(), start.end());
  out.value = f;
  return out;
}

}  // namespace volrate::calib
