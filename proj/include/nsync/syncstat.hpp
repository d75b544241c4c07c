#pragma once

// Synchronization-error statistics: error series, mean convergence time of a
// commonly driven grid ensemble, Monte Carlo densities and peak-to-peak
// measures.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "nsync/model.hpp"
#include "nsync/stochastic.hpp"

namespace nsync {

/// e(n) = max(|x1a - x1b|, |x2a - x2b|) on a shared time grid.
inline std::vector<double> sync_error_series(const Trajectory& a, const Trajectory& b) {
  if (a.times != b.times) throw DomainError("sync_error_series: trajectories on different time grids");
  std::vector<double> e(a.size());
  for (std::size_t i = 0; i < e.size(); ++i)
    e[i] = std::max(std::abs(a.states[i].x1 - b.states[i].x1),
                    std::abs(a.states[i].x2 - b.states[i].x2));
  return e;
}

/// Max over the trailing `window` of the series minus the min over it.
inline double peak_to_peak(std::span<const double> times, std::span<const double> values,
                           double window) {
  if (times.size() != values.size()) throw DomainError("peak_to_peak: size mismatch");
  if (times.empty()) throw DomainError("peak_to_peak: empty series");
  const double t0 = times.back() - window;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::size_t n = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t0) continue;
    lo = std::min(lo, values[i]);
    hi = std::max(hi, values[i]);
    ++n;
  }
  if (n == 0) throw DomainError("peak_to_peak: empty window");
  return hi - lo;
}

struct MctConfig {
  double x1_lo = -10.0, x1_hi = 10.0;
  double x2_lo = -10.0, x2_hi = 10.0;
  int grid_m = 5;      // points per axis, M = grid_m^2
  int K = 100;         // replications
  double epsilon = 1e-5;
  double t_max = 3000.0;
  double dt = 0.005;
  std::size_t record_stride = 1;  // steps between convergence checks

  void validate() const {
    if (!(epsilon > 0.0)) throw DomainError("MctConfig: epsilon must be > 0");
    if (K < 1) throw DomainError("MctConfig: K must be >= 1");
    if (grid_m < 2) throw DomainError("MctConfig: grid_m must be >= 2");
    if (!(t_max > 0.0)) throw DomainError("MctConfig: t_max must be > 0");
    if (!(dt > 0.0)) throw DomainError("MctConfig: dt must be > 0");
    if (!(x1_hi > x1_lo) || !(x2_hi > x2_lo)) throw DomainError("MctConfig: empty grid bounds");
    if (record_stride < 1) throw DomainError("MctConfig: record_stride must be >= 1");
  }
  int M() const { return grid_m * grid_m; }
};

/// grid_m x grid_m uniform Cartesian grid over the configured rectangle.
inline std::vector<OscState> grid_initial_conditions(const MctConfig& cfg) {
  std::vector<OscState> ics;
  ics.reserve(cfg.M());
  for (int i = 0; i < cfg.grid_m; ++i)
    for (int j = 0; j < cfg.grid_m; ++j)
      ics.push_back({cfg.x1_lo + (cfg.x1_hi - cfg.x1_lo) * i / (cfg.grid_m - 1),
                     cfg.x2_lo + (cfg.x2_hi - cfg.x2_lo) * j / (cfg.grid_m - 1)});
  return ics;
}

/// First recorded time at which the ensemble spread drops below epsilon,
/// clamped at t_max.
inline double convergence_time(const std::vector<OscState>& ics, const ForcingSpec& spec,
                               const OscillatorParams& params, const MctConfig& cfg,
                               std::uint64_t seed) {
  CommonNoiseEnsemble ens(ics, spec, params, cfg.dt, seed);
  if (ens.max_spread() < cfg.epsilon) return 0.0;
  const auto n_max = static_cast<std::size_t>(std::llround(cfg.t_max / cfg.dt));
  for (std::size_t n = 1; n <= n_max; ++n) {
    ens.step();
    if (n % cfg.record_stride == 0 && ens.max_spread() < cfg.epsilon) return ens.time();
  }
  return cfg.t_max;
}

struct MctResult {
  double mean_T = 0.0;
  std::vector<double> T;                // per replication; NaN where diverged
  std::vector<std::size_t> diverged;    // replication indices excluded from the mean
  bool saturated = false;               // any T_k == t_max
};

/// Mean convergence time over K replications, each a common-noise ensemble
/// started from the grid. Replication k uses derive_seed(seed, k), so results
/// do not depend on the worker count.
inline MctResult mean_convergence_time(const ForcingSpec& spec, const OscillatorParams& params,
                                       const MctConfig& cfg, std::uint64_t seed,
                                       unsigned workers = 1) {
  cfg.validate();
  params.validate();
  validate(spec);
  const auto ics = grid_initial_conditions(cfg);
  MctResult out;
  out.T.assign(cfg.K, std::numeric_limits<double>::quiet_NaN());
  std::vector<char> failed(cfg.K, 0);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int k = next++; k < cfg.K; k = next++) {
      try {
        out.T[k] = convergence_time(ics, spec, params, cfg, derive_seed(seed, k));
      } catch (const DivergenceError&) {
        failed[k] = 1;
      }
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, cfg.K));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (int k = 0; k < cfg.K; ++k) {
    if (failed[k]) {
      out.diverged.push_back(k);
      continue;
    }
    sum += out.T[k];
    ++n;
    if (out.T[k] >= cfg.t_max) out.saturated = true;
  }
  out.mean_T = n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
  return out;
}

struct Histogram2D {
  std::vector<double> x1_edges;
  std::vector<double> x2_edges;
  std::vector<std::uint64_t> counts;  // row-major, x1 bins by x2 bins
  std::uint64_t normalization = 0;    // in-range samples
  std::uint64_t out_of_range = 0;

  std::size_t n1() const { return x1_edges.size() - 1; }
  std::size_t n2() const { return x2_edges.size() - 1; }
  std::uint64_t at(std::size_t i, std::size_t j) const { return counts[i * n2() + j]; }
  std::uint64_t samples() const { return normalization + out_of_range; }
};

inline std::vector<double> uniform_edges(double lo, double hi, std::size_t bins) {
  if (!(hi > lo) || bins < 1) throw DomainError("uniform_edges: need lo < hi and bins >= 1");
  std::vector<double> e(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) e[i] = lo + (hi - lo) * static_cast<double>(i) / bins;
  return e;
}

namespace detail {
inline std::ptrdiff_t bin_of(const std::vector<double>& edges, double x) {
  if (!(x >= edges.front()) || !(x <= edges.back())) return -1;
  auto it = std::upper_bound(edges.begin(), edges.end(), x);
  auto i = std::distance(edges.begin(), it) - 1;
  return std::min<std::ptrdiff_t>(i, static_cast<std::ptrdiff_t>(edges.size()) - 2);
}
}  // namespace detail

inline Histogram2D density_histogram(std::span<const OscState> samples,
                                     std::vector<double> x1_edges, std::vector<double> x2_edges) {
  auto increasing = [](const std::vector<double>& e) {
    return e.size() >= 2 && std::adjacent_find(e.begin(), e.end(), std::greater_equal<>()) == e.end();
  };
  if (!increasing(x1_edges) || !increasing(x2_edges))
    throw DomainError("density_histogram: edges must be strictly increasing");
  Histogram2D h;
  h.x1_edges = std::move(x1_edges);
  h.x2_edges = std::move(x2_edges);
  h.counts.assign(h.n1() * h.n2(), 0);
  for (const auto& s : samples) {
    const auto i = detail::bin_of(h.x1_edges, s.x1);
    const auto j = detail::bin_of(h.x2_edges, s.x2);
    if (i < 0 || j < 0) {
      ++h.out_of_range;
      continue;
    }
    ++h.counts[static_cast<std::size_t>(i) * h.n2() + static_cast<std::size_t>(j)];
    ++h.normalization;
  }
  return h;
}

/// Default grid: 100 x 100 bins over [-4, 4]^2.
inline Histogram2D density_histogram(std::span<const OscState> samples) {
  return density_histogram(samples, uniform_edges(-4.0, 4.0, 100), uniform_edges(-4.0, 4.0, 100));
}

/// Half the L1 distance between the normalized in-range densities.
inline double total_variation(const Histogram2D& a, const Histogram2D& b) {
  if (a.x1_edges != b.x1_edges || a.x2_edges != b.x2_edges)
    throw DomainError("total_variation: histograms on different bins");
  if (a.normalization == 0 || b.normalization == 0)
    throw DomainError("total_variation: empty histogram");
  double tv = 0.0;
  for (std::size_t i = 0; i < a.counts.size(); ++i)
    tv += std::abs(static_cast<double>(a.counts[i]) / a.normalization -
                   static_cast<double>(b.counts[i]) / b.normalization);
  return 0.5 * tv;
}

/// Monte Carlo samples of one oscillator started from a point mass, with an
/// independent noise realization per path, collected at every step of the
/// trailing `window` before t_snapshot (window = 0 gives a single snapshot).
inline std::vector<OscState> transient_samples(const OscState& ic, const ForcingSpec& spec,
                                               const OscillatorParams& params, std::size_t paths,
                                               double t_snapshot, double dt, std::uint64_t seed,
                                               double window = 0.0, std::size_t stride = 1) {
  const auto n = static_cast<std::size_t>(std::llround(t_snapshot / dt));
  const auto n_from = static_cast<std::size_t>(std::llround(std::max(0.0, t_snapshot - window) / dt));
  std::vector<OscState> out;
  for (std::size_t k = 0; k < paths; ++k) {
    CommonNoiseEnsemble ens({ic}, spec, params, dt, derive_seed(seed, k));
    for (std::size_t s = 1; s <= n; ++s) {
      ens.step();
      if (s >= n_from && (s == n || (n - s) % stride == 0)) out.push_back(ens.states()[0]);
    }
  }
  return out;
}

}  // namespace nsync
