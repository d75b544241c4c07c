#pragma once

// Fixed-step Euler-Maruyama integration of single oscillators and of
// ensembles that share one realization of the forcing noise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nsync/model.hpp"

namespace nsync {

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(double t, std::size_t member)
      : std::runtime_error("divergence at t=" + std::to_string(t) + " (member " +
                           std::to_string(member) + ")"),
        t_(t),
        member_(member) {}

  double time() const { return t_; }
  std::size_t member() const { return member_; }

 private:
  double t_;
  std::size_t member_;
};

inline constexpr double kDivergenceBound = 1e6;

struct SimConfig {
  double dt = 0.005;
  double t_end = 100.0;
  std::uint64_t seed = 1;
  std::size_t record_stride = 1;

  void validate() const {
    if (!(dt > 0.0)) throw DomainError("SimConfig: dt must be > 0");
    if (!(t_end >= dt)) throw DomainError("SimConfig: t_end must be >= dt");
    if (record_stride < 1) throw DomainError("SimConfig: record_stride must be >= 1");
  }

  std::size_t total_steps() const { return static_cast<std::size_t>(std::llround(t_end / dt)); }
};

struct Trajectory {
  std::vector<double> times;
  std::vector<OscState> states;
  std::vector<double> forcing_trace;

  std::size_t size() const { return times.size(); }
};

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of replication k derived from a run seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k) { return seed ^ mix64(k); }

/// Wiener increments N(0, dt), one per step, from a seeded engine.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, double dt) : engine_(seed), sqrt_dt_(std::sqrt(dt)) {}

  double next() { return sqrt_dt_ * normal_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  double sqrt_dt_;
};

inline bool diverged(const OscState& s) {
  return !std::isfinite(s.x1) || !std::isfinite(s.x2) ||
         std::abs(s.x1) + std::abs(s.x2) > kDivergenceBound;
}

namespace detail {

inline OscState advance_oscillator(const OscState& s, double u, double dt, double dW,
                                   const ForcingSpec& spec, const OscillatorParams& p) {
  const auto [v, a] = oscillator_drift(s, u, p);
  OscState out{s.x1 + dt * v, s.x2 + dt * a};
  if (const auto* hw = std::get_if<HarmonicWhite>(&spec)) out.x2 += hw->s * dW;
  return out;
}

inline ForcingState advance_forcing(const ForcingState& fs, double t, double dt, double dW,
                                    const ForcingSpec& spec) {
  switch (spec.index()) {
    case 0: {
      const auto& f = std::get<RandomPhase>(spec);
      const auto& st = std::get<RandomPhaseState>(fs);
      RandomPhaseState out;
      out.b = st.b + dW;
      // Recomputed from (t, b) so theta = omega t + rho b holds without drift.
      out.theta = f.omega * (t + dt) + f.rho * out.b;
      return out;
    }
    case 1: return fs;
    default: {
      const auto& f = std::get<Filtered>(spec);
      const auto& st = std::get<FilteredState>(fs);
      FilteredState out;
      out.u = st.u + dt * st.udot;
      out.udot = st.udot +
                 dt * (-2.0 * f.zeta * f.omega_n * st.udot - f.omega_n * f.omega_n * st.u) +
                 f.s * dW;
      return out;
    }
  }
}

}  // namespace detail

/// One Euler-Maruyama step of a single oscillator and its forcing state.
/// Throws DivergenceError when the new state is non-finite or leaves the guard box.
inline std::pair<OscState, ForcingState> em_step(const OscState& s, const ForcingState& fs,
                                                 double t, double dt, double dW,
                                                 const ForcingSpec& spec,
                                                 const OscillatorParams& p) {
  const double u = forcing_value(spec, fs, t);
  OscState next = detail::advance_oscillator(s, u, dt, dW, spec, p);
  if (diverged(next)) throw DivergenceError(t + dt, 0);
  return {next, detail::advance_forcing(fs, t, dt, dW, spec)};
}

/// M oscillators advanced against one shared noise sequence. Each step draws a
/// single increment, evaluates the forcing once, and applies it to every member.
class CommonNoiseEnsemble {
 public:
  CommonNoiseEnsemble(std::vector<OscState> ics, ForcingSpec spec, OscillatorParams params,
                      double dt, std::uint64_t seed)
      : states_(std::move(ics)),
        spec_(spec),
        params_(params),
        forcing_(initial_forcing_state(spec)),
        noise_(seed, dt),
        dt_(dt) {
    if (states_.empty()) throw DomainError("CommonNoiseEnsemble: no members");
    if (!(dt > 0.0)) throw DomainError("CommonNoiseEnsemble: dt must be > 0");
    params_.validate();
    validate(spec_);
    u_ = forcing_value(spec_, forcing_, 0.0);
  }

  void step() {
    const double t = time();
    const double dW = noise_.next();
    u_ = forcing_value(spec_, forcing_, t);
    for (std::size_t i = 0; i < states_.size(); ++i) {
      states_[i] = detail::advance_oscillator(states_[i], u_, dt_, dW, spec_, params_);
      if (diverged(states_[i])) throw DivergenceError(t + dt_, i);
    }
    forcing_ = detail::advance_forcing(forcing_, t, dt_, dW, spec_);
    ++steps_;
    u_ = forcing_value(spec_, forcing_, time());
  }

  double time() const { return static_cast<double>(steps_) * dt_; }
  std::size_t steps() const { return steps_; }
  std::span<const OscState> states() const { return states_; }
  const ForcingState& forcing_state() const { return forcing_; }
  /// Forcing value at the current time.
  double forcing() const { return u_; }

  /// sup over member pairs of max(|dx1|, |dx2|)
  double max_spread() const {
    double lo1 = states_[0].x1, hi1 = lo1, lo2 = states_[0].x2, hi2 = lo2;
    for (const auto& s : states_) {
      lo1 = std::min(lo1, s.x1);
      hi1 = std::max(hi1, s.x1);
      lo2 = std::min(lo2, s.x2);
      hi2 = std::max(hi2, s.x2);
    }
    return std::max(hi1 - lo1, hi2 - lo2);
  }

 private:
  std::vector<OscState> states_;
  ForcingSpec spec_;
  OscillatorParams params_;
  ForcingState forcing_;
  NoiseStream noise_;
  double dt_;
  double u_ = 0.0;
  std::size_t steps_ = 0;
};

inline std::vector<Trajectory> simulate_ensemble_common_noise(const std::vector<OscState>& ics,
                                                              const ForcingSpec& spec,
                                                              const OscillatorParams& params,
                                                              const SimConfig& cfg) {
  cfg.validate();
  CommonNoiseEnsemble ens(ics, spec, params, cfg.dt, cfg.seed);
  const std::size_t n = cfg.total_steps();
  const std::size_t n_rec = n / cfg.record_stride + 1;
  std::vector<Trajectory> out(ics.size());
  for (auto& tr : out) {
    tr.times.reserve(n_rec);
    tr.states.reserve(n_rec);
    tr.forcing_trace.reserve(n_rec);
  }
  auto record = [&] {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i].times.push_back(ens.time());
      out[i].states.push_back(ens.states()[i]);
      out[i].forcing_trace.push_back(ens.forcing());
    }
  };
  record();
  for (std::size_t step = 1; step <= n; ++step) {
    ens.step();
    if (step % cfg.record_stride == 0) record();
  }
  return out;
}

inline Trajectory simulate_path(const OscState& ic, const ForcingSpec& spec,
                                const OscillatorParams& params, const SimConfig& cfg) {
  return std::move(simulate_ensemble_common_noise({ic}, spec, params, cfg).front());
}

/// Monte Carlo estimate of E[cos(rho B_t)] by stepping the random-phase forcing
/// with omega = 0. Returns (mean, standard error).
inline std::pair<double, double> brownian_cos_average(double rho, double t, std::size_t paths,
                                                      double dt, std::uint64_t seed) {
  const ForcingSpec spec = RandomPhase{1.0, 0.0, rho};
  const auto steps = static_cast<std::size_t>(std::llround(t / dt));
  NoiseStream noise(seed, dt);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t k = 0; k < paths; ++k) {
    ForcingState fs = RandomPhaseState{};
    for (std::size_t n = 0; n < steps; ++n)
      fs = detail::advance_forcing(fs, 0.0, dt, noise.next(), spec);
    const double v = std::cos(std::get<RandomPhaseState>(fs).theta);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / static_cast<double>(paths);
  const double var = (sum2 / static_cast<double>(paths) - mean * mean) *
                     static_cast<double>(paths) / static_cast<double>(paths - 1);
  return {mean, std::sqrt(var / static_cast<double>(paths))};
}

}  // namespace nsync
