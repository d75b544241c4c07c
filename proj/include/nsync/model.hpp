#pragma once

// Oscillator vector field, dead-zone restoring force and forcing variants
// for a pair of identical piecewise-linear oscillators driven by a common
// random input.

#include <cmath>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>

namespace nsync {

class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct OscillatorParams {
  double c = 0.04;   // damping
  double k = 1.0;    // stiffness gain
  double mu = 0.7;   // dead-zone half-width
  double Q = 0.3;    // preload
  int g_slope = 1;   // restoring-force slope outside the dead zone

  void validate() const {
    if (!(c >= 0.0)) throw DomainError("OscillatorParams: c must be >= 0");
    if (!(k > 0.0)) throw DomainError("OscillatorParams: k must be > 0");
    if (!(mu >= 0.0)) throw DomainError("OscillatorParams: mu must be >= 0");
    if (g_slope != 1 && g_slope != 2)
      throw DomainError("OscillatorParams: g_slope must be 1 or 2");
    if (!std::isfinite(Q)) throw DomainError("OscillatorParams: Q must be finite");
  }
};

/// u(t) = P cos(omega t + rho B_t)
struct RandomPhase {
  double P = 0.2;
  double omega = 0.95;
  double rho = 2e-5;
};

/// u(t) = P cos(omega t) + s w(t); the white part is injected by the integrator.
struct HarmonicWhite {
  double P = 0.2;
  double omega = 0.95;
  double s = 0.0;
};

/// u'' + 2 zeta omega_n u' + omega_n^2 u = s w(t)
struct Filtered {
  double s = 0.0;
  double zeta = 0.1;
  double omega_n = 1.0;
};

using ForcingSpec = std::variant<RandomPhase, HarmonicWhite, Filtered>;

struct RandomPhaseState {
  double theta = 0.0;  // omega t + rho B_t
  double b = 0.0;      // B_t
};
struct HarmonicWhiteState {};
struct FilteredState {
  double u = 0.0;
  double udot = 0.0;
};

using ForcingState = std::variant<RandomPhaseState, HarmonicWhiteState, FilteredState>;

struct OscState {
  double x1 = 0.0;
  double x2 = 0.0;

  friend bool operator==(const OscState&, const OscState&) = default;
};

inline void validate(const ForcingSpec& spec) {
  std::visit(
      [](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, RandomPhase>) {
          if (!(f.P >= 0.0) || !(f.omega > 0.0) || !(f.rho >= 0.0))
            throw DomainError("RandomPhase: need P >= 0, omega > 0, rho >= 0");
        } else if constexpr (std::is_same_v<F, HarmonicWhite>) {
          if (!(f.P >= 0.0) || !(f.omega > 0.0) || !(f.s >= 0.0))
            throw DomainError("HarmonicWhite: need P >= 0, omega > 0, s >= 0");
        } else {
          if (!(f.s >= 0.0) || !(f.zeta > 0.0) || !(f.omega_n > 0.0))
            throw DomainError("Filtered: need s >= 0, zeta > 0, omega_n > 0");
        }
      },
      spec);
}

inline ForcingState initial_forcing_state(const ForcingSpec& spec) {
  switch (spec.index()) {
    case 0: return RandomPhaseState{};
    case 1: return HarmonicWhiteState{};
    default: return FilteredState{};
  }
}

/// Zero on [-mu, mu], slope * (x -+ mu) outside.
inline double dead_zone_force(double x, double mu, double slope) {
  if (x > mu) return slope * (x - mu);
  if (x < -mu) return slope * (x + mu);
  return 0.0;
}

inline double forcing_value(const ForcingSpec& spec, const ForcingState& state, double t) {
  if (spec.index() != state.index())
    throw DomainError("forcing_value: forcing spec/state variant mismatch");
  switch (spec.index()) {
    case 0: return std::get<RandomPhase>(spec).P * std::cos(std::get<RandomPhaseState>(state).theta);
    case 1: {
      const auto& f = std::get<HarmonicWhite>(spec);
      return f.P * std::cos(f.omega * t);
    }
    default: return std::get<FilteredState>(state).u;
  }
}

/// (x2, -c x2 - k G(x1) + Q + u)
inline std::pair<double, double> oscillator_drift(const OscState& s, double u,
                                                  const OscillatorParams& p) {
  return {s.x2, -p.c * s.x2 - p.k * dead_zone_force(s.x1, p.mu, p.g_slope) + p.Q + u};
}

}  // namespace nsync
