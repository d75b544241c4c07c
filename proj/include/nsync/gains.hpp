#pragma once

// Statistically equivalent gains of the unit-slope dead zone under a Gaussian
// closure: alpha0 = E[g(X)] and alpha1 = d alpha0 / d m1 for X ~ N(m1, s11).

#include <array>
#include <cmath>
#include <numbers>
#include <utility>

#include "nsync/model.hpp"
#include "nsync/quadrature.hpp"

namespace nsync {

/// Variance below which the gains take their deterministic limit.
inline constexpr double kSigmaMin = 1e-12;

struct GainInput {
  double m1 = 0.0;
  double s11 = 0.0;
  double mu = 0.7;
};

namespace detail {
inline void check_gain_input(const GainInput& in) {
  if (!(in.s11 >= 0.0)) throw DomainError("gains: negative displacement variance");
  if (!(in.mu >= 0.0)) throw DomainError("gains: negative dead-zone half-width");
}
}  // namespace detail

inline double alpha0(const GainInput& in) {
  detail::check_gain_input(in);
  // evaluated at |m1| so that oddness holds bit for bit
  const double m = std::abs(in.m1), mu = in.mu, s = in.s11;
  if (s <= kSigmaMin) return dead_zone_force(in.m1, mu, 1.0);
  const double r = std::sqrt(2.0 * s);
  const double lo = m - mu, hi = m + mu;
  const double a = m + std::sqrt(s / (2.0 * std::numbers::pi)) *
                           (std::exp(-lo * lo / (2.0 * s)) - std::exp(-hi * hi / (2.0 * s))) +
                   0.5 * lo * std::erf(lo / r) - 0.5 * hi * std::erf(hi / r);
  return std::copysign(a, in.m1);
}

inline double alpha1(const GainInput& in) {
  detail::check_gain_input(in);
  const double m = std::abs(in.m1), mu = in.mu, s = in.s11;
  if (s <= kSigmaMin) return m > mu ? 1.0 : 0.0;
  const double r = std::sqrt(2.0 * s);
  return 1.0 + 0.5 * std::erf((m - mu) / r) - 0.5 * std::erf((m + mu) / r);
}

/// Gauss-Hermite estimate of E[f(X)], X ~ N(m, v).
template <class F>
double quadrature_expectation(F&& f, double m, double v, int nodes) {
  return quad::expectation(std::forward<F>(f), m, v, nodes);
}

/// Quadrature reference for alpha0. The dead zone has kinks at +-mu, so the
/// Gaussian measure is split there (a single Gauss-Hermite rule only
/// converges algebraically on a kinked integrand).
inline double alpha0_oracle(const GainInput& in, int nodes = 64) {
  const std::array<double, 2> kinks{-in.mu, in.mu};
  return quad::piecewise_expectation(
      [mu = in.mu](double x) { return dead_zone_force(x, mu, 1.0); }, in.m1, in.s11, nodes,
      kinks);
}

/// Quadrature reference for E[(X - m1) g(X)] / s11, which equals alpha1.
inline double covariance_gain_oracle(const GainInput& in, int nodes = 64) {
  const std::array<double, 2> kinks{-in.mu, in.mu};
  return quad::piecewise_expectation(
             [m = in.m1, mu = in.mu](double x) { return (x - m) * dead_zone_force(x, mu, 1.0); },
             in.m1, in.s11, nodes, kinks) /
         in.s11;
}

}  // namespace nsync
