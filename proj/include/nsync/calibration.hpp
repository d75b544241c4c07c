#pragma once

// Cross-check of the moment equations against Monte Carlo statistics of the
// oscillator, used to fix the restoring-force slope convention shared by the
// two engines.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "nsync/mde.hpp"
#include "nsync/stochastic.hpp"

namespace nsync {

struct SlopeCalibration {
  int slope = 1;
  std::vector<double> times;       // one sample per forcing period
  std::vector<double> s11_mde;
  std::vector<double> s11_mc;
  double discrepancy = 0.0;        // mean |s11_mde - s11_mc| / mean s11_mc
  std::vector<double> msq_mde;     // E[x1^2] = s11 + m1^2
  std::vector<double> msq_mc;
  double msq_discrepancy = 0.0;    // same measure on E[x1^2]
};

/// Integrates the moment equations with g_slope = `slope` from q0 and compares the
/// displacement variance, once per period, with the sample variance of `paths`
/// oscillators whose initial states are drawn from N((m1, m2), [[s11, s12], [s12, s22]])
/// and whose phase noise is independent per path.
inline SlopeCalibration calibrate_slope(int slope, const MdeParams& base, const MomentState& q0,
                                        int periods, std::size_t paths, double dt,
                                        std::uint64_t seed) {
  MdeParams p = base;
  p.osc.g_slope = slope;
  p.validate();
  SlopeCalibration out;
  out.slope = slope;

  Vec5 q = q0.vec();
  out.times.push_back(0.0);
  out.s11_mde.push_back(q(2));
  out.msq_mde.push_back(q(2) + q(0) * q(0));
  for (int k = 1; k <= periods; ++k) {
    q = advance_periods(q, p, 1);
    out.times.push_back(k * p.period());
    out.s11_mde.push_back(q(2));
    out.msq_mde.push_back(q(2) + q(0) * q(0));
  }

  const ForcingSpec spec = RandomPhase{p.P, p.omega, p.rho};
  const auto steps_per_period = static_cast<std::size_t>(std::llround(p.period() / dt));
  const double h = p.period() / static_cast<double>(steps_per_period);
  std::vector<double> sum(periods + 1, 0.0), sum2(periods + 1, 0.0);
  std::mt19937_64 ic_rng(seed);
  std::normal_distribution<double> z;
  const double l11 = std::sqrt(std::max(q0.s11, 0.0));
  const double l21 = l11 > 0.0 ? q0.s12 / l11 : 0.0;
  const double l22 = std::sqrt(std::max(q0.s22 - l21 * l21, 0.0));
  for (std::size_t i = 0; i < paths; ++i) {
    const double z1 = z(ic_rng), z2 = z(ic_rng);
    const OscState ic{q0.m1 + l11 * z1, q0.m2 + l21 * z1 + l22 * z2};
    CommonNoiseEnsemble ens({ic}, spec, p.osc, h, derive_seed(seed, i + 1));
    auto accumulate = [&](int k) {
      const double x = ens.states()[0].x1;
      sum[k] += x;
      sum2[k] += x * x;
    };
    accumulate(0);
    for (int k = 1; k <= periods; ++k) {
      for (std::size_t s = 0; s < steps_per_period; ++s) ens.step();
      accumulate(k);
    }
  }
  double num = 0.0, den = 0.0, num2 = 0.0, den2 = 0.0;
  for (int k = 0; k <= periods; ++k) {
    const double n = static_cast<double>(paths);
    const double mean = sum[k] / n;
    const double var = (sum2[k] / n - mean * mean) * n / (n - 1.0);
    out.s11_mc.push_back(var);
    out.msq_mc.push_back(sum2[k] / n);
    num += std::abs(out.s11_mde[k] - var);
    den += var;
    num2 += std::abs(out.msq_mde[k] - out.msq_mc[k]);
    den2 += out.msq_mc[k];
  }
  out.discrepancy = num / den;
  out.msq_discrepancy = num2 / den2;
  return out;
}

}  // namespace nsync
