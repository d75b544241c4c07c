#pragma once

// Reduced moment differential equations for the randomly phased oscillator:
// the state q = (m1, m2, s11, s12, s22) with the phase m3 = omega t carried by
// the time argument. Gaussian closure through the equivalent gains.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "nsync/gains.hpp"
#include "nsync/model.hpp"

namespace nsync {

using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;

struct MomentState {
  double m1 = 0.0;
  double m2 = 0.0;
  double s11 = 0.0;
  double s12 = 0.0;
  double s22 = 0.0;

  Vec5 vec() const { return Vec5{m1, m2, s11, s12, s22}; }
  static MomentState from(const Vec5& v) { return {v(0), v(1), v(2), v(3), v(4)}; }

  /// s11, s22 >= 0 and s11 s22 - s12^2 >= -tol with tol = 1e-6 (1 + s11 s22).
  bool is_psd() const {
    const double tol = 1e-6 * (1.0 + std::abs(s11 * s22));
    return s11 >= -tol && s22 >= -tol && s11 * s22 - s12 * s12 >= -tol;
  }

  friend bool operator==(const MomentState&, const MomentState&) = default;
};

enum class PhaseFactorMode { constant, decaying };

/// How the closure treats a displacement variance that integrates below zero:
/// `clamp` evaluates the gains at max(s11, 0), `strict` raises a DomainError.
enum class VarianceDomain { clamp, strict };

struct MdeParams {
  OscillatorParams osc;
  double P = 0.2;
  double omega = 0.9;
  double rho = 2e-5;
  PhaseFactorMode phase_factor_mode = PhaseFactorMode::constant;
  VarianceDomain variance_domain = VarianceDomain::clamp;
  /// RK4 steps per forcing period for stroboscopic maps and sweeps.
  int steps_per_period = 128;

  double period() const { return 2.0 * std::numbers::pi / omega; }

  void validate() const {
    osc.validate();
    if (!(omega > 0.0)) throw DomainError("MdeParams: omega must be > 0");
    if (!(P >= 0.0) || !(rho >= 0.0)) throw DomainError("MdeParams: need P >= 0, rho >= 0");
    if (steps_per_period < 1) throw DomainError("MdeParams: steps_per_period must be >= 1");
  }
};

/// Phase-averaged forcing factor multiplying P.
inline double phase_factor(double t, const MdeParams& p) {
  const double c = std::cos(p.omega * t);
  if (p.phase_factor_mode == PhaseFactorMode::constant)
    return std::exp(0.5 * p.rho * p.rho) * c;
  return std::exp(-0.5 * p.rho * p.rho * t) * c;
}

/// Tolerance on negative s11 before the closure is considered out of domain.
inline constexpr double kGainDomainTol = 1e-9;

namespace detail {

inline GainInput gain_input(double m1, double s11, const MdeParams& p) {
  if (p.variance_domain == VarianceDomain::strict && s11 < -kGainDomainTol)
    throw DomainError("mde: displacement variance " + std::to_string(s11) +
                      " outside the closure domain");
  return {m1, std::max(s11, 0.0), p.osc.mu};
}

struct Gains {
  double a0, a1;
};

inline Gains slope_gains(double m1, double s11, const MdeParams& p) {
  const GainInput in = gain_input(m1, s11, p);
  return {p.osc.g_slope * alpha0(in), p.osc.g_slope * alpha1(in)};
}

}  // namespace detail

inline Vec5 mde_rhs(const Vec5& q, double t, const MdeParams& p) {
  const auto [a0, a1] = detail::slope_gains(q(0), q(2), p);
  const double c = p.osc.c, k = p.osc.k;
  const double PF = p.P * phase_factor(t, p);
  Vec5 d;
  d(0) = q(1);
  d(1) = -c * q(1) - k * a0 + p.osc.Q + PF;
  d(2) = 2.0 * q(3);
  d(3) = q(4) - c * q(3) - k * a1 * q(2) + PF * q(0);
  d(4) = -2.0 * c * q(4) - 2.0 * k * a1 * q(3) + 2.0 * PF * q(1);
  return d;
}

inline MomentState mde_rhs(const MomentState& q, double t, const MdeParams& p) {
  return MomentState::from(mde_rhs(q.vec(), t, p));
}

/// Jacobian of mde_rhs with respect to q. d alpha0/d m1 = alpha1 is used exactly;
/// the remaining gain derivatives are central differences.
inline Mat5 mde_jacobian(const Vec5& q, double t, const MdeParams& p) {
  const double m1 = q(0), s11 = std::max(q(2), 0.0);
  const double c = p.osc.c, k = p.osc.k;
  const double PF = p.P * phase_factor(t, p);
  const auto g = detail::slope_gains(m1, q(2), p);

  const double hm = 1e-7 * (1.0 + std::abs(m1));
  const auto gp = detail::slope_gains(m1 + hm, s11, p);
  const auto gm = detail::slope_gains(m1 - hm, s11, p);
  const double da1_dm = (gp.a1 - gm.a1) / (2.0 * hm);

  const double hs = 1e-7 * (1.0 + s11);
  double da0_ds, da1_ds;
  if (s11 - hs > kSigmaMin) {
    const auto sp = detail::slope_gains(m1, s11 + hs, p);
    const auto sm = detail::slope_gains(m1, s11 - hs, p);
    da0_ds = (sp.a0 - sm.a0) / (2.0 * hs);
    da1_ds = (sp.a1 - sm.a1) / (2.0 * hs);
  } else {
    // one-sided near the deterministic limit
    const auto sp = detail::slope_gains(m1, s11 + hs, p);
    da0_ds = (sp.a0 - g.a0) / hs;
    da1_ds = (sp.a1 - g.a1) / hs;
  }

  Mat5 J = Mat5::Zero();
  J(0, 1) = 1.0;
  J(1, 0) = -k * g.a1;
  J(1, 1) = -c;
  J(1, 2) = -k * da0_ds;
  J(2, 3) = 2.0;
  J(3, 0) = -k * da1_dm * q(2) + PF;
  J(3, 2) = -k * (da1_ds * q(2) + g.a1);
  J(3, 3) = -c;
  J(3, 4) = 1.0;
  J(4, 0) = -2.0 * k * da1_dm * q(3);
  J(4, 1) = 2.0 * PF;
  J(4, 2) = -2.0 * k * da1_ds * q(3);
  J(4, 3) = -2.0 * k * g.a1;
  J(4, 4) = -2.0 * c;
  return J;
}

inline Vec5 rk4_step(const Vec5& q, double t, double h, const MdeParams& p) {
  const Vec5 k1 = mde_rhs(q, t, p);
  const Vec5 k2 = mde_rhs(q + 0.5 * h * k1, t + 0.5 * h, p);
  const Vec5 k3 = mde_rhs(q + 0.5 * h * k2, t + 0.5 * h, p);
  const Vec5 k4 = mde_rhs(q + h * k3, t + h, p);
  return q + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// RK4 step of the state together with its variational matrix, sharing stages.
inline void rk4_step_variational(Vec5& q, Mat5& J, double t, double h, const MdeParams& p) {
  const Vec5 k1 = mde_rhs(q, t, p);
  const Mat5 K1 = mde_jacobian(q, t, p) * J;
  const Vec5 y2 = q + 0.5 * h * k1;
  const Mat5 Y2 = J + 0.5 * h * K1;
  const Vec5 k2 = mde_rhs(y2, t + 0.5 * h, p);
  const Mat5 K2 = mde_jacobian(y2, t + 0.5 * h, p) * Y2;
  const Vec5 y3 = q + 0.5 * h * k2;
  const Mat5 Y3 = J + 0.5 * h * K2;
  const Vec5 k3 = mde_rhs(y3, t + 0.5 * h, p);
  const Mat5 K3 = mde_jacobian(y3, t + 0.5 * h, p) * Y3;
  const Vec5 y4 = q + h * k3;
  const Mat5 Y4 = J + h * K3;
  const Vec5 k4 = mde_rhs(y4, t + h, p);
  const Mat5 K4 = mde_jacobian(y4, t + h, p) * Y4;
  q += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  J += (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
}

class MdeIntegrationError : public std::runtime_error {
 public:
  MdeIntegrationError(const std::string& what, double t)
      : std::runtime_error(what + " at t=" + std::to_string(t)), t_(t) {}
  double time() const { return t_; }

 private:
  double t_;
};

struct MomentTrajectory {
  std::vector<double> times;
  std::vector<MomentState> states;
  /// First recorded time at which the covariance block left the PSD cone.
  std::optional<double> first_psd_breach;
};

/// Classical RK4 with fixed step from t0 to t0 + t_end. The step is shrunk so that
/// an integer number of steps lands on t_end exactly; `dt` is an upper bound.
inline MomentTrajectory integrate_mde(const MomentState& q0, const MdeParams& p, double t_end,
                                      double dt, std::size_t stride = 1, double t0 = 0.0) {
  p.validate();
  if (!(dt > 0.0)) throw DomainError("integrate_mde: dt must be > 0");
  if (!(t_end > 0.0)) throw DomainError("integrate_mde: t_end must be > 0");
  stride = std::max<std::size_t>(stride, 1);
  const auto n = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  const double h = t_end / static_cast<double>(n);
  MomentTrajectory out;
  Vec5 q = q0.vec();
  auto record = [&](double t) {
    const MomentState s = MomentState::from(q);
    if (!out.first_psd_breach && !s.is_psd()) out.first_psd_breach = t;
    out.times.push_back(t);
    out.states.push_back(s);
  };
  record(t0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = t0 + static_cast<double>(i) * h;
    try {
      q = rk4_step(q, t, h, p);
    } catch (const DomainError& e) {
      throw MdeIntegrationError(e.what(), t);
    }
    if (!q.allFinite()) throw MdeIntegrationError("non-finite moment state", t + h);
    if ((i + 1) % stride == 0 || i + 1 == n) record(t0 + static_cast<double>(i + 1) * h);
  }
  return out;
}

/// Advances q over whole forcing periods, steps_per_period RK4 steps each. Every
/// period is integrated on the window [0, tau), which makes the result a proper
/// stroboscopic map; in `decaying` mode the decay is therefore per period.
inline Vec5 advance_periods(Vec5 q, const MdeParams& p, int periods) {
  const int N = p.steps_per_period;
  const double h = p.period() / N;
  for (int k = 0; k < periods; ++k) {
    for (int i = 0; i < N; ++i) q = rk4_step(q, i * h, h, p);
    if (!q.allFinite()) throw MdeIntegrationError("non-finite moment state", (k + 1) * p.period());
  }
  return q;
}

enum class SweepDirection { forward, backward };

inline const char* to_string(SweepDirection d) {
  return d == SweepDirection::forward ? "forward" : "backward";
}

struct ResponsePoint {
  double omega = 0.0;
  SweepDirection direction = SweepDirection::forward;
  double ptp_m1 = 0.0;
  double ptp_msq = 0.0;  // s11 + m1^2
  double ptp_s22 = 0.0;
  MomentState seed;   // state the point started from
  MomentState final;  // state after settling and measuring
};

struct SweepOptions {
  int settle_periods = 200;
  int measure_periods = 50;
};

/// Settles at a fixed omega, then records peak-to-peak of m1, s11 + m1^2 and s22
/// over the measurement window at every RK4 step.
inline ResponsePoint measure_response(const MomentState& seed, const MdeParams& p,
                                      const SweepOptions& opt,
                                      SweepDirection dir = SweepDirection::forward) {
  p.validate();
  Vec5 q = advance_periods(seed.vec(), p, opt.settle_periods);
  const int N = p.steps_per_period;
  const double h = p.period() / N;
  double lo[3], hi[3];
  std::fill(lo, lo + 3, std::numeric_limits<double>::infinity());
  std::fill(hi, hi + 3, -std::numeric_limits<double>::infinity());
  auto observe = [&] {
    const double obs[3] = {q(0), q(2) + q(0) * q(0), q(4)};
    for (int j = 0; j < 3; ++j) {
      lo[j] = std::min(lo[j], obs[j]);
      hi[j] = std::max(hi[j], obs[j]);
    }
  };
  observe();
  for (int k = 0; k < opt.measure_periods; ++k) {
    for (int i = 0; i < N; ++i) {
      q = rk4_step(q, i * h, h, p);
      observe();
    }
    if (!q.allFinite())
      throw MdeIntegrationError("non-finite moment state during measurement", (k + 1) * p.period());
  }
  return {p.omega, dir, hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2], seed, MomentState::from(q)};
}

/// Continuation sweep in omega: the final state at one frequency seeds the next.
/// Points are returned in sweep order.
inline std::vector<ResponsePoint> sweep_frequency(double omega_lo, double omega_hi, int n_steps,
                                                  SweepDirection dir, const MdeParams& tmpl,
                                                  const MomentState& q0,
                                                  const SweepOptions& opt = {}) {
  if (!(omega_lo > 0.0) || !(omega_hi > omega_lo))
    throw DomainError("sweep_frequency: need 0 < omega_lo < omega_hi");
  if (n_steps < 1) throw DomainError("sweep_frequency: n_steps must be >= 1");
  std::vector<ResponsePoint> out;
  out.reserve(n_steps + 1);
  MomentState q = q0;
  for (int i = 0; i <= n_steps; ++i) {
    const int j = dir == SweepDirection::forward ? i : n_steps - i;
    MdeParams p = tmpl;
    p.omega = omega_lo + (omega_hi - omega_lo) * j / n_steps;
    out.push_back(measure_response(q, p, opt, dir));
    q = out.back().final;
  }
  return out;
}

}  // namespace nsync
