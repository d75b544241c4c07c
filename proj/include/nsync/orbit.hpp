#pragma once

// Stroboscopic (Poincare) map of the moment equations, its linearization by
// variational integration, Newton solves for m-periodic points and a
// recurrence-based attractor classifier.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nsync/mde.hpp"

namespace nsync {

using Complex = std::complex<double>;
using Multipliers = std::array<Complex, 5>;

struct MapEvaluation {
  MomentState q_out;
  Mat5 monodromy = Mat5::Identity();
};

inline MomentState poincare_map(const MomentState& q, const MdeParams& p) {
  return MomentState::from(advance_periods(q.vec(), p, 1));
}

/// T(q) together with J(tau), where J' = Df J, J(0) = I, integrated on the same
/// RK4 step sequence as the state.
inline MapEvaluation poincare_map_with_jacobian(const MomentState& q, const MdeParams& p) {
  p.validate();
  const int N = p.steps_per_period;
  const double h = p.period() / N;
  Vec5 x = q.vec();
  Mat5 J = Mat5::Identity();
  for (int i = 0; i < N; ++i) rk4_step_variational(x, J, i * h, h, p);
  if (!x.allFinite() || !J.allFinite())
    throw MdeIntegrationError("non-finite state in variational integration", p.period());
  return {MomentState::from(x), J};
}

/// T^m(q) and D(T^m)(q) by chaining single-period monodromies.
inline MapEvaluation map_power_with_jacobian(const MomentState& q, const MdeParams& p, int m) {
  MapEvaluation acc{q, Mat5::Identity()};
  for (int i = 0; i < m; ++i) {
    const MapEvaluation step = poincare_map_with_jacobian(acc.q_out, p);
    acc.q_out = step.q_out;
    acc.monodromy = step.monodromy * acc.monodromy;
  }
  return acc;
}

/// det(s I - M)
inline Complex characteristic_poly(Complex s, const Mat5& monodromy) {
  using CMat = Eigen::Matrix<Complex, 5, 5>;
  const CMat A = s * CMat::Identity() - monodromy.cast<Complex>();
  return A.partialPivLu().determinant();
}

inline Multipliers multipliers_of(const Mat5& monodromy) {
  Eigen::EigenSolver<Mat5> es(monodromy, false);
  Multipliers out;
  for (int i = 0; i < 5; ++i) out[i] = es.eigenvalues()(i);
  return out;
}

/// Distance from +1 of the multiplier closest to it.
inline double distance_to_unity(const Multipliers& s) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& v : s) best = std::min(best, std::abs(v - 1.0));
  return best;
}

enum class NewtonStatus { converged, max_iterations, singular, failed };

inline const char* to_string(NewtonStatus s) {
  switch (s) {
    case NewtonStatus::converged: return "converged";
    case NewtonStatus::max_iterations: return "max_iterations";
    case NewtonStatus::singular: return "singular";
    default: return "failed";
  }
}

struct FixedPointOptions {
  double tol = 1e-10;
  int max_iter = 50;
  /// reciprocal condition number below which D(T^m) - I counts as singular
  double rcond_min = 1e-13;
};

struct FixedPointResult {
  MomentState q_bar;
  int m = 1;
  Multipliers multipliers{};
  Mat5 monodromy = Mat5::Identity();
  double residual = std::numeric_limits<double>::infinity();
  bool stable = false;
  NewtonStatus status = NewtonStatus::failed;
  int iterations = 0;
  std::vector<double> residual_history;
  std::string diagnostic;

  bool converged() const { return status == NewtonStatus::converged; }
};

/// Newton iteration on T^m(q) - q = 0. On failure the best iterate is returned
/// with a status and diagnostic rather than thrown.
inline FixedPointResult find_fixed_point(const MomentState& q_guess, int m, const MdeParams& p,
                                         const FixedPointOptions& opt = {}) {
  if (m < 1) throw DomainError("find_fixed_point: period multiplier must be >= 1");
  FixedPointResult best;
  best.m = m;
  Vec5 q = q_guess.vec();
  for (int it = 0; it <= opt.max_iter; ++it) {
    MapEvaluation ev;
    try {
      ev = map_power_with_jacobian(MomentState::from(q), p, m);
    } catch (const std::exception& e) {
      best.status = NewtonStatus::failed;
      best.diagnostic = e.what();
      return best;
    }
    const Vec5 r = ev.q_out.vec() - q;
    const double res = r.cwiseAbs().maxCoeff();
    if (!std::isfinite(res)) {
      best.status = NewtonStatus::failed;
      best.diagnostic = "non-finite residual";
      return best;
    }
    if (res < best.residual) {
      best.q_bar = MomentState::from(q);
      best.residual = res;
      best.monodromy = ev.monodromy;
    }
    best.residual_history.push_back(res);
    best.iterations = it;
    if (res < opt.tol) {
      best.q_bar = MomentState::from(q);
      best.residual = res;
      best.monodromy = ev.monodromy;
      best.status = NewtonStatus::converged;
      break;
    }
    if (it == opt.max_iter) {
      best.status = NewtonStatus::max_iterations;
      best.diagnostic = "no convergence after " + std::to_string(opt.max_iter) + " iterations";
      break;
    }
    const Eigen::PartialPivLU<Mat5> lu(ev.monodromy - Mat5::Identity());
    if (!(lu.rcond() > opt.rcond_min)) {
      best.status = NewtonStatus::singular;
      best.diagnostic = "singular Newton matrix (multiplier near +1)";
      break;
    }
    q -= lu.solve(r);
  }
  best.multipliers = multipliers_of(best.monodromy);
  best.stable = true;
  for (const auto& s : best.multipliers) best.stable = best.stable && std::abs(s) < 1.0;
  return best;
}

enum class AttractorKind { periodic, quasi_periodic, divergent };

inline const char* to_string(AttractorKind k) {
  switch (k) {
    case AttractorKind::periodic: return "periodic";
    case AttractorKind::quasi_periodic: return "quasi_periodic";
    default: return "divergent";
  }
}

struct AttractorClass {
  AttractorKind kind = AttractorKind::divergent;
  int period = 0;  // valid for periodic
  double diameter = 0.0;
  std::vector<MomentState> points;  // Poincare plot sample after the transient
};

inline constexpr double kAttractorEscape = 1e6;

/// Discards `transient_iters` map iterates, collects 2 * probe_iters more, and
/// returns the smallest m <= probe_iters with |q_{k+m} - q_k| below
/// tol * max(diameter, 1) over the trailing window.
inline AttractorClass classify_attractor(const MomentState& q0, const MdeParams& p,
                                         int transient_iters, int probe_iters, double tol = 1e-6) {
  if (transient_iters < 1 || probe_iters < 1)
    throw DomainError("classify_attractor: iteration budgets must be >= 1");
  AttractorClass out;
  auto escaped = [](const Vec5& v) {
    return !v.allFinite() || v.cwiseAbs().maxCoeff() > kAttractorEscape;
  };
  Vec5 q = q0.vec();
  try {
    for (int i = 0; i < transient_iters; ++i) {
      q = advance_periods(q, p, 1);
      if (escaped(q)) return out;
    }
    const int L = 2 * probe_iters;
    out.points.reserve(L);
    for (int i = 0; i < L; ++i) {
      q = advance_periods(q, p, 1);
      if (escaped(q)) {
        out.points.clear();
        return out;
      }
      out.points.push_back(MomentState::from(q));
    }
  } catch (const std::runtime_error&) {
    return out;
  } catch (const DomainError&) {
    return out;
  }

  const int L = static_cast<int>(out.points.size());
  Vec5 lo = out.points[0].vec(), hi = lo;
  for (const auto& s : out.points) {
    lo = lo.cwiseMin(s.vec());
    hi = hi.cwiseMax(s.vec());
  }
  out.diameter = (hi - lo).maxCoeff();
  const double thresh = tol * std::max(out.diameter, 1.0);
  for (int m = 1; m <= probe_iters; ++m) {
    bool recurs = true;
    for (int k = probe_iters - m; k + m < L && recurs; ++k)
      recurs = (out.points[k + m].vec() - out.points[k].vec()).cwiseAbs().maxCoeff() <= thresh;
    if (recurs) {
      out.kind = AttractorKind::periodic;
      out.period = m;
      return out;
    }
  }
  out.kind = AttractorKind::quasi_periodic;
  return out;
}

/// Iterates of the map q_k = T^k(q0), k = 0..iters.
inline std::vector<MomentState> poincare_plot(const MomentState& q0, const MdeParams& p,
                                              int iters) {
  std::vector<MomentState> out{q0};
  Vec5 q = q0.vec();
  for (int i = 0; i < iters; ++i) {
    q = advance_periods(q, p, 1);
    out.push_back(MomentState::from(q));
  }
  return out;
}

}  // namespace nsync
