#pragma once

// Saddle-node points of m-periodic moment orbits (a multiplier at +1, i.e.
// det(I - D T^m) = 0) and their continuation through the (omega, c) plane.

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsync/orbit.hpp"

namespace nsync {

class ContinuationError : public std::runtime_error {
 public:
  ContinuationError(const std::string& what, std::optional<FixedPointResult> last_good = {},
                    double last_omega = 0.0)
      : std::runtime_error(what), last_good_(std::move(last_good)), last_omega_(last_omega) {}

  const std::optional<FixedPointResult>& last_good() const { return last_good_; }
  double last_omega() const { return last_omega_; }

 private:
  std::optional<FixedPointResult> last_good_;
  double last_omega_;
};

struct BifurcationPoint {
  double omega_star = 0.0;
  double c = 0.0;
  MomentState q_bar;
  double res_fp = 0.0;  // max |T^m(q) - q|
  double res_p1 = 0.0;  // |det(I - D T^m)|
  double unity_distance = 0.0;
  int iterations = 0;
};

struct BifurcationCurve {
  std::vector<BifurcationPoint> points;  // ascending in c
  double step_c = 0.0;
  std::vector<std::string> notes;  // truncation reports
};

/// det(I - D T^m) at (q, omega) together with the fixed-point residual.
struct FoldResidual {
  Vec5 fp;
  double p1;
  Mat5 monodromy;
};

inline FoldResidual fold_residual(const Vec5& q, double omega, const MdeParams& base, int m) {
  MdeParams p = base;
  p.omega = omega;
  const MapEvaluation ev = map_power_with_jacobian(MomentState::from(q), p, m);
  return {ev.q_out.vec() - q, characteristic_poly(1.0, ev.monodromy).real(), ev.monodromy};
}

struct FoldOptions {
  double tol = 1e-8;
  int max_iter = 20;
  double h_q = 1e-6;
  double h_omega = 1e-6;
};

/// Newton on {T^m(q) - q = 0, det(I - D T^m) = 0} in the unknowns (q, omega).
/// Derivatives of the determinant and of T^m with respect to omega are central
/// differences; D T^m itself comes from the variational equations.
inline BifurcationPoint fold_corrector(const MomentState& q_guess, double omega_guess,
                                       const MdeParams& base, int m = 1,
                                       const FoldOptions& opt = {}) {
  using Vec6 = Eigen::Matrix<double, 6, 1>;
  using Mat6 = Eigen::Matrix<double, 6, 6>;
  Vec5 q = q_guess.vec();
  double omega = omega_guess;
  for (int it = 0; it <= opt.max_iter; ++it) {
    FoldResidual r;
    try {
      r = fold_residual(q, omega, base, m);
    } catch (const std::exception& e) {
      throw ContinuationError(std::string("fold_corrector: ") + e.what());
    }
    const double res_fp = r.fp.cwiseAbs().maxCoeff();
    if (std::max(res_fp, std::abs(r.p1)) <= opt.tol) {
      return {omega, base.osc.c, MomentState::from(q), res_fp, std::abs(r.p1),
              distance_to_unity(multipliers_of(r.monodromy)), it};
    }
    if (it == opt.max_iter) break;

    Mat6 A = Mat6::Zero();
    A.topLeftCorner<5, 5>() = r.monodromy - Mat5::Identity();
    for (int j = 0; j < 5; ++j) {
      const double h = opt.h_q * (1.0 + std::abs(q(j)));
      Vec5 qp = q, qm = q;
      qp(j) += h;
      qm(j) -= h;
      A(5, j) = (fold_residual(qp, omega, base, m).p1 - fold_residual(qm, omega, base, m).p1) /
                (2.0 * h);
    }
    const double h = opt.h_omega;
    const FoldResidual wp = fold_residual(q, omega + h, base, m);
    const FoldResidual wm = fold_residual(q, omega - h, base, m);
    A.block<5, 1>(0, 5) = (wp.fp - wm.fp) / (2.0 * h);
    A(5, 5) = (wp.p1 - wm.p1) / (2.0 * h);

    Vec6 F;
    F << r.fp, r.p1;
    const Eigen::FullPivLU<Mat6> lu(A);
    if (!lu.isInvertible() || lu.rcond() < 1e-14)
      throw ContinuationError("fold_corrector: singular Newton matrix (degenerate fold)");
    const Vec6 d = lu.solve(F);
    q -= d.head<5>();
    omega -= d(5);
    if (!q.allFinite() || !std::isfinite(omega) || omega <= 0.0)
      throw ContinuationError("fold_corrector: Newton iterate left the domain");
  }
  throw ContinuationError("fold_corrector: no convergence after " + std::to_string(opt.max_iter) +
                          " iterations");
}

struct SeedStrategy {
  /// Starting state; iterated for `settle_periods` at the start frequency to land
  /// on the attracting branch. Defaults to a large-amplitude state.
  MomentState q0{0.5, 2.5, 10.0, 2.0, 8.0};
  int settle_periods = 300;
  /// natural-parameter step in omega while following the branch
  double omega_step = 0.0025;
  /// bracket width at which bisection hands over to the fold corrector
  double bracket_tol = 1e-6;
  /// a Newton solution further than this (max-norm) from its warm start is
  /// treated as a jump to another branch
  double branch_jump = 1.0;
};

/// Follows the period-m branch from omega_lo towards omega_hi, evaluating
/// det(I - D T^m) at each point. The first step where the determinant changes
/// sign or the branch ceases to exist brackets the fold; bisection narrows the
/// bracket and the fold corrector finishes the refinement.
inline BifurcationPoint detect_saddle_node(double omega_lo, double omega_hi, double c, int m,
                                           const MdeParams& base, const SeedStrategy& seed = {}) {
  if (!(omega_lo > 0.0) || !(omega_hi > omega_lo))
    throw DomainError("detect_saddle_node: need 0 < omega_lo < omega_hi");
  MdeParams p = base;
  p.osc.c = c;
  p.omega = omega_lo;

  const Vec5 settled = advance_periods(seed.q0.vec(), p, seed.settle_periods);
  FixedPointResult fp = find_fixed_point(MomentState::from(settled), m, p);
  if (!fp.converged())
    throw ContinuationError("detect_saddle_node: no period-" + std::to_string(m) +
                                " branch at omega_lo (" + fp.diagnostic + ")",
                            fp, omega_lo);
  double p1 = characteristic_poly(1.0, fp.monodromy).real();

  auto solve_at = [&](double omega, const FixedPointResult& from) -> std::optional<FixedPointResult> {
    MdeParams pw = p;
    pw.omega = omega;
    FixedPointResult r = find_fixed_point(from.q_bar, m, pw);
    if (!r.converged()) return std::nullopt;
    if ((r.q_bar.vec() - from.q_bar.vec()).cwiseAbs().maxCoeff() > seed.branch_jump)
      return std::nullopt;
    return r;
  };
  auto same_side = [&](const FixedPointResult& r) {
    return std::signbit(characteristic_poly(1.0, r.monodromy).real()) == std::signbit(p1);
  };

  double w = omega_lo;
  while (w < omega_hi) {
    const double w_next = std::min(w + seed.omega_step, omega_hi);
    const auto next = solve_at(w_next, fp);
    if (next && same_side(*next)) {
      fp = *next;
      w = w_next;
      continue;
    }
    // bracket [w, w_next]: refine on the existence / sign boundary
    double lo = w, hi = w_next;
    while (hi - lo > seed.bracket_tol) {
      const double mid = 0.5 * (lo + hi);
      const auto r = solve_at(mid, fp);
      if (r && same_side(*r)) {
        fp = *r;
        lo = mid;
      } else {
        hi = mid;
      }
    }
    // A steep but smooth branch passes the jump test once the step is small.
    if (const auto r = solve_at(hi, fp); r && same_side(*r)) {
      fp = *r;
      w = hi;
      continue;
    }
    try {
      return fold_corrector(fp.q_bar, lo, p, m);
    } catch (const ContinuationError& e) {
      throw ContinuationError(std::string("detect_saddle_node: bracket found at omega=") +
                                  std::to_string(lo) + " but refinement failed: " + e.what(),
                              fp, lo);
    }
  }
  throw ContinuationError("detect_saddle_node: no sign change of det(I - DT) in range", fp, w);
}

struct TraceOptions {
  double min_step = 1e-5;
  FoldOptions fold;
};

/// Natural-parameter continuation in c from a converged fold point: each
/// step is corrected from the previous solution, halving the step on failure.
inline BifurcationCurve trace_bifurcation_set(const BifurcationPoint& seed, double c_lo,
                                              double c_hi, double delta_c, const MdeParams& base,
                                              int m = 1, const TraceOptions& opt = {}) {
  if (!(delta_c > 0.0)) throw DomainError("trace_bifurcation_set: delta_c must be > 0");
  if (!(c_lo <= seed.c && seed.c <= c_hi))
    throw DomainError("trace_bifurcation_set: seed c outside [c_lo, c_hi]");
  BifurcationCurve curve;
  curve.step_c = delta_c;

  auto run = [&](double dir, double c_end) {
    std::vector<BifurcationPoint> pts;
    BifurcationPoint prev = seed;
    double step = delta_c;
    while (dir * (c_end - prev.c) > 1e-12) {
      const double h = std::min(step, dir * (c_end - prev.c));
      MdeParams p = base;
      p.osc.c = prev.c + dir * h;
      try {
        BifurcationPoint next = fold_corrector(prev.q_bar, prev.omega_star, p, m, opt.fold);
        pts.push_back(next);
        prev = next;
        step = delta_c;
      } catch (const ContinuationError& e) {
        step *= 0.5;
        if (step < opt.min_step) {
          curve.notes.push_back("truncated at c=" + std::to_string(prev.c) + ": " + e.what());
          break;
        }
      }
    }
    return pts;
  };

  auto down = run(-1.0, c_lo);
  auto up = run(+1.0, c_hi);
  curve.points.assign(down.rbegin(), down.rend());
  curve.points.push_back(seed);
  curve.points.insert(curve.points.end(), up.begin(), up.end());
  return curve;
}

/// Fold frequency at damping c by linear interpolation along the curve.
inline std::optional<double> omega_star_at(const BifurcationCurve& curve, double c) {
  const auto& pts = curve.points;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (pts[i].c <= c && c <= pts[i + 1].c) {
      const double s = (c - pts[i].c) / (pts[i + 1].c - pts[i].c);
      return pts[i].omega_star + s * (pts[i + 1].omega_star - pts[i].omega_star);
    }
  }
  if (pts.size() == 1 && pts[0].c == c) return pts[0].omega_star;
  return std::nullopt;
}

}  // namespace nsync
