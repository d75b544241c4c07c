#include <gtest/gtest.h>

#include <cmath>

#include "nsync/continuation.hpp"

using namespace nsync;

namespace {

const BifurcationPoint& fold_at_default_damping() {
  static const BifurcationPoint b = detect_saddle_node(0.88, 0.96, 0.04, 1, MdeParams{});
  return b;
}

void expect_on_fold(const BifurcationPoint& b, const MdeParams& base) {
  EXPECT_LE(b.res_fp, 1e-8);
  EXPECT_LE(b.res_p1, 1e-8);
  EXPECT_LE(b.unity_distance, 1e-5);
  MdeParams p = base;
  p.osc.c = b.c;
  p.omega = b.omega_star;
  const auto ev = poincare_map_with_jacobian(b.q_bar, p);
  EXPECT_LE((ev.q_out.vec() - b.q_bar.vec()).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE(std::abs(characteristic_poly(1.0, ev.monodromy)), 1e-8);
}

}  // namespace

TEST(DetectSaddleNode, RefinedPointSatisfiesFoldConditions) {
  const auto& b = fold_at_default_damping();
  EXPECT_DOUBLE_EQ(b.c, 0.04);
  EXPECT_GT(b.omega_star, 0.88);
  EXPECT_LT(b.omega_star, 0.96);
  expect_on_fold(b, MdeParams{});
  // eigensolver cross-check of P(1) = 0
  EXPECT_LE(b.unity_distance, 1e-6);
}

TEST(DetectSaddleNode, BranchIsStableBelowTheFold) {
  const auto& b = fold_at_default_damping();
  MdeParams p;
  p.omega = b.omega_star - 0.02;
  const auto r = find_fixed_point(b.q_bar, 1, p);
  ASSERT_TRUE(r.converged());
  EXPECT_TRUE(r.stable);
  EXPECT_GT(characteristic_poly(1.0, r.monodromy).real(), 0.0);
}

TEST(DetectSaddleNode, LinearSystemHasNoFold) {
  MdeParams p;
  p.osc.mu = 0.0;
  EXPECT_THROW(detect_saddle_node(0.8, 1.0, 0.04, 1, p), ContinuationError);
}

TEST(DetectSaddleNode, ErrorCarriesLastGoodPoint) {
  MdeParams p;
  p.osc.mu = 0.0;
  try {
    detect_saddle_node(0.8, 1.0, 0.04, 1, p);
    FAIL() << "expected ContinuationError";
  } catch (const ContinuationError& e) {
    ASSERT_TRUE(e.last_good().has_value());
    EXPECT_TRUE(e.last_good()->converged());
    EXPECT_DOUBLE_EQ(e.last_omega(), 1.0);
  }
  EXPECT_THROW(detect_saddle_node(0.9, 0.8, 0.04, 1, MdeParams{}), DomainError);
}

TEST(FoldCorrector, IdempotentAtRoot) {
  const auto& b = fold_at_default_damping();
  const auto again = fold_corrector(b.q_bar, b.omega_star, MdeParams{}, 1);
  EXPECT_EQ(again.iterations, 0);
  EXPECT_EQ(again.omega_star, b.omega_star);
}

TEST(FoldCorrector, ReturnsToRootFromPerturbation) {
  const auto& b = fold_at_default_damping();
  const auto r = fold_corrector(b.q_bar, b.omega_star + 1e-3, MdeParams{}, 1);
  EXPECT_NEAR(r.omega_star, b.omega_star, 1e-6);
  EXPECT_LE((r.q_bar.vec() - b.q_bar.vec()).cwiseAbs().maxCoeff(), 1e-6 * (1.0 + b.q_bar.s11));
  EXPECT_LE(r.iterations, 5);
}

TEST(TraceBifurcationSet, PointsSatisfyResidualsAndAreOrdered) {
  const auto& b = fold_at_default_damping();
  const MdeParams base;
  const auto curve = trace_bifurcation_set(b, 0.036, 0.044, 1e-3, base);
  EXPECT_TRUE(curve.notes.empty());
  ASSERT_EQ(curve.points.size(), 9u);
  EXPECT_DOUBLE_EQ(curve.step_c, 1e-3);
  EXPECT_NEAR(curve.points.front().c, 0.036, 1e-12);
  EXPECT_NEAR(curve.points.back().c, 0.044, 1e-12);
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    expect_on_fold(curve.points[i], base);
    if (i > 0) {
      EXPECT_GT(curve.points[i].c, curve.points[i - 1].c);
    }
  }
}

TEST(TraceBifurcationSet, DirectionInvariance) {
  const auto& b = fold_at_default_damping();
  const MdeParams base;
  const auto up = trace_bifurcation_set(b, 0.04, 0.043, 1e-3, base);
  const auto down = trace_bifurcation_set(up.points.back(), 0.04, 0.043, 1e-3, base);
  ASSERT_EQ(up.points.size(), down.points.size());
  for (std::size_t i = 0; i < up.points.size(); ++i) {
    EXPECT_NEAR(up.points[i].c, down.points[i].c, 1e-12);
    EXPECT_NEAR(up.points[i].omega_star, down.points[i].omega_star, 1e-6);
  }
}

TEST(TraceBifurcationSet, HalvingStepHalvesGaps) {
  const auto& b = fold_at_default_damping();
  const MdeParams base;
  const auto coarse = trace_bifurcation_set(b, 0.04, 0.042, 1e-3, base);
  const auto fine = trace_bifurcation_set(b, 0.04, 0.042, 5e-4, base);
  ASSERT_EQ(coarse.points.size(), 3u);
  ASSERT_EQ(fine.points.size(), 5u);
  const double g_coarse = std::abs(coarse.points[1].omega_star - coarse.points[0].omega_star);
  const double g_fine = std::abs(fine.points[1].omega_star - fine.points[0].omega_star);
  EXPECT_NEAR(g_coarse / g_fine, 2.0, 0.1);
  // the two discretizations land on the same curve
  EXPECT_NEAR(coarse.points[2].omega_star, fine.points[4].omega_star, 1e-7);
}

TEST(TraceBifurcationSet, RejectsBadArguments) {
  const auto& b = fold_at_default_damping();
  EXPECT_THROW(trace_bifurcation_set(b, 0.03, 0.06, 0.0, MdeParams{}), DomainError);
  EXPECT_THROW(trace_bifurcation_set(b, 0.05, 0.06, 1e-3, MdeParams{}), DomainError);
}

TEST(OmegaStarAt, InterpolatesAlongCurve) {
  BifurcationCurve curve;
  curve.points.push_back({0.92, 0.04, {}, 0, 0, 0, 0});
  curve.points.push_back({0.90, 0.05, {}, 0, 0, 0, 0});
  EXPECT_NEAR(*omega_star_at(curve, 0.045), 0.91, 1e-12);
  EXPECT_FALSE(omega_star_at(curve, 0.06).has_value());
}
