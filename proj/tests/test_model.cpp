#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nsync/model.hpp"

using namespace nsync;

TEST(DeadZone, Examples) {
  EXPECT_EQ(dead_zone_force(0.0, 0.7, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(dead_zone_force(1.7, 0.7, 2.0), 2.0);
  EXPECT_DOUBLE_EQ(dead_zone_force(-1.7, 0.7, 2.0), -2.0);
  EXPECT_EQ(dead_zone_force(0.7, 0.7, 1.0), 0.0);
  EXPECT_EQ(dead_zone_force(-0.7, 0.7, 1.0), 0.0);
}

TEST(DeadZone, OddLipschitzAndLiteralFormProperty) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> ux(-10.0, 10.0), uh(-1.0, 1.0), umu(0.0, 3.0);
  for (int i = 0; i < 10000; ++i) {
    const double x = ux(rng), h = uh(rng), mu = umu(rng);
    for (double slope : {1.0, 2.0}) {
      EXPECT_EQ(dead_zone_force(-x, mu, slope), -dead_zone_force(x, mu, slope));
      EXPECT_LE(std::abs(dead_zone_force(x + h, mu, slope) - dead_zone_force(x, mu, slope)),
                slope * std::abs(h) * (1 + 1e-12) + 1e-12);
    }
    // (x + mu) - |x + mu| + (x - mu) + |x - mu|
    const double literal = (x + mu) - std::abs(x + mu) + (x - mu) + std::abs(x - mu);
    EXPECT_NEAR(dead_zone_force(x, mu, 2.0), literal, 1e-12);
  }
}

TEST(Forcing, RandomPhaseValue) {
  const ForcingSpec spec = RandomPhase{0.2, 0.95, 0.0};
  EXPECT_DOUBLE_EQ(forcing_value(spec, RandomPhaseState{0.0, 0.0}, 0.0), 0.2);
  for (double t : {0.3, 1.7, 42.0}) {
    const RandomPhaseState st{0.95 * t, 0.0};
    EXPECT_DOUBLE_EQ(forcing_value(spec, st, t), 0.2 * std::cos(0.95 * t));
  }
}

TEST(Forcing, FilteredPassThroughAndHarmonic) {
  EXPECT_DOUBLE_EQ(forcing_value(Filtered{0.1, 0.2, 1.0}, FilteredState{0.05, 3.0}, 9.0), 0.05);
  EXPECT_DOUBLE_EQ(forcing_value(HarmonicWhite{0.2, 0.8, 0.1}, HarmonicWhiteState{}, 2.0),
                   0.2 * std::cos(1.6));
}

TEST(Forcing, VariantMismatchThrows) {
  EXPECT_THROW(forcing_value(RandomPhase{}, FilteredState{}, 0.0), DomainError);
}

TEST(Drift, Examples) {
  const OscillatorParams p;  // c = 0.04, k = 1, mu = 0.7, Q = 0.3
  auto [v0, a0] = oscillator_drift({0.0, 0.0}, 0.0, p);
  EXPECT_EQ(v0, 0.0);
  EXPECT_DOUBLE_EQ(a0, 0.3);

  auto [v1, a1] = oscillator_drift({0.0, 1.0}, 0.0, p);
  EXPECT_EQ(v1, 1.0);
  EXPECT_DOUBLE_EQ(a1, -0.04 + 0.3);
}

TEST(Drift, StaticEquilibrium) {
  for (int slope : {1, 2}) {
    OscillatorParams p;
    p.g_slope = slope;
    const double x_star = p.mu + p.Q / (p.k * slope);
    auto [v, a] = oscillator_drift({x_star, 0.0}, 0.0, p);
    EXPECT_EQ(v, 0.0);
    EXPECT_NEAR(a, 0.0, 1e-15);
  }
}

TEST(Drift, AffineInForcing) {
  const OscillatorParams p;
  const OscState s{1.3, -0.4};
  const double base = oscillator_drift(s, 0.0, p).second;
  for (double u : {-1.0, 0.25, 3.0}) EXPECT_NEAR(oscillator_drift(s, u, p).second - base, u, 1e-15);
}

TEST(Params, Validation) {
  OscillatorParams p;
  p.g_slope = 3;
  EXPECT_THROW(p.validate(), DomainError);
  p = {};
  p.k = 0.0;
  EXPECT_THROW(p.validate(), DomainError);
  EXPECT_THROW(validate(ForcingSpec{Filtered{0.1, 0.0, 1.0}}), DomainError);
  EXPECT_THROW(validate(ForcingSpec{RandomPhase{0.2, -1.0, 0.0}}), DomainError);
}
