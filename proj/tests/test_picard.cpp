#include <gtest/gtest.h>

#include <cmath>

#include "kac/picard.hpp"

using namespace kac;

namespace {

// Coarser than the defaults so the suite stays quick.
PicardOptions small() {
  PicardOptions o;
  o.n_theta = 32;
  o.n_t = 8;
  o.n_iter = 5;
  return o;
}

}  // namespace

TEST(GridDensity, GaussianMoments) {
  const auto g = GridDensity::gaussian(8.0, 257);
  EXPECT_NEAR(g.mass(), 1.0, 1e-14);
  EXPECT_NEAR(g.moment(2), 1.0, 1e-10);
  EXPECT_NEAR(g.moment(4), 3.0, 1e-8);
  EXPECT_NEAR(g.at(0.0), 1 / std::sqrt(2 * std::numbers::pi), 1e-10);
  EXPECT_EQ(g.at(9.0), 0.0);
}

TEST(GridDensity, Validation) {
  EXPECT_THROW(GridDensity::gaussian(-1.0, 100), ConfigError);
  EXPECT_THROW(GridDensity::gaussian(8.0, 2), ConfigError);
}

TEST(Picard, ZeroHorizonReturnsInitial) {
  const auto g = GridDensity::gaussian(8.0, 129);
  const auto r = picard_solve_toy(g, 0.0, small());
  EXPECT_EQ(r.f.values, g.values);
  EXPECT_TRUE(r.increments.empty());
}

TEST(Picard, GuardHorizon) {
  const auto g = GridDensity::gaussian(8.0, 129);
  EXPECT_THROW(picard_solve_toy(g, 0.125, small()), NumericalError);
  EXPECT_THROW(picard_solve_toy(g, -0.1, small()), ConfigError);
}

TEST(Picard, RejectsUnnormalized) {
  auto g = GridDensity::gaussian(8.0, 129);
  for (double& x : g.values) x *= 2;
  EXPECT_THROW(picard_solve_toy(g, 0.05, small()), ContractViolation);
}

TEST(Picard, GaussianIsStationary) {
  const auto g = GridDensity::gaussian(8.0, 257);
  const auto r = picard_solve_toy(g, 0.1, small());
  EXPECT_LT(r.worst_mass_drift, 1e-4);
  EXPECT_NEAR(r.f.moment(2), 1.0, 1e-3);
  EXPECT_NEAR(r.f.moment(4), 3.0, 5e-3);
}

TEST(Picard, UniformDataFollowsMomentOde) {
  const auto g = GridDensity::uniform(std::sqrt(3.0), 8.0, 257);
  const double m2 = g.moment(2), m40 = g.moment(4);
  const double t = 0.1;
  const auto r = picard_solve_toy(g, t, small());
  // m2 is conserved; dm4/dt = -m4/2 + (3/2) m2^2, so m4 relaxes to 3 m2^2.
  const double expect = 3 * m2 * m2 + (m40 - 3 * m2 * m2) * std::exp(-t / 2);
  EXPECT_NEAR(r.f.moment(2), m2, 1e-3);
  EXPECT_NEAR(r.f.moment(4), expect, 2e-3);
  EXPECT_GE(r.min_value, 0.0);
}

TEST(Picard, IteratesContract) {
  const auto g = GridDensity::uniform(1.5, 8.0, 257);
  const auto r = picard_solve_toy(g, 0.1, small());
  ASSERT_EQ(r.increments.size(), 5u);
  for (double q : r.ratios()) EXPECT_LT(q, 1.0);
  EXPECT_LT(r.increments.back(), 1e-3 * r.increments.front());
}

TEST(Picard, ChainedMatchesSingleBelowGuard) {
  const auto g = GridDensity::uniform(1.5, 8.0, 129);
  const auto a = picard_solve_toy(g, 0.05, small());
  const auto b = picard_solve_chained(g, 0.05, small());
  EXPECT_EQ(a.f.values, b.f.values);
  const auto c = picard_solve_chained(g, 0.3, small());
  EXPECT_NEAR(c.f.mass(), 1.0, 1e-4);
  EXPECT_GT(c.increments.size(), 5u);
}
