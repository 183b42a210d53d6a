#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "kac/random.hpp"

using kac::Stream;

// Known-answer vectors published with the Random123 Philox reference code.
TEST(Philox, KnownAnswerZero) {
  const auto out = kac::philox4x32_10({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out[0], 0x6627e8d5u);
  EXPECT_EQ(out[1], 0xe169c58du);
  EXPECT_EQ(out[2], 0xbc57ac4cu);
  EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerOnes) {
  const auto out = kac::philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                      {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out[0], 0x408f276du);
  EXPECT_EQ(out[1], 0x41c83b0eu);
  EXPECT_EQ(out[2], 0xa20bc7c6u);
  EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPi) {
  const auto out = kac::philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                      {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out[0], 0xd16cfe09u);
  EXPECT_EQ(out[1], 0x94fdccebu);
  EXPECT_EQ(out[2], 0x5001e420u);
  EXPECT_EQ(out[3], 0x24126ea1u);
}

TEST(Stream, SameSeedAndIdRepeat) {
  Stream a(123, 9), b(123, 9);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(Stream, DifferentIdsDiffer) {
  Stream a(123, kac::stream_id({1, 2, 3})), b(123, kac::stream_id({1, 2, 4}));
  int same = 0;
  for (int i = 0; i < 1000; ++i) same += a() == b();
  EXPECT_EQ(same, 0);
}

TEST(Stream, StreamIdDependsOnOrder) {
  EXPECT_NE(kac::stream_id({1, 2}), kac::stream_id({2, 1}));
  EXPECT_NE(kac::stream_id({0}), kac::stream_id({0, 0}));
}

TEST(Stream, UniformMoments) {
  Stream rng(7, 1);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  // mean 1/2 with sd sqrt(1/12 / n); variance 1/12
  EXPECT_NEAR(s / n, 0.5, 4 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(s2 / n - (s / n) * (s / n), 1.0 / 12, 1e-3);
}

TEST(Stream, BelowCoversRange) {
  Stream rng(7, 2);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[rng.below(7)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 4 * std::sqrt(10000.0 * 6 / 7));
}

TEST(Stream, ExponentialMean) {
  Stream rng(8, 3);
  const int n = 100000;
  double s = 0;
  for (int i = 0; i < n; ++i) s += rng.exponential(4.0);
  EXPECT_NEAR(s / n, 0.25, 4 * 0.25 / std::sqrt(n));
}

TEST(Sphere, UnitNorm) {
  Stream rng(1, 1);
  std::vector<double> v(5);
  for (int i = 0; i < 1000; ++i) {
    kac::sample_unit_sphere(rng, v);
    double n2 = 0;
    for (double x : v) n2 += x * x;
    ASSERT_NEAR(n2, 1.0, 1e-12);
  }
}
