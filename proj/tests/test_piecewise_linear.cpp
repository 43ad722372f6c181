#include <gtest/gtest.h>

#include <random>

#include "tcdual/piecewise_linear.hpp"

using namespace tcdual;

TEST(PiecewiseLinear, Evaluation) {
  const PiecewiseLinearConcave f({{0, 0}, {1, 1}});
  EXPECT_DOUBLE_EQ(f(0.5), 0.5);
  const auto pt = PiecewiseLinearConcave::point(2, 7);
  EXPECT_EQ(pt(2), 7.0);
  const PiecewiseLinearConcave g({{0, 0.1}, {0.3, 0.7}, {2, 0.75}});
  EXPECT_EQ(g(0.3), 0.7);
  EXPECT_EQ(g(2), 0.75);
}

TEST(PiecewiseLinear, DomainSlack) {
  const PiecewiseLinearConcave f({{1, 2}, {3, 4}});
  EXPECT_DOUBLE_EQ(f(1 - 1e-13), 2.0);
  EXPECT_DOUBLE_EQ(f(3 + 1e-13), 4.0);
  EXPECT_THROW((void)f(0.999), PreconditionError);
  EXPECT_THROW((void)f(3.001), PreconditionError);
}

TEST(PiecewiseLinear, ConstructionChecks) {
  EXPECT_THROW(PiecewiseLinearConcave(std::vector<Breakpoint>{}), PreconditionError);
  EXPECT_THROW(PiecewiseLinearConcave({{1, 0}, {1, 1}}), PreconditionError);
  EXPECT_THROW(PiecewiseLinearConcave({{2, 0}, {1, 1}}), PreconditionError);
  EXPECT_THROW(PiecewiseLinearConcave({{0, std::nan("")}}), PreconditionError);
}

TEST(PiecewiseLinear, ConcavityAndArgmax) {
  const PiecewiseLinearConcave f({{0, 0}, {1, 2}, {2, 2}, {3, 1}});
  EXPECT_TRUE(f.is_concave());
  EXPECT_EQ(f.argmax().a, 1.0);
  const PiecewiseLinearConcave g({{0, 0}, {1, 0}, {2, 1}});
  EXPECT_FALSE(g.is_concave());
}

TEST(ConcaveEnvelope, TwoPointsGiveChord) {
  const auto up = PiecewiseLinearConcave::point(2, 1);
  const auto dn = PiecewiseLinearConcave::point(0.5, 0);
  const auto e = concave_envelope(up, dn, 1, 1);
  ASSERT_EQ(e.size(), 1U);
  EXPECT_NEAR(e(1), 1.0 / 3.0, 1e-15);
}

TEST(ConcaveEnvelope, ConstantStaysConstant) {
  const auto up = PiecewiseLinearConcave::affine(1.1, 1.3, 4, 0);
  const auto dn = PiecewiseLinearConcave::affine(0.8, 1.0, 4, 0);
  const auto e = concave_envelope(up, dn, 0.9, 1.2);
  EXPECT_EQ(e.size(), 2U);
  EXPECT_DOUBLE_EQ(e(0.9), 4.0);
  EXPECT_DOUBLE_EQ(e(1.2), 4.0);
}

TEST(ConcaveEnvelope, ClipsToInterval) {
  const PiecewiseLinearConcave up({{2, 0}, {3, 3}, {4, 3.5}});
  const PiecewiseLinearConcave dn({{0, 1}, {1, 1.2}});
  const auto e = concave_envelope(up, dn, 0.5, 3.5);
  EXPECT_EQ(e.lo(), 0.5);
  EXPECT_EQ(e.hi(), 3.5);
  EXPECT_TRUE(e.is_concave());
  EXPECT_THROW(concave_envelope(up, dn, -1, 3), PreconditionError);
}

TEST(ConcaveEnvelope, DominatesBothGraphsAndMixtures) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    // Random concave functions from sorted decreasing slopes.
    auto random_concave = [&](double lo, double hi) {
      std::vector<Breakpoint> pts{{lo, unit(rng)}};
      double slope = 2 * unit(rng);
      const int n = 2 + static_cast<int>(unit(rng) * 5);
      for (int i = 1; i <= n; ++i) {
        const double a = lo + (hi - lo) * i / n;
        pts.push_back({a, pts.back().w + slope * (a - pts.back().a)});
        slope -= unit(rng);
      }
      return PiecewiseLinearConcave(pts);
    };
    const auto up = random_concave(1.0, 1.5);
    const auto dn = random_concave(0.6, 1.1);
    const auto e = concave_envelope(up, dn, 0.8, 1.3);
    ASSERT_TRUE(e.is_concave());
    for (int i = 0; i < 50; ++i) {
      const double au = 1.0 + 0.5 * unit(rng);
      const double ad = 0.6 + 0.5 * unit(rng);
      const double a = 0.8 + 0.5 * unit(rng);
      if (a < std::min(au, ad) || a > std::max(au, ad) || au == ad) continue;
      const double al = (a - ad) / (au - ad);
      EXPECT_GE(e(a), al * up(au) + (1 - al) * dn(ad) - 1e-12);
    }
    for (const auto& b : up.breakpoints())
      if (b.a <= 1.3) EXPECT_GE(e(b.a) + 1e-12, b.w);
  }
}
