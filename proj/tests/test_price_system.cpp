#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "tcdual/io.hpp"
#include "tcdual/price_system.hpp"

using namespace tcdual;

namespace {

MarketParams costly(int T) {
  MarketParams mp;
  mp.u = 1.2;
  mp.d = 0.9;
  mp.p = 0.5;
  mp.T = T;
  mp.s0 = 100;
  mp.lambda_buy = 0.05;
  mp.lambda_sell = 0.03;
  return mp;
}

MarketParams crr_one_step() {
  MarketParams mp;
  mp.u = 2;
  mp.d = 0.5;
  mp.p = 0.5;
  mp.T = 1;
  mp.s0 = 1;
  return mp;
}

double expected_leaf(const PriceSystemTree& t, const MarketParams& mp, bool rho1) {
  double e = 0.0;
  for_each_path(mp.T, [&](PathNode n) { e += prefix_probability(mp, n) * (rho1 ? t.rho1(n) : t.rho0(n)); });
  return e;
}

}  // namespace

TEST(Generate, FrictionlessOneStep) {
  const auto mp = crr_one_step();
  ControlField c(1);
  c.a0 = 1.0;
  c.a_up[0] = 2.0;
  c.a_down[0] = 0.5;
  const auto t = generate(mp, c);
  EXPECT_NEAR(t.rho0({1, 1}), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(t.rho0({1, 0}), 4.0 / 3.0, 1e-15);
  EXPECT_TRUE(validate(t, mp).ok());
}

TEST(Generate, CoincidentTargetsGiveUnitWeights) {
  // Bands wide enough that A = 100 fits every node up to k = 2.
  MarketParams mp = costly(2);
  mp.u = 1.05;
  mp.d = 0.96;
  mp.lambda_buy = mp.lambda_sell = 0.2;
  ControlField c(2);
  c.a0 = 100;
  std::fill(c.a_up.begin(), c.a_up.end(), 100.0);
  std::fill(c.a_down.begin(), c.a_down.end(), 100.0);
  const auto t = generate(mp, c);
  for (int k = 0; k <= 2; ++k) for_each_path(k, [&](PathNode n) { EXPECT_EQ(t.rho0(n), 1.0); });
  EXPECT_TRUE(validate(t, mp).ok());
}

TEST(Generate, RejectsBadControls) {
  const auto mp = costly(1);
  ControlField c(1);
  c.a0 = 100;
  c.a_up[0] = 130;  // band at Su = 120 is [116.4, 126]
  c.a_down[0] = 90;
  EXPECT_THROW(generate(mp, c), PreconditionError);
  c.a_up[0] = 120;
  c.a_down[0] = 90;
  c.a0 = 200;
  EXPECT_THROW(generate(mp, c), PreconditionError);
  // Both targets above the shadow price.
  MarketParams wide = mp;
  wide.lambda_sell = 0.5;
  wide.lambda_buy = 0.5;
  c.a0 = 60;
  c.a_up[0] = 120;
  c.a_down[0] = 90;
  EXPECT_THROW(generate(wide, c), PreconditionError);
  ControlField wrong(2);
  EXPECT_THROW(generate(mp, wrong), PreconditionError);
}

TEST(Generate, RandomFieldsAreValid) {
  for (int T = 1; T <= 8; ++T) {
    const auto mp = costly(T);
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const auto t = generate(mp, sample_random_controls(mp, seed * 977 + T));
      const auto rep = validate(t, mp);
      ASSERT_TRUE(rep.ok()) << "T=" << T << " seed=" << seed;
      EXPECT_LE(rep.max_martingale_error, 1e-10);
      EXPECT_GE(rep.min_band_slack, -1e-12);
      EXPECT_NEAR(expected_leaf(t, mp, false), 1.0, 1e-12);
      EXPECT_NEAR(expected_leaf(t, mp, true), t.rho1({0, 0}), 1e-9);
    }
  }
}

TEST(Generate, MartingaleTelescopes) {
  const auto mp = costly(6);
  const auto t = generate(mp, sample_random_controls(mp, 99));
  // E[rho0(6) | node at k = 2] over the subtree equals rho0 at that node.
  for_each_path(2, [&](PathNode n) {
    double e0 = 0.0;
    double e1 = 0.0;
    for_each_path(4, [&](PathNode tail) {
      const PathNode leaf{6, (n.bits << 4) | tail.bits};
      const double pr = prefix_probability(mp, tail);
      e0 += pr * t.rho0(leaf);
      e1 += pr * t.rho1(leaf);
    });
    EXPECT_NEAR(e0 / t.rho0(n), 1.0, 1e-12);
    EXPECT_NEAR(e1 / t.rho1(n), 1.0, 1e-12);
  });
}

TEST(SampleRandomControls, Deterministic) {
  const auto mp = costly(4);
  const auto a = sample_random_controls(mp, 5);
  const auto b = sample_random_controls(mp, 5);
  EXPECT_EQ(a.a0, b.a0);
  EXPECT_EQ(a.a_up, b.a_up);
  EXPECT_EQ(a.a_down, b.a_down);
  const auto c = sample_random_controls(mp, 6);
  EXPECT_NE(a.a_up, c.a_up);
}

TEST(SampleRandomControls, FrictionlessFieldIsForced) {
  MarketParams mp = costly(3);
  mp.lambda_buy = mp.lambda_sell = 0.0;
  const auto c = sample_random_controls(mp, 17);
  EXPECT_EQ(c.a0, mp.s0);
  for (int k = 0; k < 3; ++k) {
    for_each_path(k, [&](PathNode n) {
      EXPECT_NEAR(c.a_up[n.id()], stock_price(mp, {k + 1, n.ups() + 1}), 1e-12);
      EXPECT_NEAR(c.a_down[n.id()], stock_price(mp, {k + 1, n.ups()}), 1e-12);
    });
  }
}

TEST(Validate, FlagsPerturbedDensity) {
  const auto mp = costly(3);
  auto t = generate(mp, sample_random_controls(mp, 3));
  const PathNode leaf = PathWord::parse("UDU").prefix(3);
  t.set(leaf, t.rho0(leaf) * 1.1, t.rho1(leaf) * 1.1);
  const auto rep = validate(t, mp);
  ASSERT_FALSE(rep.ok());
  bool flagged = false;
  for (const auto& v : rep.violations) {
    if (v.kind == Violation::Kind::MartingaleRho0 && v.node == leaf.parent()) flagged = true;
  }
  EXPECT_TRUE(flagged);
}

TEST(Validate, FlagsBandExcess) {
  const auto mp = costly(2);
  auto t = generate(mp, sample_random_controls(mp, 4));
  const PathNode leaf = PathWord::parse("DD").prefix(2);
  const double a = mp.band_hi(stock_price(mp, leaf.node())) * 1.05;
  t.set(leaf, t.rho0(leaf), t.rho0(leaf) * a);
  const auto rep = validate(t, mp);
  bool band = false;
  for (const auto& v : rep.violations) band = band || (v.kind == Violation::Kind::Band && v.node == leaf);
  EXPECT_TRUE(band);
  EXPECT_STREQ(to_string(Violation::Kind::Band), "band");
}

TEST(Validate, FlagsNonPositive) {
  const auto mp = costly(1);
  auto t = generate(mp, sample_random_controls(mp, 4));
  t.set({1, 0}, -0.1, 5);
  const auto rep = validate(t, mp);
  ASSERT_FALSE(rep.ok());
  bool flagged = false;
  for (const auto& v : rep.violations) flagged = flagged || (v.kind == Violation::Kind::Positivity && v.node == PathNode{1, 0});
  EXPECT_TRUE(flagged);
}

TEST(FromMartingaleMeasure, IdentityAndCrr) {
  const auto mp = costly(3);
  const auto id = from_martingale_measure(mp, mp.p);
  for (int k = 0; k <= 3; ++k) {
    for_each_path(k, [&](PathNode n) {
      EXPECT_NEAR(id.rho0(n), 1.0, 1e-15);
      EXPECT_NEAR(id.rho1(n), stock_price(mp, n.node()), 1e-12);
    });
  }
  const auto crr = from_martingale_measure(crr_one_step(), 1.0 / 3.0);
  EXPECT_NEAR(crr.rho0({1, 1}), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(crr.rho0({1, 0}), 4.0 / 3.0, 1e-15);
  EXPECT_THROW(from_martingale_measure(mp, 1.0), PreconditionError);
}

TEST(FromMartingaleMeasure, NormalisedForAnyMeasure) {
  MarketParams mp = costly(5);
  mp.u = 1.1;
  mp.d = 0.95;
  for (double q : {0.1, 0.3, 0.5, 0.9}) {
    const auto t = from_martingale_measure(mp, q);
    EXPECT_NEAR(expected_leaf(t, mp, false), 1.0, 1e-12);
  }
  // The measure is a price system only when it makes S a martingale.
  const auto crr = from_martingale_measure(mp, mp.crr_q());
  EXPECT_TRUE(validate(crr, mp).ok());
}

TEST(FrictionlessCollapse, ForcedWeightsMatchCrr) {
  MarketParams mp = costly(4);
  mp.lambda_buy = mp.lambda_sell = 0.0;
  const auto t = generate(mp, sample_random_controls(mp, 8));
  const auto crr = from_martingale_measure(mp, mp.crr_q());
  for (int k = 0; k <= 4; ++k) {
    for_each_path(k, [&](PathNode n) {
      EXPECT_NEAR(t.rho0(n), crr.rho0(n), 1e-12);
      EXPECT_NEAR(t.rho1(n), crr.rho1(n), 1e-9);
    });
  }
}

TEST(DualPayoffExpectation, Examples) {
  const auto mp = costly(3);
  const auto t = generate(mp, sample_random_controls(mp, 12));
  EXPECT_NEAR(dual_payoff_expectation(t, Payoff::constant_cash(mp, 7.5), mp), 7.5, 1e-12);
  const auto m1 = crr_one_step();
  const auto crr = from_martingale_measure(m1, 1.0 / 3.0);
  EXPECT_NEAR(dual_payoff_expectation(crr, Payoff::cash_call(m1, 1.0), m1), 1.0 / 3.0, 1e-15);
}

TEST(TreeCsv, RoundTrip) {
  const auto mp = costly(3);
  const auto t = generate(mp, sample_random_controls(mp, 21));
  std::stringstream ss;
  io::write_tree_csv(ss, t);
  const std::string text = ss.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "path[word],rho0[1],rho1[currency],A[currency]");
  EXPECT_NE(text.find("\n-,1,"), std::string::npos);
  const auto back = io::read_tree_csv(ss);
  ASSERT_EQ(back.horizon(), 3);
  for (int k = 0; k <= 3; ++k) {
    for_each_path(k, [&](PathNode n) {
      EXPECT_NEAR(back.rho0(n), t.rho0(n), 1e-11 * t.rho0(n));
      EXPECT_NEAR(back.rho1(n), t.rho1(n), 1e-11 * t.rho1(n));
    });
  }
  EXPECT_TRUE(validate(back, mp, 1e-10, 1e-11).ok());
}

TEST(TreeCsv, RejectsMalformed) {
  std::stringstream missing("path,rho0,rho1,A\n-,1,100,100\nU,1,110,110\n");
  EXPECT_THROW(io::read_tree_csv(missing), PreconditionError);
  std::stringstream bad("path,rho0,rho1,A\n-,1,abc,100\n");
  EXPECT_THROW(io::read_tree_csv(bad), PreconditionError);
  std::stringstream inconsistent("path,rho0,rho1,A\n-,1,100,101\n");
  EXPECT_THROW(io::read_tree_csv(inconsistent), PreconditionError);
}
