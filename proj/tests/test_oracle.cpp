#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "tcdual/detail/simplex.hpp"
#include "tcdual/oracle.hpp"
#include "tcdual/superhedge.hpp"
#include "tcdual/utility.hpp"

using namespace tcdual;
using fixtures::mk;

TEST(DenseSimplex, SmallProblems) {
  // max 3x + 2y  s.t. x + y <= 4, x + 3y <= 6  -> x = 4, y = 0, value 12.
  auto s = detail::DenseSimplex({{1, 1}, {1, 3}}, {4, 6}, {3, 2}).solve();
  ASSERT_EQ(s.status, detail::LpSolution::Status::Optimal);
  EXPECT_NEAR(s.value, 12, 1e-12);
  EXPECT_NEAR(s.x[0], 4, 1e-12);
  // Needs phase one: x >= 2 written as -x <= -2; min x -> value -2.
  s = detail::DenseSimplex({{-1}}, {-2}, {-1}).solve();
  ASSERT_EQ(s.status, detail::LpSolution::Status::Optimal);
  EXPECT_NEAR(s.value, -2, 1e-12);
  // Infeasible: x <= -1.
  EXPECT_EQ(detail::DenseSimplex({{1}}, {-1}, {1}).solve().status, detail::LpSolution::Status::Infeasible);
  // Unbounded: max x with only -x <= 0.
  EXPECT_EQ(detail::DenseSimplex({{-1}}, {0}, {1}).solve().status, detail::LpSolution::Status::Unbounded);
}

TEST(SuperreplicationLp, Examples) {
  const auto mp = mk(1.2, 0.9, 0.5, 2, 100, 0.02, 0.03);
  EXPECT_NEAR(oracle::superreplication_lp(Payoff::constant_cash(mp, 0), mp), 0.0, 1e-12);
  EXPECT_NEAR(oracle::superreplication_lp(Payoff::constant_cash(mp, 6.5), mp), 6.5, 1e-9);
  const auto m1 = mk(2, 0.5, 0.5, 1, 1);
  EXPECT_NEAR(oracle::superreplication_lp(Payoff::cash_call(m1, 1), m1), 1.0 / 3.0, 1e-12);
  EXPECT_THROW(oracle::superreplication_lp(Payoff::constant_cash(mk(1.2, 0.9, 0.5, 5, 100), 1),
                                           mk(1.2, 0.9, 0.5, 5, 100)),
               PreconditionError);
}

TEST(SuperreplicationLp, AboveFrictionlessForLongClaims) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 10; ++i) {
    auto mp = fixtures::random_market(rng, 1 + i % 3, 0.05);
    const auto y = Payoff::physical_call(mp, mp.s0);
    auto fr = mp;
    fr.lambda_buy = fr.lambda_sell = 0;
    EXPECT_GE(oracle::superreplication_lp(y, mp), fixtures::crr_price(y, fr) - 1e-9);
  }
}

TEST(SuperreplicationLp, AgreesWithDp) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 12; ++i) {
    const auto mp = fixtures::random_market(rng, 1 + i % 3, 0.05);
    const auto y = fixtures::random_payoff(rng, mp);
    EXPECT_NEAR(oracle::superreplication_lp(y, mp), price(y, mp).pi_star, 1e-6);
  }
}

TEST(PrimalUtilitySearch, ForcedNoTrade) {
  const auto mp = mk(1.2, 0.9, 0.5, 2, 100, 0.01, 0.01);
  oracle::PrimalSearchOptions opt;
  opt.levels = 1;
  const auto r = oracle::primal_utility_search(64, 0, mp, PowerUtilityParams(0.5), opt);
  EXPECT_NEAR(r.value, 16.0, 1e-12);
  EXPECT_EQ(r.error_bound, 0.0);
}

TEST(PrimalUtilitySearch, BracketsHoldPolicy) {
  const auto mp = mk(1.2, 0.9, 0.5, 2, 100, 0.05, 0.05);
  const PowerUtilityParams util(0.5);
  const double hold = hold_policy_value(300, -2, mp, util);
  const auto r = oracle::primal_utility_search(300, -2, mp, util);
  EXPECT_LE(r.value, hold + 1e-9);
  EXPECT_GE(r.value, hold - r.error_bound - 1e-9);
}

TEST(PrimalUtilitySearch, BelowDualValue) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> unit(0, 1);
  const PowerUtilityParams util(0.5);
  VhatOptions opt;
  opt.grid_size = 2001;
  opt.alpha_grid = 256;
  for (int i = 0; i < 4; ++i) {
    const auto mp = fixtures::random_market(rng, 1 + i % 2, 0.1);
    const double x0 = mp.s0 * (0.5 + unit(rng));
    const double x1 = unit(rng) - 0.3;
    const auto curves = vhat_recursion(mp, util, opt);
    const double v = value_function(x0, x1, mp, util, curves[0]);
    const auto r = oracle::primal_utility_search(x0, x1, mp, util);
    EXPECT_LE(r.value, v + 1e-9);
    // the dual curve on this grid overstates V by up to ~1e-7
    EXPECT_LE(v - r.value, r.error_bound + 5e-7) << "v=" << v << " search=" << r.value;
  }
}

TEST(PrimalUtilitySearch, Preconditions) {
  const PowerUtilityParams util(0.5);
  EXPECT_THROW(oracle::primal_utility_search(10, 0, mk(1.2, 0.9, 0.5, 3, 100), util), PreconditionError);
  EXPECT_THROW(oracle::primal_utility_search(10, -1, mk(1.2, 0.9, 0.5, 1, 100), util), PreconditionError);
}

TEST(SupSearch, FrictionlessIsCrr) {
  const auto mp = mk(1.3, 0.8, 0.4, 4, 100);
  const auto y = Payoff::cash_put(mp, 100);
  const auto r = oracle::price_system_sup_search(y, mp, 3, 1);
  EXPECT_NEAR(r.value, fixtures::crr_price(y, mp), 1e-9);
  EXPECT_EQ(r.evaluated, 5);
}

TEST(SupSearch, BelowPriceAndTightWithExtracted) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 6; ++i) {
    const auto mp = fixtures::random_market(rng, 1 + i % 3, 0.05);
    const auto y = fixtures::random_payoff(rng, mp);
    const auto res = price(y, mp);
    const auto plain = oracle::price_system_sup_search(y, mp, 300, 100 + static_cast<std::uint64_t>(i));
    EXPECT_LE(plain.value, res.pi_star + 1e-9);
    const auto ext = extract_worst_case_price_system(res.surface, mp);
    const auto with = oracle::price_system_sup_search(y, mp, 10, 7, &ext);
    EXPECT_NEAR(with.value, res.pi_star, 1e-6);
  }
  EXPECT_THROW(oracle::price_system_sup_search(Payoff::constant_cash(mk(1.2, 0.9, 0.5, 9, 100), 0),
                                               mk(1.2, 0.9, 0.5, 9, 100), 1, 1),
               PreconditionError);
}
