#pragma once

// Shared fixtures for the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "tcdual/market.hpp"

namespace tcdual::fixtures {

inline MarketParams mk(double u, double d, double p, int T, double s0, double lb = 0.0, double ls = 0.0) {
  MarketParams mp;
  mp.u = u;
  mp.d = d;
  mp.p = p;
  mp.T = T;
  mp.s0 = s0;
  mp.lambda_buy = lb;
  mp.lambda_sell = ls;
  return mp;
}

/// Frictionless value by direct expectation under q = (1-d)/(u-d), liquidating
/// the share leg at the terminal price.
inline double crr_price(const Payoff& y, const MarketParams& mp) {
  const double q = mp.crr_q();
  double total = 0.0;
  for (int j = 0; j <= mp.T; ++j) {
    const double log_binom = std::lgamma(mp.T + 1.0) - std::lgamma(j + 1.0) - std::lgamma(mp.T - j + 1.0);
    const double w = std::exp(log_binom + j * std::log(q) + (mp.T - j) * std::log1p(-q));
    const auto i = static_cast<std::size_t>(j);
    total += w * (y.y0[i] + stock_price(mp, {mp.T, j}) * y.y1[i]);
  }
  return total;
}

/// Random market with costs in [0, max_cost) on each side.
inline MarketParams random_market(std::mt19937_64& rng, int T, double max_cost) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return mk(1.02 + 0.3 * unit(rng), 0.7 + 0.28 * unit(rng), 0.15 + 0.7 * unit(rng), T, 50.0 + 100.0 * unit(rng),
            max_cost * unit(rng), max_cost * unit(rng));
}

/// Random claim: call, put, physical call or a random table.
inline Payoff random_payoff(std::mt19937_64& rng, const MarketParams& mp) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double k = mp.s0 * (0.8 + 0.4 * unit(rng));
  switch (static_cast<int>(unit(rng) * 4)) {
    case 0: return Payoff::cash_call(mp, k);
    case 1: return Payoff::cash_put(mp, k);
    case 2: return Payoff::physical_call(mp, k);
    default: {
      std::vector<double> y0, y1;
      for (int j = 0; j <= mp.T; ++j) {
        y0.push_back(mp.s0 * (unit(rng) - 0.3));
        y1.push_back(2.0 * unit(rng) - 1.0);
      }
      return Payoff::custom(y0, y1);
    }
  }
}

/// Random admissible strategy from (x0, x1): each node trades a random
/// fraction of the range that keeps liquidation value nonnegative now and at
/// both children without further trading.
inline Strategy random_admissible_strategy(std::mt19937_64& rng, PortfolioState x, const MarketParams& mp) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Strategy s(mp.T);
  std::vector<std::pair<PathNode, PortfolioState>> stack{{PathNode{0, 0}, x}};
  while (!stack.empty()) {
    auto [n, st] = stack.back();
    stack.pop_back();
    const double price = stock_price(mp, n.node());
    auto after = [&](double z) {
      return PortfolioState{st.x0 - transaction_cost_h(z, mp) * price, st.x1 + z};
    };
    auto ok = [&](double z) {
      const PortfolioState y = after(z);
      if (liquidation_value(y, price, mp) < 0.0) return false;
      if (n.k == mp.T) return true;
      return liquidation_value(y, price * mp.u, mp) >= 0.0 && liquidation_value(y, price * mp.d, mp) >= 0.0;
    };
    // Closing out is always safe; shrink a random trade towards it until safe.
    const double close = -st.x1;
    double z = close + (unit(rng) - 0.5) * 2.0 * (std::abs(st.x1) + std::max(0.0, st.x0) / price);
    for (int it = 0; it < 60 && !ok(z); ++it) z = close + 0.5 * (z - close);
    if (!ok(z)) z = close;
    s.set_trade(n, z);
    if (n.k < mp.T) {
      stack.emplace_back(n.child(Move::Up), after(z));
      stack.emplace_back(n.child(Move::Down), after(z));
    }
  }
  return s;
}

}  // namespace tcdual::fixtures
