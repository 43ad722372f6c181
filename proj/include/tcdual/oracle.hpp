#pragma once

// Brute-force verifiers built directly from the primal definitions. Nothing
// here reads results of the dynamic programs; the only link is the optional
// extracted price system fed to price_system_sup_search, which is reported
// separately.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tcdual/detail/simplex.hpp"
#include "tcdual/errors.hpp"
#include "tcdual/market.hpp"
#include "tcdual/power_utility.hpp"
#include "tcdual/price_system.hpp"

namespace tcdual::oracle {

inline constexpr int kMaxLpHorizon = 4;
inline constexpr int kMaxPrimalHorizon = 2;
inline constexpr int kMaxSupSearchHorizon = 8;

/// Minimal initial cash x0 such that some adapted trading (x0, 0) -> (X0, X1)
/// dominates the claim on every path: X0(T) >= Y0 and X1(T) >= Y1. Trades are
/// split into nonnegative buy and sell parts, which makes the cost function
/// linear; the LP is solved exactly by the dense simplex.
inline double superreplication_lp(const Payoff& payoff, const MarketParams& mp) {
  mp.validate();
  detail::require(mp.T <= kMaxLpHorizon, "superreplication_lp: T exceeds oracle cap of 4");
  payoff.validate(mp);

  const std::size_t nodes = path_tree_size(mp.T);
  // Columns: x0+, x0-, buy[node], sell[node].
  const std::size_t cols = 2 + 2 * nodes;
  auto buy = [](std::size_t id) { return 2 + 2 * id; };
  auto sell = [](std::size_t id) { return 3 + 2 * id; };

  std::vector<std::vector<double>> a;
  std::vector<double> b;
  for_each_path(mp.T, [&](PathNode leaf) {
    std::vector<double> cash(cols, 0.0);
    std::vector<double> shares(cols, 0.0);
    cash[0] = -1.0;
    cash[1] = 1.0;
    const PathWord w = PathWord::from_node(leaf);
    for (int k = 0; k <= mp.T; ++k) {
      const PathNode n = w.prefix(k);
      const double s = stock_price(mp, n.node());
      cash[buy(n.id())] = (1.0 + mp.lambda_buy) * s;
      cash[sell(n.id())] = -(1.0 - mp.lambda_sell) * s;
      shares[buy(n.id())] = -1.0;
      shares[sell(n.id())] = 1.0;
    }
    const auto j = static_cast<std::size_t>(leaf.ups());
    a.push_back(std::move(cash));
    b.push_back(-payoff.y0[j]);
    a.push_back(std::move(shares));
    b.push_back(-payoff.y1[j]);
  });
  std::vector<double> c(cols, 0.0);
  c[0] = -1.0;
  c[1] = 1.0;

  const auto sol = detail::DenseSimplex(a, b, c).solve();
  using St = detail::LpSolution::Status;
  if (sol.status == St::Unbounded) throw InvariantError("superreplication_lp: LP unbounded below (arbitrage)");
  detail::ensure(sol.status == St::Optimal, "superreplication_lp: LP infeasible");
  return -sol.value;
}

struct PrimalSearchOptions {
  int levels = 41;            // trade levels per node and pass; <= 1 forces no trading
  int refinement_passes = 2;  // zoom passes around the best level
};

struct PrimalSearchResult {
  double value = 0.0;        // expected utility of the best strategy found
  double error_bound = 0.0;  // estimated distance to the true maximum
};

namespace impl {

struct Line {
  double x0, y0, slope;
  [[nodiscard]] double at(double x) const { return y0 + slope * (x - x0); }
};

/// max over [a, b] of min(L1, L2) for the available lines.
inline double bounded_peak(const std::optional<Line>& l1, const std::optional<Line>& l2, double a, double b) {
  auto env = [&](double x) {
    double v = std::numeric_limits<double>::infinity();
    if (l1) v = std::min(v, l1->at(x));
    if (l2) v = std::min(v, l2->at(x));
    return v;
  };
  double best = std::max(env(a), env(b));
  if (l1 && l2 && l1->slope != l2->slope) {
    const double x = (l2->y0 - l1->y0 + l1->slope * l1->x0 - l2->slope * l2->x0) / (l1->slope - l2->slope);
    if (x > a && x < b) best = std::max(best, env(x));
  }
  return best;
}

class PrimalSearch {
 public:
  PrimalSearch(const MarketParams& mp, const PowerUtilityParams& util, PrimalSearchOptions opt)
      : mp_(mp), util_(util), opt_(opt) {}

  PrimalSearchResult best(PathNode n, PortfolioState x) const {
    const double s = stock_price(mp_, n.node());
    if (n.k == mp_.T) {
      const double w = liquidation_value(x, s, mp_);
      if (w < 0.0) return {-std::numeric_limits<double>::infinity(), 0.0};
      return {util_.utility(w), 0.0};
    }

    auto eval = [&](double z) {
      PortfolioState y{x.x0 - transaction_cost_h(z, mp_) * s, x.x1 + z};
      const auto up = best(n.child(Move::Up), y);
      const auto dn = best(n.child(Move::Down), y);
      return PrimalSearchResult{mp_.p * up.value + (1.0 - mp_.p) * dn.value,
                                mp_.p * up.error_bound + (1.0 - mp_.p) * dn.error_bound};
    };

    if (opt_.levels <= 1) return eval(0.0);

    const double close = -x.x1;
    auto [lo, hi] = feasible_trades(n, x);
    PrimalSearchResult best_extra = eval(close);
    if (lo <= 0.0 && 0.0 <= hi) {
      const auto r = eval(0.0);
      if (r.value > best_extra.value) best_extra = r;
    }

    const int m = opt_.levels;
    std::vector<double> zs(static_cast<std::size_t>(m));
    std::vector<PrimalSearchResult> vs(static_cast<std::size_t>(m));
    std::size_t arg = 0;
    for (int pass = 0; pass <= opt_.refinement_passes; ++pass) {
      for (int i = 0; i < m; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        zs[ui] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(m - 1);
        vs[ui] = eval(zs[ui]);
      }
      arg = 0;
      for (std::size_t i = 1; i < vs.size(); ++i)
        if (vs[i].value > vs[arg].value) arg = i;
      if (pass < opt_.refinement_passes) {
        const double nlo = zs[arg == 0 ? 0 : arg - 1];
        const double nhi = zs[std::min(arg + 1, vs.size() - 1)];
        lo = nlo;
        hi = nhi;
      }
    }

    // Concavity of the value in z bounds the maximum between grid points by
    // the extensions of the neighbouring chords.
    auto chord = [&](std::size_t i, std::size_t j) -> std::optional<Line> {
      if (j >= vs.size() || zs[j] == zs[i]) return std::nullopt;
      return Line{zs[i], vs[i].value, (vs[j].value - vs[i].value) / (zs[j] - zs[i])};
    };
    double peak = vs[arg].value;
    if (arg + 1 < vs.size()) {
      const auto left = arg >= 1 ? chord(arg - 1, arg) : std::nullopt;
      const auto right = chord(arg + 1, arg + 2);
      peak = std::max(peak, bounded_peak(left, right, zs[arg], zs[arg + 1]));
    }
    if (arg >= 1) {
      const auto left = arg >= 2 ? chord(arg - 2, arg - 1) : std::nullopt;
      const auto right = chord(arg, arg + 1);
      peak = std::max(peak, bounded_peak(left, right, zs[arg - 1], zs[arg]));
    }
    double child_err = 0.0;
    for (const auto& v : vs) child_err = std::max(child_err, v.error_bound);

    PrimalSearchResult out = vs[arg];
    if (best_extra.value > out.value) out = best_extra;
    out.error_bound = std::max(0.0, peak - out.value) + 3.0 * child_err;
    return out;
  }

 private:
  // Liquidation after trading z, now and at both children without further trades.
  [[nodiscard]] double slack(PathNode n, PortfolioState x, double z) const {
    const double s = stock_price(mp_, n.node());
    const PortfolioState y{x.x0 - transaction_cost_h(z, mp_) * s, x.x1 + z};
    const double su = stock_price(mp_, n.child(Move::Up).node());
    const double sd = stock_price(mp_, n.child(Move::Down).node());
    return std::min({liquidation_value(y, s, mp_), liquidation_value(y, su, mp_), liquidation_value(y, sd, mp_)});
  }

  // {z : slack >= 0} is an interval containing the closing trade -x1 (slack
  // is concave in z); its ends are found by doubling then bisection.
  [[nodiscard]] std::pair<double, double> feasible_trades(PathNode n, PortfolioState x) const {
    const double s = stock_price(mp_, n.node());
    const double z0 = -x.x1;
    const double scale = std::max({1.0, std::abs(x.x1), std::abs(x.x0) / s});
    auto edge = [&](double dir) {
      double inside = z0;
      double step = scale;
      double outside = z0 + dir * step;
      int guard = 0;
      while (slack(n, x, outside) >= 0.0 && guard++ < 200) {
        inside = outside;
        step *= 2.0;
        outside = z0 + dir * step;
      }
      for (int it = 0; it < 200 && std::abs(outside - inside) > 1e-13 * scale; ++it) {
        const double mid = 0.5 * (inside + outside);
        (slack(n, x, mid) >= 0.0 ? inside : outside) = mid;
      }
      return inside;
    };
    return {edge(-1.0), edge(1.0)};
  }

  MarketParams mp_;
  PowerUtilityParams util_;
  PrimalSearchOptions opt_;
};

}  // namespace impl

/// Best expected utility of terminal liquidation value over admissible
/// strategies with trades on a per-node grid spanning the solvent range, plus
/// the no-trade and close-out trades, refined by zooming. A lower bound on the
/// optimal value; error_bound estimates the remaining gap from concavity.
inline PrimalSearchResult primal_utility_search(double x0, double x1, const MarketParams& mp,
                                                const PowerUtilityParams& util, PrimalSearchOptions opt = {}) {
  mp.validate();
  detail::require(mp.T <= kMaxPrimalHorizon, "primal_utility_search: T exceeds oracle cap of 2");
  const PortfolioState x{x0, x1};
  detail::require(liquidation_value(x, mp.s0, mp) > 0.0, "primal_utility_search: initial position is insolvent");
  return impl::PrimalSearch(mp, util, opt).best({0, 0}, x);
}

struct SupSearchResult {
  double value = -std::numeric_limits<double>::infinity();
  std::string source;        // "sampled", "band-high", "band-low" or "extracted"
  double best_sampled = -std::numeric_limits<double>::infinity();
  int evaluated = 0;
};

/// Lower bound on the super-replication price: the largest dual expectation
/// over random control fields, the two band-edge fields and, if given, an
/// externally supplied system (typically the DP's extracted worst case).
inline SupSearchResult price_system_sup_search(const Payoff& payoff, const MarketParams& mp, int n_samples,
                                               std::uint64_t seed, const PriceSystemTree* extracted = nullptr) {
  mp.validate();
  detail::require(mp.T <= kMaxSupSearchHorizon, "price_system_sup_search: T exceeds oracle cap of 8");
  payoff.validate(mp);
  SupSearchResult res;
  auto consider = [&](const PriceSystemTree& tree, const char* source) {
    const double v = dual_payoff_expectation(tree, payoff, mp);
    ++res.evaluated;
    if (v > res.value) {
      res.value = v;
      res.source = source;
    }
    return v;
  };
  consider(generate(mp, ControlField::band_edge(mp, true)), "band-high");
  consider(generate(mp, ControlField::band_edge(mp, false)), "band-low");
  std::mt19937_64 seeds(seed);
  for (int i = 0; i < n_samples; ++i) {
    const double v = consider(generate(mp, sample_random_controls(mp, seeds())), "sampled");
    res.best_sampled = std::max(res.best_sampled, v);
  }
  if (extracted != nullptr) consider(*extracted, "extracted");
  return res;
}

}  // namespace tcdual::oracle
