#pragma once

// Super-replication price by backward induction on the shadow price.
//
// W_k(S, .) is the value of the claim at a node with stock price S as a
// function of the shadow price A in [(1-l1) S, (1+l0) S]. One step back,
//
//   W_k(S, A) = sup { a W_{k+1}(Su, A_u) + (1-a) W_{k+1}(Sd, A_d) :
//                     a A_u + (1-a) A_d = A, 0 < a < 1, A_u, A_d in bands },
//
// which is the upper concave envelope of the union of the two child graphs:
//  - every two-point mixture across the bands lies below the envelope;
//  - a mixture of two points of the same child's graph never exceeds that
//    child's own concave value;
//  - a single child's value (a -> 0 or 1) is a limit of genuine mixtures,
//    obtained by sliding the other control, so the closed hull does not
//    overstate the supremum.
// Terminal values are affine in A, so every W_k is concave piecewise linear
// and the recursion is exact up to rounding.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "tcdual/errors.hpp"
#include "tcdual/market.hpp"
#include "tcdual/piecewise_linear.hpp"
#include "tcdual/price_system.hpp"

namespace tcdual {

/// Horizon cap for the recombining DP.
inline constexpr int kMaxSuperhedgeHorizon = 2000;

class ValueSurface {
 public:
  ValueSurface() = default;
  explicit ValueSurface(int T) : levels_(static_cast<std::size_t>(T) + 1) {
    for (int k = 0; k <= T; ++k) levels_[static_cast<std::size_t>(k)].resize(static_cast<std::size_t>(k) + 1);
  }

  [[nodiscard]] int horizon() const { return static_cast<int>(levels_.size()) - 1; }
  [[nodiscard]] const PiecewiseLinearConcave& at(NodeIndex n) const {
    return levels_.at(static_cast<std::size_t>(n.k)).at(static_cast<std::size_t>(n.j));
  }
  void set(NodeIndex n, PiecewiseLinearConcave f) {
    levels_.at(static_cast<std::size_t>(n.k)).at(static_cast<std::size_t>(n.j)) = std::move(f);
  }

  [[nodiscard]] std::size_t max_breakpoints() const {
    std::size_t m = 0;
    for (const auto& lvl : levels_)
      for (const auto& f : lvl) m = std::max(m, f.size());
    return m;
  }

 private:
  std::vector<std::vector<PiecewiseLinearConcave>> levels_;
};

/// W_T(S, A) = Y0(S) + A Y1(S) on the terminal band.
inline PiecewiseLinearConcave terminal_value(const Payoff& payoff, NodeIndex node, const MarketParams& mp) {
  detail::require(node.k == mp.T && node.j >= 0 && node.j <= mp.T, "terminal_value: node must lie at time T");
  payoff.validate(mp);
  const double s = stock_price(mp, node);
  const auto j = static_cast<std::size_t>(node.j);
  return PiecewiseLinearConcave::affine(mp.band_lo(s), mp.band_hi(s), payoff.y0[j], payoff.y1[j]);
}

namespace detail {

inline bool same_band(const PiecewiseLinearConcave& f, double lo, double hi) {
  const double tol = 1e-12 * std::max(std::abs(hi), 1.0);
  return std::abs(f.lo() - lo) <= tol && std::abs(f.hi() - hi) <= tol;
}

}  // namespace detail

/// One backward step at a node with stock price `s`.
inline PiecewiseLinearConcave backstep(const PiecewiseLinearConcave& w_up, const PiecewiseLinearConcave& w_down,
                                       double s, const MarketParams& mp) {
  const double s_up = s * mp.u;
  const double s_down = s * mp.d;
  detail::require(detail::same_band(w_up, mp.band_lo(s_up), mp.band_hi(s_up)),
                  "backstep: up-child domain does not match its band");
  detail::require(detail::same_band(w_down, mp.band_lo(s_down), mp.band_hi(s_down)),
                  "backstep: down-child domain does not match its band");
  return concave_envelope(w_up, w_down, mp.band_lo(s), mp.band_hi(s));
}

struct SuperhedgeResult {
  double pi_star = 0.0;
  ValueSurface surface;
};

inline SuperhedgeResult price(const Payoff& payoff, const MarketParams& mp, int max_horizon = kMaxSuperhedgeHorizon) {
  mp.validate();
  detail::require(mp.T <= max_horizon, "price: T exceeds the configured horizon cap");
  payoff.validate(mp);
  SuperhedgeResult res{0.0, ValueSurface(mp.T)};
  for (int j = 0; j <= mp.T; ++j) res.surface.set({mp.T, j}, terminal_value(payoff, {mp.T, j}, mp));
  for (int k = mp.T - 1; k >= 0; --k) {
    for (int j = 0; j <= k; ++j) {
      const double s = stock_price(mp, {k, j});
      res.surface.set({k, j}, backstep(res.surface.at({k + 1, j + 1}), res.surface.at({k + 1, j}), s, mp));
    }
  }
  res.pi_star = res.surface.at({0, 0}).argmax().w;
  return res;
}

/// A mixture (alpha, a_up, a_down) realising a value of the one-step supremum.
struct Mixture {
  double alpha = 0.0;
  double a_up = 0.0;
  double a_down = 0.0;
  double value = 0.0;
};

namespace detail {

/// Best mixture at shadow price `a`: the maximum over breakpoint pairs that
/// straddle `a` together with each child's own value at `a`. Same value as
/// the envelope, found without building it. Degenerate optima (all weight on
/// one child) are nudged to a strictly positive weight `delta` <= 1e-9 on the
/// other child so that the resulting price system stays strictly positive.
inline Mixture supporting_mixture(const PiecewiseLinearConcave& f_up, const PiecewiseLinearConcave& f_down, double a) {
  constexpr double kDegenerate = 1e-12;
  constexpr double kNudge = 1e-9;
  Mixture pair{};
  bool have_pair = false;
  for (const Breakpoint& bu : f_up.breakpoints()) {
    for (const Breakpoint& bd : f_down.breakpoints()) {
      if (bu.a == bd.a || a < std::min(bu.a, bd.a) || a > std::max(bu.a, bd.a)) continue;
      const double alpha = (a - bd.a) / (bu.a - bd.a);
      if (alpha <= kDegenerate || alpha >= 1.0 - kDegenerate) continue;
      const double v = alpha * bu.w + (1.0 - alpha) * bd.w;
      if (!have_pair || v > pair.value) {
        pair = {alpha, bu.a, bd.a, v};
        have_pair = true;
      }
    }
  }
  const double in_up = f_up.contains(a) ? f_up(a) : -std::numeric_limits<double>::infinity();
  const double in_down = f_down.contains(a) ? f_down(a) : -std::numeric_limits<double>::infinity();
  const double single = std::max(in_up, in_down);
  const double scale = std::max({std::abs(single), std::abs(pair.value), 1.0});
  if (have_pair && pair.value >= single - 1e-12 * scale) return pair;
  ensure(std::isfinite(single), "supporting_mixture: no feasible mixture");

  if (in_up >= in_down) {
    // All weight on the up child; borrow delta from the lowest down price.
    const double ad = f_down.lo();
    const double delta = std::min(kNudge, 0.5 * (f_up.hi() - a) / (f_up.hi() - ad));
    const double au = (a - delta * ad) / (1.0 - delta);
    return {1.0 - delta, au, ad, (1.0 - delta) * f_up(au) + delta * f_down(ad)};
  }
  const double au = f_up.hi();
  const double delta = std::min(kNudge, 0.5 * (a - f_down.lo()) / (au - f_down.lo()));
  const double ad = (a - delta * au) / (1.0 - delta);
  return {delta, au, ad, delta * f_up(au) + (1.0 - delta) * f_down(ad)};
}

}  // namespace detail

/// Forward trace of the DP optimum: starts at the smallest maximiser of W_0
/// and follows the supporting mixtures. The returned system's payoff
/// expectation equals pi_star up to the 1e-9 nudges at degenerate nodes.
inline PriceSystemTree extract_worst_case_price_system(const ValueSurface& surface, const MarketParams& mp) {
  mp.validate();
  detail::require(surface.horizon() == mp.T, "extract_worst_case_price_system: surface horizon must equal T");
  detail::require(mp.T <= kMaxPathHorizon, "extract_worst_case_price_system: T exceeds path-tree cap of 24");
  ControlField controls(mp.T);
  controls.a0 = surface.at({0, 0}).argmax().a;
  std::vector<double> shadow(path_tree_size(mp.T), 0.0);
  shadow[0] = controls.a0;
  for (int k = 0; k < mp.T; ++k) {
    for_each_path(k, [&](PathNode n) {
      const int j = n.ups();
      const Mixture m =
          detail::supporting_mixture(surface.at({k + 1, j + 1}), surface.at({k + 1, j}), shadow[n.id()]);
      controls.a_up[n.id()] = m.a_up;
      controls.a_down[n.id()] = m.a_down;
      shadow[n.child(Move::Up).id()] = m.a_up;
      shadow[n.child(Move::Down).id()] = m.a_down;
    });
  }
  return generate(mp, controls);
}

}  // namespace tcdual
