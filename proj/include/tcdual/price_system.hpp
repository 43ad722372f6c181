#pragma once

// Price systems on the binomial path tree. A price system is a pair of
// positive P-martingales (rho0, rho1) whose ratio A = rho1 / rho0, the shadow
// price, stays inside the bid-ask band [(1-l1) S, (1+l0) S] at every node.
//
// Systems are generated forward from a control field: at each node the
// shadow prices (a_up, a_down) of the two children are chosen in their bands
// so that a_down <= A <= a_up (or the reverse). The change of measure
//
//   up:   rho0' = rho0 / p       * (A - a_down) / (a_up - a_down)
//   down: rho0' = rho0 / (1 - p) * (a_up - A)   / (a_up - a_down)
//
// keeps rho0 a martingale, and rho1 = rho0 * A is one too because A is the
// corresponding barycentre of (a_up, a_down).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "tcdual/errors.hpp"
#include "tcdual/market.hpp"

namespace tcdual {

/// Child shadow-price targets per interior path node, plus the root value.
struct ControlField {
  int T = 0;
  double a0 = 0.0;
  std::vector<double> a_up;    // indexed by PathNode::id(), k = 0..T-1
  std::vector<double> a_down;

  explicit ControlField(int horizon = 0) : T(horizon) {
    detail::require(T >= 0 && T <= kMaxPathHorizon, "control field: horizon out of range");
    const std::size_t n = (std::size_t{1} << T) - 1;
    a_up.assign(n, 0.0);
    a_down.assign(n, 0.0);
  }

  /// Every shadow price pinned to the same band edge (R == 1+l0 or R == 1-l1).
  static ControlField band_edge(const MarketParams& mp, bool high) {
    ControlField c(mp.T);
    auto edge = [&](double s) { return high ? mp.band_hi(s) : mp.band_lo(s); };
    c.a0 = edge(mp.s0);
    for (int k = 0; k < mp.T; ++k) {
      for_each_path(k, [&](PathNode n) {
        const NodeIndex x = n.node();
        c.a_up[n.id()] = edge(stock_price(mp, {k + 1, x.j + 1}));
        c.a_down[n.id()] = edge(stock_price(mp, {k + 1, x.j}));
      });
    }
    return c;
  }
};

class PriceSystemTree {
 public:
  PriceSystemTree() = default;
  explicit PriceSystemTree(int T) : T_(T) {
    detail::require(T >= 0 && T <= kMaxPathHorizon, "price system: horizon out of range (max 24)");
    rho0_.assign(path_tree_size(T), 0.0);
    rho1_.assign(path_tree_size(T), 0.0);
  }

  [[nodiscard]] int horizon() const { return T_; }
  [[nodiscard]] std::size_t size() const { return rho0_.size(); }

  [[nodiscard]] double rho0(PathNode n) const { return rho0_.at(n.id()); }
  [[nodiscard]] double rho1(PathNode n) const { return rho1_.at(n.id()); }
  [[nodiscard]] double shadow_price(PathNode n) const { return rho1(n) / rho0(n); }
  [[nodiscard]] double band_ratio(PathNode n, const MarketParams& mp) const {
    return shadow_price(n) / stock_price(mp, n.node());
  }

  void set(PathNode n, double r0, double r1) {
    rho0_.at(n.id()) = r0;
    rho1_.at(n.id()) = r1;
  }

 private:
  int T_ = 0;
  std::vector<double> rho0_;
  std::vector<double> rho1_;
};

namespace detail {

inline bool within(double x, double lo, double hi, double slack) { return x >= lo - slack && x <= hi + slack; }

}  // namespace detail

/// Builds the price system driven by `controls`. Throws PreconditionError if a
/// control leaves its band or fails the sandwich min <= A <= max.
inline PriceSystemTree generate(const MarketParams& mp, const ControlField& controls, double rel_slack = 1e-12) {
  mp.validate();
  detail::require(controls.T == mp.T, "generate: control field horizon must equal T");
  detail::require(mp.T <= kMaxPathHorizon, "generate: T exceeds path-tree cap of 24");
  PriceSystemTree tree(mp.T);
  {
    const double s = mp.s0;
    detail::require(detail::within(controls.a0, mp.band_lo(s), mp.band_hi(s), rel_slack * s),
                    "generate: root shadow price outside band");
    tree.set({0, 0}, 1.0, controls.a0);
  }
  std::vector<double> shadow(path_tree_size(mp.T), 0.0);
  shadow[0] = controls.a0;
  for (int k = 0; k < mp.T; ++k) {
    for_each_path(k, [&](PathNode n) {
      const NodeIndex x = n.node();
      const double su = stock_price(mp, {k + 1, x.j + 1});
      const double sd = stock_price(mp, {k + 1, x.j});
      const double a = shadow[n.id()];
      const double au = controls.a_up[n.id()];
      const double ad = controls.a_down[n.id()];
      const double slack = rel_slack * std::max(su, a);
      detail::require(detail::within(au, mp.band_lo(su), mp.band_hi(su), rel_slack * su),
                      "generate: a_up outside the up-child band");
      detail::require(detail::within(ad, mp.band_lo(sd), mp.band_hi(sd), rel_slack * sd),
                      "generate: a_down outside the down-child band");
      detail::require(std::min(au, ad) - slack <= a && a <= std::max(au, ad) + slack,
                      "generate: shadow price not between child targets");
      const double r0 = tree.rho0(n);
      double w_up = 1.0;
      double w_down = 1.0;
      if (std::abs(au - ad) > slack) {
        w_up = (a - ad) / (au - ad) / mp.p;
        w_down = (au - a) / (au - ad) / (1.0 - mp.p);
      } else {
        detail::require(std::abs(a - au) <= slack, "generate: coincident child targets must equal the shadow price");
      }
      const PathNode up = n.child(Move::Up);
      const PathNode dn = n.child(Move::Down);
      tree.set(up, r0 * w_up, r0 * w_up * au);
      tree.set(dn, r0 * w_down, r0 * w_down * ad);
      shadow[up.id()] = au;
      shadow[dn.id()] = ad;
    });
  }
  return tree;
}

struct Violation {
  enum class Kind { Positivity, Normalization, MartingaleRho0, MartingaleRho1, Band };
  Kind kind;
  PathNode node;
  double magnitude;  // relative error, or band excess in currency
};

inline const char* to_string(Violation::Kind k) {
  switch (k) {
    case Violation::Kind::Positivity: return "positivity";
    case Violation::Kind::Normalization: return "normalization";
    case Violation::Kind::MartingaleRho0: return "martingale-rho0";
    case Violation::Kind::MartingaleRho1: return "martingale-rho1";
    case Violation::Kind::Band: return "band";
  }
  return "unknown";
}

struct ValidationReport {
  std::vector<Violation> violations;
  double max_martingale_error = 0.0;  // largest relative one-step error seen
  double min_band_slack = 0.0;        // smallest distance inside the band, / S

  [[nodiscard]] bool ok() const { return violations.empty(); }
};

/// Checks positivity, one-step martingale identities (relative `tol`), the
/// band constraint at every k = 0..T (absolute slack band_slack * S) and
/// rho0(root) == 1.
inline ValidationReport validate(const PriceSystemTree& tree, const MarketParams& mp, double tol = 1e-10,
                                 double band_slack = 1e-12) {
  detail::require(tree.horizon() == mp.T, "validate: tree horizon must equal T");
  ValidationReport rep;
  rep.min_band_slack = std::numeric_limits<double>::infinity();
  using K = Violation::Kind;
  if (std::abs(tree.rho0({0, 0}) - 1.0) > tol) {
    rep.violations.push_back({K::Normalization, {0, 0}, std::abs(tree.rho0({0, 0}) - 1.0)});
  }
  for (int k = 0; k <= mp.T; ++k) {
    for_each_path(k, [&](PathNode n) {
      const double r0 = tree.rho0(n);
      const double r1 = tree.rho1(n);
      if (!(r0 > 0.0) || !(r1 > 0.0)) {
        rep.violations.push_back({K::Positivity, n, std::min(r0, r1)});
        return;
      }
      const double s = stock_price(mp, n.node());
      const double a = r1 / r0;
      const double slack = std::min(a - mp.band_lo(s), mp.band_hi(s) - a);
      rep.min_band_slack = std::min(rep.min_band_slack, slack / s);
      if (slack < -band_slack * s) rep.violations.push_back({K::Band, n, -slack});
      if (k < mp.T) {
        const PathNode up = n.child(Move::Up);
        const PathNode dn = n.child(Move::Down);
        const double e0 = std::abs(mp.p * tree.rho0(up) + (1.0 - mp.p) * tree.rho0(dn) - r0) / r0;
        const double e1 = std::abs(mp.p * tree.rho1(up) + (1.0 - mp.p) * tree.rho1(dn) - r1) / r1;
        rep.max_martingale_error = std::max({rep.max_martingale_error, e0, e1});
        if (e0 > tol) rep.violations.push_back({K::MartingaleRho0, n, e0});
        if (e1 > tol) rep.violations.push_back({K::MartingaleRho1, n, e1});
      }
    });
  }
  return rep;
}

/// Price system induced by the measure with i.i.d. up-probability q_up:
/// rho0 is its density process and rho1 = rho0 * S (band ratio 1).
inline PriceSystemTree from_martingale_measure(const MarketParams& mp, double q_up) {
  mp.validate();
  detail::require(0.0 < q_up && q_up < 1.0, "from_martingale_measure: require 0 < q_up < 1");
  PriceSystemTree tree(mp.T);
  const double wu = q_up / mp.p;
  const double wd = (1.0 - q_up) / (1.0 - mp.p);
  for (int k = 0; k <= mp.T; ++k) {
    for_each_path(k, [&](PathNode n) {
      const int m = n.ups();
      const double r0 = std::pow(wu, m) * std::pow(wd, k - m);
      tree.set(n, r0, r0 * stock_price(mp, n.node()));
    });
  }
  return tree;
}

/// E[Y0 rho0(T) + Y1 rho1(T)] under P.
inline double dual_payoff_expectation(const PriceSystemTree& tree, const Payoff& payoff, const MarketParams& mp) {
  detail::require(tree.horizon() == mp.T, "dual_payoff_expectation: tree horizon must equal T");
  payoff.validate(mp);
  double total = 0.0;
  for_each_path(mp.T, [&](PathNode n) {
    const auto j = static_cast<std::size_t>(n.ups());
    total += prefix_probability(mp, n) * (payoff.y0[j] * tree.rho0(n) + payoff.y1[j] * tree.rho1(n));
  });
  return total;
}

/// Random control field, deterministic in `seed`. Child targets are uniform in
/// their bands; a_down is redrawn on the far side of A when the first draw
/// breaks the sandwich.
inline ControlField sample_random_controls(const MarketParams& mp, std::uint64_t seed) {
  mp.validate();
  detail::require(mp.T <= kMaxPathHorizon, "sample_random_controls: T exceeds path-tree cap of 24");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  ControlField c(mp.T);
  c.a0 = draw(mp.band_lo(mp.s0), mp.band_hi(mp.s0));
  std::vector<double> shadow(path_tree_size(mp.T), 0.0);
  shadow[0] = c.a0;
  for (int k = 0; k < mp.T; ++k) {
    for_each_path(k, [&](PathNode n) {
      const NodeIndex x = n.node();
      const double su = stock_price(mp, {k + 1, x.j + 1});
      const double sd = stock_price(mp, {k + 1, x.j});
      const double lo_u = mp.band_lo(su), hi_u = mp.band_hi(su);
      const double lo_d = mp.band_lo(sd), hi_d = mp.band_hi(sd);
      const double a = shadow[n.id()];
      double au = draw(lo_u, hi_u);
      // a_up below A needs a_down above A, impossible when the down band ends below A.
      if (au <= a && hi_d < a) au = draw(std::max(lo_u, a), hi_u);
      double ad = draw(lo_d, hi_d);
      if (!(std::min(au, ad) <= a && a <= std::max(au, ad))) {
        ad = au > a ? draw(lo_d, std::min(hi_d, a)) : draw(std::max(lo_d, a), hi_d);
      }
      if (au == a && ad != a) {
        // Zero-weight branch; move a_up strictly above A.
        au = draw(std::max(lo_u, a), hi_u);
        ad = draw(lo_d, std::min(hi_d, a));
      }
      c.a_up[n.id()] = au;
      c.a_down[n.id()] = ad;
      shadow[n.child(Move::Up).id()] = au;
      shadow[n.child(Move::Down).id()] = ad;
    });
  }
  return c;
}

}  // namespace tcdual
