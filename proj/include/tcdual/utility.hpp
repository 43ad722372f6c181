#pragma once

// Power-utility maximisation through the dual dynamic program.
//
// For U(x) = x^g / g the dual value reduces to the normalised curves
//
//   Vhat_T(A) = 1,
//   Vhat_k(A) = inf { p^(1-mu) a^mu Vhat_{k+1}(A_u) + (1-p)^(1-mu) (1-a)^mu Vhat_{k+1}(A_d) }
//
// over 0 < a < 1 and ratios A_u, A_d in [1-l1, 1+l0] with a u A_u + (1-a) d A_d = A,
// and V(x0, x1) = (1/g) inf_R (x0 + x1 S R)^g Vhat_0(R)^(1-g) over the same band.
//
// Curves are tabulated on a uniform grid and interpolated linearly. The inner
// infimum scans a over its feasible range [(A/hi - d)/(u-d), (A/lo - d)/(u-d)],
// minimises over A_u for each a (A_d follows from the constraint), and polishes
// the best a by golden-section search.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "tcdual/errors.hpp"
#include "tcdual/market.hpp"
#include "tcdual/power_utility.hpp"
#include "tcdual/price_system.hpp"

namespace tcdual {

struct VhatOptions {
  int grid_size = 2001;      // abscissae on [1-l1, 1+l0]
  int alpha_grid = 512;      // coarse scan of the mixing weight
  int shadow_scan = 9;       // coarse scan of A_u for each weight
  double polish_tol = 1e-10; // golden-section tolerance, relative to the bracket scale
  double alpha_eps = 1e-9;   // weights confined to [eps, 1-eps]
};

/// Vhat_k tabulated on a uniform grid over [lo, hi]. An optional knot moves the
/// nearest interior node onto a given abscissa (the edge of the flat region),
/// so interpolation never straddles the kink there.
class VhatCurve {
 public:
  VhatCurve() = default;
  VhatCurve(int k, double lo, double hi, std::vector<double> values,
            double knot = std::numeric_limits<double>::quiet_NaN())
      : k_(k), lo_(lo), hi_(hi), values_(std::move(values)) {
    detail::require(!values_.empty(), "vhat curve: empty");
    detail::require(lo <= hi, "vhat curve: inverted band");
    detail::require(lo < hi || values_.size() == 1, "vhat curve: a point band holds one value");
    step_ = values_.size() > 1 ? (hi - lo) / static_cast<double>(values_.size() - 1) : 0.0;
    if (values_.size() >= 3 && knot > lo && knot < hi) {
      const auto i = std::lround((knot - lo) / step_);
      knot_index_ = static_cast<std::size_t>(std::clamp<long>(i, 1, static_cast<long>(values_.size()) - 2));
      knot_ = knot;
    }
  }

  [[nodiscard]] int k() const { return k_; }
  [[nodiscard]] double lo() const { return lo_; }
  [[nodiscard]] double hi() const { return hi_; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] const std::vector<double>& values() const { return values_; }
  [[nodiscard]] double abscissa(std::size_t i) const {
    if (i == knot_index_) return knot_;
    return i + 1 == values_.size() ? hi_ : lo_ + step_ * static_cast<double>(i);
  }
  [[nodiscard]] std::vector<double> grid() const {
    std::vector<double> g(values_.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = abscissa(i);
    return g;
  }

  /// Linear interpolation; arguments outside the band are clamped.
  [[nodiscard]] double eval_clamped(double a) const {
    if (values_.size() == 1 || a <= lo_) return values_.front();
    if (a >= hi_) return values_.back();
    auto i = static_cast<std::size_t>((a - lo_) / step_);
    if (i >= values_.size() - 1) i = values_.size() - 2;
    if (i > 0 && a < abscissa(i)) --i;
    else if (i + 2 < values_.size() && a > abscissa(i + 1)) ++i;
    const double x0 = abscissa(i);
    const double f = (a - x0) / (abscissa(i + 1) - x0);
    return values_[i] + f * (values_[i + 1] - values_[i]);
  }

  [[nodiscard]] double operator()(double a) const {
    const double slack = 1e-12 * std::max(1.0, hi_);
    detail::require(a >= lo_ - slack && a <= hi_ + slack, "vhat curve: argument outside band");
    return eval_clamped(a);
  }

 private:
  int k_ = 0;
  double lo_ = 1.0;
  double hi_ = 1.0;
  double step_ = 0.0;
  std::size_t knot_index_ = std::numeric_limits<std::size_t>::max();
  double knot_ = 0.0;
  std::vector<double> values_;
};

/// p^(1-mu) a^mu + (1-p)^(1-mu) (1-a)^mu; minimum 1 at a = p.
inline double f_alpha(double alpha, double p, double mu) {
  detail::require(alpha > 0.0 && alpha < 1.0, "f_alpha: require 0 < alpha < 1");
  return std::pow(p, 1.0 - mu) * std::pow(alpha, mu) + std::pow(1.0 - p, 1.0 - mu) * std::pow(1.0 - alpha, mu);
}

/// Band-ratio interval on which Vhat_k == 1. Empty when lo > hi.
struct FlatRegion {
  double lo = 0.0;
  double hi = 0.0;
  [[nodiscard]] bool empty() const { return lo > hi; }
  [[nodiscard]] bool contains(double a) const { return a >= lo && a <= hi; }
};

inline FlatRegion flat_region_bounds(const MarketParams& mp, int k) {
  detail::require(k >= 0 && k <= mp.T, "flat_region_bounds: k out of range");
  const double m = mp.drift();
  const double lo = 1.0 - mp.lambda_sell;
  const double hi = 1.0 + mp.lambda_buy;
  const double grow = std::pow(m, mp.T - k);
  if (m > 1.0) return {lo * grow, hi};
  if (m < 1.0) return {lo, hi * grow};
  return {lo, hi};
}


namespace detail {

struct Minimum {
  double x = 0.0;
  double f = std::numeric_limits<double>::infinity();
};

/// Golden-section search on [l, r]; returns the best point evaluated.
template <typename F>
Minimum golden_min(F&& f, double l, double r, double tol) {
  constexpr double kInvPhi = 0.6180339887498949;
  const double scale = std::max({1.0, std::abs(l), std::abs(r)});
  double x1 = r - kInvPhi * (r - l);
  double x2 = l + kInvPhi * (r - l);
  double f1 = f(x1);
  double f2 = f(x2);
  Minimum best = f1 <= f2 ? Minimum{x1, f1} : Minimum{x2, f2};
  while (r - l > tol * scale) {
    if (f1 <= f2) {
      r = x2;
      x2 = x1;
      f2 = f1;
      x1 = r - kInvPhi * (r - l);
      f1 = f(x1);
      if (f1 < best.f) best = {x1, f1};
    } else {
      l = x1;
      x1 = x2;
      f1 = f2;
      x2 = l + kInvPhi * (r - l);
      f2 = f(x2);
      if (f2 < best.f) best = {x2, f2};
    }
  }
  return best;
}

/// Minimum of f over [l, r]: uniform scan of n points, then golden section
/// on the bracket around the best one.
template <typename F>
Minimum scan_then_polish(F&& f, double l, double r, int n, double tol) {
  if (l == r) return {l, f(l)};
  Minimum best;
  int arg = 0;
  auto at = [&](int i) { return i + 1 == n ? r : l + (r - l) * i / (n - 1); };
  for (int i = 0; i < n; ++i) {
    const double v = f(at(i));
    if (v < best.f) {
      best = {at(i), v};
      arg = i;
    }
  }
  const Minimum g = golden_min(f, at(std::max(arg - 1, 0)), at(std::min(arg + 1, n - 1)), tol);
  return g.f < best.f ? g : best;
}

/// The inner infimum defining Vhat_k(A) from g = Vhat_{k+1}. With `extended`
/// set, g is continued flat beyond the band edge it decreases towards and the
/// ratio constraint on that side is dropped.
class VhatInf {
 public:
  VhatInf(const VhatCurve& next, const MarketParams& mp, const PowerUtilityParams& util, const VhatOptions& opt,
          bool extended)
      : g_(next),
        u_(mp.u),
        d_(mp.d),
        p_(mp.p),
        mu_(util.mu),
        cu0_(std::pow(mp.p, 1.0 - util.mu)),
        cd0_(std::pow(1.0 - mp.p, 1.0 - util.mu)),
        lo_(next.lo()),
        hi_(next.hi()),
        bound_lo_(next.lo()),
        bound_hi_(next.hi()),
        opt_(opt) {
    if (extended && mp.drift() > 1.0) bound_hi_ = std::numeric_limits<double>::infinity();
    if (extended && mp.drift() < 1.0) bound_lo_ = 0.0;
  }

  [[nodiscard]] double operator()(double a) const {
    double amin = std::max(opt_.alpha_eps, (a / bound_hi_ - d_) / (u_ - d_));
    double amax = std::min(1.0 - opt_.alpha_eps, (a / bound_lo_ - d_) / (u_ - d_));
    if (amin > amax) {
      ensure(amin - amax <= 1e-12, "backstep_vhat: empty feasible set at A = " + std::to_string(a));
      amax = amin;
    }
    auto h = [&](double al) { return inner(al, a); };
    double best = scan_then_polish(h, amin, amax, std::max(2, opt_.alpha_grid), opt_.polish_tol).f;
    if (p_ > amin && p_ < amax) best = std::min(best, h(p_));
    // a = p with both ratios at A / m costs exactly g(A / m); this pins the
    // flat region to 1 without relying on the scans.
    const double carry = a / (p_ * u_ + (1.0 - p_) * d_);
    if (carry >= bound_lo_ && carry <= bound_hi_) best = std::min(best, g(carry));
    return best;
  }

 private:
  [[nodiscard]] double g(double x) const { return g_.eval_clamped(std::clamp(x, lo_, hi_)); }

  // Infimum over A_u at a fixed weight; A_d follows from the constraint.
  [[nodiscard]] double inner(double al, double a) const {
    const double cu = cu0_ * std::pow(al, mu_);
    const double cd = cd0_ * std::pow(1.0 - al, mu_);
    const double wu = al * u_;
    const double wd = (1.0 - al) * d_;
    const double xlo = std::max(bound_lo_, (a - wd * bound_hi_) / wu);
    double xhi = std::min(bound_hi_, (a - wd * bound_lo_) / wu);
    if (xlo > xhi) {
      if (xlo - xhi > 1e-12 * std::max(1.0, xhi)) return std::numeric_limits<double>::infinity();
      xhi = xlo;
    }
    auto obj = [&](double x) { return cu * g(x) + cd * g(std::clamp((a - wu * x) / wd, bound_lo_, bound_hi_)); };
    return scan_then_polish(obj, xlo, xhi, std::max(3, opt_.shadow_scan), opt_.polish_tol).f;
  }

  const VhatCurve& g_;
  double u_, d_, p_, mu_, cu0_, cd0_, lo_, hi_, bound_lo_, bound_hi_;
  VhatOptions opt_;
};

inline VhatCurve backstep_vhat_impl(const VhatCurve& next, const MarketParams& mp, const PowerUtilityParams& util,
                                    const VhatOptions& opt, bool extended) {
  mp.validate();
  require(next.k() >= 1, "backstep_vhat: next curve must have k >= 1");
  require(next.lo() == 1.0 - mp.lambda_sell && next.hi() == 1.0 + mp.lambda_buy,
          "backstep_vhat: curve band does not match the market");
  const double m = mp.drift();
  const FlatRegion flat = flat_region_bounds(mp, next.k() - 1);
  const double knot = m > 1.0 ? flat.lo : m < 1.0 ? flat.hi : std::numeric_limits<double>::quiet_NaN();
  const VhatCurve shape(next.k() - 1, next.lo(), next.hi(), std::vector<double>(next.size(), 1.0), knot);
  std::vector<double> out(next.size(), 1.0);
  if (m != 1.0) {
    const VhatInf solve(next, mp, util, opt, extended);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = solve(shape.abscissa(i));
  }
  return VhatCurve(next.k() - 1, next.lo(), next.hi(), std::move(out), knot);
}

}  // namespace detail

/// Vhat_T == 1; with a zero-width band the curve is a single point.
inline VhatCurve terminal_vhat(const MarketParams& mp, int grid_size = VhatOptions{}.grid_size) {
  mp.validate();
  detail::require(grid_size >= 3, "vhat: grid_size must be >= 3");
  const double lo = 1.0 - mp.lambda_sell;
  const double hi = 1.0 + mp.lambda_buy;
  const auto n = static_cast<std::size_t>(lo < hi ? grid_size : 1);
  return VhatCurve(mp.T, lo, hi, std::vector<double>(n, 1.0));
}

inline VhatCurve backstep_vhat(const VhatCurve& next, const MarketParams& mp, const PowerUtilityParams& util,
                               const VhatOptions& opt = {}) {
  return detail::backstep_vhat_impl(next, mp, util, opt, false);
}

/// Same step with g replaced by its flat continuation past the band. Agreement
/// with backstep_vhat shows that clipping the ratios to the band loses nothing.
inline VhatCurve backstep_vhat_extended(const VhatCurve& next, const MarketParams& mp, const PowerUtilityParams& util,
                                        const VhatOptions& opt = {}) {
  return detail::backstep_vhat_impl(next, mp, util, opt, true);
}

/// result[k] is Vhat_k for k = 0..T.
inline std::vector<VhatCurve> vhat_recursion(const MarketParams& mp, const PowerUtilityParams& util,
                                             const VhatOptions& opt = {}) {
  std::vector<VhatCurve> curves(static_cast<std::size_t>(mp.T) + 1);
  curves.back() = terminal_vhat(mp, opt.grid_size);
  for (int k = mp.T - 1; k >= 0; --k) {
    const auto i = static_cast<std::size_t>(k);
    curves[i] = backstep_vhat(curves[i + 1], mp, util, opt);
  }
  return curves;
}

/// Worst deviations from the structural properties of the curves; zero when
/// a property holds exactly.
struct VhatAudit {
  double below_one = 0.0;        // max of 1 - Vhat
  double k_increase = 0.0;       // max of Vhat_{k+1} - Vhat_k
  double wrong_direction = 0.0;  // largest grid step against the drift-determined direction

  [[nodiscard]] bool ok(double tol = 1e-9) const {
    return below_one <= tol && k_increase <= tol && wrong_direction <= tol;
  }
};

inline VhatAudit audit_vhat(const std::vector<VhatCurve>& curves, const MarketParams& mp) {
  VhatAudit a;
  const double m = mp.drift();
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& v = curves[k].values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      a.below_one = std::max(a.below_one, 1.0 - v[i]);
      if (k + 1 < curves.size()) a.k_increase = std::max(a.k_increase, curves[k + 1].values()[i] - v[i]);
      if (i == 0) continue;
      if (m > 1.0) a.wrong_direction = std::max(a.wrong_direction, v[i] - v[i - 1]);
      if (m < 1.0) a.wrong_direction = std::max(a.wrong_direction, v[i - 1] - v[i]);
    }
  }
  return a;
}

namespace detail {

inline void check_vhat0(const VhatCurve& vhat0, const MarketParams& mp) {
  require(vhat0.k() == 0, "value_function: expected the k = 0 curve");
  require(vhat0.lo() == 1.0 - mp.lambda_sell && vhat0.hi() == 1.0 + mp.lambda_buy,
          "value_function: curve band does not match the market");
}

}  // namespace detail

/// Minimising band ratio R of (x0 + x1 S R)^g Vhat_0(R)^(1-g).
inline double optimal_ratio(double x0, double x1, const MarketParams& mp, const PowerUtilityParams& util,
                            const VhatCurve& vhat0) {
  mp.validate();
  detail::require(liquidation_value({x0, x1}, mp.s0, mp) > 0.0, "value_function: require x0 - h(-x1) S > 0");
  detail::check_vhat0(vhat0, mp);
  const double m = mp.drift();
  if (m > 1.0 && x1 <= 0.0) return vhat0.hi();
  if (m < 1.0 && x1 >= 0.0) return vhat0.lo();
  auto obj = [&](double r) { return std::pow(x0 + x1 * mp.s0 * r, util.gamma) * std::pow(vhat0(r), 1.0 - util.gamma); };
  std::size_t arg = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < vhat0.size(); ++i) {
    const double v = obj(vhat0.abscissa(i));
    if (v < best) {
      best = v;
      arg = i;
    }
  }
  if (vhat0.size() == 1) return vhat0.abscissa(0);
  const auto m1 = detail::golden_min(obj, vhat0.abscissa(arg == 0 ? 0 : arg - 1),
                                     vhat0.abscissa(std::min(arg + 1, vhat0.size() - 1)), 1e-13);
  return m1.f < best ? m1.x : vhat0.abscissa(arg);
}

/// V(x0, x1) = (1/g) inf_R (x0 + x1 S R)^g Vhat_0(R)^(1-g).
inline double value_function(double x0, double x1, const MarketParams& mp, const PowerUtilityParams& util,
                             const VhatCurve& vhat0) {
  const double r = optimal_ratio(x0, x1, mp, util, vhat0);
  return std::pow(x0 + x1 * mp.s0 * r, util.gamma) * std::pow(vhat0(r), 1.0 - util.gamma) / util.gamma;
}

/// Dual multiplier ((x0 + x1 S R) / Vhat_0(R))^(1/(mu-1)).
inline double optimal_xi(double r, double x0, double x1, const MarketParams& mp, const PowerUtilityParams& util,
                         const VhatCurve& vhat0) {
  const double base = x0 + x1 * mp.s0 * r;
  detail::require(base > 0.0, "optimal_xi: require x0 + x1 S R > 0");
  return std::pow(base / vhat0(r), 1.0 / (util.mu - 1.0));
}

struct DualityCheck {
  double primal = 0.0;  // E[U(liquidation value at T)]
  double dual = 0.0;    // E[U*(xi rho0_T)] + x1 xi E[rho1_T] + x0 xi
  bool holds = false;
  explicit operator bool() const { return holds; }
};

/// Weak duality: expected utility of any admissible strategy is bounded by the
/// dual functional of any price system and multiplier.
inline DualityCheck verify_duality_bound(const Strategy& strat, const PriceSystemTree& tree, double xi, double x0,
                                         double x1, const MarketParams& mp, const PowerUtilityParams& util,
                                         double tol = 1e-9) {
  mp.validate();
  detail::require(xi > 0.0, "verify_duality_bound: require xi > 0");
  detail::require(tree.horizon() == mp.T, "verify_duality_bound: tree horizon must equal T");
  detail::require(is_admissible(strat, {x0, x1}, mp), "verify_duality_bound: strategy is not admissible");
  detail::require(validate(tree, mp).ok(), "verify_duality_bound: price system is not valid");
  DualityCheck out;
  double e_rho1 = 0.0;
  double e_conj = 0.0;
  double e_util = 0.0;
  for_each_path(mp.T, [&](PathNode leaf) {
    const PathWord w = PathWord::from_node(leaf);
    const double pr = path_probability(mp, w);
    const auto states = portfolio_evolution({x0, x1}, strat, w, mp);
    const double liq = std::max(0.0, liquidation_value(states.back(), stock_price(mp, leaf.node()), mp));
    e_util += pr * util.utility(liq);
    e_conj += pr * util.conjugate(xi * tree.rho0(leaf));
    e_rho1 += pr * tree.rho1(leaf);
  });
  out.primal = e_util;
  out.dual = e_conj + x1 * xi * e_rho1 + x0 * xi;
  out.holds = out.primal <= out.dual + tol * std::max(1.0, std::abs(out.dual));
  return out;
}

/// Utility of closing the share position at time 0 at the adverse band edge
/// and holding cash, valid as the optimum when the drift sign conditions hold.
inline double hold_policy_value(double x0, double x1, const MarketParams& mp, const PowerUtilityParams& util) {
  mp.validate();
  const double m = mp.drift();
  const double lo = 1.0 - mp.lambda_sell;
  const double hi = 1.0 + mp.lambda_buy;
  const double grow = std::pow(m, mp.T);
  double r = 0.0;
  if (m > 1.0) {
    detail::require(x1 <= 0.0, "hold_policy_value: drift > 1 requires x1 <= 0");
    detail::require(lo * grow <= hi, "hold_policy_value: (1-l1)(pu+(1-p)d)^T <= 1+l0 fails");
    r = hi;
  } else if (m < 1.0) {
    detail::require(x1 >= 0.0, "hold_policy_value: drift < 1 requires x1 >= 0");
    detail::require(hi * grow >= lo, "hold_policy_value: (1+l0)(pu+(1-p)d)^T >= 1-l1 fails");
    r = lo;
  } else {
    r = x1 < 0.0 ? hi : lo;
  }
  const double w = x0 + x1 * mp.s0 * r;
  detail::require(w > 0.0, "hold_policy_value: initial position is insolvent");
  return util.utility(w);
}

/// Price system under which holding is dual-optimal: rho0 == 1 and the
/// shadow ratio shrinks by the drift each step, A_k = R0 S_k / m^k with R0
/// the band edge matching the drift sign.
inline PriceSystemTree hold_price_system(const MarketParams& mp) {
  mp.validate();
  const double m = mp.drift();
  const double r0 = m >= 1.0 ? 1.0 + mp.lambda_buy : 1.0 - mp.lambda_sell;
  const double grow = std::pow(m, mp.T);
  detail::require(m >= 1.0 ? (1.0 - mp.lambda_sell) * grow <= r0 : (1.0 + mp.lambda_buy) * grow >= r0,
                  "hold_price_system: flat region at time 0 is empty");
  ControlField c(mp.T);
  c.a0 = r0 * mp.s0;
  for (int k = 0; k < mp.T; ++k) {
    const double r_next = r0 / std::pow(m, k + 1);
    for_each_path(k, [&](PathNode n) {
      const NodeIndex x = n.node();
      c.a_up[n.id()] = r_next * stock_price(mp, {k + 1, x.j + 1});
      c.a_down[n.id()] = r_next * stock_price(mp, {k + 1, x.j});
    });
  }
  return generate(mp, c);
}

}  // namespace tcdual
