#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "tcdual/errors.hpp"

namespace tcdual {

struct Breakpoint {
  double a = 0.0;  // shadow price
  double w = 0.0;  // value
  friend bool operator==(const Breakpoint&, const Breakpoint&) = default;
};

namespace detail {

/// z-component of (b - o) x (c - o); negative for a clockwise (concave) turn.
inline double cross(const Breakpoint& o, const Breakpoint& b, const Breakpoint& c) {
  return (b.a - o.a) * (c.w - o.w) - (b.w - o.w) * (c.a - o.a);
}

inline bool nearly_collinear(const Breakpoint& o, const Breakpoint& b, const Breakpoint& c, double rel) {
  const double n1 = std::hypot(b.a - o.a, b.w - o.w);
  const double n2 = std::hypot(c.a - b.a, c.w - b.w);
  return cross(o, b, c) >= -rel * n1 * n2;
}

/// Upper hull of points sorted by a ascending (ties: larger w first).
/// Drops collinear points and keeps both extreme abscissae.
inline std::vector<Breakpoint> upper_hull_sorted(std::span<const Breakpoint> pts, double collinear_rel) {
  std::vector<Breakpoint> hull;
  hull.reserve(pts.size());
  for (const Breakpoint& q : pts) {
    if (!hull.empty() && q.a == hull.back().a) continue;
    while (hull.size() >= 2 && nearly_collinear(hull[hull.size() - 2], hull.back(), q, collinear_rel)) {
      hull.pop_back();
    }
    hull.push_back(q);
  }
  return hull;
}

}  // namespace detail

/// Concave piecewise-linear function on [lo, hi], stored as breakpoints with
/// strictly increasing abscissae. A single breakpoint is a function on a point.
class PiecewiseLinearConcave {
 public:
  /// Relative slack for evaluation outside the domain.
  static constexpr double kDomainSlack = 1e-12;
  /// Points whose turn angle has |sin| below this are merged.
  static constexpr double kCollinearRel = 1e-12;

  PiecewiseLinearConcave() = default;

  explicit PiecewiseLinearConcave(std::vector<Breakpoint> pts) : pts_(std::move(pts)) {
    detail::require(!pts_.empty(), "piecewise-linear: need at least one breakpoint");
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      detail::require(std::isfinite(pts_[i].a) && std::isfinite(pts_[i].w), "piecewise-linear: non-finite breakpoint");
      if (i > 0) detail::require(pts_[i].a > pts_[i - 1].a, "piecewise-linear: abscissae must strictly increase");
    }
  }

  static PiecewiseLinearConcave point(double a, double w) { return PiecewiseLinearConcave({{a, w}}); }

  /// Affine function w0 + slope * a on [lo, hi].
  static PiecewiseLinearConcave affine(double lo, double hi, double w0, double slope) {
    if (lo == hi) return point(lo, w0 + slope * lo);
    return PiecewiseLinearConcave({{lo, w0 + slope * lo}, {hi, w0 + slope * hi}});
  }

  [[nodiscard]] double lo() const { return pts_.front().a; }
  [[nodiscard]] double hi() const { return pts_.back().a; }
  [[nodiscard]] std::size_t size() const { return pts_.size(); }
  [[nodiscard]] const std::vector<Breakpoint>& breakpoints() const { return pts_; }

  [[nodiscard]] bool contains(double a) const {
    const double slack = kDomainSlack * std::max({std::abs(lo()), std::abs(hi()), 1.0});
    return a >= lo() - slack && a <= hi() + slack;
  }

  [[nodiscard]] double operator()(double a) const {
    if (!contains(a)) {
      throw PreconditionError("piecewise-linear: evaluation at " + std::to_string(a) + " outside [" +
                              std::to_string(lo()) + ", " + std::to_string(hi()) + "]");
    }
    if (a <= lo()) return pts_.front().w;
    if (a >= hi()) return pts_.back().w;
    auto it = std::lower_bound(pts_.begin(), pts_.end(), a, [](const Breakpoint& b, double x) { return b.a < x; });
    if (it->a == a) return it->w;
    const Breakpoint& r = *it;
    const Breakpoint& l = *(it - 1);
    const double t = (a - l.a) / (r.a - l.a);
    return l.w + t * (r.w - l.w);
  }

  /// Maximising breakpoint; the smallest abscissa wins ties.
  [[nodiscard]] Breakpoint argmax() const {
    return *std::max_element(pts_.begin(), pts_.end(), [](const Breakpoint& x, const Breakpoint& y) { return x.w < y.w; });
  }

  /// Successive slopes nonincreasing, compared exactly.
  [[nodiscard]] bool is_concave() const {
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < pts_.size(); ++i) {
      const double s = (pts_[i].w - pts_[i - 1].w) / (pts_[i].a - pts_[i - 1].a);
      if (s > prev) return false;
      prev = s;
    }
    return true;
  }

 private:
  std::vector<Breakpoint> pts_;
};

/// Upper concave envelope of the union of the graphs of `f` and `g`,
/// restricted to [lo, hi]. The interval must lie in the hull of both domains.
inline PiecewiseLinearConcave concave_envelope(const PiecewiseLinearConcave& f, const PiecewiseLinearConcave& g,
                                               double lo, double hi) {
  std::vector<Breakpoint> pts;
  pts.reserve(f.size() + g.size());
  pts.insert(pts.end(), f.breakpoints().begin(), f.breakpoints().end());
  pts.insert(pts.end(), g.breakpoints().begin(), g.breakpoints().end());
  std::sort(pts.begin(), pts.end(), [](const Breakpoint& x, const Breakpoint& y) {
    return x.a < y.a || (x.a == y.a && x.w > y.w);
  });
  const auto hull = PiecewiseLinearConcave(detail::upper_hull_sorted(pts, 0.0));
  detail::require(hull.contains(lo) && hull.contains(hi), "concave_envelope: clip interval outside hull domain");
  if (lo == hi) return PiecewiseLinearConcave::point(lo, hull(lo));

  const double gap = 1e-14 * std::max({std::abs(lo), std::abs(hi), 1.0});
  std::vector<Breakpoint> clipped{{lo, hull(lo)}};
  for (const Breakpoint& b : hull.breakpoints()) {
    if (b.a > lo + gap && b.a < hi - gap) clipped.push_back(b);
  }
  clipped.push_back({hi, hull(hi)});
  PiecewiseLinearConcave out(detail::upper_hull_sorted(clipped, PiecewiseLinearConcave::kCollinearRel));
  detail::ensure(out.lo() == lo && out.hi() == hi, "concave_envelope: clipped domain drifted");
  detail::ensure(out.is_concave(), "concave_envelope: result is not concave");
  return out;
}

}  // namespace tcdual
