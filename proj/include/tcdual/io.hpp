#pragma once

// Comma-separated tables. Numbers are printed with 12 significant digits;
// headers carry units in brackets; rows are time-major, then node, then
// abscissa.

#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tcdual/errors.hpp"
#include "tcdual/market.hpp"
#include "tcdual/price_system.hpp"
#include "tcdual/superhedge.hpp"
#include "tcdual/utility.hpp"

namespace tcdual::io {

inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

/// One row per breakpoint of every W_k(S_j, .).
inline void write_surface_csv(std::ostream& os, const ValueSurface& surface, const MarketParams& mp) {
  os << "k[step],j[ups],S[currency],A[currency],W[currency]\n";
  for (int k = 0; k <= surface.horizon(); ++k) {
    for (int j = 0; j <= k; ++j) {
      const double s = stock_price(mp, {k, j});
      for (const Breakpoint& b : surface.at({k, j}).breakpoints()) {
        os << k << ',' << j << ',' << num(s) << ',' << num(b.a) << ',' << num(b.w) << '\n';
      }
    }
  }
}

inline void write_curve_csv(std::ostream& os, const std::vector<VhatCurve>& curves) {
  os << "k[step],A[ratio],vhat[1]\n";
  for (const VhatCurve& c : curves) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      os << c.k() << ',' << num(c.abscissa(i)) << ',' << num(c.values()[i]) << '\n';
    }
  }
}

/// Path words use U/D; the root is written as "-".
inline void write_tree_csv(std::ostream& os, const PriceSystemTree& tree) {
  os << "path[word],rho0[1],rho1[currency],A[currency]\n";
  for (int k = 0; k <= tree.horizon(); ++k) {
    for_each_path(k, [&](PathNode n) {
      const std::string w = k == 0 ? std::string("-") : PathWord::from_node(n).str();
      os << w << ',' << num(tree.rho0(n)) << ',' << num(tree.rho1(n)) << ',' << num(tree.shadow_price(n)) << '\n';
    });
  }
}

/// Inverse of write_tree_csv. Every node of the full tree must appear once and
/// the A column must agree with rho1 / rho0.
inline PriceSystemTree read_tree_csv(std::istream& is) {
  struct Row {
    double r0, r1;
  };
  std::map<std::pair<int, std::uint32_t>, Row> rows;
  std::string line;
  int lineno = 0;
  int horizon = 0;
  auto fail = [&](const std::string& msg) { throw PreconditionError("tree csv line " + std::to_string(lineno) + ": " + msg); };
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("path", 0) == 0) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (cells.size() != 4) fail("expected 4 columns");
    PathNode n{0, 0};
    if (cells[0] != "-") {
      try {
        n = PathWord::parse(cells[0]).prefix(static_cast<int>(cells[0].size()));
      } catch (const PreconditionError& e) {
        fail(e.what());
      }
    }
    double v[3];
    for (int i = 0; i < 3; ++i) {
      try {
        std::size_t used = 0;
        v[i] = std::stod(cells[static_cast<std::size_t>(i) + 1], &used);
        if (used != cells[static_cast<std::size_t>(i) + 1].size()) fail("trailing characters in number");
      } catch (const std::logic_error&) {
        fail("bad number '" + cells[static_cast<std::size_t>(i) + 1] + "'");
      }
    }
    if (std::abs(v[2] - v[1] / v[0]) > 1e-9 * std::max(1.0, std::abs(v[2]))) fail("A differs from rho1 / rho0");
    if (!rows.emplace(std::make_pair(n.k, n.bits), Row{v[0], v[1]}).second) fail("duplicate path");
    horizon = std::max(horizon, n.k);
  }
  detail::require(horizon <= kMaxPathHorizon, "tree csv: horizon exceeds 24");
  detail::require(rows.size() == path_tree_size(horizon), "tree csv: incomplete tree");
  PriceSystemTree tree(horizon);
  for (const auto& [key, r] : rows) tree.set({key.first, key.second}, r.r0, r.r1);
  return tree;
}

struct SweepRow {
  double lambda_buy;
  double lambda_sell;
  double value;
};

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, const std::string& unit) {
  os << "lambda_buy[1],lambda_sell[1],value[" << unit << "]\n";
  for (const SweepRow& r : rows) os << num(r.lambda_buy) << ',' << num(r.lambda_sell) << ',' << num(r.value) << '\n';
}

}  // namespace tcdual::io
