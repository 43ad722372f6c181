#pragma once

// Binomial market with proportional transaction costs: parameters, lattice
// addressing, claims, trading strategies and portfolio bookkeeping. The bond
// is the numeraire (price 1 at every date).

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "tcdual/errors.hpp"

namespace tcdual {

/// Largest horizon for objects stored per path (2^(T+1) - 1 nodes).
inline constexpr int kMaxPathHorizon = 24;

struct MarketParams {
  double u = 1.2;            // up factor
  double d = 0.9;            // down factor
  double p = 0.5;            // physical up probability
  int T = 1;                 // number of periods
  double s0 = 100.0;         // initial stock price
  double lambda_buy = 0.0;   // proportional cost on purchases
  double lambda_sell = 0.0;  // proportional cost on sales, < 1

  void validate() const {
    using detail::require;
    require(std::isfinite(u) && std::isfinite(d) && 0.0 < d && d < 1.0 && 1.0 < u,
            "market: require 0 < d < 1 < u");
    require(0.0 < p && p < 1.0, "market: require 0 < p < 1");
    require(T >= 0, "market: require T >= 0");
    require(std::isfinite(s0) && s0 > 0.0, "market: require s0 > 0");
    require(std::isfinite(lambda_buy) && lambda_buy >= 0.0, "market: require lambda_buy >= 0");
    require(std::isfinite(lambda_sell) && lambda_sell >= 0.0 && lambda_sell < 1.0,
            "market: require 0 <= lambda_sell < 1");
  }

  /// Risk-neutral up probability of the frictionless model.
  [[nodiscard]] double crr_q() const { return (1.0 - d) / (u - d); }
  /// Mean one-step growth factor p*u + (1-p)*d.
  [[nodiscard]] double drift() const { return p * u + (1.0 - p) * d; }

  [[nodiscard]] double band_lo(double price) const { return (1.0 - lambda_sell) * price; }
  [[nodiscard]] double band_hi(double price) const { return (1.0 + lambda_buy) * price; }
};

enum class Move : std::uint8_t { Down = 0, Up = 1 };

/// Recombining lattice node: time k, j up-moves.
struct NodeIndex {
  int k = 0;
  int j = 0;
  friend bool operator==(const NodeIndex&, const NodeIndex&) = default;
};

/// Path prefix of length k. Bit (k-1-i) of `bits` holds move i (1 = up), so
/// the first move is the most significant bit.
struct PathNode {
  int k = 0;
  std::uint32_t bits = 0;

  [[nodiscard]] std::size_t id() const { return (std::size_t{1} << k) - 1 + bits; }
  [[nodiscard]] int ups() const { return std::popcount(bits); }
  [[nodiscard]] NodeIndex node() const { return {k, ups()}; }
  [[nodiscard]] PathNode child(Move m) const {
    return {k + 1, (bits << 1) | static_cast<std::uint32_t>(m)};
  }
  [[nodiscard]] PathNode parent() const { return {k - 1, bits >> 1}; }

  static PathNode from_id(std::size_t id) {
    int k = 0;
    while ((std::size_t{2} << k) - 1 <= id) ++k;
    return {k, static_cast<std::uint32_t>(id - ((std::size_t{1} << k) - 1))};
  }
  friend bool operator==(const PathNode&, const PathNode&) = default;
};

inline std::size_t path_tree_size(int T) { return (std::size_t{2} << T) - 1; }

/// Calls fn(PathNode) for every prefix of length k, in increasing bit order.
template <typename Fn>
void for_each_path(int k, Fn&& fn) {
  const std::uint32_t count = std::uint32_t{1} << k;
  for (std::uint32_t b = 0; b < count; ++b) fn(PathNode{k, b});
}

class PathWord {
 public:
  PathWord() = default;
  explicit PathWord(std::vector<Move> moves) : moves_(std::move(moves)) {}

  /// Parses a word over {U, D}; the empty string is the root.
  static PathWord parse(std::string_view text) {
    std::vector<Move> moves;
    moves.reserve(text.size());
    for (char c : text) {
      if (c == 'U' || c == 'u') {
        moves.push_back(Move::Up);
      } else if (c == 'D' || c == 'd') {
        moves.push_back(Move::Down);
      } else {
        throw PreconditionError("path word: unexpected character '" + std::string(1, c) + "'");
      }
    }
    return PathWord(std::move(moves));
  }

  static PathWord from_node(PathNode n) {
    std::vector<Move> moves(static_cast<std::size_t>(n.k));
    for (int i = 0; i < n.k; ++i) {
      moves[static_cast<std::size_t>(i)] = ((n.bits >> (n.k - 1 - i)) & 1U) ? Move::Up : Move::Down;
    }
    return PathWord(std::move(moves));
  }

  [[nodiscard]] int length() const { return static_cast<int>(moves_.size()); }
  [[nodiscard]] const std::vector<Move>& moves() const { return moves_; }
  [[nodiscard]] int up_count() const {
    return static_cast<int>(std::count(moves_.begin(), moves_.end(), Move::Up));
  }

  /// Prefix of length k as a path-tree node.
  [[nodiscard]] PathNode prefix(int k) const {
    detail::require(k >= 0 && k <= length(), "path word: prefix length out of range");
    detail::require(k <= 31, "path word: prefix too long for path addressing");
    std::uint32_t bits = 0;
    for (int i = 0; i < k; ++i) bits = (bits << 1) | static_cast<std::uint32_t>(moves_[static_cast<std::size_t>(i)]);
    return {k, bits};
  }

  [[nodiscard]] std::string str() const {
    std::string s;
    s.reserve(moves_.size());
    for (Move m : moves_) s.push_back(m == Move::Up ? 'U' : 'D');
    return s;
  }

 private:
  std::vector<Move> moves_;
};

inline double stock_price(const MarketParams& mp, NodeIndex n) {
  return mp.s0 * std::pow(mp.u, n.j) * std::pow(mp.d, n.k - n.j);
}

inline double path_probability(const MarketParams& mp, const PathWord& w) {
  detail::require(w.length() == mp.T, "path_probability: word length must equal T");
  const int m = w.up_count();
  return std::pow(mp.p, m) * std::pow(1.0 - mp.p, mp.T - m);
}

/// Probability of a path prefix of length n.k.
inline double prefix_probability(const MarketParams& mp, PathNode n) {
  const int m = n.ups();
  return std::pow(mp.p, m) * std::pow(1.0 - mp.p, n.k - m);
}

/// Cash paid per unit price for trading z shares (z > 0 buys).
inline double transaction_cost_h(double z, const MarketParams& mp) {
  return z > 0.0 ? (1.0 + mp.lambda_buy) * z : (1.0 - mp.lambda_sell) * z;
}

/// Terminal claim: Y0 in cash plus Y1 shares, tabulated per terminal node j.
struct Payoff {
  std::vector<double> y0;
  std::vector<double> y1;

  [[nodiscard]] int horizon() const { return static_cast<int>(y0.size()) - 1; }

  void validate(const MarketParams& mp) const {
    detail::require(y0.size() == static_cast<std::size_t>(mp.T + 1) && y1.size() == y0.size(),
                    "payoff: both legs need T+1 entries");
    for (std::size_t j = 0; j < y0.size(); ++j) {
      detail::require(std::isfinite(y0[j]) && std::isfinite(y1[j]), "payoff: entries must be finite");
    }
  }

  static Payoff custom(std::vector<double> cash, std::vector<double> shares) {
    detail::require(cash.size() == shares.size() && !cash.empty(), "payoff: legs must have equal nonzero length");
    return Payoff{std::move(cash), std::move(shares)};
  }

  static Payoff constant_cash(const MarketParams& mp, double c) {
    return Payoff{std::vector<double>(static_cast<std::size_t>(mp.T + 1), c),
                  std::vector<double>(static_cast<std::size_t>(mp.T + 1), 0.0)};
  }

  static Payoff from_terminal(const MarketParams& mp, const std::function<std::pair<double, double>(double)>& fn) {
    Payoff y;
    for (int j = 0; j <= mp.T; ++j) {
      auto [c, s] = fn(stock_price(mp, {mp.T, j}));
      y.y0.push_back(c);
      y.y1.push_back(s);
    }
    return y;
  }

  static Payoff cash_call(const MarketParams& mp, double strike) {
    return from_terminal(mp, [strike](double s) { return std::pair{std::max(s - strike, 0.0), 0.0}; });
  }

  static Payoff cash_put(const MarketParams& mp, double strike) {
    return from_terminal(mp, [strike](double s) { return std::pair{std::max(strike - s, 0.0), 0.0}; });
  }

  /// Delivers one share against payment of the strike when in the money.
  static Payoff physical_call(const MarketParams& mp, double strike) {
    return from_terminal(mp, [strike](double s) {
      return s > strike ? std::pair{-strike, 1.0} : std::pair{0.0, 0.0};
    });
  }
};

/// Trades I(k, path) in shares, stored per path prefix for k = 0..T.
class Strategy {
 public:
  explicit Strategy(int T) : T_(T) {
    detail::require(T >= 0 && T <= kMaxPathHorizon, "strategy: horizon out of range");
    trades_.assign(path_tree_size(T), 0.0);
  }

  static Strategy zero(int T) { return Strategy(T); }

  /// Recombining strategy: the trade depends on the path only through (k, j).
  static Strategy from_nodes(int T, const std::function<double(NodeIndex)>& fn) {
    Strategy s(T);
    for (int k = 0; k <= T; ++k) for_each_path(k, [&](PathNode n) { s.trades_[n.id()] = fn(n.node()); });
    return s;
  }

  static Strategy from_paths(int T, const std::function<double(PathNode)>& fn) {
    Strategy s(T);
    for (int k = 0; k <= T; ++k) for_each_path(k, [&](PathNode n) { s.trades_[n.id()] = fn(n); });
    return s;
  }

  [[nodiscard]] int horizon() const { return T_; }
  [[nodiscard]] double trade(PathNode n) const { return trades_.at(n.id()); }
  void set_trade(PathNode n, double z) { trades_.at(n.id()) = z; }

 private:
  int T_;
  std::vector<double> trades_;
};

struct PortfolioState {
  double x0 = 0.0;  // bond (cash)
  double x1 = 0.0;  // shares
};

/// States X(k) for k = 0..word.length(); X(k) includes the trade made at k.
inline std::vector<PortfolioState> portfolio_evolution(PortfolioState x, const Strategy& strat, const PathWord& word,
                                                       const MarketParams& mp) {
  detail::require(word.length() <= strat.horizon(), "portfolio_evolution: word longer than strategy horizon");
  std::vector<PortfolioState> out;
  out.reserve(static_cast<std::size_t>(word.length()) + 1);
  for (int k = 0; k <= word.length(); ++k) {
    const PathNode n = word.prefix(k);
    const double z = strat.trade(n);
    x.x0 -= transaction_cost_h(z, mp) * stock_price(mp, n.node());
    x.x1 += z;
    out.push_back(x);
  }
  return out;
}

/// Cash left after closing the share position at `price`, net of costs.
inline double liquidation_value(PortfolioState x, double price, const MarketParams& mp) {
  return x.x0 - transaction_cost_h(-x.x1, mp) * price;
}

/// True iff the liquidation value stays >= -tol at every node of the tree.
inline bool is_admissible(const Strategy& strat, PortfolioState x, const MarketParams& mp, double tol = 0.0) {
  detail::require(strat.horizon() == mp.T, "is_admissible: strategy horizon must equal T");
  // Depth-first walk carrying the state; each node visited once.
  std::vector<std::pair<PathNode, PortfolioState>> stack{{PathNode{0, 0}, x}};
  while (!stack.empty()) {
    auto [n, st] = stack.back();
    stack.pop_back();
    const double s = stock_price(mp, n.node());
    const double z = strat.trade(n);
    st.x0 -= transaction_cost_h(z, mp) * s;
    st.x1 += z;
    if (liquidation_value(st, s, mp) < -tol) return false;
    if (n.k < mp.T) {
      stack.emplace_back(n.child(Move::Up), st);
      stack.emplace_back(n.child(Move::Down), st);
    }
  }
  return true;
}

}  // namespace tcdual
