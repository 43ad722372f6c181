#pragma once

// Scenario files: one `section.key = value` per line, '#' starts a comment.
//
//   market.u = 1.2          market.d = 0.9        market.p = 0.5
//   market.T = 2            market.s0 = 100
//   market.lambda_buy = 0.01                      market.lambda_sell = 0.01
//   payoff.type = cash_call | cash_put | physical_call | cash | table
//   payoff.strike = 100     payoff.amount = 5     (cash)
//   payoff.y0 = 0,0,44      payoff.y1 = 0,0,0     (table, by up-count j = 0..T)
//   utility.gamma = 0.5     utility.x0 = 100      utility.x1 = 0
//   run.grid = 2001         run.seed = 7          run.samples = 1000
//   run.tolerance = 1e-6    run.tree = trees/a.csv
//   run.sweep = price | utility                   run.sweep_steps = 10
//   run.sweep_buy_max = 0.05                      run.sweep_sell_max = 0.05
//
// Errors name the file and line of the offending key.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tcdual/errors.hpp"
#include "tcdual/market.hpp"
#include "tcdual/power_utility.hpp"

namespace tcdual {

struct UtilitySpec {
  double gamma = 0.5;
  double x0 = 0.0;
  double x1 = 0.0;
};

struct RunOptions {
  int grid = 2001;
  std::uint64_t seed = 1;
  int samples = 1000;
  double tolerance = 1e-6;
  std::string tree;  // serialized price system for validate-ps
  std::string sweep = "price";
  int sweep_steps = 10;
  double sweep_buy_max = 0.05;
  double sweep_sell_max = 0.05;
};

struct Scenario {
  std::string source;
  MarketParams market;
  std::string payoff_type = "cash_call";
  double strike = 0.0;
  double amount = 0.0;
  std::vector<double> table_y0;
  std::vector<double> table_y1;
  std::optional<UtilitySpec> utility;
  RunOptions run;

  /// Builds the payoff for an arbitrary market (sweeps change the costs only).
  [[nodiscard]] Payoff payoff(const MarketParams& mp) const {
    if (payoff_type == "cash_call") return Payoff::cash_call(mp, strike);
    if (payoff_type == "cash_put") return Payoff::cash_put(mp, strike);
    if (payoff_type == "physical_call") return Payoff::physical_call(mp, strike);
    if (payoff_type == "cash") return Payoff::constant_cash(mp, amount);
    return Payoff::custom(table_y0, table_y1);
  }
  [[nodiscard]] Payoff payoff() const { return payoff(market); }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class ScenarioParser {
 public:
  explicit ScenarioParser(std::string source) : source_(std::move(source)) {}

  Scenario parse(std::istream& is) {
    Scenario sc;
    sc.source = source_;
    std::string raw;
    int lineno = 0;
    UtilitySpec util;
    bool has_util = false;
    while (std::getline(is, raw)) {
      ++lineno;
      line_ = lineno;
      const auto hash = raw.find('#');
      const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
      if (text.empty()) continue;
      const auto eq = text.find('=');
      if (eq == std::string::npos) fail("expected key = value");
      const std::string key = trim(text.substr(0, eq));
      const std::string val = trim(text.substr(eq + 1));
      if (val.empty()) fail("empty value for '" + key + "'");
      if (!lines_.emplace(key, lineno).second) fail("duplicate key '" + key + "'");

      if (key == "market.u") sc.market.u = number(val);
      else if (key == "market.d") sc.market.d = number(val);
      else if (key == "market.p") sc.market.p = number(val);
      else if (key == "market.T") sc.market.T = integer(val);
      else if (key == "market.s0") sc.market.s0 = number(val);
      else if (key == "market.lambda_buy") sc.market.lambda_buy = number(val);
      else if (key == "market.lambda_sell") sc.market.lambda_sell = number(val);
      else if (key == "payoff.type") sc.payoff_type = val;
      else if (key == "payoff.strike") sc.strike = number(val);
      else if (key == "payoff.amount") sc.amount = number(val);
      else if (key == "payoff.y0") sc.table_y0 = list(val);
      else if (key == "payoff.y1") sc.table_y1 = list(val);
      else if (key == "utility.gamma") util.gamma = number(val), has_util = true;
      else if (key == "utility.x0") util.x0 = number(val), has_util = true;
      else if (key == "utility.x1") util.x1 = number(val), has_util = true;
      else if (key == "run.grid") sc.run.grid = integer(val);
      else if (key == "run.seed") sc.run.seed = static_cast<std::uint64_t>(integer(val));
      else if (key == "run.samples") sc.run.samples = integer(val);
      else if (key == "run.tolerance") sc.run.tolerance = number(val);
      else if (key == "run.tree") sc.run.tree = val;
      else if (key == "run.sweep") sc.run.sweep = val;
      else if (key == "run.sweep_steps") sc.run.sweep_steps = integer(val);
      else if (key == "run.sweep_buy_max") sc.run.sweep_buy_max = number(val);
      else if (key == "run.sweep_sell_max") sc.run.sweep_sell_max = number(val);
      else fail("unknown key '" + key + "'");
    }
    if (has_util) sc.utility = util;
    check(sc);
    return sc;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw PreconditionError(source_ + ":" + std::to_string(line_) + ": " + msg);
  }

  // Re-anchors a module precondition on the line that set `key` (or the
  // file as a whole when the key took its default).
  template <typename F>
  void at_key(const std::string& key, F&& fn) {
    try {
      fn();
    } catch (const PreconditionError& e) {
      const auto it = lines_.find(key);
      line_ = it == lines_.end() ? 0 : it->second;
      fail(e.what());
    }
  }

  double number(const std::string& v) const {
    try {
      std::size_t used = 0;
      const double x = std::stod(v, &used);
      if (used == v.size()) return x;
    } catch (const std::logic_error&) {
    }
    fail("not a number: '" + v + "'");
  }

  int integer(const std::string& v) const {
    try {
      std::size_t used = 0;
      const long long x = std::stoll(v, &used);
      if (used == v.size() && x >= 0 && x <= 1000000000LL) return static_cast<int>(x);
    } catch (const std::logic_error&) {
    }
    fail("not a nonnegative integer: '" + v + "'");
  }

  std::vector<double> list(const std::string& v) const {
    std::vector<double> out;
    std::stringstream ss(v);
    for (std::string cell; std::getline(ss, cell, ',');) out.push_back(number(trim(cell)));
    return out;
  }

  void check(const Scenario& sc) {
    const MarketParams& m = sc.market;
    at_key("market.u", [&] { require(std::isfinite(m.u) && m.u > 1.0, "market: require u > 1"); });
    at_key("market.d", [&] { require(m.d > 0.0 && m.d < 1.0, "market: require 0 < d < 1"); });
    at_key("market.p", [&] { require(m.p > 0.0 && m.p < 1.0, "market: require 0 < p < 1"); });
    at_key("market.s0", [&] { require(std::isfinite(m.s0) && m.s0 > 0.0, "market: require s0 > 0"); });
    at_key("market.lambda_buy", [&] { require(m.lambda_buy >= 0.0, "market: require lambda_buy >= 0"); });
    at_key("market.lambda_sell",
           [&] { require(m.lambda_sell >= 0.0 && m.lambda_sell < 1.0, "market: require 0 <= lambda_sell < 1"); });
    at_key("payoff.type", [&] {
      const auto& t = sc.payoff_type;
      require(t == "cash_call" || t == "cash_put" || t == "physical_call" || t == "cash" || t == "table",
              "payoff: unknown type '" + t + "'");
    });
    if (sc.payoff_type == "table") {
      at_key("payoff.y0", [&] {
        require(sc.table_y0.size() == static_cast<std::size_t>(m.T) + 1, "payoff: y0 needs T+1 entries");
      });
      at_key("payoff.y1", [&] {
        require(sc.table_y1.size() == static_cast<std::size_t>(m.T) + 1, "payoff: y1 needs T+1 entries");
      });
    }
    if (sc.utility) {
      at_key("utility.gamma", [&] { PowerUtilityParams(sc.utility->gamma); });
      at_key("utility.x1", [&] {
        require(liquidation_value({sc.utility->x0, sc.utility->x1}, m.s0, m) > 0.0,
                "utility: require x0 - h(-x1) s0 > 0");
      });
    }
    at_key("run.grid", [&] { require(sc.run.grid >= 3, "run: grid must be >= 3"); });
    at_key("run.sweep", [&] {
      require(sc.run.sweep == "price" || sc.run.sweep == "utility", "run: sweep must be price or utility");
    });
    at_key("run.sweep_steps", [&] { require(sc.run.sweep_steps >= 1, "run: sweep_steps must be >= 1"); });
    at_key("run.sweep_buy_max", [&] { require(sc.run.sweep_buy_max >= 0.0, "run: sweep_buy_max must be >= 0"); });
    at_key("run.sweep_sell_max", [&] {
      require(sc.run.sweep_sell_max >= 0.0 && sc.run.sweep_sell_max < 1.0, "run: sweep_sell_max must be in [0, 1)");
    });
  }

  std::string source_;
  int line_ = 0;
  std::map<std::string, int> lines_;
};

}  // namespace detail

inline Scenario parse_scenario(std::istream& is, const std::string& source = "<scenario>") {
  return detail::ScenarioParser(source).parse(is);
}

inline Scenario parse_scenario_text(const std::string& text, const std::string& source = "<scenario>") {
  std::istringstream is(text);
  return parse_scenario(is, source);
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream is(path);
  detail::require(static_cast<bool>(is), "cannot open scenario file '" + path + "'");
  return parse_scenario(is, path);
}

}  // namespace tcdual
