#pragma once

// Batch front end. Exit codes: 0 success, 1 validation failure, 2 bad input
// (usage or precondition), 3 internal invariant breach.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tcdual/errors.hpp"
#include "tcdual/io.hpp"
#include "tcdual/market.hpp"
#include "tcdual/oracle.hpp"
#include "tcdual/power_utility.hpp"
#include "tcdual/price_system.hpp"
#include "tcdual/scenario.hpp"
#include "tcdual/superhedge.hpp"
#include "tcdual/utility.hpp"

namespace tcdual::cli {

enum ExitCode : int { kOk = 0, kValidationFailure = 1, kPrecondition = 2, kInvariant = 3 };

struct Flags {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<int> grid;
  std::string out;
  std::string target = "price";  // oracle-compare
};

namespace detail {

using io::num;

inline Scenario load(const Flags& f) {
  Scenario sc = load_scenario(f.scenario);
  if (f.seed) sc.run.seed = *f.seed;
  if (f.grid) {
    tcdual::detail::require(*f.grid >= 3, "--grid must be >= 3");
    sc.run.grid = *f.grid;
  }
  return sc;
}

inline const UtilitySpec& need_utility(const Scenario& sc) {
  tcdual::detail::require(sc.utility.has_value(), sc.source + ": utility section (utility.gamma, x0, x1) is required");
  return *sc.utility;
}

template <typename W>
void write_out(const std::string& path, W&& writer) {
  if (path.empty()) return;
  std::ofstream os(path);
  tcdual::detail::require(static_cast<bool>(os), "cannot open output file '" + path + "'");
  writer(os);
}

inline int cmd_price(const Flags& f, std::ostream& out) {
  const Scenario sc = load(f);
  const auto res = price(sc.payoff(), sc.market);
  std::size_t max_bp = 0;
  for (int k = 0; k <= sc.market.T; ++k)
    for (int j = 0; j <= k; ++j) max_bp = std::max(max_bp, res.surface.at({k, j}).size());
  out << "pi_star = " << num(res.pi_star) << '\n';
  out << "max_breakpoints = " << max_bp << '\n';
  write_out(f.out, [&](std::ostream& os) { io::write_surface_csv(os, res.surface, sc.market); });
  return kOk;
}

inline int report_audit(const VhatAudit& a, std::ostream& err) {
  if (a.ok()) return kOk;
  err << "invariant breach in vhat curves: below_one = " << num(a.below_one) << ", k_increase = " << num(a.k_increase)
      << ", wrong_direction = " << num(a.wrong_direction) << '\n';
  return kInvariant;
}

inline int cmd_utility(const Flags& f, std::ostream& out, std::ostream& err) {
  const Scenario sc = load(f);
  const UtilitySpec& us = need_utility(sc);
  const PowerUtilityParams util(us.gamma);
  const MarketParams& mp = sc.market;
  tcdual::detail::require(liquidation_value({us.x0, us.x1}, mp.s0, mp) > 0.0,
                          sc.source + ": utility: require x0 - h(-x1) s0 > 0");
  VhatOptions opt;
  opt.grid_size = sc.run.grid;
  const auto curves = vhat_recursion(mp, util, opt);
  if (const int rc = report_audit(audit_vhat(curves, mp), err); rc != kOk) return rc;
  const double r = optimal_ratio(us.x0, us.x1, mp, util, curves.front());
  const double v = value_function(us.x0, us.x1, mp, util, curves.front());
  const FlatRegion fr = flat_region_bounds(mp, 0);
  out << "value = " << num(v) << '\n';
  out << "optimal_ratio = " << num(r) << '\n';
  out << "xi = " << num(optimal_xi(r, us.x0, us.x1, mp, util, curves.front())) << '\n';
  out << "flat_region_k0 = " << (fr.empty() ? std::string("empty") : "[" + num(fr.lo) + ", " + num(fr.hi) + "]")
      << '\n';
  std::string hold;
  try {
    hold = num(hold_policy_value(us.x0, us.x1, mp, util));
  } catch (const PreconditionError& e) {
    hold = std::string("n/a (") + e.what() + ")";
  }
  out << "hold_policy_value = " << hold << '\n';
  write_out(f.out, [&](std::ostream& os) { io::write_curve_csv(os, curves); });
  return kOk;
}

inline int cmd_validate_ps(const Flags& f, std::ostream& out) {
  const Scenario sc = load(f);
  const MarketParams& mp = sc.market;
  PriceSystemTree tree;
  if (!sc.run.tree.empty()) {
    std::ifstream is(sc.run.tree);
    tcdual::detail::require(static_cast<bool>(is), "cannot open tree file '" + sc.run.tree + "'");
    tree = io::read_tree_csv(is);
    tcdual::detail::require(tree.horizon() == mp.T, "tree horizon differs from market.T");
    out << "source = " << sc.run.tree << '\n';
  } else {
    tree = generate(mp, sample_random_controls(mp, sc.run.seed));
    out << "source = generated (seed " << sc.run.seed << ")\n";
  }
  const auto rep = validate(tree, mp);
  out << "nodes = " << tree.size() << '\n';
  out << "max_martingale_error = " << num(rep.max_martingale_error) << '\n';
  out << "min_band_slack = " << num(rep.min_band_slack) << '\n';
  out << "violations = " << rep.violations.size() << '\n';
  for (const auto& v : rep.violations) {
    const std::string w = v.node.k == 0 ? std::string("-") : PathWord::from_node(v.node).str();
    out << "  " << to_string(v.kind) << " at " << w << ": " << num(v.magnitude) << '\n';
  }
  write_out(f.out, [&](std::ostream& os) { io::write_tree_csv(os, tree); });
  out << (rep.ok() ? "valid" : "INVALID") << '\n';
  return rep.ok() ? kOk : kValidationFailure;
}

inline void gap_row(std::ostream& os, const std::string& name, double value, double ref) {
  const double abs_gap = std::abs(value - ref);
  os << name << ',' << num(value) << ',' << num(abs_gap) << ',' << num(abs_gap / std::max(1.0, std::abs(ref))) << '\n';
}

inline int cmd_oracle_price(const Scenario& sc, std::ostream& out) {
  const MarketParams& mp = sc.market;
  const Payoff payoff = sc.payoff();
  const auto res = price(payoff, mp);
  const double lp = oracle::superreplication_lp(payoff, mp);
  const auto extracted = extract_worst_case_price_system(res.surface, mp);
  const auto sup = oracle::price_system_sup_search(payoff, mp, sc.run.samples, sc.run.seed, &extracted);
  const double ext = dual_payoff_expectation(extracted, payoff, mp);
  out << "quantity[-],value[currency],abs_gap[currency],rel_gap[1]\n";
  gap_row(out, "dp_price", res.pi_star, res.pi_star);
  gap_row(out, "lp_oracle", lp, res.pi_star);
  gap_row(out, "extracted_dual", ext, res.pi_star);
  gap_row(out, "sup_search_sampled", sup.best_sampled, res.pi_star);
  const double scale = std::max(1.0, std::abs(res.pi_star));
  const bool ok = std::abs(lp - res.pi_star) <= sc.run.tolerance * scale &&
                  std::abs(ext - res.pi_star) <= sc.run.tolerance * scale &&
                  sup.best_sampled <= res.pi_star + 1e-9 * scale;
  out << (ok ? "agree" : "DISAGREE") << '\n';
  return ok ? kOk : kValidationFailure;
}

inline int cmd_oracle_utility(const Scenario& sc, std::ostream& out, std::ostream& err) {
  const UtilitySpec& us = need_utility(sc);
  const PowerUtilityParams util(us.gamma);
  const MarketParams& mp = sc.market;
  VhatOptions opt;
  opt.grid_size = sc.run.grid;
  const auto curves = vhat_recursion(mp, util, opt);
  if (const int rc = report_audit(audit_vhat(curves, mp), err); rc != kOk) return rc;
  const double v = value_function(us.x0, us.x1, mp, util, curves.front());
  const auto search = oracle::primal_utility_search(us.x0, us.x1, mp, util);
  out << "quantity[-],value[utility],abs_gap[utility],rel_gap[1]\n";
  gap_row(out, "dual_value", v, v);
  gap_row(out, "primal_search", search.value, v);
  out << "primal_error_bound = " << num(search.error_bound) << '\n';
  const double scale = std::max(1.0, std::abs(v));
  const bool ok = search.value <= v + sc.run.tolerance * scale &&
                  v - search.value <= search.error_bound + sc.run.tolerance * scale;
  out << (ok ? "agree" : "DISAGREE") << '\n';
  return ok ? kOk : kValidationFailure;
}

inline int cmd_oracle_compare(const Flags& f, std::ostream& out, std::ostream& err) {
  const Scenario sc = load(f);
  if (f.target == "utility") return cmd_oracle_utility(sc, out, err);
  return cmd_oracle_price(sc, out);
}

/// Grid over (lambda_buy, lambda_sell). Prices must not decrease and utility
/// values must not increase with either cost; a breach exits 3.
inline int cmd_sweep(const Flags& f, std::ostream& out, std::ostream& err) {
  const Scenario sc = load(f);
  const bool utility_target = sc.run.sweep == "utility";
  const int n = sc.run.sweep_steps;
  auto level = [&](double max, int i) { return n == 1 ? max : max * i / (n - 1); };
  std::optional<UtilitySpec> us;
  if (utility_target) us = need_utility(sc);

  std::vector<io::SweepRow> rows;
  std::vector<std::vector<double>> grid(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      MarketParams mp = sc.market;
      mp.lambda_buy = level(sc.run.sweep_buy_max, i);
      mp.lambda_sell = level(sc.run.sweep_sell_max, j);
      double v = 0.0;
      if (utility_target) {
        const PowerUtilityParams util(us->gamma);
        VhatOptions opt;
        opt.grid_size = sc.run.grid;
        const auto curves = vhat_recursion(mp, util, opt);
        v = value_function(us->x0, us->x1, mp, util, curves.front());
      } else {
        v = price(sc.payoff(mp), mp).pi_star;
      }
      grid[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = v;
      rows.push_back({mp.lambda_buy, mp.lambda_sell, v});
    }
  }
  if (f.out.empty()) {
    io::write_sweep_csv(out, rows, utility_target ? "utility" : "currency");
  } else {
    write_out(f.out, [&](std::ostream& os) { io::write_sweep_csv(os, rows, utility_target ? "utility" : "currency"); });
    out << "rows = " << rows.size() << '\n';
  }

  const double sign = utility_target ? -1.0 : 1.0;
  int breaches = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double v = grid[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      const double tol = 1e-9 * std::max(1.0, std::abs(v));
      auto check = [&](double prev, const char* axis) {
        if (sign * (v - prev) < -tol) {
          ++breaches;
          err << "monotonicity breach along " << axis << " at (" << num(level(sc.run.sweep_buy_max, i)) << ", "
              << num(level(sc.run.sweep_sell_max, j)) << "): " << num(prev) << " -> " << num(v) << '\n';
        }
      };
      if (i > 0) check(grid[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(j)], "lambda_buy");
      if (j > 0) check(grid[static_cast<std::size_t>(i)][static_cast<std::size_t>(j) - 1], "lambda_sell");
    }
  }
  return breaches == 0 ? kOk : kInvariant;
}

}  // namespace detail

inline int run_command(int argc, const char* const* argv, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  CLI::App app{"Super-replication and power-utility optimisation in a binomial market with transaction costs"};
  app.require_subcommand(1);
  Flags f;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", f.scenario, "scenario file (key = value)")->required();
    sub->add_option("--seed", f.seed, "random seed, overrides run.seed");
    sub->add_option("--grid", f.grid, "vhat grid size, overrides run.grid");
    sub->add_option("--out", f.out, "path for the CSV table");
  };
  auto* price_cmd = app.add_subcommand("price", "super-replication price and value surface");
  auto* util_cmd = app.add_subcommand("utility", "maximal expected power utility and vhat curves");
  auto* ps_cmd = app.add_subcommand("validate-ps", "generate or load a price system and validate it");
  auto* oracle_cmd = app.add_subcommand("oracle-compare", "compare the dynamic programs with brute-force oracles");
  auto* sweep_cmd = app.add_subcommand("sweep", "grid over transaction costs");
  for (auto* s : {price_cmd, util_cmd, ps_cmd, oracle_cmd, sweep_cmd}) add_common(s);
  oracle_cmd->add_option("target", f.target, "price or utility")->check(CLI::IsMember({"price", "utility"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kPrecondition;
  }

  try {
    if (price_cmd->parsed()) return detail::cmd_price(f, out);
    if (util_cmd->parsed()) return detail::cmd_utility(f, out, err);
    if (ps_cmd->parsed()) return detail::cmd_validate_ps(f, out);
    if (oracle_cmd->parsed()) return detail::cmd_oracle_compare(f, out, err);
    return detail::cmd_sweep(f, out, err);
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << '\n';
    return kPrecondition;
  } catch (const InvariantError& e) {
    err << "invariant breach: " << e.what() << '\n';
    return kInvariant;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInvariant;
  }
}

}  // namespace tcdual::cli
