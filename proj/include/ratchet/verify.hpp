#pragma once

// Cross-checks of the analytic results against the grid oracle and exact
// enumeration, at fixed parameter sets. Each check reports its target, the
// computed value and the tolerance it is held to.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ratchet/closed_form.hpp"
#include "ratchet/dp_oracle.hpp"
#include "ratchet/empirics.hpp"
#include "ratchet/model.hpp"
#include "ratchet/nonlinear.hpp"

namespace ratchet {

struct CheckResult {
  std::string name;
  double target = 0.0;
  double computed = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  int grid_points = 2001;
  std::optional<double> oracle_tolerance;  // overrides every grid-oracle tolerance
  std::string inject_fault;                // honored only in fault-injection builds
};

// Set A: interior two-period benchmark. Set B: corner.
inline MarketParams reference_set_a() { return MarketParams(0.0, 1.0, 2.0, {0.3, 0.5}); }
inline MarketParams reference_set_b() { return MarketParams(0.0, 1.0, 4.0, {0.3, 0.6}); }

namespace detail {

inline bool fault_enabled([[maybe_unused]] const VerifyOptions& options, [[maybe_unused]] const char* name) {
#ifdef RATCHET_FAULT_INJECTION
  return options.inject_fault == name;
#else
  return false;
#endif
}

inline CheckResult make_check(std::string name, double target, double computed, double tolerance,
                              std::string detail = {}) {
  const bool ok = std::isfinite(computed) && std::abs(computed - target) <= tolerance;
  return {std::move(name), target, computed, tolerance, ok, std::move(detail)};
}

// Grid price of the tabulated policy for (t, ceiling, state).
inline double oracle_price(const MarketParams& params, int points, int t, double ceiling, Demand s) {
  return solve_dp(params, GridSpec::covering(params, points)).price(t, ceiling, s);
}

}  // namespace detail

// Runs `compute(points)`; if the result misses its tolerance at the configured
// grid, retries once on the doubled grid before reporting.
inline CheckResult oracle_check(const std::string& name, double target, double tolerance, int points,
                                const std::function<double(int)>& compute) {
  CheckResult first = detail::make_check(name, target, compute(points), tolerance,
                                         "grid=" + std::to_string(points));
  if (first.passed) return first;
  const int refined = 2 * points - 1;
  return detail::make_check(name, target, compute(refined), tolerance, "grid=" + std::to_string(refined));
}

inline std::vector<CheckResult> run_verification(const VerifyOptions& options = {}) {
  std::vector<CheckResult> out;
  const int points = options.grid_points;
  auto oracle_tol = [&](double stated) { return options.oracle_tolerance.value_or(stated); };

  const MarketParams set_a = reference_set_a();
  const MarketParams set_b = reference_set_b();

  // Flexible benchmark, two periods.
  const double flex_a = expected_avg_price_flexible(set_a);
  out.push_back(detail::make_check("lemma1_flexible_closed_form", 0.7, flex_a, 1e-12));
  out.push_back(detail::make_check("lemma1_flexible_enumeration", flex_a,
                                   enumerate_expectation(flexible_policy(set_a), set_a).expected_avg_price, 1e-12));

  // Two-period regulated policy.
  out.push_back(detail::make_check("prop1_interior_policy", 2.0 / 3.0, two_period_low_price(set_a), 1e-12));
  out.push_back(oracle_check("prop1_interior_policy_oracle", 2.0 / 3.0, oracle_tol(1e-3), points, [&](int n) {
    return detail::oracle_price(set_a, n, 1, kNoCeiling, Demand::Low);
  }));
  out.push_back(detail::make_check("prop1_corner_regime", 1.0, regime_classify(set_b) == Regime::Corner ? 1.0 : 0.0,
                                   0.0, "1 = Corner"));
  out.push_back(oracle_check("prop1_corner_policy_oracle", 2.0, oracle_tol(1e-3), points, [&](int n) {
    return detail::oracle_price(set_b, n, 1, kNoCeiling, Demand::Low);
  }));

  // Threshold regime rule against the oracle over a (d_H, gamma_2) grid with
  // c = 0, d_L = 1, gamma_1 = 0.3. Cells within 0.02 of the value tie are skipped.
  {
    int misses = 0, cells = 0;
    std::string listed;
    for (double dh : {1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0}) {
      for (int k = 0; k < 10; ++k) {
        const double g2 = 0.05 + 0.1 * k;
        const MarketParams m(0.0, 1.0, dh, {0.3, g2});
        const auto star = corner_value_threshold(m);
        if (star && std::abs(g2 - *star) < 0.02) continue;
        const GridSpec grid = GridSpec::covering(m, points);
        const double oracle = solve_dp(m, grid).price(1, kNoCeiling, Demand::Low);
        ++cells;
        if (std::abs(oracle - two_period_low_price(m)) > 2.0 * grid.step()) {
          if (++misses <= 4)
            listed += " (d_H=" + detail::format_number(dh) + ",gamma_2=" + detail::format_number(g2) +
                      ",closed=" + detail::format_number(two_period_low_price(m)) +
                      ",oracle=" + detail::format_number(oracle) + ")";
        }
      }
    }
    out.push_back(detail::make_check("prop1_regime_grid_oracle", 0.0, misses, 0.0,
                                     std::to_string(misses) + " of " + std::to_string(cells) +
                                         " cells off by > 2 steps:" + listed + (misses > 4 ? " ..." : "")));
  }

  // Expected average prices.
  out.push_back(detail::make_check("prop2_interior_neutrality", flex_a, expected_avg_price_regulated_2p(set_a), 1e-12));
  out.push_back(oracle_check("prop2_interior_oracle", flex_a, oracle_tol(2e-3), points, [&](int n) {
    return enumerate_expectation(solve_dp(set_a, GridSpec::covering(set_a, n)), set_a).expected_avg_price;
  }));
  const double corner_gap = 0.5 * (1.0 - set_b.gamma(1)) * (high_price(set_b) - low_price(set_b));
  out.push_back(detail::make_check("prop2_corner_increase", 0.525,
                                   expected_avg_price_regulated_2p(set_b) - expected_avg_price_flexible(set_b), 1e-12));
  out.push_back(detail::make_check("prop2_corner_increase_formula", 0.525, corner_gap, 1e-12));
  out.push_back(oracle_check("prop2_corner_oracle", 0.525, oracle_tol(2e-3), points, [&](int n) {
    return enumerate_expectation(solve_dp(set_b, GridSpec::covering(set_b, n)), set_b).expected_avg_price -
           expected_avg_price_flexible(set_b);
  }));

  // Consumer surplus: closed form against per-path enumeration.
  for (const auto& [name, params] : {std::pair{"prop3_interior_cs", set_a}, std::pair{"prop3_corner_cs", set_b}}) {
    const double enumerated = *enumerate_expectation(two_period_policy(params), params).expected_total_cs -
                              *enumerate_expectation(flexible_policy(params), params).expected_total_cs;
    double closed = expected_cs_diff_2p(params);
    if (detail::fault_enabled(options, name)) closed = -closed;
    out.push_back(detail::make_check(name, enumerated, closed, 1e-12));
  }

  // T-period targets, neutrality and path monotonicity.
  double worst_target = 0.0, worst_neutral = 0.0;
  std::size_t rising_paths = 0;
  for (int horizon = 2; horizon <= 8; ++horizon) {
    for (double q : {0.25, 0.5, 0.75}) {
      const auto params = MarketParams::constant(0.0, 1.0, 2.0, q, horizon, DemandShape{false, 1.0});
      const GridSpec grid = GridSpec::covering(params, points);
      const auto table = solve_dp(params, grid);
      for (int t = 1; t <= horizon; ++t) {
        const double oracle = table.price(t, t == 1 ? kNoCeiling : high_price(params), Demand::Low);
        const double err = std::abs(oracle - t_period_low_target(t, params));
        worst_target = std::max(worst_target, err);
      }
      const auto policy = t_period_policy(params);
      const double flex = q * high_price(params) + (1.0 - q) * low_price(params);
      worst_neutral = std::max(worst_neutral, std::abs(enumerate_expectation(policy, params).expected_avg_price - flex));
      for_each_path(policy, params, [&](const DemandPath&, double, const PathOutcome& o) {
        for (std::size_t i = 1; i < o.prices.size(); ++i)
          if (o.prices[i] > o.prices[i - 1]) ++rising_paths;
      });
    }
  }
  {
    const double step = (2.0 - 0.0) / (points - 1);
    const double tol = options.oracle_tolerance.value_or(2.0 * step);
    out.push_back(detail::make_check("tperiod_targets_oracle", 0.0, worst_target, tol, "T=2..8, q=0.25/0.5/0.75"));
  }
  out.push_back(detail::make_check("tperiod_neutrality", 0.0, worst_neutral, 1e-12, "T=2..8, q=0.25/0.5/0.75"));
  out.push_back(detail::make_check("tperiod_monotone_paths", 0.0, static_cast<double>(rising_paths), 0.0,
                                   "count of price increases after period 1"));

  // Marginal value of the ceiling, T = 3, q = 0.5, c = 0.
  {
    const auto params = MarketParams::constant(0.0, 1.0, 2.0, 0.5, 3, DemandShape{false, 1.0});
    const GridSpec grid = GridSpec::covering(params, points);
    const auto table = solve_dp(params, grid);
    double worst = 0.0;
    for (int t = 1; t <= 3; ++t) {
      const double from = std::max(low_price(params), t_period_low_target(t, params));
      for (int i = 1; i + 1 < grid.points; ++i) {
        const double x = grid.at(i);
        if (grid.at(i - 1) <= from || grid.at(i + 1) > high_price(params)) continue;
        if (x >= high_price(params)) continue;
        const double fd = (table.continuation_value(t, i + 1) - table.continuation_value(t, i - 1)) /
                          (grid.at(i + 1) - grid.at(i - 1));
        const double exact = marginal_ceiling_value(t, x, params);
        worst = std::max(worst, std::abs(fd - exact) / std::abs(exact));
      }
    }
    out.push_back(detail::make_check("lemma1_ceiling_marginal_value", 0.0, worst, 0.02, "max relative error"));
  }

  // Affine expected price sum.
  {
    double worst = 0.0;
    for (int horizon = 2; horizon <= 8; ++horizon) {
      for (double q : {0.25, 0.5, 0.75}) {
        const auto params = MarketParams::constant(0.0, 1.0, 2.0, q, horizon, DemandShape{false, 1.0});
        const auto policy = t_period_policy(params);
        for (int t = 1; t <= horizon; ++t) {
          const double lo = std::max(low_price(params), t_period_low_target(t, params));
          const double hi = high_price(params);
          const double xs[3] = {lo, 0.5 * (lo + hi), hi};
          double sums[3];
          for (int k = 0; k < 3; ++k) sums[k] = expected_price_sum_from(policy, params, t, xs[k]);
          const double slope = q * geometric_sum(horizon - t, q);
          const double predicted = sums[0] + slope * (xs[2] - xs[0]);
          worst = std::max({worst, std::abs(sums[2] - predicted),
                            std::abs(sums[1] - (sums[0] + slope * (xs[1] - xs[0])))});
        }
      }
    }
    out.push_back(detail::make_check("lemma3_affine_price_sum", 0.0, worst, 1e-10, "max collinearity residual"));
  }

  // Curvature extension, canonical instance.
  {
    double worst_neutral_a1 = 0.0;
    for (int k = 1; k <= 9; ++k) worst_neutral_a1 = std::max(worst_neutral_a1, std::abs(delta(NonlinearInstance(0.1 * k, 1.0))));
    out.push_back(detail::make_check("prop4_linear_neutrality", 0.0, worst_neutral_a1, 1e-12, "q=0.1..0.9"));

    double worst_agree = 0.0;
    int wrong_sign = 0;
    std::string cells;
    for (double q : {0.25, 0.5, 0.75}) {
      for (double a : {0.9, 1.1}) {
        const NonlinearInstance inst(q, a);
        const double formula = delta(inst);
        const double enumerated = delta_by_enumeration(inst);
        worst_agree = std::max(worst_agree, std::abs(formula - enumerated));
        const bool expected_positive = a < 1.0;
        if ((formula > 0.0) != expected_positive || (enumerated > 0.0) != expected_positive) {
          ++wrong_sign;
          cells += " (q=" + detail::format_number(q) + ",a=" + detail::format_number(a) +
                   ",delta=" + detail::format_number(formula) + ")";
        }
      }
    }
    out.push_back(detail::make_check("prop4_enumeration_agreement", 0.0, worst_agree, 1e-10));
    out.push_back(detail::make_check("prop4_sign_pattern", 0.0, wrong_sign, 0.0,
                                     "cells violating delta(q,0.9)>0, delta(q,1.1)<0:" + cells));
  }
  return out;
}

}  // namespace ratchet
