#pragma once

// Brute-force verification engine: backward induction on a uniform price
// grid, exact expectations over all 2^T demand paths, and a golden-section
// maximizer for continuous polishing.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "ratchet/model.hpp"
#include "ratchet/policy.hpp"

namespace ratchet {

struct GridSpec {
  double lo = 0.0;
  double hi = 1.0;
  int points = 2001;

  double step() const { return (hi - lo) / (points - 1); }
  double at(int i) const { return i == points - 1 ? hi : lo + step() * i; }

  // Largest grid index whose value does not exceed x (clamped to the grid).
  int floor_index(double x) const {
    if (!(x < hi)) return points - 1;
    if (x <= lo) return 0;
    const double pos = (x - lo) / step();
    int i = static_cast<int>(std::floor(pos + 1e-9));
    return std::clamp(i, 0, points - 1);
  }

  void validate() const {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) throw ValidationError("grid: need finite lo < hi");
    if (points < 2) throw ValidationError("grid: points must be >= 2");
  }

  // Default oracle grid on [c, d_high].
  static GridSpec covering(const MarketParams& params, int points = 2001) {
    return GridSpec{params.cost(), params.d_high(), points};
  }
};

// Grid solution of the regulated problem. Ceilings live on the price grid, so
// every state the policy can reach is a grid index.
class TabulatedPolicy {
 public:
  TabulatedPolicy(GridSpec grid, int horizon)
      : grid_(grid),
        horizon_(horizon),
        choice_(static_cast<std::size_t>(horizon) * grid.points * 2, 0),
        value_(static_cast<std::size_t>(horizon + 1) * grid.points, 0.0) {}

  PolicyKind kind() const { return PolicyKind::Tabulated; }
  int horizon() const { return horizon_; }
  const GridSpec& grid() const { return grid_; }

  int price_index(int t, int ceiling_index, Demand s) const { return choice_[choice_slot(t, ceiling_index, s)]; }

  double price(int t, double ceiling, Demand s) const {
    if (t < 1 || t > horizon_) throw DomainError("period index out of range: " + std::to_string(t));
    return grid_.at(price_index(t, grid_.floor_index(ceiling), s));
  }

  // Ex-ante continuation value W_t at a grid ceiling; W_{T+1} = 0.
  double continuation_value(int t, int ceiling_index) const { return value_[value_slot(t, ceiling_index)]; }

  int& choice_ref(int t, int ceiling_index, Demand s) { return choice_[choice_slot(t, ceiling_index, s)]; }
  double& value_ref(int t, int ceiling_index) { return value_[value_slot(t, ceiling_index)]; }

 private:
  std::size_t choice_slot(int t, int i, Demand s) const {
    return (static_cast<std::size_t>(t - 1) * grid_.points + i) * 2 + (s == Demand::High ? 0 : 1);
  }
  std::size_t value_slot(int t, int i) const { return static_cast<std::size_t>(t - 1) * grid_.points + i; }

  GridSpec grid_;
  int horizon_;
  std::vector<int> choice_;
  std::vector<double> value_;
};

// Backward induction over t = T..1. For every grid ceiling x the chosen price
// maximizes profit(p, d) + W_{t+1}(p) over grid prices p <= x. Exactly equal
// objective values resolve to the lowest such price.
inline TabulatedPolicy solve_dp(const MarketParams& params, const GridSpec& grid) {
  grid.validate();
  if (grid.points < 201) throw ValidationError("grid: solve_dp needs at least 201 points");
  if (grid.lo > params.cost() || grid.hi < params.d_high())
    throw ValidationError("grid: must cover [c, d_high]");

  const int horizon = params.horizon();
  const int n = grid.points;
  TabulatedPolicy policy(grid, horizon);

  std::vector<double> profit_high(n), profit_low(n);
  for (int j = 0; j < n; ++j) {
    profit_high[j] = profit(grid.at(j), params.d_high(), params);
    profit_low[j] = profit(grid.at(j), params.d_low(), params);
  }

  std::vector<double> next(n, 0.0);  // W_{t+1}
  std::vector<double> best_high(n), best_low(n);
  for (int t = horizon; t >= 1; --t) {
    for (Demand s : {Demand::High, Demand::Low}) {
      const auto& current = s == Demand::High ? profit_high : profit_low;
      auto& best = s == Demand::High ? best_high : best_low;
      int arg = 0;
      double top = current[0] + next[0];
      for (int i = 0; i < n; ++i) {
        const double objective = current[i] + next[i];
        if (objective > top) {
          top = objective;
          arg = i;
        }
        best[i] = top;
        policy.choice_ref(t, i, s) = arg;
      }
    }
    const double g = params.gamma(t);
    for (int i = 0; i < n; ++i) {
      next[i] = g * best_high[i] + (1.0 - g) * best_low[i];
      policy.value_ref(t, i) = next[i];
    }
  }
  return policy;
}

struct ExpectationReport {
  double expected_avg_price = 0.0;
  double expected_total_profit = 0.0;
  std::optional<double> expected_total_cs;  // linear demand only
  std::vector<double> per_period_expected_price;
  std::uint64_t path_count = 0;
  double probability_mass = 0.0;
};

inline constexpr int kMaxEnumerationHorizon = 20;

// Bit t-1 of `index` set means period t is High.
inline DemandPath demand_path_from_index(std::uint64_t index, int horizon) {
  DemandPath path(static_cast<std::size_t>(horizon));
  for (int t = 0; t < horizon; ++t) path[t] = (index >> t) & 1u ? Demand::High : Demand::Low;
  return path;
}

inline double path_probability(const DemandPath& path, const MarketParams& params) {
  double prob = 1.0;
  for (std::size_t i = 0; i < path.size(); ++i) prob *= params.probability(static_cast<int>(i) + 1, path[i]);
  return prob;
}

// Calls visit(path, probability, outcome) for every one of the 2^T demand paths
// in increasing path-index order.
template <PricingRule P, class Visitor>
void for_each_path(const P& policy, const MarketParams& params, Visitor&& visit) {
  const int horizon = params.horizon();
  if (horizon > kMaxEnumerationHorizon)
    throw UnsupportedConfiguration("exact enumeration is limited to T <= 20; use Monte Carlo");
  const std::uint64_t count = std::uint64_t{1} << horizon;
  for (std::uint64_t index = 0; index < count; ++index) {
    const DemandPath path = demand_path_from_index(index, horizon);
    const double prob = path_probability(path, params);
    const PathOutcome outcome = evaluate_path(simulate_prices(policy, path), path, params);
    visit(path, prob, outcome);
  }
}

template <PricingRule P>
ExpectationReport enumerate_expectation(const P& policy, const MarketParams& params) {
  ExpectationReport report;
  const int horizon = params.horizon();
  report.per_period_expected_price.assign(static_cast<std::size_t>(horizon), 0.0);
  double cs_total = 0.0;
  for_each_path(policy, params, [&](const DemandPath&, double prob, const PathOutcome& out) {
    report.expected_avg_price += prob * out.avg_price;
    report.expected_total_profit += prob * out.total_profit;
    cs_total += prob * out.total_cs;
    for (int t = 0; t < horizon; ++t) report.per_period_expected_price[t] += prob * out.prices[t];
    report.probability_mass += prob;
    ++report.path_count;
  });
  if (params.linear()) report.expected_total_cs = cs_total;
  return report;
}

// E[sum_{tau >= t} p_tau | x_t = ceiling], by enumerating the 2^{T-t+1}
// continuations of period t.
template <PricingRule P>
double expected_price_sum_from(const P& policy, const MarketParams& params, int t, double ceiling) {
  const int horizon = params.horizon();
  if (t < 1 || t > horizon) throw DomainError("expected_price_sum_from: period out of range");
  const int remaining = horizon - t + 1;
  if (remaining > kMaxEnumerationHorizon) throw UnsupportedConfiguration("too many periods to enumerate");
  double total = 0.0;
  const std::uint64_t count = std::uint64_t{1} << remaining;
  for (std::uint64_t index = 0; index < count; ++index) {
    double prob = 1.0;
    double sum = 0.0;
    double x = ceiling;
    for (int k = 0; k < remaining; ++k) {
      const Demand s = (index >> k) & 1u ? Demand::High : Demand::Low;
      prob *= params.probability(t + k, s);
      const double p = policy.price(t + k, x, s);
      sum += p;
      x = p;
    }
    total += prob * sum;
  }
  return total;
}

struct ScalarMax {
  double argmax;
  double max;
};

// Golden-section search for the maximizer of a unimodal function on [lo, hi].
inline ScalarMax golden_section_max(const std::function<double(double)>& objective, double lo, double hi,
                                    double tol) {
  if (!(lo < hi)) throw ValidationError("golden_section_max: need lo < hi");
  if (!(tol > 0.0)) throw ValidationError("golden_section_max: tol must be > 0");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = objective(c), fd = objective(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, objective(x)};
}

}  // namespace ratchet
