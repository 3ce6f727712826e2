#pragma once

#include <concepts>
#include <functional>
#include <limits>
#include <memory>
#include <utility>

#include "ratchet/model.hpp"

namespace ratchet {

enum class PolicyKind { Flexible, RegulatedClosedForm, Tabulated };

// Ceiling passed to period 1, where no earlier price constrains the firm.
inline constexpr double kNoCeiling = std::numeric_limits<double>::infinity();

// A pricing rule maps (1-based period, inherited ceiling, demand state) to a price.
template <class P>
concept PricingRule = requires(const P& p, int t, double ceiling, Demand s) {
  { p.price(t, ceiling, s) } -> std::convertible_to<double>;
  { p.kind() } -> std::same_as<PolicyKind>;
};

class Policy {
 public:
  using Rule = std::function<double(int, double, Demand)>;

  Policy(PolicyKind kind, int horizon, Rule rule) : kind_(kind), horizon_(horizon), rule_(std::move(rule)) {}

  // Type-erases any pricing rule (e.g. a TabulatedPolicy) while sharing ownership.
  template <PricingRule P>
    requires(!std::same_as<std::remove_cvref_t<P>, Policy>)
  static Policy wrap(P rule, int horizon) {
    auto held = std::make_shared<const P>(std::move(rule));
    const PolicyKind kind = held->kind();
    return Policy(kind, horizon, [held](int t, double x, Demand s) { return held->price(t, x, s); });
  }

  PolicyKind kind() const { return kind_; }
  int horizon() const { return horizon_; }

  double price(int t, double ceiling, Demand s) const {
    if (t < 1 || t > horizon_) throw DomainError("period index out of range: " + std::to_string(t));
    return rule_(t, ceiling, s);
  }

 private:
  PolicyKind kind_;
  int horizon_;
  Rule rule_;
};

// Static monopoly price of the realized state; the ceiling is ignored.
inline Policy flexible_policy(const MarketParams& params) {
  const double hi = high_price(params);
  const double lo = low_price(params);
  return Policy(PolicyKind::Flexible, params.horizon(),
                [hi, lo](int, double, Demand s) { return s == Demand::High ? hi : lo; });
}

// Runs a rule along a demand path, threading x_{t+1} = p_t.
template <PricingRule P>
PricePath simulate_prices(const P& policy, const DemandPath& path) {
  PricePath prices;
  prices.reserve(path.size());
  double ceiling = kNoCeiling;
  for (std::size_t i = 0; i < path.size(); ++i) {
    const double p = policy.price(static_cast<int>(i) + 1, ceiling, path[i]);
    prices.push_back(p);
    ceiling = p;
  }
  return prices;
}

}  // namespace ratchet
