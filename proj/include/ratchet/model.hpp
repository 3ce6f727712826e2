#pragma once

// Economic environment: two-state demand intercepts, constant marginal cost,
// per-period probabilities of the high state, and the demand shape.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ratchet/errors.hpp"

namespace ratchet {

enum class Demand : std::uint8_t { High, Low };

inline const char* to_string(Demand s) { return s == Demand::High ? "High" : "Low"; }

// Quantity is (max{d - p, 0})^exponent when truncated, d - p otherwise.
struct DemandShape {
  bool truncated = true;
  double exponent = 1.0;
};

class MarketParams {
 public:
  MarketParams(double cost, double d_low, double d_high, std::vector<double> gammas,
               DemandShape shape = {})
      : cost_(cost), d_low_(d_low), d_high_(d_high), gammas_(std::move(gammas)), shape_(shape) {
    validate();
  }

  // Same high-state probability q in every one of `horizon` periods.
  static MarketParams constant(double cost, double d_low, double d_high, double q, int horizon,
                               DemandShape shape = {}) {
    if (horizon < 2) throw ValidationError("T: horizon must be at least 2");
    return MarketParams(cost, d_low, d_high, std::vector<double>(static_cast<std::size_t>(horizon), q),
                        shape);
  }

  double cost() const { return cost_; }
  double d_low() const { return d_low_; }
  double d_high() const { return d_high_; }
  double intercept(Demand s) const { return s == Demand::High ? d_high_ : d_low_; }

  int horizon() const { return static_cast<int>(gammas_.size()); }
  std::span<const double> gammas() const { return gammas_; }

  // Probability of the high state in 1-based period t.
  double gamma(int t) const {
    if (t < 1 || t > horizon()) throw DomainError("period index out of range: " + std::to_string(t));
    return gammas_[static_cast<std::size_t>(t - 1)];
  }
  double probability(int t, Demand s) const {
    const double g = gamma(t);
    return s == Demand::High ? g : 1.0 - g;
  }

  bool constant_gamma() const {
    return std::all_of(gammas_.begin(), gammas_.end(), [&](double g) { return g == gammas_.front(); });
  }

  bool truncated() const { return shape_.truncated; }
  double exponent() const { return shape_.exponent; }
  bool linear() const { return shape_.exponent == 1.0; }
  const DemandShape& shape() const { return shape_; }

 private:
  void validate() const {
    if (!std::isfinite(cost_) || cost_ < 0.0) throw ValidationError("c: marginal cost must be finite and >= 0");
    if (!std::isfinite(d_low_) || !std::isfinite(d_high_))
      throw ValidationError("d_low/d_high: demand intercepts must be finite");
    if (!(d_low_ > cost_)) throw ValidationError("d_low: must exceed marginal cost c");
    if (!(d_high_ > d_low_)) throw ValidationError("d_high: must exceed d_low");
    if (gammas_.size() < 2) throw ValidationError("gammas: horizon T must be at least 2");
    for (std::size_t i = 0; i < gammas_.size(); ++i) {
      const double g = gammas_[i];
      if (!(g > 0.0 && g < 1.0))
        throw ValidationError("gammas[" + std::to_string(i) + "]: probability must lie strictly in (0,1)");
    }
    if (!std::isfinite(shape_.exponent) || !(shape_.exponent > 0.0))
      throw ValidationError("exponent_a: must be finite and > 0");
    if (!shape_.truncated && shape_.exponent != 1.0)
      throw ValidationError("truncated: untruncated demand requires exponent_a = 1");
    if (shape_.exponent != 1.0 && cost_ != 0.0)
      throw ValidationError("exponent_a: nonlinear demand requires c = 0");
  }

  double cost_;
  double d_low_;
  double d_high_;
  std::vector<double> gammas_;
  DemandShape shape_;
};

using DemandPath = std::vector<Demand>;
using PricePath = std::vector<double>;

inline double quantity(double p, double d, const MarketParams& params) {
  if (!(p >= 0.0)) throw ValidationError("price must be >= 0");
  if (!params.truncated()) return d - p;
  const double gap = std::max(d - p, 0.0);
  return params.linear() ? gap : std::pow(gap, params.exponent());
}

inline double profit(double p, double d, const MarketParams& params) {
  return (p - params.cost()) * quantity(p, d, params);
}

// Consumer surplus under linear demand: area of the demand triangle above p.
inline double cs(double p, double d, const MarketParams& params) {
  if (!params.linear()) throw UnsupportedConfiguration("consumer surplus is defined only for exponent_a = 1");
  const double gap = std::max(d - p, 0.0);
  return 0.5 * gap * gap;
}

// Maximizer of profit(., d). (d + c)/2 for linear demand; d/(1 + a) otherwise
// (c = 0 is guaranteed by MarketParams).
inline double static_monopoly_price(double d, const MarketParams& params) {
  if (!(d > params.cost())) throw DomainError("static monopoly price requires d > c");
  if (params.linear()) return 0.5 * (d + params.cost());
  return d / (1.0 + params.exponent());
}

inline double high_price(const MarketParams& params) { return static_monopoly_price(params.d_high(), params); }
inline double low_price(const MarketParams& params) { return static_monopoly_price(params.d_low(), params); }
inline double static_price(Demand s, const MarketParams& params) {
  return static_monopoly_price(params.intercept(s), params);
}

struct PathOutcome {
  PricePath prices;
  double avg_price = 0.0;
  double total_profit = 0.0;
  double total_cs = 0.0;  // left at 0 for nonlinear demand
};

inline PathOutcome evaluate_path(PricePath prices, const DemandPath& path, const MarketParams& params) {
  if (prices.size() != path.size() || static_cast<int>(path.size()) != params.horizon())
    throw ValidationError("price and demand paths must both have length T");
  PathOutcome out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    const double d = params.intercept(path[i]);
    out.total_profit += profit(prices[i], d, params);
    if (params.linear()) out.total_cs += cs(prices[i], d, params);
  }
  out.avg_price = std::accumulate(prices.begin(), prices.end(), 0.0) / static_cast<double>(prices.size());
  out.prices = std::move(prices);
  return out;
}

}  // namespace ratchet
