#pragma once

// Analytic policies and expectations for the flexible benchmark, the
// two-period regulated problem, and the T-period regulated problem with a
// constant high-state probability.

#include <algorithm>
#include <optional>
#include <string>

#include "ratchet/model.hpp"
#include "ratchet/policy.hpp"

namespace ratchet {

enum class Regime { Interior, Corner };

inline const char* to_string(Regime r) { return r == Regime::Interior ? "Interior" : "Corner"; }

namespace detail {

inline void require_two_period_linear(const MarketParams& params, const char* op) {
  if (params.horizon() != 2)
    throw UnsupportedConfiguration(std::string(op) + ": requires T = 2, got T = " +
                                   std::to_string(params.horizon()));
  if (!params.linear()) throw UnsupportedConfiguration(std::string(op) + ": requires exponent_a = 1");
  if (!params.truncated()) throw UnsupportedConfiguration(std::string(op) + ": requires truncated demand");
}

inline void require_t_period_domain(const MarketParams& params, const char* op) {
  if (!params.linear()) throw UnsupportedConfiguration(std::string(op) + ": requires exponent_a = 1");
  if (params.truncated())
    throw UnsupportedConfiguration(std::string(op) + ": closed form holds only for untruncated demand");
  if (!params.constant_gamma())
    throw UnsupportedConfiguration(std::string(op) + ": closed form requires a constant high-state probability");
}

}  // namespace detail

// Demand-gap ratio (d_H - d_L)/(d_L - c).
inline double kappa(const MarketParams& params) {
  return (params.d_high() - params.d_low()) / (params.d_low() - params.cost());
}

// Corner threshold on gamma_2; empty when c + d_H - 2 d_L <= 0.
inline std::optional<double> gamma_tilde(const MarketParams& params) {
  const double denom = params.cost() + params.d_high() - 2.0 * params.d_low();
  if (!(denom > 0.0)) return std::nullopt;
  return (params.d_low() - params.cost()) / denom;
}

inline Regime regime_classify(const MarketParams& params) {
  detail::require_two_period_linear(params, "regime_classify");
  const auto threshold = gamma_tilde(params);
  if (kappa(params) > 2.0 && threshold && params.gamma(2) >= *threshold) return Regime::Corner;
  return Regime::Interior;
}

// gamma_tilde marks where the interior candidate reaches d_L; it does not
// compare values. Pricing at p_H in the low state (zero current profit, full
// flexibility kept) beats the interior candidate iff gamma_2 > gamma_star, with
// gamma_star = (p_L - c)^2 / ((p_H - c)(p_H + c - 2 p_L)) < gamma_tilde.
// Defined exactly when gamma_tilde is (p_H > d_L).
inline std::optional<double> corner_value_threshold(const MarketParams& params) {
  if (!gamma_tilde(params)) return std::nullopt;
  const double c = params.cost();
  const double ph = high_price(params) - c;
  const double pl = low_price(params) - c;
  return pl * pl / (ph * (ph - 2.0 * pl));
}

// Regime chosen by comparing the two local maxima of the period-1 low-state
// objective. Agrees with regime_classify outside [gamma_star, gamma_tilde).
inline Regime regime_classify_by_value(const MarketParams& params) {
  detail::require_two_period_linear(params, "regime_classify_by_value");
  const auto threshold = corner_value_threshold(params);
  return threshold && params.gamma(2) > *threshold ? Regime::Corner : Regime::Interior;
}

// Unconstrained period-1 low-state candidate (p_L + gamma_2 p_H)/(1 + gamma_2).
inline double interior_low_price(const MarketParams& params) {
  const double g2 = params.gamma(2);
  return (low_price(params) + g2 * high_price(params)) / (1.0 + g2);
}

inline double two_period_low_price(const MarketParams& params) {
  return regime_classify(params) == Regime::Corner ? high_price(params) : interior_low_price(params);
}

inline Policy two_period_policy(const MarketParams& params) {
  detail::require_two_period_linear(params, "two_period_policy");
  const double ph = high_price(params);
  const double pl = low_price(params);
  const double p1_low = two_period_low_price(params);
  return Policy(PolicyKind::RegulatedClosedForm, 2, [=](int t, double x, Demand s) {
    if (t == 1) return s == Demand::High ? ph : p1_low;
    return s == Demand::High ? std::min(x, ph) : std::min(x, pl);
  });
}

inline double expected_avg_price_flexible(const MarketParams& params) {
  if (!params.linear()) throw UnsupportedConfiguration("expected_avg_price_flexible: requires exponent_a = 1");
  const double ph = high_price(params);
  const double pl = low_price(params);
  double sum = 0.0;
  for (double g : params.gammas()) sum += g * ph + (1.0 - g) * pl;
  return sum / params.horizon();
}

inline double expected_avg_price_regulated_2p(const MarketParams& params) {
  detail::require_two_period_linear(params, "expected_avg_price_regulated_2p");
  if (regime_classify(params) == Regime::Interior) return expected_avg_price_flexible(params);
  const double ph = high_price(params);
  const double pl = low_price(params);
  const double g2 = params.gamma(2);
  return 0.5 * (ph + g2 * ph + (1.0 - g2) * pl);
}

// E[CS regulated] - E[CS flexible] over the two periods.
inline double expected_cs_diff_2p(const MarketParams& params) {
  detail::require_two_period_linear(params, "expected_cs_diff_2p");
  const double g1 = params.gamma(1);
  if (regime_classify(params) == Regime::Interior) {
    const double g2 = params.gamma(2);
    const double gap = params.d_high() - params.d_low();
    return (1.0 - g1) * 3.0 * g2 * gap * gap / (8.0 * (1.0 + g2));
  }
  const double dl = params.d_low();
  return (1.0 - g1) * (cs(high_price(params), dl, params) - cs(low_price(params), dl, params));
}

// S_n = 1 + q + ... + q^n.
inline double geometric_sum(int n, double q) {
  if (n < 0) throw DomainError("geometric_sum: n must be >= 0");
  double s = 1.0;
  for (int k = 0; k < n; ++k) s = 1.0 + q * s;
  return s;
}

// Low-state target pbar_t = p_H - (p_H - p_L)/S_{T-t}.
inline double t_period_low_target(int t, const MarketParams& params) {
  detail::require_t_period_domain(params, "t_period_low_target");
  const int horizon = params.horizon();
  if (t < 1 || t > horizon) throw DomainError("t_period_low_target: period out of range");
  const double ph = high_price(params);
  const double pl = low_price(params);
  return ph - (ph - pl) / geometric_sum(horizon - t, params.gamma(1));
}

// W_t'(x) = q S_{T-t} (d_H + c - 2x). With c = 0 this is the stated
// q S_{T-t} (d_H - 2x); the c > 0 term is extrapolated from the recursion.
inline double marginal_ceiling_value(int t, double x, const MarketParams& params) {
  detail::require_t_period_domain(params, "marginal_ceiling_value");
  const int horizon = params.horizon();
  if (t < 1 || t > horizon) throw DomainError("marginal_ceiling_value: period out of range");
  const double ph = high_price(params);
  const double pl = low_price(params);
  if (x < pl || x > ph) throw DomainError("marginal_ceiling_value: ceiling must lie in [p_L, p_H]");
  const double q = params.gamma(1);
  return q * geometric_sum(horizon - t, q) * (params.d_high() + params.cost() - 2.0 * x);
}

inline Policy t_period_policy(const MarketParams& params) {
  detail::require_t_period_domain(params, "t_period_policy");
  const int horizon = params.horizon();
  std::vector<double> targets;
  for (int t = 1; t <= horizon; ++t) targets.push_back(t_period_low_target(t, params));
  const double ph = high_price(params);
  return Policy(PolicyKind::RegulatedClosedForm, horizon, [ph, targets](int t, double x, Demand s) {
    const double want = s == Demand::High ? ph : targets[static_cast<std::size_t>(t - 1)];
    return std::min(x, want);
  });
}

inline bool has_regulated_closed_form(const MarketParams& params) {
  if (!params.linear()) return false;
  if (params.truncated()) return params.horizon() == 2;
  return params.constant_gamma();
}

// Two-period truncated form or T-period untruncated form, whichever applies.
inline Policy regulated_closed_form_policy(const MarketParams& params) {
  if (params.linear() && params.truncated() && params.horizon() == 2) return two_period_policy(params);
  if (params.linear() && !params.truncated() && params.constant_gamma()) return t_period_policy(params);
  throw UnsupportedConfiguration(
      "no closed-form regulated policy for this configuration; use the tabulated oracle policy");
}

}  // namespace ratchet
