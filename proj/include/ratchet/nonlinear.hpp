#pragma once

// Two-period regulated pricing under demand (d - p)^a with zero marginal cost:
// the period-1 low-state first-order condition, the regulated-minus-flexible
// expected price gap, and sweeps of that gap over (q, a).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ratchet/dp_oracle.hpp"
#include "ratchet/model.hpp"
#include "ratchet/policy.hpp"

namespace ratchet {

inline constexpr double kCanonicalHighIntercept = 1.0;
inline constexpr double kCanonicalLowIntercept = 0.5;

class NonlinearInstance {
 public:
  NonlinearInstance(double q, double a, double d_high = kCanonicalHighIntercept,
                    double d_low = kCanonicalLowIntercept)
      : params_(MarketParams::constant(0.0, d_low, d_high, q, 2, DemandShape{true, a})) {
    if (!(bracket_lo() < bracket_hi()))
      throw InteriorRegimeViolated("empty bracket (p_L(a), min{d_L, p_H(a)})");
  }

  double q() const { return params_.gamma(1); }
  double a() const { return params_.exponent(); }
  double d_high() const { return params_.d_high(); }
  double d_low() const { return params_.d_low(); }
  double p_high() const { return high_price(params_); }
  double p_low() const { return low_price(params_); }
  const MarketParams& params() const { return params_; }

  double bracket_lo() const { return p_low(); }
  double bracket_hi() const { return std::min(d_low(), p_high()); }

  bool canonical() const { return d_high() == kCanonicalHighIntercept && d_low() == kCanonicalLowIntercept; }

 private:
  MarketParams params_;
};

// F(p; q, a) = q (d_H - p)^{a-1} (p_H - p) - (d_L - p)^{a-1} (p - p_L).
inline double foc_residual(double p, const NonlinearInstance& inst) {
  if (!(p < inst.d_low())) throw DomainError("foc_residual: requires p < d_low");
  const double a = inst.a();
  const double high = inst.q() * std::pow(inst.d_high() - p, a - 1.0) * (inst.p_high() - p);
  const double low = std::pow(inst.d_low() - p, a - 1.0) * (p - inst.p_low());
  return high - low;
}

// Root of F on (p_L, min{d_L, p_H}) by bisection; tol = 0 runs to machine precision.
inline double solve_p1_low(const NonlinearInstance& inst, double tol = 0.0) {
  double lo = inst.bracket_lo();
  double hi = inst.bracket_hi();
  const double eps = 1e-9 * (hi - lo);
  if (!(foc_residual(lo + eps, inst) > 0.0))
    throw InteriorRegimeViolated("interior regime violated at lower endpoint p_L(a) = " + std::to_string(lo));
  if (!(foc_residual(hi - eps, inst) < 0.0))
    throw InteriorRegimeViolated("interior regime violated at upper endpoint min{d_L, p_H(a)} = " +
                                 std::to_string(hi));
  lo += eps;
  hi -= eps;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (foc_residual(mid, inst) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Period 1: p_H(a) if High, p_1^L if Low. Period 2: min{x, p_H(a)} if High, p_L(a) if Low.
inline Policy nonlinear_two_period_policy(const NonlinearInstance& inst) {
  const double ph = inst.p_high();
  const double pl = inst.p_low();
  const double p1_low = solve_p1_low(inst);
  return Policy(PolicyKind::RegulatedClosedForm, 2, [=](int t, double x, Demand s) {
    if (t == 1) return s == Demand::High ? ph : p1_low;
    return s == Demand::High ? std::min(x, ph) : std::min(x, pl);
  });
}

// Delta(q, a) = ((1 - q)/2) [(1 + q) p_1^L - q p_H - p_L].
inline double delta(const NonlinearInstance& inst) {
  const double q = inst.q();
  return 0.5 * (1.0 - q) * ((1.0 + q) * solve_p1_low(inst) - q * inst.p_high() - inst.p_low());
}

// Same gap, by exact enumeration of both policies over the four demand paths.
inline double delta_by_enumeration(const NonlinearInstance& inst) {
  const auto regulated = enumerate_expectation(nonlinear_two_period_policy(inst), inst.params());
  const auto flexible = enumerate_expectation(flexible_policy(inst.params()), inst.params());
  return regulated.expected_avg_price - flexible.expected_avg_price;
}

inline void require_slope_step(double h) {
  if (!(h > 0.0 && h <= 0.1)) throw DomainError("delta_slope_fd: h must lie in (0, 0.1]");
}

// Central difference of Delta in a at a = 1 on the canonical instance.
inline double delta_slope_fd(double q, double h) {
  require_slope_step(h);
  return (delta(NonlinearInstance(q, 1.0 + h)) - delta(NonlinearInstance(q, 1.0 - h))) / (2.0 * h);
}

// q (q - 1) log(2q + 3) / (8 (1 + q)): reference analytic slope at a = 1
// for the canonical instance (d_H = 1, d_L = 0.5, c = 0).
inline double delta_slope_closed(double q) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("delta_slope_closed: q must lie in (0, 1)");
  return q * (q - 1.0) * std::log(2.0 * q + 3.0) / (8.0 * (1.0 + q));
}

inline double delta_slope_closed(const NonlinearInstance& inst) {
  if (!inst.canonical())
    throw UnsupportedConfiguration("delta_slope_closed: defined only for d_H = 1, d_L = 0.5, c = 0");
  return delta_slope_closed(inst.q());
}

struct SlopeAuditRow {
  double q;
  double fd;          // step h
  double fd_half;     // step h/2
  double closed;
  double ratio;       // fd / closed
};

inline std::vector<SlopeAuditRow> slope_audit(const std::vector<double>& qs, double h = 1e-3) {
  std::vector<SlopeAuditRow> rows;
  for (double q : qs) {
    const double fd = delta_slope_fd(q, h);
    const double closed = delta_slope_closed(q);
    rows.push_back({q, fd, delta_slope_fd(q, 0.5 * h), closed, fd / closed});
  }
  return rows;
}

enum class CellStatus { Ok, Infeasible };

inline const char* to_string(CellStatus s) { return s == CellStatus::Ok ? "ok" : "infeasible"; }

struct DeltaRow {
  double q;
  double a;
  std::optional<double> delta;
  CellStatus status;
};

namespace detail {

inline std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Evaluates cell(i) for i in [0, count) on `workers` threads; results land at
// their own index, so completion order does not matter.
template <class Fn>
void parallel_cells(std::size_t count, unsigned workers, Fn&& cell) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) cell(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) cell(i);
    });
  }
}

}  // namespace detail

inline DeltaRow delta_cell(double q, double a, double d_high = kCanonicalHighIntercept,
                           double d_low = kCanonicalLowIntercept) {
  try {
    return {q, a, delta(NonlinearInstance(q, a, d_high, d_low)), CellStatus::Ok};
  } catch (const InteriorRegimeViolated&) {
    return {q, a, std::nullopt, CellStatus::Infeasible};
  } catch (const ValidationError&) {
    return {q, a, std::nullopt, CellStatus::Infeasible};
  }
}

// Two-period Delta over the (q, a) grid, rows in lexicographic (q, a) order.
inline std::vector<DeltaRow> sweep_delta(const std::vector<double>& q_grid, const std::vector<double>& a_grid,
                                         unsigned workers = 1, double d_high = kCanonicalHighIntercept,
                                         double d_low = kCanonicalLowIntercept) {
  const auto qs = detail::sorted_unique(q_grid);
  const auto as = detail::sorted_unique(a_grid);
  std::vector<DeltaRow> rows(qs.size() * as.size());
  detail::parallel_cells(rows.size(), workers, [&](std::size_t i) {
    rows[i] = delta_cell(qs[i / as.size()], as[i % as.size()], d_high, d_low);
  });
  return rows;
}

}  // namespace ratchet
