#pragma once

// Seeded Monte Carlo policy evaluation and a synthetic intraday price-archive
// generator.
//
// Randomness is counter-based: every uniform draw is a pure function of
// (seed, replication, slot, lane), computed as
//
//   h = splitmix64(seed)
//   h = splitmix64(h ^ replication)
//   h = splitmix64(h ^ (slot << 8 | lane))
//   u = (h >> 11) * 2^-53
//
// where splitmix64 is the standard finalizer of Steele, Lea and Flood (2014).
// Demand for period t uses slot = t, lane = 0. Replications are therefore
// independent of evaluation order and worker count.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "ratchet/closed_form.hpp"
#include "ratchet/dp_oracle.hpp"
#include "ratchet/empirics.hpp"
#include "ratchet/model.hpp"
#include "ratchet/nonlinear.hpp"
#include "ratchet/policy.hpp"

namespace ratchet {

namespace rng {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t stream_word(std::uint64_t seed, std::uint64_t replication, std::uint64_t slot,
                                           std::uint64_t lane = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ replication);
  return splitmix64(h ^ ((slot << 8) | (lane & 0xffu)));
}

// Uniform on [0, 1).
inline constexpr double uniform(std::uint64_t seed, std::uint64_t replication, std::uint64_t slot,
                                std::uint64_t lane = 0) {
  return static_cast<double>(stream_word(seed, replication, slot, lane) >> 11) * 0x1.0p-53;
}

}  // namespace rng

inline DemandPath draw_demand_path(std::uint64_t seed, std::uint64_t replication, const MarketParams& params) {
  DemandPath path(static_cast<std::size_t>(params.horizon()));
  for (int t = 1; t <= params.horizon(); ++t)
    path[t - 1] = rng::uniform(seed, replication, static_cast<std::uint64_t>(t)) < params.gamma(t) ? Demand::High
                                                                                                     : Demand::Low;
  return path;
}

enum class PolicySelector { Flexible, RegulatedClosedForm, RegulatedTabulated };

inline const char* to_string(PolicySelector p) {
  switch (p) {
    case PolicySelector::Flexible: return "flexible";
    case PolicySelector::RegulatedClosedForm: return "regulated_closed_form";
    case PolicySelector::RegulatedTabulated: return "regulated_tabulated";
  }
  return "?";
}

struct SimConfig {
  MarketParams params;
  PolicySelector policy = PolicySelector::Flexible;
  std::uint64_t replications = 1;
  std::uint64_t seed = 0;
  int grid_points = 2001;  // used by RegulatedTabulated
};

struct SimReport {
  double mean_avg_price = 0.0;
  double stderr_avg_price = 0.0;
  bool stderr_defined = false;  // false when replications == 1
  double mean_total_profit = 0.0;
  std::optional<double> mean_total_cs;
  std::vector<double> per_period_mean_price;
  std::uint64_t replications = 0;
};

inline Policy build_policy(PolicySelector selector, const MarketParams& params, int grid_points = 2001) {
  switch (selector) {
    case PolicySelector::Flexible: return flexible_policy(params);
    case PolicySelector::RegulatedClosedForm: return regulated_closed_form_policy(params);
    case PolicySelector::RegulatedTabulated:
      return Policy::wrap(solve_dp(params, GridSpec::covering(params, grid_points)), params.horizon());
  }
  throw ValidationError("unknown policy selector");
}

namespace detail {

// Running sums for one fixed block of replications.
struct McSums {
  double avg = 0.0;
  double avg_sq = 0.0;
  double profit = 0.0;
  double cs = 0.0;
  std::vector<double> per_period;

  void merge(const McSums& other) {
    avg += other.avg;
    avg_sq += other.avg_sq;
    profit += other.profit;
    cs += other.cs;
    for (std::size_t i = 0; i < per_period.size(); ++i) per_period[i] += other.per_period[i];
  }
};

// Pairwise reduction over block index; the tree shape depends only on the
// block count.
inline McSums pairwise_merge(std::vector<McSums>& blocks, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return blocks[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  McSums left = pairwise_merge(blocks, lo, mid);
  left.merge(pairwise_merge(blocks, mid, hi));
  return left;
}

inline constexpr std::uint64_t kMcBlock = 4096;

}  // namespace detail

template <PricingRule P>
SimReport run_mc(const P& policy, const MarketParams& params, std::uint64_t replications, std::uint64_t seed,
                 unsigned workers = 1) {
  if (replications < 1) throw ValidationError("replications: must be >= 1");
  const auto horizon = static_cast<std::size_t>(params.horizon());
  const std::uint64_t block_count = (replications + detail::kMcBlock - 1) / detail::kMcBlock;
  std::vector<detail::McSums> blocks(block_count);

  detail::parallel_cells(block_count, workers, [&](std::size_t b) {
    detail::McSums sums;
    sums.per_period.assign(horizon, 0.0);
    const std::uint64_t first = b * detail::kMcBlock;
    const std::uint64_t last = std::min(replications, first + detail::kMcBlock);
    for (std::uint64_t r = first; r < last; ++r) {
      const DemandPath path = draw_demand_path(seed, r, params);
      const PathOutcome out = evaluate_path(simulate_prices(policy, path), path, params);
      sums.avg += out.avg_price;
      sums.avg_sq += out.avg_price * out.avg_price;
      sums.profit += out.total_profit;
      sums.cs += out.total_cs;
      for (std::size_t t = 0; t < horizon; ++t) sums.per_period[t] += out.prices[t];
    }
    blocks[b] = std::move(sums);
  });

  const detail::McSums total = detail::pairwise_merge(blocks, 0, blocks.size());
  const auto n = static_cast<double>(replications);
  SimReport report;
  report.replications = replications;
  report.mean_avg_price = total.avg / n;
  report.mean_total_profit = total.profit / n;
  if (params.linear()) report.mean_total_cs = total.cs / n;
  report.per_period_mean_price.resize(horizon);
  for (std::size_t t = 0; t < horizon; ++t) report.per_period_mean_price[t] = total.per_period[t] / n;
  if (replications > 1) {
    const double var = std::max(0.0, (total.avg_sq - n * report.mean_avg_price * report.mean_avg_price) / (n - 1.0));
    report.stderr_avg_price = std::sqrt(var / n);
    report.stderr_defined = true;
  }
  return report;
}

inline SimReport run_mc(const SimConfig& config, unsigned workers = 1) {
  const Policy policy = build_policy(config.policy, config.params, config.grid_points);
  return run_mc(policy, config.params, config.replications, config.seed, workers);
}

// Regulated-minus-flexible mean average price over T periods with demand
// (d - p)^a and c = 0. The regulated policy is the grid DP, the flexible one
// the static prices; both run on the same demand draws. Approximate (grid and
// sampling error).
inline std::vector<DeltaRow> sweep_delta_mc(const std::vector<double>& q_grid, const std::vector<double>& a_grid,
                                            int horizon, std::uint64_t replications, std::uint64_t seed,
                                            int grid_points = 2001, unsigned workers = 1,
                                            double d_high = kCanonicalHighIntercept,
                                            double d_low = kCanonicalLowIntercept) {
  const auto qs = detail::sorted_unique(q_grid);
  const auto as = detail::sorted_unique(a_grid);
  std::vector<DeltaRow> rows(qs.size() * as.size());
  detail::parallel_cells(rows.size(), workers, [&](std::size_t i) {
    const double q = qs[i / as.size()];
    const double a = as[i % as.size()];
    try {
      const auto params = MarketParams::constant(0.0, d_low, d_high, q, horizon, DemandShape{true, a});
      const auto regulated = run_mc(build_policy(PolicySelector::RegulatedTabulated, params, grid_points), params,
                                    replications, seed);
      const auto flexible = run_mc(flexible_policy(params), params, replications, seed);
      rows[i] = {q, a, regulated.mean_avg_price - flexible.mean_avg_price, CellStatus::Ok};
    } catch (const ValidationError&) {
      rows[i] = {q, a, std::nullopt, CellStatus::Infeasible};
    }
  });
  return rows;
}

struct SynthConfig {
  SimConfig sim;  // params and seed; replications is ignored
  int stations = 1;
  int days = 2;
  int reform_day = 2;  // first regulated day, 1-based
  double noise_sd = 0.0;
  std::chrono::year_month_day start_date{std::chrono::year{2026}, std::chrono::month{3}, std::chrono::day{18}};
};

// Demand draws for station s (0-based) on day d (0-based) use replication s * days + d.
inline std::uint64_t synth_replication(int station, int day, int days) {
  return static_cast<std::uint64_t>(station) * static_cast<std::uint64_t>(days) + static_cast<std::uint64_t>(day);
}

inline LocalDateTime synth_day_start(const SynthConfig& config, int day) {
  const std::chrono::year_month_day ymd{std::chrono::sys_days{config.start_date} + std::chrono::days{day}};
  return LocalDateTime{static_cast<int>(ymd.year()), static_cast<int>(static_cast<unsigned>(ymd.month())),
                       static_cast<int>(static_cast<unsigned>(ymd.day())), 0, 0, 0};
}

inline LocalDateTime synth_reform_instant(const SynthConfig& config) {
  return synth_day_start(config, config.reform_day - 1);
}

// Policy used for post-reform days: closed form where it exists, else the grid DP.
inline Policy synth_regulated_policy(const SimConfig& sim) {
  if (has_regulated_closed_form(sim.params)) return regulated_closed_form_policy(sim.params);
  return build_policy(PolicySelector::RegulatedTabulated, sim.params, sim.grid_points);
}

// Standard normal truncated to [-4, 4] by resampling, from the counter stream.
inline double synth_noise(std::uint64_t seed, std::uint64_t replication, int hour) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    const std::uint64_t slot = 1000 + static_cast<std::uint64_t>(hour) * 64 + attempt;
    const double u1 = 1.0 - rng::uniform(seed, replication, slot, 1);  // (0, 1]
    const double u2 = rng::uniform(seed, replication, slot, 2);
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    if (std::abs(z) <= 4.0) return z;
  }
}

inline double round_to_price_digits(double p) { return std::round(p * 1e4) / 1e4; }

// Hourly quotes for stations x days x 24 hours. Days before reform_day follow
// the flexible policy, the rest the regulated one.
inline std::vector<PriceRecord> synthesize_archive(const SynthConfig& config) {
  const MarketParams& params = config.sim.params;
  const int horizon = params.horizon();
  if (config.stations < 1) throw ValidationError("stations: must be >= 1");
  if (config.days < 1) throw ValidationError("days: must be >= 1");
  if (config.reform_day < 1 || config.reform_day > config.days)
    throw ValidationError("reform_day: must lie in [1, days]");
  if (!(config.noise_sd >= 0.0) || !std::isfinite(config.noise_sd))
    throw ValidationError("noise_sd: must be finite and >= 0");
  if (!(low_price(params) - 4.0 * config.noise_sd > 0.0))
    throw ValidationError("noise_sd: p_L - 4 sd must stay positive");
  if (24 % horizon != 0) throw ValidationError("T: must divide 24 for hourly synthesis");
  if (!config.start_date.ok()) throw ValidationError("start_date: invalid calendar date");

  const Policy flexible = flexible_policy(params);
  const Policy regulated = synth_regulated_policy(config.sim);
  const int hours_per_period = 24 / horizon;

  std::vector<PriceRecord> records;
  records.reserve(static_cast<std::size_t>(config.stations) * config.days * 24);
  for (int s = 0; s < config.stations; ++s) {
    const std::string station = "s" + std::to_string(s + 1);
    for (int d = 0; d < config.days; ++d) {
      const std::uint64_t rep = synth_replication(s, d, config.days);
      const DemandPath path = draw_demand_path(config.sim.seed, rep, params);
      const bool after = d + 1 >= config.reform_day;
      const PricePath prices = after ? simulate_prices(regulated, path) : simulate_prices(flexible, path);
      LocalDateTime stamp = synth_day_start(config, d);
      for (int hour = 0; hour < 24; ++hour) {
        double price = prices[hour / hours_per_period];
        if (config.noise_sd > 0.0) price += config.noise_sd * synth_noise(config.sim.seed, rep, hour);
        price = round_to_price_digits(price);
        if (!(price > 0.0))
          throw ValidationError("noise_sd: too large, synthesized price is not positive");
        stamp.hour = hour;
        records.push_back({station, stamp, price});
      }
    }
  }
  return records;
}

}  // namespace ratchet
