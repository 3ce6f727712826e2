#pragma once

// Command-line front end. Economics parameters come only from a JSON config
// (file or stdin); flags select the subcommand, paths and worker count.
//
// Exit codes: 0 success, 2 config/validation, 3 verification failure, 4 I/O.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ratchet/ratchet.hpp"

namespace ratchet::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kConfigError = 2, kVerifyFailed = 3, kIoError = 4 };

using nlohmann::json;

class IoError : public Error {
 public:
  using Error::Error;
};

// FNV-1a 64 over the canonical (key-sorted, compact) config text.
inline std::string config_hash(const json& config) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace detail {

inline void require_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ValidationError(where + ": expected a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items())
    if (!ok.count(key)) throw ValidationError(where + ": unknown key '" + key + "'");
}

inline double get_number(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) throw ValidationError(where + "." + key + ": required");
  if (!obj.at(key).is_number()) throw ValidationError(where + "." + key + ": expected a number");
  return obj.at(key).get<double>();
}

inline double get_number(const json& obj, const std::string& where, const char* key, double fallback) {
  return obj.contains(key) ? get_number(obj, where, key) : fallback;
}

inline std::int64_t get_integer(const json& obj, const std::string& where, const char* key, std::int64_t fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number_integer()) throw ValidationError(where + "." + key + ": expected an integer");
  return obj.at(key).get<std::int64_t>();
}

inline std::uint64_t get_seed(const json& obj, const std::string& where) {
  if (!obj.contains("seed")) return 0;
  const auto& v = obj.at("seed");
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw ValidationError(where + ".seed: expected a non-negative integer");
  return v.get<std::uint64_t>();
}

inline bool get_bool(const json& obj, const std::string& where, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_boolean()) throw ValidationError(where + "." + key + ": expected true/false");
  return obj.at(key).get<bool>();
}

inline std::string get_string(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) throw ValidationError(where + "." + key + ": required");
  if (!obj.at(key).is_string()) throw ValidationError(where + "." + key + ": expected a string");
  return obj.at(key).get<std::string>();
}

inline std::vector<double> get_grid(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) return {};
  const auto& v = obj.at(key);
  if (!v.is_array()) throw ValidationError(where + "." + key + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ValidationError(where + "." + key + ": expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace detail

// {"c", "d_low", "d_high", "gammas" | ("q", "T"), "truncated", "exponent_a"}
inline MarketParams parse_market(const json& obj) {
  const std::string where = "market";
  detail::require_keys(obj, where, {"c", "d_low", "d_high", "gammas", "q", "T", "truncated", "exponent_a"});
  const double c = detail::get_number(obj, where, "c", 0.0);
  const double d_low = detail::get_number(obj, where, "d_low");
  const double d_high = detail::get_number(obj, where, "d_high");
  const DemandShape shape{detail::get_bool(obj, where, "truncated", true),
                          detail::get_number(obj, where, "exponent_a", 1.0)};
  if (obj.contains("gammas")) {
    if (obj.contains("q")) throw ValidationError("market.q: give either gammas or q with T, not both");
    auto gammas = detail::get_grid(obj, where, "gammas");
    if (obj.contains("T") && detail::get_integer(obj, where, "T", 0) != static_cast<std::int64_t>(gammas.size()))
      throw ValidationError("market.T: must equal the length of gammas");
    return MarketParams(c, d_low, d_high, std::move(gammas), shape);
  }
  if (!obj.contains("q") || !obj.contains("T")) throw ValidationError("market.gammas: required (or q with T)");
  const auto horizon = detail::get_integer(obj, where, "T", 0);
  if (horizon < 2 || horizon > 1000) throw ValidationError("market.T: must lie in [2, 1000]");
  return MarketParams::constant(c, d_low, d_high, detail::get_number(obj, where, "q"), static_cast<int>(horizon),
                                shape);
}

inline int parse_grid_points(const json& obj, const std::string& where) {
  const auto n = detail::get_integer(obj, where, "grid_points", 2001);
  if (n < 201 || n > 1'000'001) throw ValidationError(where + ".grid_points: must lie in [201, 1000001]");
  return static_cast<int>(n);
}

inline std::string metadata_line(const json& config, const std::string& seed, const std::string& extra = {}) {
  std::string line = std::string("# ratchet ") + kVersion + " seed=" + seed + " config_hash=" + config_hash(config);
  if (!extra.empty()) line += " " + extra;
  return line + "\n";
}

inline json maybe(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// ---------------------------------------------------------------- solve

inline json cmd_solve(const json& config) {
  detail::require_keys(config, "config", {"market", "oracle_points"});
  if (!config.contains("market")) throw ValidationError("config.market: required");
  const MarketParams params = parse_market(config.at("market"));
  const int horizon = params.horizon();

  json report;
  report["version"] = kVersion;
  report["config_hash"] = config_hash(config);
  report["T"] = horizon;
  report["p_high"] = high_price(params);
  report["p_low"] = low_price(params);
  report["kappa"] = kappa(params);
  report["gamma_tilde"] = maybe(gamma_tilde(params));
  if (params.linear()) report["e_avg_flex"] = expected_avg_price_flexible(params);

  const bool two_period = params.linear() && params.truncated() && horizon == 2;
  if (two_period) {
    report["regime"] = to_string(regime_classify(params));
    // The gamma_tilde rule is not a global comparison; flag configs where it misses the optimum.
    report["gamma_star"] = maybe(corner_value_threshold(params));
    report["regime_by_value"] = to_string(regime_classify_by_value(params));
    report["closed_form_global"] = regime_classify(params) == regime_classify_by_value(params);
    report["p1_high"] = high_price(params);
    report["p1_low"] = two_period_low_price(params);
    report["e_avg_reg"] = expected_avg_price_regulated_2p(params);
    report["cs_diff"] = expected_cs_diff_2p(params);
  } else if (has_regulated_closed_form(params)) {
    std::vector<double> targets;
    for (int t = 1; t <= horizon; ++t) targets.push_back(t_period_low_target(t, params));
    report["pbar"] = targets;
    report["p1_high"] = high_price(params);
    report["p1_low"] = targets.front();
    if (horizon <= kMaxEnumerationHorizon)
      report["e_avg_reg"] = enumerate_expectation(t_period_policy(params), params).expected_avg_price;
  } else if (!params.linear() && horizon == 2 && params.constant_gamma()) {
    const NonlinearInstance inst(params.gamma(1), params.exponent(), params.d_high(), params.d_low());
    report["p1_high"] = inst.p_high();
    report["p1_low"] = solve_p1_low(inst);
    report["delta"] = delta(inst);
  }

  const bool want_oracle = config.contains("oracle_points") || !report.contains("p1_low");
  if (want_oracle) {
    json oracle_cfg = json::object();
    if (config.contains("oracle_points")) oracle_cfg["grid_points"] = config.at("oracle_points");
    const int points = parse_grid_points(oracle_cfg, "config.oracle_points");
    const GridSpec grid = GridSpec::covering(params, points);
    const auto table = solve_dp(params, grid);
    json oracle;
    oracle["points"] = points;
    oracle["step"] = grid.step();
    oracle["p1_high"] = table.price(1, kNoCeiling, Demand::High);
    oracle["p1_low"] = table.price(1, kNoCeiling, Demand::Low);
    std::vector<double> lows;
    for (int t = 1; t <= horizon; ++t)
      lows.push_back(table.price(t, t == 1 ? kNoCeiling : high_price(params), Demand::Low));
    oracle["low_price_at_ceiling_p_high"] = lows;
    if (horizon <= kMaxEnumerationHorizon) {
      const auto reg = enumerate_expectation(table, params);
      const auto flex = enumerate_expectation(flexible_policy(params), params);
      oracle["e_avg_reg"] = reg.expected_avg_price;
      oracle["e_avg_flex"] = flex.expected_avg_price;
      oracle["e_profit_reg"] = reg.expected_total_profit;
      oracle["e_profit_flex"] = flex.expected_total_profit;
    }
    report["oracle"] = oracle;
  }
  return report;
}

// ---------------------------------------------------------------- verify

inline VerifyOptions parse_verify(const json& config) {
#ifdef RATCHET_FAULT_INJECTION
  detail::require_keys(config, "config", {"grid_points", "oracle_tolerance", "inject_fault"});
#else
  detail::require_keys(config, "config", {"grid_points", "oracle_tolerance"});
#endif
  VerifyOptions options;
  options.grid_points = parse_grid_points(config, "config");
  if (config.contains("oracle_tolerance")) {
    const double tol = detail::get_number(config, "config", "oracle_tolerance");
    if (!(tol > 0.0)) throw ValidationError("config.oracle_tolerance: must be > 0");
    options.oracle_tolerance = tol;
  }
  if (config.contains("inject_fault")) options.inject_fault = detail::get_string(config, "config", "inject_fault");
  return options;
}

// Writes one line per check; returns true when every check passed.
inline bool cmd_verify(const json& config, std::ostream& out) {
  const VerifyOptions options = parse_verify(config);
  const auto checks = run_verification(options);
  out << metadata_line(config, "none", "grid_points=" + std::to_string(options.grid_points));
  bool all = true;
  using ratchet::detail::format_number;
  for (const auto& c : checks) {
    all = all && c.passed;
    out << (c.passed ? "PASS " : "FAIL ") << c.name << " target=" << format_number(c.target)
        << " computed=" << format_number(c.computed) << " tolerance=" << format_number(c.tolerance);
    if (!c.detail.empty()) out << " [" << c.detail << "]";
    out << '\n';
  }
  for (const auto& row : slope_audit({0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}))
    out << "INFO prop4_slope_audit q=" << format_number(row.q) << " fd=" << format_number(row.fd)
        << " fd_half=" << format_number(row.fd_half) << " closed=" << format_number(row.closed)
        << " ratio=" << format_number(row.ratio) << '\n';
  out << (all ? "all checks passed\n" : "verification FAILED\n");
  return all;
}

// ---------------------------------------------------------------- sweep

inline void write_delta_csv(std::ostream& out, const std::vector<DeltaRow>& rows) {
  using ratchet::detail::format_number;
  out << "q,a,delta,status\n";
  for (const auto& r : rows)
    out << format_number(r.q) << ',' << format_number(r.a) << ',' << (r.delta ? format_number(*r.delta) : "") << ','
        << to_string(r.status) << '\n';
}

inline void cmd_sweep(const json& config, std::ostream& out, unsigned workers) {
  const std::string kind = config.contains("kind") ? detail::get_string(config, "config", "kind") : "delta";
  using ratchet::detail::format_number;
  if (kind == "delta") {
    detail::require_keys(config, "config",
                         {"kind", "q_grid", "a_grid", "T", "replications", "seed", "grid_points", "d_high", "d_low"});
    const auto q_grid = detail::get_grid(config, "config", "q_grid");
    const auto a_grid = detail::get_grid(config, "config", "a_grid");
    const auto horizon = detail::get_integer(config, "config", "T", 2);
    const double d_high = detail::get_number(config, "config", "d_high", kCanonicalHighIntercept);
    const double d_low = detail::get_number(config, "config", "d_low", kCanonicalLowIntercept);
    const std::uint64_t seed = detail::get_seed(config, "config");
    if (horizon < 2 || horizon > 24) throw ValidationError("config.T: must lie in [2, 24]");
    std::vector<DeltaRow> rows;
    if (horizon == 2) {
      rows = sweep_delta(q_grid, a_grid, workers, d_high, d_low);
    } else {
      const auto reps = detail::get_integer(config, "config", "replications", 100000);
      if (reps < 1) throw ValidationError("config.replications: must be >= 1");
      rows = sweep_delta_mc(q_grid, a_grid, static_cast<int>(horizon), static_cast<std::uint64_t>(reps), seed,
                            parse_grid_points(config, "config"), workers, d_high, d_low);
    }
    out << metadata_line(config, horizon == 2 ? "none" : std::to_string(seed),
                         horizon == 2 ? "method=two_period_foc" : "method=monte_carlo_grid_dp");
    write_delta_csv(out, rows);
    return;
  }
  if (kind == "price_gap") {
    detail::require_keys(config, "config", {"kind", "market", "gamma2_grid", "d_high_grid"});
    if (!config.contains("market")) throw ValidationError("config.market: required");
    const MarketParams base = parse_market(config.at("market"));
    if (base.horizon() != 2) throw ValidationError("config.market: price_gap sweep needs T = 2");
    auto gamma2 = ratchet::detail::sorted_unique(detail::get_grid(config, "config", "gamma2_grid"));
    auto d_highs = config.contains("d_high_grid")
                       ? ratchet::detail::sorted_unique(detail::get_grid(config, "config", "d_high_grid"))
                       : std::vector<double>{base.d_high()};
    out << metadata_line(config, "none");
    out << "d_high,gamma2,kappa,gamma_tilde,regime,e_avg_flex,e_avg_reg,diff,status\n";
    for (double dh : d_highs) {
      for (double g2 : gamma2) {
        out << format_number(dh) << ',' << format_number(g2) << ',';
        try {
          const MarketParams p(base.cost(), base.d_low(), dh, {base.gamma(1), g2}, base.shape());
          const auto gt = gamma_tilde(p);
          const double flex = expected_avg_price_flexible(p);
          const double reg = expected_avg_price_regulated_2p(p);
          out << format_number(kappa(p)) << ',' << (gt ? format_number(*gt) : "") << ','
              << to_string(regime_classify(p)) << ',' << format_number(flex) << ',' << format_number(reg) << ','
              << format_number(reg - flex) << ",ok\n";
        } catch (const Error&) {
          out << ",,,,,,infeasible\n";
        }
      }
    }
    return;
  }
  throw ValidationError("config.kind: expected 'delta' or 'price_gap'");
}

// ---------------------------------------------------------------- simulate

inline PolicySelector parse_selector(const std::string& name) {
  if (name == "flexible") return PolicySelector::Flexible;
  if (name == "regulated_closed_form") return PolicySelector::RegulatedClosedForm;
  if (name == "regulated_tabulated") return PolicySelector::RegulatedTabulated;
  throw ValidationError("config.policy: expected flexible, regulated_closed_form or regulated_tabulated");
}

inline void cmd_simulate(const json& config, std::ostream& out, unsigned workers) {
  detail::require_keys(config, "config", {"market", "policy", "replications", "seed", "grid_points"});
  if (!config.contains("market")) throw ValidationError("config.market: required");
  const auto reps = detail::get_integer(config, "config", "replications", 100000);
  if (reps < 1) throw ValidationError("config.replications: must be >= 1");
  SimConfig sim{parse_market(config.at("market")),
                parse_selector(config.contains("policy") ? detail::get_string(config, "config", "policy") : "flexible"),
                static_cast<std::uint64_t>(reps), detail::get_seed(config, "config"),
                parse_grid_points(config, "config")};
  const SimReport r = run_mc(sim, workers);
  using ratchet::detail::format_number;
  out << metadata_line(config, std::to_string(sim.seed), std::string("policy=") + to_string(sim.policy));
  out << "statistic,value\n";
  out << "replications," << r.replications << '\n';
  out << "mean_avg_price," << format_number(r.mean_avg_price) << '\n';
  out << "stderr_avg_price," << format_number(r.stderr_avg_price) << '\n';
  out << "stderr_defined," << (r.stderr_defined ? "true" : "false") << '\n';
  out << "mean_total_profit," << format_number(r.mean_total_profit) << '\n';
  out << "mean_total_cs," << (r.mean_total_cs ? format_number(*r.mean_total_cs) : "") << '\n';
  for (std::size_t t = 0; t < r.per_period_mean_price.size(); ++t)
    out << "mean_price_t" << (t + 1) << ',' << format_number(r.per_period_mean_price[t]) << '\n';
}

// ---------------------------------------------------------------- synth

inline std::chrono::year_month_day parse_date(const std::string& text) {
  const auto dt = LocalDateTime::parse(text + "T00:00:00");
  if (!dt) throw ValidationError("config.start_date: expected YYYY-MM-DD");
  return std::chrono::year_month_day{std::chrono::year{dt->year}, std::chrono::month{static_cast<unsigned>(dt->month)},
                                     std::chrono::day{static_cast<unsigned>(dt->day)}};
}

inline void cmd_synth(const json& config, std::ostream& out) {
  detail::require_keys(config, "config",
                       {"market", "seed", "stations", "days", "reform_day", "noise_sd", "start_date", "grid_points"});
  if (!config.contains("market")) throw ValidationError("config.market: required");
  SynthConfig synth{SimConfig{parse_market(config.at("market")), PolicySelector::RegulatedClosedForm, 1,
                              detail::get_seed(config, "config"), parse_grid_points(config, "config")}};
  auto int_field = [&](const char* key, std::int64_t fallback) {
    const auto v = detail::get_integer(config, "config", key, fallback);
    if (v < 0 || v > 1'000'000) throw ValidationError(std::string("config.") + key + ": out of range");
    return static_cast<int>(v);
  };
  synth.stations = int_field("stations", 1);
  synth.days = int_field("days", 28);
  synth.reform_day = int_field("reform_day", 15);
  synth.noise_sd = detail::get_number(config, "config", "noise_sd", 0.0);
  if (config.contains("start_date")) synth.start_date = parse_date(detail::get_string(config, "config", "start_date"));
  const auto records = synthesize_archive(synth);
  out << metadata_line(config, std::to_string(synth.sim.seed),
                       "reform_instant=" + synth_reform_instant(synth).to_string());
  write_archive(out, records);
}

// ---------------------------------------------------------------- empirics

inline void cmd_empirics(const json& config, std::ostream& out, std::ostream& err) {
  detail::require_keys(config, "config", {"input", "reform_instant", "report"});
  const std::string input = detail::get_string(config, "config", "input");
  const auto reform = LocalDateTime::parse(detail::get_string(config, "config", "reform_instant"));
  if (!reform) throw ValidationError("config.reform_instant: expected YYYY-MM-DDTHH:MM:SS");
  const std::string report = config.contains("report") ? detail::get_string(config, "config", "report") : "hourly_diff";
  if (report != "hourly_diff" && report != "box_whisker")
    throw ValidationError("config.report: expected hourly_diff or box_whisker");

  std::ifstream file(input);
  if (!file) throw IoError("cannot open input archive: " + input);
  const ParseResult parsed = parse_archive(file);
  for (const auto& d : parsed.diagnostics) err << d << '\n';

  if (report == "hourly_diff") {
    out << metadata_line(config, "none", "ci90=normal_z1.6449 variance=n-1");
    write_hourly_diff_csv(out, hourly_diff(parsed.records, *reform));
    return;
  }
  auto before = box_whisker(parsed.records, Window::Before, *reform);
  auto after = box_whisker(parsed.records, Window::After, *reform);
  for (const auto& n : before.notes) err << n << '\n';
  for (const auto& n : after.notes) err << n << '\n';
  before.rows.insert(before.rows.end(), after.rows.begin(), after.rows.end());
  out << metadata_line(config, "none", "quartiles=median_of_halves");
  write_box_whisker_csv(out, before.rows);
}

// ---------------------------------------------------------------- driver

inline json read_config(const std::string& path, std::istream& in) {
  std::string text;
  if (path == "-") {
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  } else {
    std::ifstream file(path);
    if (!file) throw IoError("cannot open config: " + path);
    std::ostringstream buf;
    buf << file.rdbuf();
    text = buf.str();
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: invalid JSON: ") + e.what());
  }
}

inline int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimal intraday pricing under a decrease-only price rule", "ratchet"};
  app.require_subcommand(1);
  std::string config_path = "-";
  std::string out_path = "-";
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  for (const char* name : {"solve", "verify", "sweep", "simulate", "synth", "empirics"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config path, or - for stdin");
    sub->add_option("--out", out_path, "output path, or - for stdout");
    sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  if (command == "verify" && config_path == "-" && !app.get_subcommands().front()->get_option("--config")->count())
    config_path = "";

  try {
    const json config = config_path.empty() ? json::object() : read_config(config_path, in);
    std::ostringstream buffer;
    int code = kOk;
    if (command == "solve") {
      buffer << cmd_solve(config).dump(2) << '\n';
    } else if (command == "verify") {
      code = cmd_verify(config, buffer) ? kOk : kVerifyFailed;
    } else if (command == "sweep") {
      cmd_sweep(config, buffer, workers);
    } else if (command == "simulate") {
      cmd_simulate(config, buffer, workers);
    } else if (command == "synth") {
      cmd_synth(config, buffer);
    } else {
      cmd_empirics(config, buffer, err);
    }
    if (out_path == "-") {
      out << buffer.str();
    } else {
      std::ofstream file(out_path, std::ios::binary);
      if (!file) throw IoError("cannot open output: " + out_path);
      file << buffer.str();
      if (!file) throw IoError("write failed: " + out_path);
    }
    return code;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const ArchiveError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const json::exception& e) {
    err << "error: config: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

}  // namespace ratchet::cli
