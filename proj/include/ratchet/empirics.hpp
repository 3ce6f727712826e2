#pragma once

// Station-level intraday price archives: CSV ingestion, per-hour before/after
// differences with normal-approximation 90% intervals, and per-hour
// five-number summaries.
//
// Conventions (no canonical choice exists, so they are fixed here):
//   * quartiles are medians of the lower/upper halves, the overall median
//     excluded when the count is odd;
//   * CI half-width is 1.6449 * sqrt(s_b^2/n_b + s_a^2/n_a), sample variances
//     with n - 1 (a side with a single observation contributes 0);
//   * timestamps are local wall-clock, the hour is read verbatim;
//   * prices are held to 4 fractional digits.

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <compare>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ratchet/errors.hpp"

namespace ratchet {

inline constexpr double kCi90Z = 1.6449;

struct LocalDateTime {
  int year = 1970;
  int month = 1;
  int day = 1;
  int hour = 0;
  int minute = 0;
  int second = 0;

  auto operator<=>(const LocalDateTime&) const = default;

  // Accepts YYYY-MM-DDTHH:MM:SS (a single space may replace the 'T').
  static std::optional<LocalDateTime> parse(std::string_view text) {
    if (text.size() != 19) return std::nullopt;
    if (text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') || text[13] != ':' ||
        text[16] != ':')
      return std::nullopt;
    auto field = [&](std::size_t pos, std::size_t len, int& out) {
      for (std::size_t i = pos; i < pos + len; ++i)
        if (text[i] < '0' || text[i] > '9') return false;
      auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
      return ec == std::errc{} && ptr == text.data() + pos + len;
    };
    LocalDateTime dt;
    if (!field(0, 4, dt.year) || !field(5, 2, dt.month) || !field(8, 2, dt.day) || !field(11, 2, dt.hour) ||
        !field(14, 2, dt.minute) || !field(17, 2, dt.second))
      return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{dt.year},
                                          std::chrono::month{static_cast<unsigned>(dt.month)},
                                          std::chrono::day{static_cast<unsigned>(dt.day)}};
    if (!ymd.ok() || dt.hour > 23 || dt.minute > 59 || dt.second > 59) return std::nullopt;
    return dt;
  }

  std::string to_string() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d", year, month, day, hour, minute, second);
    return buf;
  }
};

struct PriceRecord {
  std::string station_id;
  LocalDateTime timestamp;
  double price = 0.0;

  bool operator==(const PriceRecord&) const = default;
};

struct ParseResult {
  std::vector<PriceRecord> records;
  std::vector<std::string> diagnostics;
  std::size_t rows = 0;     // data rows seen (blank lines excluded)
  std::size_t skipped = 0;
};

inline constexpr std::string_view kArchiveHeader = "station_id,timestamp,price";

namespace detail {

inline std::string_view trim_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

inline std::optional<double> parse_price(std::string_view text) {
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) return std::nullopt;
  return std::round(value * 1e4) / 1e4;
}

// 12 significant digits, '.' separator, no grouping.
inline std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
  return std::string(buf, ptr);
}

inline std::string format_price(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 4);
  return std::string(buf, ptr);
}

}  // namespace detail

// Reads `station_id,timestamp,price` CSV, skipping leading '#' metadata
// lines. A missing header, or more than 10% of
// rows rejected, is fatal; other bad rows are skipped with a diagnostic.
inline ParseResult parse_archive(std::istream& input) {
  ParseResult result;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(input, line)) {
    ++line_no;
    if (!line.starts_with('#')) {
      have_header = true;
      break;
    }
  }
  if (!have_header) throw ArchiveError("missing header: expected '" + std::string(kArchiveHeader) + "'");
  std::string_view header = detail::trim_line(line);
  if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
  if (header != kArchiveHeader)
    throw ArchiveError("missing header: expected '" + std::string(kArchiveHeader) + "'");

  while (std::getline(input, line)) {
    ++line_no;
    const std::string_view row = detail::trim_line(line);
    if (row.empty()) continue;
    ++result.rows;
    auto reject = [&](const std::string& why) {
      result.diagnostics.push_back("line " + std::to_string(line_no) + ": " + why);
      ++result.skipped;
    };
    const auto c1 = row.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : row.find(',', c1 + 1);
    if (c2 == std::string_view::npos || row.find(',', c2 + 1) != std::string_view::npos) {
      reject("expected 3 fields");
      continue;
    }
    const std::string_view station = row.substr(0, c1);
    if (station.empty()) {
      reject("empty station_id");
      continue;
    }
    const auto stamp = LocalDateTime::parse(row.substr(c1 + 1, c2 - c1 - 1));
    if (!stamp) {
      reject("unparseable timestamp");
      continue;
    }
    const auto price = detail::parse_price(row.substr(c2 + 1));
    if (!price) {
      reject("unparseable price");
      continue;
    }
    if (!(*price > 0.0)) {
      reject("price must be positive");
      continue;
    }
    result.records.push_back({std::string(station), *stamp, *price});
  }
  if (result.rows > 0 && result.skipped * 10 > result.rows)
    throw ArchiveError("too many malformed rows: " + std::to_string(result.skipped) + " of " +
                       std::to_string(result.rows) + " skipped");
  return result;
}

inline void write_archive(std::ostream& out, const std::vector<PriceRecord>& records) {
  out << kArchiveHeader << '\n';
  for (const auto& r : records)
    out << r.station_id << ',' << r.timestamp.to_string() << ',' << detail::format_price(r.price) << '\n';
}

enum class Window { Before, After };

inline const char* to_string(Window w) { return w == Window::Before ? "before" : "after"; }

struct HourlyDiffRow {
  int hour = 0;
  std::optional<double> mean_before;
  std::optional<double> mean_after;
  std::optional<double> diff;
  std::optional<double> ci90_lo;
  std::optional<double> ci90_hi;
  std::size_t n_before = 0;
  std::size_t n_after = 0;
};

struct BoxWhiskerRow {
  int hour = 0;
  Window regime = Window::Before;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  std::size_t n = 0;
};

struct BoxWhiskerReport {
  std::vector<BoxWhiskerRow> rows;
  std::vector<std::string> notes;
};

namespace detail {

// Prices per clock hour on one side of the reform instant, sorted ascending.
inline std::array<std::vector<double>, 24> hourly_buckets(const std::vector<PriceRecord>& records, Window window,
                                                         const LocalDateTime& reform) {
  std::array<std::vector<double>, 24> buckets;
  for (const auto& r : records) {
    const bool after = r.timestamp >= reform;
    if (after == (window == Window::After)) buckets[static_cast<std::size_t>(r.timestamp.hour)].push_back(r.price);
  }
  for (auto& b : buckets) std::sort(b.begin(), b.end());
  return buckets;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_variance(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

inline double median_of(const double* first, std::size_t n) {
  return n % 2 == 1 ? first[n / 2] : 0.5 * (first[n / 2 - 1] + first[n / 2]);
}

}  // namespace detail

inline std::array<HourlyDiffRow, 24> hourly_diff(const std::vector<PriceRecord>& records,
                                                  const LocalDateTime& reform) {
  const auto before = detail::hourly_buckets(records, Window::Before, reform);
  const auto after = detail::hourly_buckets(records, Window::After, reform);
  std::array<HourlyDiffRow, 24> rows;
  for (int h = 0; h < 24; ++h) {
    auto& row = rows[h];
    const auto& b = before[h];
    const auto& a = after[h];
    row.hour = h;
    row.n_before = b.size();
    row.n_after = a.size();
    if (!b.empty()) row.mean_before = detail::mean_of(b);
    if (!a.empty()) row.mean_after = detail::mean_of(a);
    if (b.empty() || a.empty()) continue;
    row.diff = *row.mean_after - *row.mean_before;
    const double se = std::sqrt(detail::sample_variance(b, *row.mean_before) / b.size() +
                                detail::sample_variance(a, *row.mean_after) / a.size());
    row.ci90_lo = *row.diff - kCi90Z * se;
    row.ci90_hi = *row.diff + kCi90Z * se;
  }
  return rows;
}

// Five-number summary of sorted, non-empty values.
inline BoxWhiskerRow five_numbers(const std::vector<double>& sorted) {
  BoxWhiskerRow row;
  const std::size_t n = sorted.size();
  row.n = n;
  row.min = sorted.front();
  row.max = sorted.back();
  row.median = detail::median_of(sorted.data(), n);
  const std::size_t half = n / 2;
  if (half == 0) {
    row.q1 = row.q3 = sorted.front();
  } else {
    row.q1 = detail::median_of(sorted.data(), half);
    row.q3 = detail::median_of(sorted.data() + (n - half), half);
  }
  return row;
}

inline BoxWhiskerReport box_whisker(const std::vector<PriceRecord>& records, Window window,
                                    const LocalDateTime& reform) {
  const auto buckets = detail::hourly_buckets(records, window, reform);
  BoxWhiskerReport report;
  for (int h = 0; h < 24; ++h) {
    if (buckets[h].empty()) {
      report.notes.push_back("hour " + std::to_string(h) + " (" + to_string(window) + "): no records, row omitted");
      continue;
    }
    BoxWhiskerRow row = five_numbers(buckets[h]);
    row.hour = h;
    row.regime = window;
    report.rows.push_back(row);
  }
  return report;
}

inline void write_hourly_diff_csv(std::ostream& out, const std::array<HourlyDiffRow, 24>& rows) {
  auto opt = [](const std::optional<double>& v) { return v ? detail::format_number(*v) : std::string(); };
  out << "hour,mean_before,mean_after,diff,ci90_lo,ci90_hi,n_before,n_after\n";
  for (const auto& r : rows)
    out << r.hour << ',' << opt(r.mean_before) << ',' << opt(r.mean_after) << ',' << opt(r.diff) << ','
        << opt(r.ci90_lo) << ',' << opt(r.ci90_hi) << ',' << r.n_before << ',' << r.n_after << '\n';
}

inline void write_box_whisker_csv(std::ostream& out, const std::vector<BoxWhiskerRow>& rows) {
  using detail::format_number;
  out << "hour,regime,min,q1,median,q3,max,n\n";
  for (const auto& r : rows)
    out << r.hour << ',' << to_string(r.regime) << ',' << format_number(r.min) << ',' << format_number(r.q1) << ','
        << format_number(r.median) << ',' << format_number(r.q3) << ',' << format_number(r.max) << ',' << r.n
        << '\n';
}

}  // namespace ratchet
