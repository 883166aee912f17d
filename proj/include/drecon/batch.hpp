#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "drecon/error.hpp"

namespace drecon {

// One corrected instance, as written by the correct subcommand.
struct CorrectionRow {
  std::string instance;
  std::size_t leaves = 0;
  std::string cost = "MM";
  int baseline = 0;
  int output = 0;
  bool modified = false;
  int duplications = 0;  // D(g(P), S)
  int losses = 0;        // L(g(P), S)
  std::size_t moves = 0;
  double ms = 0;

  int reduction() const { return baseline - output; }
};

inline constexpr std::string_view kCorrectionHeader =
    "instance\tleaves\tcost\tbaseline\toutput\treduction\tmodified\tduplications\tlosses\tmoves\tms";

inline std::string format_fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline void write_correction_row(std::ostream& out, const CorrectionRow& r) {
  out << r.instance << '\t' << r.leaves << '\t' << r.cost << '\t' << r.baseline << '\t' << r.output << '\t'
      << r.reduction() << '\t' << (r.modified ? 1 : 0) << '\t' << r.duplications << '\t' << r.losses << '\t'
      << r.moves << '\t' << format_fixed(r.ms, 3) << '\n';
}

namespace detail {

template <class T>
T parse_number(std::string_view field, std::size_t line_no) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ParseError("report line " + std::to_string(line_no) + ": bad number '" + std::string(field) + "'", 0);
  return value;
}

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  for (std::size_t start = 0;;) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) return out;
    start = tab + 1;
  }
}

}  // namespace detail

// Reads correction rows; header lines and blank lines are skipped.
inline std::vector<CorrectionRow> read_correction_rows(std::istream& in) {
  std::vector<CorrectionRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.rfind("instance\t", 0) == 0) continue;
    const auto f = detail::split_tabs(line);
    if (f.size() != 11)
      throw ParseError("report line " + std::to_string(line_no) + ": expected 11 columns, got " +
                           std::to_string(f.size()),
                       0);
    CorrectionRow r;
    r.instance = f[0];
    r.leaves = detail::parse_number<std::size_t>(f[1], line_no);
    r.cost = f[2];
    r.baseline = detail::parse_number<int>(f[3], line_no);
    r.output = detail::parse_number<int>(f[4], line_no);
    r.modified = detail::parse_number<int>(f[6], line_no) != 0;
    r.duplications = detail::parse_number<int>(f[7], line_no);
    r.losses = detail::parse_number<int>(f[8], line_no);
    r.moves = detail::parse_number<std::size_t>(f[9], line_no);
    r.ms = detail::parse_number<double>(f[10], line_no);
    if (detail::parse_number<int>(f[5], line_no) != r.reduction())
      throw ParseError("report line " + std::to_string(line_no) + ": reduction does not match baseline - output", 0);
    rows.push_back(std::move(r));
  }
  return rows;
}

struct Bucket {
  std::size_t lo = 1;
  std::size_t hi = 9;

  std::string label() const { return std::to_string(lo) + "-" + std::to_string(hi); }
  bool contains(std::size_t n) const { return lo <= n && n <= hi; }
};

inline std::vector<Bucket> default_buckets() { return {{1, 9}, {10, 99}, {100, 199}}; }

// "1-9,10-99,100-199"
inline std::vector<Bucket> parse_buckets(std::string_view text) {
  std::vector<Bucket> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    const std::string_view item = text.substr(start, comma - start);
    const auto dash = item.find('-');
    Bucket b;
    auto read = [&](std::string_view s, std::size_t& v) {
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
    };
    if (dash == std::string_view::npos || !read(item.substr(0, dash), b.lo) || !read(item.substr(dash + 1), b.hi) ||
        b.lo > b.hi)
      throw std::invalid_argument("bad bucket '" + std::string(item) + "', expected LO-HI");
    out.push_back(b);
    start = comma + 1;
  }
  return out;
}

struct BucketSummary {
  std::string label;
  std::size_t trees = 0;
  std::size_t modified = 0;
  double modified_pct = 0;
  // Averages are empty when no tree contributes.
  std::optional<double> unmodified_duplications, unmodified_losses;
  std::optional<double> modified_duplications, modified_losses;
  std::optional<double> reduction, reduction_pct;
  std::optional<double> ms;
};

struct BatchSummary {
  std::vector<BucketSummary> buckets;  // one per requested bucket, then "all"
};

inline BucketSummary summarize_rows(std::string label, const std::vector<const CorrectionRow*>& rows) {
  BucketSummary s;
  s.label = std::move(label);
  s.trees = rows.size();
  double ud = 0, ul = 0, md = 0, ml = 0, red = 0, red_pct = 0, ms = 0;
  for (const CorrectionRow* r : rows) {
    ms += r->ms;
    if (r->modified) {
      ++s.modified;
      md += r->duplications;
      ml += r->losses;
      red += r->reduction();
      red_pct += r->baseline > 0 ? 100.0 * r->reduction() / r->baseline : 0.0;
    } else {
      ud += r->duplications;
      ul += r->losses;
    }
  }
  const std::size_t unmodified = s.trees - s.modified;
  s.modified_pct = s.trees ? 100.0 * static_cast<double>(s.modified) / static_cast<double>(s.trees) : 0.0;
  if (unmodified) {
    s.unmodified_duplications = ud / static_cast<double>(unmodified);
    s.unmodified_losses = ul / static_cast<double>(unmodified);
  }
  if (s.modified) {
    const auto m = static_cast<double>(s.modified);
    s.modified_duplications = md / m;
    s.modified_losses = ml / m;
    s.reduction = red / m;
    s.reduction_pct = red_pct / m;
  }
  if (s.trees) s.ms = ms / static_cast<double>(s.trees);
  return s;
}

inline BatchSummary summarize_batch(const std::vector<CorrectionRow>& rows,
                                    const std::vector<Bucket>& buckets = default_buckets()) {
  if (rows.empty()) throw std::invalid_argument("no correction rows to summarize");
  BatchSummary out;
  std::vector<const CorrectionRow*> all;
  for (const auto& r : rows) all.push_back(&r);
  for (const auto& b : buckets) {
    std::vector<const CorrectionRow*> in;
    for (const auto& r : rows)
      if (b.contains(r.leaves)) in.push_back(&r);
    out.buckets.push_back(summarize_rows(b.label(), in));
  }
  out.buckets.push_back(summarize_rows("all", all));
  return out;
}

namespace detail {
inline std::string opt(const std::optional<double>& v) { return v ? format_fixed(*v) : "-"; }
}  // namespace detail

inline void write_summary_tsv(std::ostream& out, const BatchSummary& s) {
  out << "bucket\ttrees\tmodified\tmodified_pct\tunmodified_avg_dup\tunmodified_avg_loss\tmodified_avg_dup\t"
         "modified_avg_loss\tavg_reduction\tavg_reduction_pct\tavg_ms\n";
  for (const auto& b : s.buckets) {
    using detail::opt;
    out << b.label << '\t' << b.trees << '\t' << b.modified << '\t' << format_fixed(b.modified_pct) << '\t'
        << opt(b.unmodified_duplications) << '\t' << opt(b.unmodified_losses) << '\t' << opt(b.modified_duplications)
        << '\t' << opt(b.modified_losses) << '\t' << opt(b.reduction) << '\t' << opt(b.reduction_pct) << '\t'
        << opt(b.ms) << '\n';
  }
}

// Five-column layout: (1) modified / %, (2) unmodified D / L, (3) modified
// D / L before correction, (4) reduction / %, (5) ms.
inline void write_summary_text(std::ostream& out, const BatchSummary& s) {
  using detail::opt;
  std::vector<std::vector<std::string>> cells{
      {"bucket", "trees", "(1) modified", "(2) unmodified D / L", "(3) modified D / L", "(4) reduction", "(5) ms"}};
  for (const auto& b : s.buckets)
    cells.push_back({b.label, std::to_string(b.trees),
                     std::to_string(b.modified) + " / " + format_fixed(b.modified_pct) + "%",
                     opt(b.unmodified_duplications) + " / " + opt(b.unmodified_losses),
                     opt(b.modified_duplications) + " / " + opt(b.modified_losses),
                     opt(b.reduction) + " / " + opt(b.reduction_pct) + "%", opt(b.ms)});
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  for (const auto& row : cells) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) line += "  ";
      line += row[c];
      if (c + 1 < row.size()) line.append(width[c] - row[c].size(), ' ');
    }
    out << line << '\n';
  }
}

}  // namespace drecon
