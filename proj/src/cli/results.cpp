// SPDX-License-Identifier: Apache-2.0
#include "ektf/cli/results.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "ektf/error.hpp"

namespace ektf::cli {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(std::string_view s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError("malformed number '" + std::string(s) + "' in result file");
  }
  return v;
}

std::uint64_t to_uint(std::string_view s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError("malformed integer '" + std::string(s) + "' in result file");
  }
  return v;
}

std::string sanitize(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c == ',') c = ';';
    if (c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

ResultRow make_row(ResultKey key, const trainer::Evaluation& test) {
  ResultRow row;
  row.key = std::move(key);
  row.ensemble = test.ensemble;
  row.best = test.best_student();
  row.worst = test.worst_student();
  row.gap = row.ensemble.auc - row.best.auc;
  return row;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string format_row(const ResultRow& row) {
  std::string out = std::to_string(row.key.k) + "," + row.key.fusion + "," + row.key.variant +
                    "," + std::to_string(row.key.seed) + "," + row.status;
  for (double v : {row.ensemble.logloss, row.ensemble.auc, row.best.logloss, row.best.auc,
                   row.worst.logloss, row.worst.auc, row.gap}) {
    out += "," + format_double(v);
  }
  out += "," + sanitize(row.error);
  return out;
}

ResultRow parse_row(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const auto f = split_fields(line);
  if (f.size() != 13) throw DataError("result row has " + std::to_string(f.size()) + " columns");
  ResultRow row;
  row.key = {to_uint(f[0]), std::string(f[1]), std::string(f[2]), to_uint(f[3])};
  row.status = std::string(f[4]);
  row.ensemble = {to_double(f[5]), to_double(f[6])};
  row.best = {to_double(f[7]), to_double(f[8])};
  row.worst = {to_double(f[9]), to_double(f[10])};
  row.gap = to_double(f[11]);
  row.error = std::string(f[12]);
  return row;
}

std::vector<ResultRow> read_results(const std::filesystem::path& path) {
  std::vector<ResultRow> rows;
  std::ifstream in(path, std::ios::binary);
  if (!in) return rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line != kResultHeader) throw DataError(path.string() + ": not a result file");
      continue;
    }
    if (line.empty()) continue;
    try {
      rows.push_back(parse_row(line));
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

void append_row(const std::filesystem::path& path, const ResultRow& row) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw DataError("cannot write " + path.string());
  if (fresh) out << kResultHeader << '\n';
  out << format_row(row) << '\n';
  out.flush();
  if (!out) throw DataError("write failed for " + path.string());
}

Quartiles quartiles(std::vector<double> values) {
  if (values.empty()) throw UsageError("quartiles of an empty sample");
  std::sort(values.begin(), values.end());
  return {quantile(values, 0.25), quantile(values, 0.5), quantile(values, 0.75)};
}

std::vector<GroupSummary> summarize(const std::vector<ResultRow>& rows) {
  struct Acc {
    std::size_t failures = 0;
    std::vector<double> ens_auc, ens_ll, best, worst, gap;
  };
  std::map<std::tuple<std::size_t, std::string, std::string>, Acc> groups;
  for (const auto& r : rows) {
    auto& acc = groups[{r.key.k, r.key.fusion, r.key.variant}];
    if (!r.ok()) {
      ++acc.failures;
      continue;
    }
    acc.ens_auc.push_back(r.ensemble.auc);
    acc.ens_ll.push_back(r.ensemble.logloss);
    acc.best.push_back(r.best.auc);
    acc.worst.push_back(r.worst.auc);
    acc.gap.push_back(r.gap);
  }
  std::vector<GroupSummary> out;
  for (const auto& [key, acc] : groups) {
    GroupSummary g;
    std::tie(g.k, g.fusion, g.variant) = key;
    g.runs = acc.ens_auc.size();
    g.failures = acc.failures;
    if (g.runs > 0) {
      g.ensemble_auc = quartiles(acc.ens_auc);
      g.ensemble_logloss = quartiles(acc.ens_ll);
      g.best_auc = quartiles(acc.best);
      g.worst_auc = quartiles(acc.worst);
      g.gap = quartiles(acc.gap);
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<Trend> trends(const std::vector<GroupSummary>& groups, double tolerance) {
  std::map<std::pair<std::string, std::string>, std::vector<const GroupSummary*>> curves;
  for (const auto& g : groups) {
    if (g.runs > 0) curves[{g.fusion, g.variant}].push_back(&g);
  }
  std::vector<Trend> out;
  for (const auto& [key, points] : curves) {
    if (points.size() < 2) continue;
    const auto [lo, hi] = std::minmax_element(
        points.begin(), points.end(), [](const auto* a, const auto* b) { return a->k < b->k; });
    Trend t;
    std::tie(t.fusion, t.variant) = key;
    t.k_low = (*lo)->k;
    t.k_high = (*hi)->k;
    t.median_low = (*lo)->ensemble_auc.median;
    t.median_high = (*hi)->ensemble_auc.median;
    t.non_increasing = t.median_high <= t.median_low + tolerance;
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace ektf::cli
