#include "hkdmpc/solve_stats.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <sstream>

namespace hkdmpc {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (trim(s.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw StatsError("cannot parse " + what + " '" + s + "'");
}

}  // namespace

SolveStats SolveStats::from_samples(const std::vector<double>& samples) {
  if (samples.empty()) throw StatsError("no solve-time samples");
  SolveStats s;
  s.count = samples.size();
  s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(s.count);
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  s.min = *lo;
  s.max = *hi;
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : samples) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.count - 1));
  }
  return s;
}

std::string render_stats_table(const std::vector<StatsRow>& rows, int precision) {
  std::ostringstream out;
  out << "| task | mean (ms) | std (ms) | max (ms) | min (ms) |\n";
  out << "|---|---|---|---|---|\n";
  out << std::fixed << std::setprecision(precision);
  for (const auto& [task, s] : rows) {
    out << "| " << task << " | " << s.mean << " | " << s.std << " | " << s.max << " | " << s.min
        << " |\n";
  }
  return out.str();
}

std::vector<StatsRow> parse_stats_table(const std::string& text) {
  std::vector<StatsRow> rows;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line.front() != '|') continue;
    auto cells = split(line.substr(1), '|');
    for (auto& c : cells) c = trim(c);
    while (!cells.empty() && cells.back().empty()) cells.pop_back();
    if (cells.size() != 5) throw StatsError("stats row must have 5 columns: " + line);
    if (!header) {
      if (cells[1].rfind("mean", 0) != 0) throw StatsError("missing stats table header");
      header = true;
      continue;
    }
    if (cells[0].find_first_not_of("-: ") == std::string::npos) continue;
    SolveStats s;
    s.mean = parse_number(cells[1], "mean");
    s.std = parse_number(cells[2], "std");
    s.max = parse_number(cells[3], "max");
    s.min = parse_number(cells[4], "min");
    rows.emplace_back(cells[0], s);
  }
  if (!header) throw StatsError("no stats table found");
  return rows;
}

std::vector<double> read_wall_times(std::istream& csv) {
  std::string line;
  if (!std::getline(csv, line)) throw StatsError("empty telemetry file");
  const auto header = split(trim(line), ',');
  const auto it = std::find(header.begin(), header.end(), "wall_ms");
  if (it == header.end()) throw StatsError("telemetry has no wall_ms column");
  const auto col = static_cast<std::size_t>(it - header.begin());
  std::vector<double> out;
  while (std::getline(csv, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() <= col) throw StatsError("short telemetry row: " + line);
    out.push_back(parse_number(cells[col], "wall_ms"));
  }
  if (out.empty()) throw StatsError("telemetry contains no solves");
  return out;
}

}  // namespace hkdmpc
