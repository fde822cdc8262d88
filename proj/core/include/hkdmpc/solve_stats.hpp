#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hkdmpc {

class StatsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Solve-time statistics in milliseconds. `std` is the sample standard
/// deviation (0 for a single sample).
struct SolveStats {
  double mean = 0.0;
  double std = 0.0;
  double max = 0.0;
  double min = 0.0;
  std::size_t count = 0;

  /// Throws StatsError on empty input.
  static SolveStats from_samples(const std::vector<double>& samples);
};

using StatsRow = std::pair<std::string, SolveStats>;

/// Markdown table: | task | mean (ms) | std (ms) | max (ms) | min (ms) |
std::string render_stats_table(const std::vector<StatsRow>& rows, int precision = 2);

/// Inverse of render_stats_table (sample counts are not part of the table).
std::vector<StatsRow> parse_stats_table(const std::string& text);

/// The wall_ms column of a telemetry CSV. Throws StatsError.
std::vector<double> read_wall_times(std::istream& csv);

}  // namespace hkdmpc
