#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "hkdmpc/solve_stats.hpp"

namespace hkdmpc {
namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(SolveStats, ConstantSamples) {
  const SolveStats s = SolveStats::from_samples({5.0, 5.0, 5.0});
  EXPECT_EQ(s.mean, 5.0);
  EXPECT_EQ(s.std, 0.0);
  EXPECT_EQ(s.max, 5.0);
  EXPECT_EQ(s.min, 5.0);
  EXPECT_EQ(s.count, 3u);
  EXPECT_EQ(SolveStats::from_samples({2.5}).std, 0.0);
}

TEST(SolveStats, MatchesWelfordOnePass) {
  std::mt19937_64 rng(40);
  std::lognormal_distribution<double> dist(1.6, 0.4);
  std::vector<double> samples(5000);
  for (double& v : samples) v = dist(rng);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double delta = samples[i] - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (samples[i] - mean);
  }
  const SolveStats s = SolveStats::from_samples(samples);
  EXPECT_NEAR(s.mean, mean, 1e-12 * mean);
  const double std = std::sqrt(m2 / static_cast<double>(samples.size() - 1));
  EXPECT_NEAR(s.std, std, 1e-10 * std);
  EXPECT_EQ(s.max, *std::max_element(samples.begin(), samples.end()));
  EXPECT_EQ(s.min, *std::min_element(samples.begin(), samples.end()));
}

TEST(SolveStats, EmptyInputThrows) {
  EXPECT_THROW(SolveStats::from_samples({}), StatsError);
}

TEST(SolveStats, PublishedTableParses) {
  const auto rows =
      parse_stats_table(read_file(std::string(HKDMPC_FIXTURE_DIR) + "/reference_solve_times.md"));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].first, "Run-jump-run");
  EXPECT_DOUBLE_EQ(rows[0].second.mean, 5.64);
  EXPECT_DOUBLE_EQ(rows[0].second.std, 2.3);
  EXPECT_DOUBLE_EQ(rows[0].second.max, 14.12);
  EXPECT_DOUBLE_EQ(rows[0].second.min, 3.27);
  EXPECT_EQ(rows[1].first, "Mixed gaits");
  EXPECT_DOUBLE_EQ(rows[1].second.max, 10.0);
  EXPECT_EQ(rows[2].first, "Continuous jump");
  EXPECT_DOUBLE_EQ(rows[2].second.max, 14.7);
  EXPECT_DOUBLE_EQ(rows[2].second.min, 2.6);
}

TEST(SolveStats, RenderParseRoundTrip) {
  const auto rows =
      parse_stats_table(read_file(std::string(HKDMPC_FIXTURE_DIR) + "/reference_solve_times.md"));
  const std::string text = render_stats_table(rows, 2);
  EXPECT_NE(text.find("| task | mean (ms) | std (ms) | max (ms) | min (ms) |"), std::string::npos);
  EXPECT_NE(text.find("| Run-jump-run | 5.64 | 2.30 | 14.12 | 3.27 |"), std::string::npos);
  const auto back = parse_stats_table(text);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].first, rows[i].first);
    EXPECT_DOUBLE_EQ(back[i].second.mean, rows[i].second.mean);
    EXPECT_DOUBLE_EQ(back[i].second.min, rows[i].second.min);
  }
  EXPECT_THROW(parse_stats_table("no table here"), StatsError);
  EXPECT_THROW(parse_stats_table("| task | mean | std |\n"), StatsError);
}

TEST(SolveStats, ReadsWallTimeColumn) {
  std::istringstream csv("time,window_start,wall_ms,iterations\n0,0,12.5,30\n0.01,1,4.0,3\n");
  const auto times = read_wall_times(csv);
  ASSERT_EQ(times.size(), 2u);
  EXPECT_EQ(times[0], 12.5);
  EXPECT_EQ(times[1], 4.0);
  std::istringstream missing("time,iterations\n0,1\n");
  EXPECT_THROW(read_wall_times(missing), StatsError);
  std::istringstream empty("time,wall_ms\n");
  EXPECT_THROW(read_wall_times(empty), StatsError);
}

}  // namespace
}  // namespace hkdmpc
