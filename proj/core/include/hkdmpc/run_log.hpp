#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hkdmpc/mpc_runtime.hpp"

namespace hkdmpc {

/// One row per plant tick: time, 24 states, 24 controls, 12 torques, 4 contact flags.
void write_run_csv(const RunLog& log, std::ostream& out);
std::string run_csv_header();

/// One row per solve: time, window_start, wall_ms, iterations, cost, violation, status, ...
void write_telemetry_csv(const std::vector<SolveTelemetry>& telemetry, std::ostream& out);
void write_events_csv(const std::vector<EventRecord>& events, std::ostream& out);
/// Open-loop reference series: t, z_ref, vx_ref.
void write_reference_csv(const std::vector<ReferenceProfilePoint>& profile, std::ostream& out);

struct FlightRecord {
  double takeoff = 0.0;
  double touchdown = 0.0;
  double apex = 0.0;  // highest CoM z while airborne
  double duration() const { return touchdown - takeoff; }
};

/// Intervals where the plant had all four feet off the ground.
std::vector<FlightRecord> realized_flights(const RunLog& log);

/// RMSE of the CoM height against the reference height over [t0, t1).
double height_rmse(const RunLog& log, const CommandScript& script, const RobotParams& params,
                   double t0, double t1);

struct RunSummary {
  std::string scenario;
  bool diverged = false;
  std::string divergence_reason;
  double simulated_seconds = 0.0;
  double wall_seconds = 0.0;
  std::vector<FlightRecord> flights;
  std::vector<double> scheduled_flight_durations;
  double height_rmse = 0.0;
  int solves = 0;
  int max_replan_iterations = 0;
  double max_replan_violation = 0.0;
  int late_touchdowns = 0;
  int workspace_events = 0;
};

RunSummary summarize(const std::string& scenario, const RunLog& log, const CommandScript& script,
                     const RobotParams& params);
void write_summary(const RunSummary& summary, std::ostream& out);

}  // namespace hkdmpc
