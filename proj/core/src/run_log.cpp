#include "hkdmpc/run_log.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace hkdmpc {

namespace si = state_index;

namespace {

constexpr std::array<const char*, kNumLegs> kShort{"fr", "fl", "hr", "hl"};

void write_number(std::ostream& out, double v) {
  // Round-trip precision keeps repeated runs byte-identical and lossless.
  out << std::setprecision(17) << v;
}

}  // namespace

std::string run_csv_header() {
  std::ostringstream h;
  h << "time,roll,pitch,yaw,px,py,pz,wx,wy,wz,vx,vy,vz";
  for (const char* leg : kShort) h << ',' << leg << "_y0," << leg << "_y1," << leg << "_y2";
  for (const char* leg : kShort) h << ',' << leg << "_fx," << leg << "_fy," << leg << "_fz";
  for (const char* leg : kShort) h << ',' << leg << "_qd0," << leg << "_qd1," << leg << "_qd2";
  for (const char* leg : kShort) h << ',' << leg << "_tau0," << leg << "_tau1," << leg << "_tau2";
  for (const char* leg : kShort) h << ',' << leg << "_contact";
  return h.str();
}

void write_run_csv(const RunLog& log, std::ostream& out) {
  out << run_csv_header() << '\n';
  for (const LogRow& r : log.rows) {
    write_number(out, r.time);
    for (int i = 0; i < kStateDim; ++i) {
      out << ',';
      write_number(out, r.x[i]);
    }
    for (int i = 0; i < kControlDim; ++i) {
      out << ',';
      write_number(out, r.u[i]);
    }
    for (const Vec3& tau : r.torque) {
      for (int i = 0; i < 3; ++i) {
        out << ',';
        write_number(out, tau[i]);
      }
    }
    for (bool c : r.contact.stance) out << ',' << (c ? 1 : 0);
    out << '\n';
  }
}

void write_telemetry_csv(const std::vector<SolveTelemetry>& telemetry, std::ostream& out) {
  out << "time,window_start,wall_ms,iterations,cost,violation,status,cold_start,"
         "warm_start_diverged,first_rollout_cost\n";
  for (const SolveTelemetry& t : telemetry) {
    write_number(out, t.time);
    out << ',' << t.window_start << ',';
    write_number(out, t.wall_ms);
    out << ',' << t.iterations << ',';
    write_number(out, t.cost);
    out << ',';
    write_number(out, t.violation);
    out << ',' << (t.converged ? "converged" : "not_converged") << ',' << (t.cold_start ? 1 : 0)
        << ',' << (t.warm_start_diverged ? 1 : 0) << ',';
    write_number(out, t.first_rollout_cost);
    out << '\n';
  }
}

void write_events_csv(const std::vector<EventRecord>& events, std::ostream& out) {
  out << "time,kind,leg,detail\n";
  for (const EventRecord& e : events) {
    std::string detail = e.detail;
    std::replace(detail.begin(), detail.end(), ',', ';');
    std::replace(detail.begin(), detail.end(), '\n', ' ');
    write_number(out, e.time);
    out << ',' << e.kind << ',' << (e.leg >= 0 ? kShort[e.leg] : "") << ',' << detail << '\n';
  }
}

void write_reference_csv(const std::vector<ReferenceProfilePoint>& profile, std::ostream& out) {
  out << "t,z_ref,vx_ref\n";
  for (const auto& p : profile) {
    write_number(out, p.t);
    out << ',';
    write_number(out, p.z);
    out << ',';
    write_number(out, p.vx);
    out << '\n';
  }
}

std::vector<FlightRecord> realized_flights(const RunLog& log) {
  std::vector<FlightRecord> out;
  bool airborne = false;
  FlightRecord current;
  for (const LogRow& r : log.rows) {
    const bool flight = r.contact.count() == 0;
    const double z = r.x[si::kPosition + 2];
    if (flight && !airborne) {
      airborne = true;
      current = FlightRecord{r.time, r.time, z};
    } else if (flight) {
      current.apex = std::max(current.apex, z);
    } else if (airborne) {
      airborne = false;
      current.touchdown = r.time;
      out.push_back(current);
    }
  }
  return out;
}

double height_rmse(const RunLog& log, const CommandScript& script, const RobotParams& params,
                   double t0, double t1) {
  const auto profile = reference_profile(script, params);
  double sum = 0.0;
  int n = 0;
  for (const LogRow& r : log.rows) {
    if (r.time < t0 - 1e-12 || r.time >= t1 - 1e-12) continue;
    const int k = std::clamp(static_cast<int>(std::floor(r.time / script.dt() + 1e-9)), 0,
                             static_cast<int>(profile.size()) - 1);
    const double e = r.x[si::kPosition + 2] - profile[k].z;
    sum += e * e;
    ++n;
  }
  return n > 0 ? std::sqrt(sum / n) : 0.0;
}

RunSummary summarize(const std::string& scenario, const RunLog& log, const CommandScript& script,
                     const RobotParams& params) {
  RunSummary s;
  s.scenario = scenario;
  s.diverged = log.diverged;
  s.divergence_reason = log.divergence_reason;
  s.simulated_seconds = log.rows.empty() ? 0.0 : log.rows.back().time;
  s.wall_seconds = log.wall_seconds;
  s.flights = realized_flights(log);
  for (const auto& fw : script.flight_windows()) {
    s.scheduled_flight_durations.push_back((fw.last - fw.first) * script.dt());
  }
  s.height_rmse = height_rmse(log, script, params, 0.0, s.simulated_seconds + 1.0);
  s.solves = static_cast<int>(log.telemetry.size());
  for (const SolveTelemetry& t : log.telemetry) {
    if (t.cold_start) continue;
    s.max_replan_iterations = std::max(s.max_replan_iterations, t.iterations);
    s.max_replan_violation = std::max(s.max_replan_violation, t.violation);
  }
  for (const EventRecord& e : log.events) {
    if (e.kind == "late_touchdown") ++s.late_touchdowns;
    if (e.kind == "out_of_workspace") ++s.workspace_events;
  }
  return s;
}

void write_summary(const RunSummary& s, std::ostream& out) {
  out << "scenario: " << s.scenario << '\n';
  out << "diverged: " << (s.diverged ? "true" : "false") << '\n';
  if (s.diverged) out << "divergence_reason: \"" << s.divergence_reason << "\"\n";
  out << "simulated_seconds: " << s.simulated_seconds << '\n';
  out << "wall_seconds: " << s.wall_seconds << '\n';
  out << "solves: " << s.solves << '\n';
  out << "max_replan_iterations: " << s.max_replan_iterations << '\n';
  out << "max_replan_violation: " << s.max_replan_violation << '\n';
  out << "height_rmse: " << s.height_rmse << '\n';
  out << "late_touchdowns: " << s.late_touchdowns << '\n';
  out << "out_of_workspace_events: " << s.workspace_events << '\n';
  out << "scheduled_flight_durations: [";
  for (std::size_t i = 0; i < s.scheduled_flight_durations.size(); ++i) {
    out << (i ? ", " : "") << s.scheduled_flight_durations[i];
  }
  out << "]\n";
  out << "flights:\n";
  for (const FlightRecord& f : s.flights) {
    out << "  - {takeoff: " << f.takeoff << ", touchdown: " << f.touchdown
        << ", duration: " << f.duration() << ", apex_height: " << f.apex << "}\n";
  }
}

}  // namespace hkdmpc
