#include "hkdmpc/gait_schedule.hpp"

#include <cmath>

namespace hkdmpc {

namespace {

// Guards against k*dt/period landing a hair below an exact phase boundary.
constexpr double kPhaseEps = 1e-9;

int steps_for(double duration, double dt) {
  const double n = duration / dt;
  const double rounded = std::round(n);
  if (std::abs(rounded * dt - duration) > 1e-9) {
    throw InvalidSpec("segment duration " + std::to_string(duration) +
                      " is not a multiple of dt " + std::to_string(dt));
  }
  return static_cast<int>(rounded);
}

}  // namespace

void GaitSpec::validate() const {
  if (!(duration > 0.0)) throw InvalidSpec(name + ": duration must be positive");
  if (kind == Kind::Periodic) {
    if (!(period > 0.0)) throw InvalidSpec(name + ": period must be positive");
    for (int j = 0; j < kNumLegs; ++j) {
      if (phase_offset[j] < 0.0 || phase_offset[j] > 1.0) {
        throw InvalidSpec(name + ": phase offsets must lie in [0, 1]");
      }
      if (duty[j] < 0.0 || duty[j] > 1.0) throw InvalidSpec(name + ": duty must lie in [0, 1]");
    }
    return;
  }
  for (int j = 0; j < kNumLegs; ++j) {
    double last_end = 0.0;
    for (const ContactInterval& iv : intervals[j]) {
      if (iv.start < -1e-12 || iv.end > duration + 1e-9 || iv.end < iv.start) {
        throw InvalidSpec(name + ": interval outside [0, duration]");
      }
      if (iv.start < last_end - 1e-12) throw InvalidSpec(name + ": overlapping intervals");
      last_end = iv.end;
    }
  }
}

GaitSpec GaitSpec::periodic(std::string name, double duration, double period,
                            std::array<double, kNumLegs> offsets,
                            std::array<double, kNumLegs> duty) {
  GaitSpec g;
  g.name = std::move(name);
  g.kind = Kind::Periodic;
  g.duration = duration;
  g.period = period;
  g.phase_offset = offsets;
  g.duty = duty;
  return g;
}

GaitSpec GaitSpec::aperiodic(std::string name, double duration,
                             std::array<std::vector<ContactInterval>, kNumLegs> intervals) {
  GaitSpec g;
  g.name = std::move(name);
  g.kind = Kind::Aperiodic;
  g.duration = duration;
  g.intervals = std::move(intervals);
  return g;
}

bool GaitSpec::in_contact(int leg, double t) const {
  if (kind == Kind::Periodic) {
    double phase = t / period - phase_offset[leg] + kPhaseEps;
    phase -= std::floor(phase);
    return phase < duty[leg];
  }
  const double tq = std::min(t, duration - kPhaseEps) + kPhaseEps;
  for (const ContactInterval& iv : intervals[leg]) {
    if (tq >= iv.start && tq < iv.end) return iv.in_contact;
  }
  return false;
}

GaitSpec gait_stand(double duration) {
  return GaitSpec::periodic("stand", duration, 1.0, {0, 0, 0, 0}, {1, 1, 1, 1});
}

GaitSpec gait_trot(double duration, double period, double duty) {
  return GaitSpec::periodic("trot", duration, period, {0.0, 0.5, 0.5, 0.0},
                            {duty, duty, duty, duty});
}

GaitSpec gait_bound(double duration, double period, double duty) {
  return GaitSpec::periodic("bound", duration, period, {0.0, 0.0, 0.5, 0.5},
                            {duty, duty, duty, duty});
}

GaitSpec gait_hop_diagonal(double duration, double period, double duty) {
  return GaitSpec::periodic("hop-diagonal", duration, period, {0.0, 0.5, 0.5, 0.0},
                            {duty, duty, duty, duty});
}

GaitSpec gait_hop_four(double duration, double period, double duty) {
  return GaitSpec::periodic("hop-four", duration, period, {0, 0, 0, 0}, {duty, duty, duty, duty});
}

GaitSpec gait_jump(double stance_duration, double flight_duration) {
  std::array<std::vector<ContactInterval>, kNumLegs> iv;
  for (auto& leg : iv) leg.push_back({0.0, stance_duration, true});
  return GaitSpec::aperiodic("jump", stance_duration + flight_duration, std::move(iv));
}

ContactSchedule::ContactSchedule(double dt, double start_time, std::vector<ContactFlags> columns)
    : dt_(dt), start_time_(start_time), columns_(std::move(columns)) {
  if (!(dt_ > 0.0)) throw InvalidSpec("schedule dt must be positive");
  if (columns_.empty()) throw InvalidSpec("schedule must contain at least one column");
}

int ContactSchedule::step_at(double t) const {
  return static_cast<int>(std::floor((t - start_time_) / dt_ + kPhaseEps));
}

ContactFlags ContactSchedule::flags_at(int k) const {
  if (k < 0) throw std::out_of_range("negative schedule column");
  if (k < size()) return columns_[k];
  if (!tail_) return columns_.back();
  ContactFlags s;
  const double local = (k - tail_->first_step) * dt_;
  for (int j = 0; j < kNumLegs; ++j) s.stance[j] = tail_->spec.in_contact(j, local);
  return s;
}

ContactSchedule build_gait(const GaitSpec& spec, double dt, double start_time) {
  return compose({spec}, dt, start_time);
}

ContactSchedule compose(const std::vector<GaitSpec>& specs, double dt, double start_time) {
  if (specs.empty()) throw InvalidSpec("gait sequence is empty");
  if (!(dt > 0.0)) throw InvalidSpec("dt must be positive");
  std::vector<ContactFlags> columns;
  int tail_start = 0;
  for (const GaitSpec& spec : specs) {
    spec.validate();
    const int n = steps_for(spec.duration, dt);
    tail_start = static_cast<int>(columns.size());
    for (int k = 0; k < n; ++k) {
      ContactFlags s;
      for (int j = 0; j < kNumLegs; ++j) s.stance[j] = spec.in_contact(j, k * dt);
      columns.push_back(s);
    }
  }
  ContactSchedule schedule(dt, start_time, std::move(columns));
  schedule.set_tail({specs.back(), tail_start});
  return schedule;
}

ContactSchedule window(const ContactSchedule& schedule, double t0, double horizon) {
  if (t0 < schedule.start_time() - 1e-12) throw InvalidSpec("window starts before schedule");
  const int first = schedule.step_at(t0);
  const int n = std::max(1, static_cast<int>(std::round(horizon / schedule.dt())));
  std::vector<ContactFlags> cols;
  cols.reserve(n);
  for (int k = 0; k < n; ++k) cols.push_back(schedule.flags_at(first + k));
  return ContactSchedule(schedule.dt(), schedule.start_time() + first * schedule.dt(),
                         std::move(cols));
}

bool Phase::has_event() const {
  for (LegEvent e : events) {
    if (e != LegEvent::None) return true;
  }
  return false;
}

std::vector<Phase> segment_phases(const ContactSchedule& schedule) {
  std::vector<Phase> phases;
  const int n = schedule.size();
  int start = 0;
  for (int k = 1; k <= n; ++k) {
    if (k < n && schedule.at(k) == schedule.at(start)) continue;
    Phase ph;
    ph.start = start;
    ph.end = k;
    ph.flags = schedule.at(start);
    if (k < n) {
      const ContactFlags& next = schedule.at(k);
      for (int j = 0; j < kNumLegs; ++j) {
        if (!ph.flags.stance[j] && next.stance[j]) ph.events[j] = LegEvent::Touchdown;
        if (ph.flags.stance[j] && !next.stance[j]) ph.events[j] = LegEvent::Takeoff;
      }
    }
    phases.push_back(ph);
    start = k;
  }
  return phases;
}

}  // namespace hkdmpc
