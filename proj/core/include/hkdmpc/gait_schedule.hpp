#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hkdmpc/hkd_dynamics.hpp"

namespace hkdmpc {

class InvalidSpec : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ContactInterval {
  double start = 0.0;  // s, segment-local
  double end = 0.0;
  bool in_contact = true;
};

/// One gait segment. Periodic gaits use a leg-independent phase variable;
/// aperiodic gaits list explicit per-leg intervals. Time not covered by an
/// aperiodic interval is swing.
struct GaitSpec {
  enum class Kind { Periodic, Aperiodic };

  std::string name;
  Kind kind = Kind::Periodic;
  double duration = 0.0;

  double period = 1.0;
  std::array<double, kNumLegs> phase_offset{};
  std::array<double, kNumLegs> duty{};

  std::array<std::vector<ContactInterval>, kNumLegs> intervals;

  void validate() const;

  static GaitSpec periodic(std::string name, double duration, double period,
                           std::array<double, kNumLegs> offsets,
                           std::array<double, kNumLegs> duty);
  static GaitSpec aperiodic(std::string name, double duration,
                            std::array<std::vector<ContactInterval>, kNumLegs> intervals);

  /// Contact status of `leg` at segment-local time t; periodic gaits extend
  /// past `duration`, aperiodic gaits hold their last status.
  bool in_contact(int leg, double t) const;
};

// Bundled presets. Periods and duty factors are tuned defaults.
GaitSpec gait_stand(double duration);
GaitSpec gait_trot(double duration, double period = 0.36, double duty = 0.5);
GaitSpec gait_bound(double duration, double period = 0.36, double duty = 0.5);
/// Alternating diagonal-pair hops with a flight phase between pairs.
GaitSpec gait_hop_diagonal(double duration, double period = 1.0, double duty = 0.3);
/// Four-leg hops (pronk).
GaitSpec gait_hop_four(double duration, double period = 0.5, double duty = 0.6);
/// Crouch with all legs in stance, then all legs in flight.
GaitSpec gait_jump(double stance_duration, double flight_duration);

/// Per-leg contact timeline sampled at dt. Column k covers
/// [start_time + k*dt, start_time + (k+1)*dt).
class ContactSchedule {
 public:
  ContactSchedule() = default;
  ContactSchedule(double dt, double start_time, std::vector<ContactFlags> columns);

  double dt() const { return dt_; }
  double start_time() const { return start_time_; }
  int size() const { return static_cast<int>(columns_.size()); }
  double end_time() const { return start_time_ + dt_ * size(); }
  const ContactFlags& at(int k) const { return columns_.at(k); }
  const std::vector<ContactFlags>& columns() const { return columns_; }
  bool stance(Leg leg, int k) const { return columns_.at(k)[leg]; }

  /// Index of the column containing absolute time t (may lie past the end).
  int step_at(double t) const;

  /// Contact flags at column k, extending past the end with the final
  /// segment's pattern.
  ContactFlags flags_at(int k) const;

  // Tail rule used by flags_at for columns beyond the end.
  struct Tail {
    GaitSpec spec;
    int first_step = 0;  // column where the tail segment started
  };
  void set_tail(Tail tail) { tail_ = std::move(tail); }
  const std::optional<Tail>& tail() const { return tail_; }

 private:
  double dt_ = 0.01;
  double start_time_ = 0.0;
  std::vector<ContactFlags> columns_;
  std::optional<Tail> tail_;
};

ContactSchedule build_gait(const GaitSpec& spec, double dt, double start_time = 0.0);
ContactSchedule compose(const std::vector<GaitSpec>& specs, double dt, double start_time = 0.0);

/// horizon/dt columns starting at the column containing t0.
ContactSchedule window(const ContactSchedule& schedule, double t0, double horizon);

enum class LegEvent { None, Touchdown, Takeoff };

struct Phase {
  int start = 0;  // inclusive
  int end = 0;    // exclusive
  ContactFlags flags;
  std::array<LegEvent, kNumLegs> events{};  // at `end`

  int length() const { return end - start; }
  bool has_event() const;
};

std::vector<Phase> segment_phases(const ContactSchedule& schedule);

}  // namespace hkdmpc
