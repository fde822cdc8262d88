#include "hkdmpc/scenario.hpp"

#include <filesystem>
#include <set>

#include <yaml-cpp/yaml.h>

namespace hkdmpc {

namespace fs = std::filesystem;

namespace {

constexpr std::array<const char*, kNumLegs> kLegKeys{"front_right", "front_left", "hind_right",
                                                      "hind_left"};

[[noreturn]] void fail(const std::string& what) { throw ConfigError(what); }

double scalar(const YAML::Node& n, const std::string& key) {
  try {
    return n.as<double>();
  } catch (const YAML::Exception&) {
    fail(key + ": expected a number");
  }
}

double scalar_or(const YAML::Node& parent, const char* key, double fallback,
                 const std::string& ctx) {
  const YAML::Node n = parent[key];
  return n ? scalar(n, ctx + "." + key) : fallback;
}

int integer_or(const YAML::Node& parent, const char* key, int fallback, const std::string& ctx) {
  const YAML::Node n = parent[key];
  if (!n) return fallback;
  try {
    return n.as<int>();
  } catch (const YAML::Exception&) {
    fail(ctx + "." + key + ": expected an integer");
  }
}

bool bool_or(const YAML::Node& parent, const char* key, bool fallback, const std::string& ctx) {
  const YAML::Node n = parent[key];
  if (!n) return fallback;
  try {
    return n.as<bool>();
  } catch (const YAML::Exception&) {
    fail(ctx + "." + key + ": expected true/false");
  }
}

std::vector<double> numbers(const YAML::Node& n, const std::string& key) {
  if (!n.IsSequence()) fail(key + ": expected a list of numbers");
  std::vector<double> out;
  for (const auto& item : n) out.push_back(scalar(item, key));
  return out;
}

Vec3 vec3(const YAML::Node& n, const std::string& key) {
  const auto v = numbers(n, key);
  if (v.size() != 3) fail(key + ": expected 3 numbers");
  return {v[0], v[1], v[2]};
}

std::array<double, kNumLegs> per_leg(const YAML::Node& n, const std::string& key) {
  std::array<double, kNumLegs> out{};
  if (n.IsScalar()) {
    out.fill(scalar(n, key));
    return out;
  }
  const auto v = numbers(n, key);
  if (v.size() != kNumLegs) fail(key + ": expected 4 numbers (FR, FL, HR, HL)");
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

// Square weight from a diagonal list or a full matrix (list of rows).
template <int N>
Eigen::Matrix<double, N, N> weight(const YAML::Node& n, const std::string& key) {
  if (!n.IsSequence() || n.size() == 0) fail(key + ": expected a list");
  Eigen::Matrix<double, N, N> m = Eigen::Matrix<double, N, N>::Zero();
  if (n[0].IsSequence()) {
    if (static_cast<int>(n.size()) != N) fail(key + ": expected " + std::to_string(N) + " rows");
    for (int r = 0; r < N; ++r) {
      const auto row = numbers(n[r], key);
      if (static_cast<int>(row.size()) != N) fail(key + ": row has the wrong length");
      for (int c = 0; c < N; ++c) m(r, c) = row[c];
    }
  } else {
    const auto diag = numbers(n, key);
    if (static_cast<int>(diag.size()) != N) {
      fail(key + ": expected " + std::to_string(N) + " diagonal entries");
    }
    for (int i = 0; i < N; ++i) m(i, i) = diag[i];
  }
  return m;
}

void check_keys(const YAML::Node& n, const std::set<std::string>& allowed, const std::string& ctx) {
  if (!n.IsMap()) fail(ctx + ": expected a mapping");
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) fail(ctx + ": unknown key '" + key + "'");
  }
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  const fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p.lexically_normal().string();
  return (fs::path(base_dir) / p).lexically_normal().string();
}

void apply_weights(const YAML::Node& n, CostWeights& w) {
  check_keys(n, {"body", "swing_joint", "stance_foot", "grf", "joint_velocity", "inactive_control",
                 "terminal_scale"},
             "weights");
  if (n["body"]) w.body = weight<kBodyDim>(n["body"], "weights.body");
  if (n["swing_joint"]) w.swing_joint = weight<3>(n["swing_joint"], "weights.swing_joint");
  if (n["stance_foot"]) w.stance_foot = weight<3>(n["stance_foot"], "weights.stance_foot");
  if (n["grf"]) w.grf = weight<3>(n["grf"], "weights.grf");
  if (n["joint_velocity"]) w.joint_velocity = weight<3>(n["joint_velocity"], "weights.joint_velocity");
  w.inactive_control = scalar_or(n, "inactive_control", w.inactive_control, "weights");
  w.terminal_scale = scalar_or(n, "terminal_scale", w.terminal_scale, "weights");
}

void apply_solver(const YAML::Node& n, ControllerConfig& c) {
  check_keys(n, {"max_iterations", "replan_iterations", "max_inner_iterations",
                 "max_outer_iterations", "line_search_decay", "min_step", "regularization_init",
                 "regularization_min", "regularization_max", "regularization_growth",
                 "cost_tolerance", "expected_tolerance", "constraint_tolerance", "penalty_init",
                 "penalty_growth", "penalty_max", "feedback_warm_start", "divergence_bound"},
             "solver");
  ddp::SolverOptions& o = c.solver;
  const std::string ctx = "solver";
  o.max_iterations = integer_or(n, "max_iterations", o.max_iterations, ctx);
  c.replan_iterations = integer_or(n, "replan_iterations", c.replan_iterations, ctx);
  o.max_inner_iterations = integer_or(n, "max_inner_iterations", o.max_inner_iterations, ctx);
  o.max_outer_iterations = integer_or(n, "max_outer_iterations", o.max_outer_iterations, ctx);
  o.line_search_decay = scalar_or(n, "line_search_decay", o.line_search_decay, ctx);
  o.min_step = scalar_or(n, "min_step", o.min_step, ctx);
  o.regularization_init = scalar_or(n, "regularization_init", o.regularization_init, ctx);
  o.regularization_min = scalar_or(n, "regularization_min", o.regularization_min, ctx);
  o.regularization_max = scalar_or(n, "regularization_max", o.regularization_max, ctx);
  o.regularization_growth = scalar_or(n, "regularization_growth", o.regularization_growth, ctx);
  o.cost_tolerance = scalar_or(n, "cost_tolerance", o.cost_tolerance, ctx);
  o.expected_tolerance = scalar_or(n, "expected_tolerance", o.expected_tolerance, ctx);
  o.constraint_tolerance = scalar_or(n, "constraint_tolerance", o.constraint_tolerance, ctx);
  o.penalty_init = scalar_or(n, "penalty_init", o.penalty_init, ctx);
  o.penalty_growth = scalar_or(n, "penalty_growth", o.penalty_growth, ctx);
  o.penalty_max = scalar_or(n, "penalty_max", o.penalty_max, ctx);
  o.feedback_warm_start = bool_or(n, "feedback_warm_start", o.feedback_warm_start, ctx);
  o.divergence_bound = scalar_or(n, "divergence_bound", o.divergence_bound, ctx);
}

void apply_leg_control(const YAML::Node& n, SimConfig& s) {
  check_keys(n, {"swing_apex", "tracking_gain", "kp", "kd", "touchdown_tolerance",
                 "late_touchdown_descent"},
             "leg_control");
  s.swing_apex = scalar_or(n, "swing_apex", s.swing_apex, "leg_control");
  s.swing_tracking_gain = scalar_or(n, "tracking_gain", s.swing_tracking_gain, "leg_control");
  if (n["kp"]) s.pd.kp = vec3(n["kp"], "leg_control.kp");
  if (n["kd"]) s.pd.kd = vec3(n["kd"], "leg_control.kd");
  s.touchdown_tolerance = scalar_or(n, "touchdown_tolerance", s.touchdown_tolerance, "leg_control");
  s.late_touchdown_descent =
      scalar_or(n, "late_touchdown_descent", s.late_touchdown_descent, "leg_control");
}

// Sections shared between controller files and scenarios.
void apply_controller_sections(const YAML::Node& root, Scenario& sc) {
  if (const YAML::Node w = root["weights"]) apply_weights(w, sc.controller.problem.weights);
  if (const YAML::Node b = root["barrier"]) {
    check_keys(b, {"weight", "delta"}, "barrier");
    sc.controller.problem.barrier.weight =
        scalar_or(b, "weight", sc.controller.problem.barrier.weight, "barrier");
    sc.controller.problem.barrier.delta =
        scalar_or(b, "delta", sc.controller.problem.barrier.delta, "barrier");
  }
  if (const YAML::Node r = root["reference"]) {
    check_keys(r, {"raibert_gain", "max_stance_duration", "landing_duration"}, "reference");
    sc.controller.reference.raibert_gain =
        scalar_or(r, "raibert_gain", sc.controller.reference.raibert_gain, "reference");
    sc.controller.reference.max_stance_duration = scalar_or(
        r, "max_stance_duration", sc.controller.reference.max_stance_duration, "reference");
    sc.controller.reference.landing_duration = scalar_or(
        r, "landing_duration", sc.controller.reference.landing_duration, "reference");
  }
  if (const YAML::Node s = root["solver"]) apply_solver(s, sc.controller);
  if (const YAML::Node l = root["leg_control"]) apply_leg_control(l, sc.sim);
}

CommandSegment parse_segment(const YAML::Node& n, int index) {
  const std::string ctx = "commands[" + std::to_string(index) + "]";
  check_keys(n, {"gait", "duration", "period", "duty", "offsets", "stance", "flight", "intervals",
                 "height", "vx", "vy", "yaw_rate", "apex"},
             ctx);
  if (!n["gait"]) fail(ctx + ": missing 'gait'");
  const auto gait = n["gait"].as<std::string>();
  CommandSegment seg;
  if (gait == "jump") {
    if (!n["stance"] || !n["flight"]) fail(ctx + ": jump needs 'stance' and 'flight'");
    seg.gait = gait_jump(scalar(n["stance"], ctx + ".stance"), scalar(n["flight"], ctx + ".flight"));
  } else if (gait == "custom") {
    if (!n["duration"] || !n["intervals"]) fail(ctx + ": custom gait needs duration and intervals");
    std::array<std::vector<ContactInterval>, kNumLegs> iv;
    const YAML::Node legs = n["intervals"];
    check_keys(legs, {kLegKeys.begin(), kLegKeys.end()}, ctx + ".intervals");
    for (int j = 0; j < kNumLegs; ++j) {
      const YAML::Node list = legs[kLegKeys[j]];
      if (!list) continue;
      for (const auto& item : list) {
        const auto v = numbers(item, ctx + ".intervals");
        if (v.size() != 2) fail(ctx + ".intervals: each stance interval is [start, end]");
        iv[j].push_back({v[0], v[1], true});
      }
    }
    seg.gait = GaitSpec::aperiodic("custom", scalar(n["duration"], ctx + ".duration"), std::move(iv));
  } else {
    if (!n["duration"]) fail(ctx + ": missing 'duration'");
    try {
      seg.gait = gait_preset(gait, scalar(n["duration"], ctx + ".duration"));
    } catch (const InvalidSpec& e) {
      fail(ctx + ": " + e.what());
    }
    if (n["period"]) seg.gait.period = scalar(n["period"], ctx + ".period");
    if (n["duty"]) seg.gait.duty = per_leg(n["duty"], ctx + ".duty");
    if (n["offsets"]) seg.gait.phase_offset = per_leg(n["offsets"], ctx + ".offsets");
  }
  MotionCommand& c = seg.command;
  c.height = scalar_or(n, "height", c.height, ctx);
  c.forward_velocity = scalar_or(n, "vx", c.forward_velocity, ctx);
  c.lateral_velocity = scalar_or(n, "vy", c.lateral_velocity, ctx);
  c.yaw_rate = scalar_or(n, "yaw_rate", c.yaw_rate, ctx);
  c.flight_apex = scalar_or(n, "apex", c.flight_apex, ctx);
  try {
    seg.gait.validate();
  } catch (const InvalidSpec& e) {
    fail(ctx + ": " + e.what());
  }
  return seg;
}

TimedImpulse parse_impulse(const YAML::Node& n, int index) {
  const std::string ctx = "disturbances[" + std::to_string(index) + "]";
  check_keys(n, {"time", "omega", "velocity"}, ctx);
  if (!n["time"]) fail(ctx + ": missing 'time'");
  TimedImpulse ti;
  ti.time = scalar(n["time"], ctx + ".time");
  if (n["omega"]) ti.impulse.omega = vec3(n["omega"], ctx + ".omega");
  if (n["velocity"]) ti.impulse.velocity = vec3(n["velocity"], ctx + ".velocity");
  return ti;
}

YAML::Node load_yaml_file(const std::string& path) {
  try {
    return YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    fail("cannot open '" + path + "'");
  } catch (const YAML::Exception& e) {
    fail("malformed YAML in '" + path + "': " + e.what());
  }
}

}  // namespace

GaitSpec gait_preset(const std::string& name, double duration) {
  if (name == "stand") return gait_stand(duration);
  if (name == "trot") return gait_trot(duration);
  if (name == "bound") return gait_bound(duration);
  if (name == "hop-diagonal") return gait_hop_diagonal(duration);
  if (name == "hop-four") return gait_hop_four(duration);
  throw InvalidSpec("unknown gait preset '" + name + "'");
}

Scenario parse_scenario(const std::string& yaml_text, const std::string& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    fail(std::string("malformed scenario YAML: ") + e.what());
  }
  check_keys(root, {"name", "robot", "controller", "dt", "horizon", "commands", "weights",
                    "barrier", "reference", "solver", "leg_control", "sim", "disturbances",
                    "random_disturbances", "seed", "output"},
             "scenario");

  Scenario sc;
  sc.name = root["name"] ? root["name"].as<std::string>() : "scenario";
  if (!root["robot"]) fail("scenario: missing 'robot'");
  sc.robot_path = resolve(base_dir, root["robot"].as<std::string>());
  try {
    sc.robot = load_robot_params(sc.robot_path);
  } catch (const InvalidRobotParams& e) {
    fail(e.what());
  }

  sc.dt = scalar_or(root, "dt", 0.01, "scenario");
  if (!(sc.dt > 0.0)) fail("scenario.dt must be positive");
  const double horizon = scalar_or(root, "horizon", 0.5, "scenario");
  const double steps = horizon / sc.dt;
  if (!(horizon > 0.0) || std::abs(steps - std::round(steps)) > 1e-9) {
    fail("scenario.horizon must be a positive multiple of dt");
  }
  sc.controller.horizon_steps = static_cast<int>(std::round(steps));
  sc.controller.problem.dt = sc.dt;

  if (const YAML::Node c = root["controller"]) {
    const std::string path = resolve(base_dir, c.as<std::string>());
    const YAML::Node ctrl = load_yaml_file(path);
    check_keys(ctrl, {"weights", "barrier", "reference", "solver", "leg_control"},
               "controller file '" + path + "'");
    apply_controller_sections(ctrl, sc);
  }
  apply_controller_sections(root, sc);

  const YAML::Node cmds = root["commands"];
  if (!cmds || !cmds.IsSequence() || cmds.size() == 0) fail("scenario: 'commands' must be a nonempty list");
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    sc.commands.push_back(parse_segment(cmds[i], static_cast<int>(i)));
  }

  if (const YAML::Node s = root["sim"]) {
    check_keys(s, {"plant_rate", "mpc_rate", "policy_lag_ticks", "duration", "noise_std",
                   "plant_feedback", "feedback_cutoff", "asynchronous", "state_bound", "min_height", "max_tilt"},
               "sim");
    SimConfig& sim = sc.sim;
    sim.plant_rate = scalar_or(s, "plant_rate", sim.plant_rate, "sim");
    sim.mpc_rate = scalar_or(s, "mpc_rate", sim.mpc_rate, "sim");
    sim.policy_lag_ticks = integer_or(s, "policy_lag_ticks", sim.policy_lag_ticks, "sim");
    sim.duration = scalar_or(s, "duration", sim.duration, "sim");
    sim.noise_std = scalar_or(s, "noise_std", sim.noise_std, "sim");
    sim.plant_feedback = bool_or(s, "plant_feedback", sim.plant_feedback, "sim");
    sim.feedback_cutoff = scalar_or(s, "feedback_cutoff", sim.feedback_cutoff, "sim");
    sim.asynchronous = bool_or(s, "asynchronous", sim.asynchronous, "sim");
    sim.limits.state_bound = scalar_or(s, "state_bound", sim.limits.state_bound, "sim");
    sim.limits.min_height = scalar_or(s, "min_height", sim.limits.min_height, "sim");
    sim.limits.max_tilt = scalar_or(s, "max_tilt", sim.limits.max_tilt, "sim");
  }
  if (const YAML::Node d = root["disturbances"]) {
    if (!d.IsSequence()) fail("scenario.disturbances must be a list");
    for (std::size_t i = 0; i < d.size(); ++i) {
      sc.sim.impulses.push_back(parse_impulse(d[i], static_cast<int>(i)));
    }
  }
  if (const YAML::Node r = root["random_disturbances"]) {
    check_keys(r, {"count", "max_speed", "start", "end"}, "random_disturbances");
    RandomImpulses& ri = sc.sim.random_impulses;
    ri.count = integer_or(r, "count", ri.count, "random_disturbances");
    ri.max_speed = scalar_or(r, "max_speed", ri.max_speed, "random_disturbances");
    ri.start = scalar_or(r, "start", ri.start, "random_disturbances");
    ri.end = scalar_or(r, "end", ri.end, "random_disturbances");
  }
  if (const YAML::Node seed = root["seed"]) {
    try {
      sc.sim.seed = seed.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      fail("scenario.seed must be a nonnegative integer");
    }
  }
  sc.output_dir = root["output"] ? resolve(base_dir, root["output"].as<std::string>())
                                 : (fs::path("out") / sc.name).string();

  try {
    sc.controller.validate();
    sc.sim.validate();
    (void)sc.script();
  } catch (const std::invalid_argument& e) {
    fail(sc.name + ": " + e.what());
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  const YAML::Node root = load_yaml_file(path);
  const std::string base = fs::path(path).parent_path().string();
  Scenario sc = parse_scenario(YAML::Dump(root), base);
  sc.source_path = path;
  return sc;
}

}  // namespace hkdmpc
