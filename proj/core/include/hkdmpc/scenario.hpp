#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "hkdmpc/mpc_runtime.hpp"

namespace hkdmpc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Scenario {
  std::string name;
  std::string source_path;
  std::string robot_path;
  RobotParams robot;
  std::vector<CommandSegment> commands;
  double dt = 0.01;
  ControllerConfig controller;
  SimConfig sim;
  std::string output_dir;

  CommandScript script() const { return CommandScript(commands, dt); }
};

/// Loads a scenario file; relative paths inside it resolve against the file's
/// directory. Throws ConfigError.
Scenario load_scenario(const std::string& path);

/// Parses scenario YAML text; relative paths resolve against `base_dir`.
Scenario parse_scenario(const std::string& yaml_text, const std::string& base_dir);

/// Periodic gait preset by name: stand, trot, bound, hop-diagonal, hop-four.
GaitSpec gait_preset(const std::string& name, double duration);

}  // namespace hkdmpc
