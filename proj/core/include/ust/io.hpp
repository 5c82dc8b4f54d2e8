// YAML files for tracker configurations and scenarios, ground-truth text
// files and logging setup.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ust/cotracker.hpp"
#include "ust/simulator.hpp"

namespace ust {

/// Malformed or inconsistent configuration input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Keys absent from the text keep their defaults; unknown keys are errors.
TrackerConfig parse_tracker_config(const std::string& yaml_text);
TrackerConfig load_tracker_config(const std::filesystem::path& path);
std::string dump_tracker_config(const TrackerConfig& config);

ScenarioSpec parse_scenario(const std::string& yaml_text);
ScenarioSpec load_scenario(const std::filesystem::path& path);
std::string dump_scenario(const ScenarioSpec& spec);

/// One "x,y,w,h" line per frame, top-left corner convention.
void write_ground_truth(std::ostream& out, std::span<const TargetState> boxes);
std::vector<TargetState> read_ground_truth(const std::filesystem::path& path);

/// Sets the global log level from UST_LOG (off, info, trace; anything else
/// or unset leaves warnings on).
void configure_logging_from_env();

}  // namespace ust
