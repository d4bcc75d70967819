#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdmon/monitor.hpp"
#include "sdmon/navigation.hpp"
#include "sdmon/sensors.hpp"
#include "sdmon/simworld.hpp"

namespace sdmon {

enum class ExperimentKind { Monitor, Tracking };
enum class Patrol { Idle, Lawnmower };
enum class Configuration { CctvOnly, RobotOnly, Hybrid };

std::string_view to_string(ExperimentKind k);
std::string_view to_string(Patrol p);
std::string_view to_string(Configuration c);

struct RgbdSetup {
  bool enabled = true;
  RgbdCameraModel model;
  bool reassign_id_on_reentry = false;
};

struct CctvSetup {
  bool enabled = false;
  std::array<Point2, 4> image_corners{};
  double rect_width = 0.0;   // meters
  double rect_height = 0.0;  // meters
  double pixels_per_meter = 100.0;
  bool reassign_id_on_reentry = false;
  CctvCameraModel model;     // built from the fields above
};

// Batch sweep: every configuration runs every trial; a trial is its
// own world with the listed pedestrians and ends at the first alert.
struct Sweep {
  std::vector<Configuration> configurations;
  double trial_duration = 30.0;
  std::vector<std::vector<Pedestrian>> trials;
};

struct Scenario {
  std::string experiment;
  ExperimentKind kind = ExperimentKind::Monitor;
  double duration = 60.0;
  std::uint64_t seed = 0;
  WorldState world;  // t = 0
  Patrol patrol = Patrol::Lawnmower;
  RgbdSetup rgbd;
  CctvSetup cctv;
  LidarConfig lidar;
  MonitorConfig monitor;
  PlannerConfig planner;
  std::optional<int> tracking_target;
  std::optional<Sweep> sweep;
};

// Overrides are "dotted.path[index]=yaml-value" assignments applied to the
// parsed tree before conversion. Throws ParseError (with line and column) on
// malformed text or unknown keys, ValidationError on broken constraints.
Scenario parse_scenario(const std::string& text, std::span<const std::string> overrides = {});
Scenario load_scenario(const std::string& path, std::span<const std::string> overrides = {});

// Throws ValidationError naming the violated constraint.
void validate(const Scenario& sc);

// Lane spacing actually used for the lawnmower plan.
double lane_spacing(const Scenario& sc);
LawnmowerPlan scenario_lawnmower(const Scenario& sc);

}  // namespace sdmon
