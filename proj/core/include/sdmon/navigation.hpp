#pragma once

#include <deque>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "sdmon/geometry.hpp"
#include "sdmon/monitor.hpp"
#include "sdmon/sensors.hpp"
#include "sdmon/simworld.hpp"

namespace sdmon {

struct PlannerConfig {
  double horizon = 1.0;            // PFZ prediction, seconds
  double trigger_distance = 3.0;   // nearest contributor closer than this
  double stop_distance = 0.5;
  double stop_half_angle = deg_to_rad(15.0);
  double heading_gain = 2.0;       // omega = k * heading error
  double min_pfz_speed = 0.05;
  double corridor_margin = 0.1;    // added to the robot radius
  double corridor_length = 1.0;
  double goal_clearance = 0.5;     // corridor stops this short of the goal
  double search_step = deg_to_rad(1.0);
  double rotate_fraction = 0.8;    // of FOV/2, beyond which pursuit only rotates
  double trail_lookahead = 0.5;
  double waypoint_tolerance = 0.3;
  std::optional<double> lane_spacing;  // defaults to the RGB-D range
};

struct PlannerInput {
  Point2 goal;  // robot frame
  LidarScan lidar;
  VelocityCommand current;
};

// Pedestrian as the robot perceives it, robot frame.
struct TrackedPedestrian {
  int id = 0;
  Point2 position;
  Vec2 velocity;
};

struct FreezingZone {
  ConvexPolygon hull;  // robot frame
  double horizon = 1.0;
  std::vector<int> contributors;
  double nearest_distance = 0.0;  // current range of the nearest contributor

  bool empty() const { return contributors.empty(); }
};

// Contributors: speed above min_speed, ahead of the robot (x > 0) and
// closing (p . v < 0). Hull over p + v * horizon.
FreezingZone build_pfz(std::span<const TrackedPedestrian> peds, const RobotState& robot, double horizon,
                       double min_speed = 0.05);

// True when the heading ray passes within `inflate` of the hull.
bool heading_hits_zone(double heading, const ConvexPolygon& hull, double inflate);

// Smallest rotation of `heading` that makes the ray tangent to the hull
// inflated by `inflate` (ties to the right). Returns the heading unchanged if
// the ray already clears it.
double clear_zone_heading(double heading, const ConvexPolygon& hull, double inflate);

struct PlanResult {
  VelocityCommand cmd;
  double heading = 0.0;  // commanded heading, robot frame
  bool pfz_triggered = false;
  bool detoured = false;
  bool stopped = false;
};

// Stand-in for a learned policy; swapping planners touches nothing else.
class Planner {
 public:
  virtual ~Planner() = default;
  virtual PlanResult plan(const PlannerInput& in, const FreezingZone& pfz, const RobotState& robot) = 0;
};

PlanResult baseline_plan(const PlannerInput& in, const FreezingZone& pfz, const RobotState& robot,
                         const PlannerConfig& cfg);

class BaselinePlanner : public Planner {
 public:
  explicit BaselinePlanner(PlannerConfig cfg = {}) : cfg_(cfg) {}
  PlanResult plan(const PlannerInput& in, const FreezingZone& pfz, const RobotState& robot) override {
    return baseline_plan(in, pfz, robot, cfg_);
  }
  const PlannerConfig& config() const { return cfg_; }

 private:
  PlannerConfig cfg_;
};

// Pursuit toward the locked pedestrian. `nav_target` is where to drive (the
// lock itself, or a breadcrumb on the CCTV trail); state.goal is the lock.
// With an RGB-D lock beyond rotate_fraction * FOV/2 the robot only rotates;
// at or inside `standoff` it stops and faces the lock.
PlanResult pursue(const PursuitState& state, const Point2& nav_target, const PlannerInput& in,
                  const FreezingZone& pfz, const RobotState& robot, double camera_fov, double standoff,
                  Planner& planner, const PlannerConfig& cfg);

// Walks a map-frame breadcrumb trail: skips crumbs within `lookahead` of the
// robot and returns the next one, or the last crumb.
class TrailFollower {
 public:
  Point2 target(std::span<const Point2> trail, const Point2& robot, double lookahead);
  void reset() { cursor_ = 0; }

 private:
  std::size_t cursor_ = 0;
};

struct LawnmowerPlan {
  std::vector<Point2> waypoints;  // map frame
  double lane_spacing = 0.0;
  Point2 region_min;
  Point2 region_max;
  ConvexPolygon footprint;  // excluded from the lanes; empty when none
};

struct CoverageReport {
  std::size_t cells = 0;
  std::size_t covered = 0;
  double worst_distance = 0.0;  // farthest cell from the path

  bool complete() const { return covered == cells; }
};

// Every cell center of a `cell` grid over the region, outside the footprint,
// must lie within `sensor_range` of the path.
CoverageReport check_coverage(const LawnmowerPlan& plan, double sensor_range, double cell = 0.25);

// Boustrophedon lanes parallel to y over the region minus the footprint.
// Throws SpacingTooWide when the coverage check fails.
LawnmowerPlan lawnmower_waypoints(const Point2& region_min, const Point2& region_max,
                                  const ConvexPolygon& footprint, double lane_spacing, double sensor_range,
                                  double cell = 0.25);

// Ping-pong traversal of a lawnmower plan.
class LawnmowerFollower {
 public:
  LawnmowerFollower() = default;
  LawnmowerFollower(LawnmowerPlan plan, const Point2& start);

  // Current waypoint, advancing once the robot is within `tolerance`.
  std::optional<Point2> target(const Point2& robot, double tolerance);
  const LawnmowerPlan& plan() const { return plan_; }

 private:
  LawnmowerPlan plan_;
  std::size_t index_ = 0;
  int direction_ = 1;
};

// Finite-difference velocities from a short window of map-frame positions.
class VelocityEstimator {
 public:
  explicit VelocityEstimator(double window = 0.5) : window_(window) {}
  void observe(int id, const Point2& map_position, double t);
  // Drops tracks not seen at time t.
  void prune(double t);
  std::optional<Vec2> velocity(int id) const;

 private:
  struct Sample {
    double t;
    Point2 p;
  };
  double window_;
  std::map<int, std::deque<Sample>> tracks_;
};

}  // namespace sdmon
