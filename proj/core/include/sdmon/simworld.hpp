#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sdmon/geometry.hpp"

namespace sdmon {

inline constexpr double kMaxPedestrianSpeed = 2.0;
inline constexpr double kPedestrianHeight = 1.7;

struct Obstacle {
  ConvexPolygon polygon;  // map frame
};

// One scripted leg: walk to `target` at `speed_mps`, then stand for `hold_s`.
// A hold-only leg targets the position where the previous leg ended.
struct ScriptLeg {
  Point2 target;
  double speed_mps = 0.0;
  double hold_s = 0.0;
};

struct Pedestrian {
  int id = 0;
  Point2 position;
  Vec2 velocity;
  double radius = 0.3;
  std::vector<ScriptLeg> script;
  std::optional<int> household_tag;

  // Script progress.
  std::size_t leg = 0;
  double held_s = 0.0;

  bool finished() const { return leg >= script.size(); }
};

struct RobotLimits {
  double v_max = 0.75;
  double w_max = 0.75;
};

struct RobotState {
  Frame2 pose;
  double linear_vel = 0.0;
  double angular_vel = 0.0;
  RobotLimits limits;
  double radius = 0.2;
  // The integrator refuses translations that would bring the robot center
  // closer than radius + safety_margin to any pedestrian disk or obstacle.
  double safety_margin = 0.05;
};

struct VelocityCommand {
  double v = 0.0;
  double w = 0.0;
};

struct WorldState {
  std::int64_t step_count = 0;
  double dt = 0.1;
  Point2 bounds_min;
  Point2 bounds_max;
  std::vector<Pedestrian> pedestrians;
  RobotState robot;
  std::vector<Obstacle> obstacles;
  std::uint64_t rng_seed = 0;

  double time() const { return static_cast<double>(step_count) * dt; }
  const Pedestrian* find_pedestrian(int id) const;
};

// Advances pedestrians along their scripts, integrates unicycle kinematics for
// the robot with the command clamped to the robot limits, and advances time.
WorldState step(const WorldState& world, const VelocityCommand& cmd);
void step_in_place(WorldState& world, const VelocityCommand& cmd);

// Distance from the robot center to the nearest pedestrian disk or obstacle
// surface (negative when overlapping).
double robot_clearance(const WorldState& world);
double robot_clearance_at(const WorldState& world, const Point2& center);

struct Disk {
  Point2 center;
  double radius = 0.0;
};

// Fraction of the target disk's angular interval seen from `eye` that is not
// covered by blocker disks nearer than the target or by obstacle polygons in
// front of it. Blockers must not include the target itself.
double visible_fraction(const Point2& eye, const Disk& target, std::span<const Disk> blockers,
                        std::span<const Obstacle> obstacles);

// Same, for an eye mounted `eye_height` meters above the floor looking at
// bodies `body_height` tall. A nearer blocker then hides only the lower part
// of the target; the result is the visible share of the (bearing x height)
// silhouette. Obstacles are treated as taller than the eye. For eye_height
// at or below body_height this reduces to visible_fraction.
double visible_fraction_elevated(const Point2& eye, double eye_height, const Disk& target,
                                 std::span<const Disk> blockers, std::span<const Obstacle> obstacles,
                                 double body_height = kPedestrianHeight);

}  // namespace sdmon
