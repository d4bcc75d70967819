#include "sdmon/navigation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sdmon/errors.hpp"

namespace sdmon {

FreezingZone build_pfz(std::span<const TrackedPedestrian> peds, const RobotState& /*robot*/, double horizon,
                       double min_speed) {
  FreezingZone zone;
  zone.horizon = horizon;
  zone.nearest_distance = std::numeric_limits<double>::infinity();
  std::vector<Point2> predicted;
  for (const auto& p : peds) {
    if (p.velocity.norm() <= min_speed) continue;
    if (p.position.x <= 0.0) continue;
    if (dot(p.position, p.velocity) >= 0.0) continue;
    zone.contributors.push_back(p.id);
    predicted.push_back(p.position + horizon * p.velocity);
    zone.nearest_distance = std::min(zone.nearest_distance, p.position.norm());
  }
  if (!predicted.empty()) zone.hull = convex_hull(predicted);
  return zone;
}

bool heading_hits_zone(double heading, const ConvexPolygon& hull, double inflate) {
  if (hull.empty()) return false;
  return ray_distance_to_polygon({0.0, 0.0}, unit_from_angle(heading), hull) < inflate;
}

double clear_zone_heading(double heading, const ConvexPolygon& hull, double inflate) {
  if (!heading_hits_zone(heading, hull, inflate)) return heading;
  constexpr double kMargin = 1e-6;
  double left = -std::numeric_limits<double>::infinity();
  double right = std::numeric_limits<double>::infinity();
  for (const auto& v : hull.vertices()) {
    const double r = v.norm();
    if (r <= inflate) {
      // Inside the inflated zone: head straight away from it.
      return normalize_angle(bearing(-hull.centroid()));
    }
    const double rel = normalize_angle(bearing(v) - heading);
    const double spread = std::asin(inflate / r);
    left = std::max(left, rel + spread);
    right = std::min(right, rel - spread);
  }
  // right <= 0 <= left because the ray hits the zone.
  const double turn = (left < -right) ? left + kMargin : right - kMargin;
  return normalize_angle(heading + turn);
}

namespace {

bool corridor_blocked(double heading, const LidarScan& scan, double length, double half_width) {
  if (length <= 0.0) return false;
  const Vec2 u = unit_from_angle(heading);
  for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
    const double r = scan.ranges[i];
    if (!LidarScan::valid(r)) continue;
    const Point2 p = r * unit_from_angle(scan.angle(i));
    const double along = dot(p, u);
    if (along <= 0.0 || along > length + half_width) continue;
    if (std::abs(cross(u, p)) < half_width) return true;
  }
  return false;
}

bool beam_near(const LidarScan& scan, double heading, double half_angle, double limit) {
  for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
    const double r = scan.ranges[i];
    if (!LidarScan::valid(r) || r >= limit) continue;
    if (std::abs(normalize_angle(scan.angle(i) - heading)) <= half_angle) return true;
  }
  return false;
}

}  // namespace

PlanResult baseline_plan(const PlannerInput& in, const FreezingZone& pfz, const RobotState& robot,
                         const PlannerConfig& cfg) {
  PlanResult res;
  const double goal_dist = in.goal.norm();
  if (goal_dist < 1e-6) return res;

  double heading = bearing(in.goal);
  const bool pfz_active = !pfz.empty() && pfz.nearest_distance < cfg.trigger_distance;
  if (pfz_active && heading_hits_zone(heading, pfz.hull, robot.radius)) {
    res.pfz_triggered = true;
    heading = clear_zone_heading(heading, pfz.hull, robot.radius);
  }

  const double length = std::clamp(goal_dist - cfg.goal_clearance, 0.0, cfg.corridor_length);
  const double half_width = robot.radius + cfg.corridor_margin;
  if (corridor_blocked(heading, in.lidar, length, half_width)) {
    const int steps = static_cast<int>(std::floor(kPi / cfg.search_step));
    for (int k = 1; k <= steps && !res.detoured; ++k) {
      for (int side : {-1, 1}) {
        const double cand = normalize_angle(heading + side * k * cfg.search_step);
        if (res.pfz_triggered && heading_hits_zone(cand, pfz.hull, robot.radius)) continue;
        if (corridor_blocked(cand, in.lidar, length, half_width)) continue;
        heading = cand;
        res.detoured = true;
        break;
      }
    }
  }
  res.heading = heading;

  const double err = normalize_angle(heading);
  res.stopped = beam_near(in.lidar, heading, cfg.stop_half_angle, cfg.stop_distance) ||
                beam_near(in.lidar, 0.0, cfg.stop_half_angle, cfg.stop_distance);
  res.cmd.w = std::clamp(cfg.heading_gain * err, -robot.limits.w_max, robot.limits.w_max);
  res.cmd.v = res.stopped ? 0.0 : robot.limits.v_max * std::max(0.0, std::cos(err));
  return res;
}

PlanResult pursue(const PursuitState& state, const Point2& nav_target, const PlannerInput& in,
                  const FreezingZone& pfz, const RobotState& robot, double camera_fov, double standoff,
                  Planner& planner, const PlannerConfig& cfg) {
  if (!state.goal) return {};
  const Point2 lock = *state.goal;
  const double lock_bearing = bearing(lock);

  if (state.goal_source == Source::Rgbd && std::abs(lock_bearing) > cfg.rotate_fraction * 0.5 * camera_fov) {
    PlanResult res;
    res.heading = lock_bearing;
    res.cmd = {0.0, std::copysign(robot.limits.w_max, lock_bearing)};
    return res;
  }
  if (lock.norm() <= standoff) {
    PlanResult res;
    res.heading = lock_bearing;
    res.stopped = true;
    res.cmd = {0.0, std::clamp(cfg.heading_gain * lock_bearing, -robot.limits.w_max, robot.limits.w_max)};
    return res;
  }
  PlannerInput target_in = in;
  target_in.goal = nav_target;
  return planner.plan(target_in, pfz, robot);
}

Point2 TrailFollower::target(std::span<const Point2> trail, const Point2& robot, double lookahead) {
  if (trail.empty()) return robot;
  if (cursor_ >= trail.size()) cursor_ = trail.size() - 1;
  while (cursor_ + 1 < trail.size() && distance(trail[cursor_], robot) < lookahead) ++cursor_;
  return trail[cursor_];
}

CoverageReport check_coverage(const LawnmowerPlan& plan, double sensor_range, double cell) {
  CoverageReport rep;
  const auto& wp = plan.waypoints;
  const int nx = static_cast<int>(std::ceil((plan.region_max.x - plan.region_min.x) / cell - 1e-9));
  const int ny = static_cast<int>(std::ceil((plan.region_max.y - plan.region_min.y) / cell - 1e-9));
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      const Point2 c{std::min(plan.region_min.x + (i + 0.5) * cell, plan.region_max.x),
                     std::min(plan.region_min.y + (j + 0.5) * cell, plan.region_max.y)};
      if (!plan.footprint.empty() && point_in_polygon(plan.footprint, c)) continue;
      ++rep.cells;
      double best = std::numeric_limits<double>::infinity();
      if (wp.size() == 1) best = distance(c, wp.front());
      for (std::size_t k = 0; k + 1 < wp.size(); ++k) best = std::min(best, distance_to_segment(c, wp[k], wp[k + 1]));
      if (best <= sensor_range) ++rep.covered;
      rep.worst_distance = std::max(rep.worst_distance, best);
    }
  }
  return rep;
}

LawnmowerPlan lawnmower_waypoints(const Point2& region_min, const Point2& region_max,
                                  const ConvexPolygon& footprint, double lane_spacing, double sensor_range,
                                  double cell) {
  if (!(lane_spacing > 0.0)) throw SpacingTooWide("lane spacing must be positive");
  LawnmowerPlan plan;
  plan.lane_spacing = lane_spacing;
  plan.region_min = region_min;
  plan.region_max = region_max;
  plan.footprint = footprint;

  const double width = region_max.x - region_min.x;
  const int lanes = std::max(1, static_cast<int>(std::ceil(width / lane_spacing - 1e-9)));
  bool upward = true;
  for (int k = 0; k < lanes; ++k) {
    const double x = region_min.x + (k + 0.5) * width / lanes;
    const Point2 a{x, region_min.y}, b{x, region_max.y};
    auto pieces = footprint.empty() ? std::vector<std::pair<double, double>>{{0.0, 1.0}}
                                    : segment_outside_polygon(a, b, footprint);
    std::erase_if(pieces, [](const auto& p) { return p.second - p.first < 1e-9; });
    if (pieces.empty()) continue;
    if (!upward) std::reverse(pieces.begin(), pieces.end());
    for (const auto& [t0, t1] : pieces) {
      const Point2 p0 = a + t0 * (b - a), p1 = a + t1 * (b - a);
      plan.waypoints.push_back(upward ? p0 : p1);
      plan.waypoints.push_back(upward ? p1 : p0);
    }
    upward = !upward;
  }
  const auto rep = check_coverage(plan, sensor_range, cell);
  if (plan.waypoints.empty() || !rep.complete())
    throw SpacingTooWide("lanes " + std::to_string(lane_spacing) + " m apart leave " +
                         std::to_string(rep.cells - rep.covered) + " of " + std::to_string(rep.cells) +
                         " cells farther than " + std::to_string(sensor_range) + " m from the path");
  return plan;
}

LawnmowerFollower::LawnmowerFollower(LawnmowerPlan plan, const Point2& start) : plan_(std::move(plan)) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < plan_.waypoints.size(); ++i) {
    const double d = distance(plan_.waypoints[i], start);
    if (d < best) {
      best = d;
      index_ = i;
    }
  }
}

std::optional<Point2> LawnmowerFollower::target(const Point2& robot, double tolerance) {
  const auto& wp = plan_.waypoints;
  if (wp.empty()) return std::nullopt;
  if (wp.size() == 1) return wp.front();
  if (distance(wp[index_], robot) < tolerance) {
    if ((direction_ > 0 && index_ + 1 == wp.size()) || (direction_ < 0 && index_ == 0)) direction_ = -direction_;
    index_ = static_cast<std::size_t>(static_cast<long>(index_) + direction_);
  }
  return wp[index_];
}

void VelocityEstimator::observe(int id, const Point2& map_position, double t) {
  auto& track = tracks_[id];
  track.push_back({t, map_position});
  while (!track.empty() && t - track.front().t > window_ + 1e-9) track.pop_front();
}

void VelocityEstimator::prune(double t) {
  std::erase_if(tracks_, [&](const auto& kv) { return kv.second.empty() || kv.second.back().t < t - 1e-9; });
}

std::optional<Vec2> VelocityEstimator::velocity(int id) const {
  auto it = tracks_.find(id);
  if (it == tracks_.end() || it->second.size() < 2) return std::nullopt;
  const auto& a = it->second.front();
  const auto& b = it->second.back();
  if (b.t - a.t < 1e-9) return std::nullopt;
  return (b.p - a.p) / (b.t - a.t);
}

}  // namespace sdmon
