#include "sdmon/simworld.hpp"

#include <algorithm>
#include <limits>

namespace sdmon {

namespace {

void advance_pedestrian(Pedestrian& p, double dt) {
  double budget = dt;
  while (budget > 1e-12 && !p.finished()) {
    ScriptLeg& leg = p.script[p.leg];
    const Vec2 to_target = leg.target - p.position;
    const double remaining = to_target.norm();
    if (remaining > 1e-12) {
      if (leg.speed_mps <= 0.0) {
        // Unreachable target at zero speed; treat as a hold in place.
        leg.target = p.position;
        continue;
      }
      const double reach = leg.speed_mps * budget;
      if (reach < remaining - 1e-9) {
        p.position += (reach / remaining) * to_target;
        budget = 0.0;
        break;
      }
      // Arrive within this step; leftover time is dropped so a leg never
      // runs longer than speed * duration.
      p.position = leg.target;
      budget = 0.0;
      if (leg.hold_s <= 0.0) ++p.leg;
      break;
    }
    const double hold_left = leg.hold_s - p.held_s;
    if (hold_left > budget + 1e-12) {
      p.held_s += budget;
      budget = 0.0;
    } else {
      budget -= std::max(0.0, hold_left);
      p.held_s = 0.0;
      ++p.leg;
    }
  }
  p.velocity = {};
  if (!p.finished()) {
    const ScriptLeg& leg = p.script[p.leg];
    const Vec2 to_target = leg.target - p.position;
    const double remaining = to_target.norm();
    if (remaining > 1e-9 && leg.speed_mps > 0.0) p.velocity = (leg.speed_mps / remaining) * to_target;
  }
}

}  // namespace

const Pedestrian* WorldState::find_pedestrian(int id) const {
  for (const auto& p : pedestrians)
    if (p.id == id) return &p;
  return nullptr;
}

double robot_clearance_at(const WorldState& world, const Point2& center) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : world.pedestrians) best = std::min(best, distance(center, p.position) - p.radius);
  for (const auto& o : world.obstacles) {
    const double d = distance_to_polygon(o.polygon, center);
    best = std::min(best, d);
  }
  return best;
}

double robot_clearance(const WorldState& world) {
  return robot_clearance_at(world, world.robot.pose.translation());
}

void step_in_place(WorldState& world, const VelocityCommand& cmd) {
  const double dt = world.dt;
  for (auto& p : world.pedestrians) advance_pedestrian(p, dt);

  RobotState& r = world.robot;
  const double v = std::clamp(cmd.v, -r.limits.v_max, r.limits.v_max);
  const double w = std::clamp(cmd.w, -r.limits.w_max, r.limits.w_max);
  const double theta = r.pose.rotation();
  const Point2 from = r.pose.translation();
  const Point2 to = from + Point2{v * std::cos(theta) * dt, v * std::sin(theta) * dt};

  const double limit = r.radius + r.safety_margin;
  const double now = robot_clearance_at(world, from);
  const double next = robot_clearance_at(world, to);
  const bool blocked = v != 0.0 && next < limit && next < now;

  r.pose = Frame2(theta + w * dt, blocked ? from : to);
  r.linear_vel = blocked ? 0.0 : v;
  r.angular_vel = w;
  ++world.step_count;
}

WorldState step(const WorldState& world, const VelocityCommand& cmd) {
  WorldState next = world;
  step_in_place(next, cmd);
  return next;
}

namespace {

struct Cover {
  double lo;
  double hi;
  double height;  // fraction of the silhouette height hidden, in (0, 1]
};

// Visible share of [-half, half] given covering intervals with heights.
double visible_share(double half, std::vector<Cover>& covers) {
  if (covers.empty()) return 1.0;
  std::vector<double> cuts{-half, half};
  for (const auto& c : covers) {
    cuts.push_back(std::clamp(c.lo, -half, half));
    cuts.push_back(std::clamp(c.hi, -half, half));
  }
  std::sort(cuts.begin(), cuts.end());
  double hidden = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    if (b - a <= 0.0) continue;
    const double mid = 0.5 * (a + b);
    double h = 0.0;
    for (const auto& c : covers)
      if (c.lo <= mid && mid <= c.hi) h = std::max(h, c.height);
    hidden += h * (b - a);
  }
  return std::clamp(1.0 - hidden / (2.0 * half), 0.0, 1.0);
}

// Height share hidden by a blocker at horizontal range `near` in front of a
// target at range `far`, for an elevated eye.
double hidden_height(double eye_height, double body_height, double near, double far) {
  if (eye_height <= body_height) return 1.0;
  const double r = (far - near) / far;  // in (0, 1)
  if (r >= 1.0) return 1.0;
  const double z = (body_height - eye_height * r) / (1.0 - r);
  return std::clamp(z, 0.0, body_height) / body_height;
}

// Range along the ray at which it enters the target disk.
double target_entry(const Point2& eye, const Vec2& dir, const Disk& target) {
  auto t = ray_circle(eye, dir, target.center, target.radius);
  return t ? *t : std::numeric_limits<double>::infinity();
}

bool polygon_hides(const Point2& eye, double target_bearing, double rel, const Disk& target,
                   const ConvexPolygon& poly) {
  const Vec2 dir = unit_from_angle(target_bearing + rel);
  auto hit = ray_polygon(eye, dir, poly);
  if (!hit) return false;
  return *hit < target_entry(eye, dir, target);
}

void add_obstacle_covers(const Point2& eye, double beta, double half, const Disk& target,
                         const ConvexPolygon& poly, std::vector<Cover>& covers) {
  const auto& v = poly.vertices();
  if (v.size() < 2) return;
  if (v.size() >= 3 && point_in_polygon(poly, eye, 0.0)) {
    covers.push_back({-half, half, 1.0});
    return;
  }
  const double dist_target = distance(eye, target.center);
  if (distance_to_polygon(poly, eye) >= dist_target + target.radius) return;

  const double c = bearing(poly.centroid() - eye);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, far = 0.0;
  for (const auto& p : v) {
    const double rel = normalize_angle(bearing(p - eye) - c);
    lo = std::min(lo, rel);
    hi = std::max(hi, rel);
    far = std::max(far, distance(eye, p));
  }
  const double off = normalize_angle(c - beta);
  const double a = std::max(-half, off + lo);
  const double b = std::min(half, off + hi);
  if (b <= a) return;

  if (far < dist_target - target.radius) {
    covers.push_back({a, b, 1.0});
    return;
  }
  // Mixed case: sample for state changes and bisect the boundaries.
  constexpr int kSamples = 64;
  auto hides = [&](double rel) { return polygon_hides(eye, beta, rel, target, poly); };
  auto refine = [&](double x0, double x1, bool s0) {
    for (int it = 0; it < 60 && x1 - x0 > 1e-12; ++it) {
      const double m = 0.5 * (x0 + x1);
      if (hides(m) == s0) {
        x0 = m;
      } else {
        x1 = m;
      }
    }
    return 0.5 * (x0 + x1);
  };
  double prev_x = a;
  bool prev_s = hides(a);
  double start = prev_s ? a : 0.0;
  for (int i = 1; i <= kSamples; ++i) {
    const double x = a + (b - a) * i / kSamples;
    const bool s = hides(x);
    if (s != prev_s) {
      const double edge = refine(prev_x, x, prev_s);
      if (s) {
        start = edge;
      } else {
        covers.push_back({start, edge, 1.0});
      }
    }
    prev_x = x;
    prev_s = s;
  }
  if (prev_s) covers.push_back({start, b, 1.0});
}

double visible_fraction_impl(const Point2& eye, double eye_height, const Disk& target,
                             std::span<const Disk> blockers, std::span<const Obstacle> obstacles,
                             double body_height) {
  const Vec2 to_target = target.center - eye;
  const double d = to_target.norm();
  if (d <= target.radius) return 1.0;
  const double beta = bearing(to_target);
  const double half = std::asin(target.radius / d);

  std::vector<Cover> covers;
  for (const auto& b : blockers) {
    const Vec2 to_b = b.center - eye;
    const double db = to_b.norm();
    if (db >= d) continue;
    if (db <= b.radius) {
      covers.push_back({-half, half, 1.0});
      continue;
    }
    const double hb = std::asin(b.radius / db);
    const double rel = normalize_angle(bearing(to_b) - beta);
    if (rel + hb <= -half || rel - hb >= half) continue;
    covers.push_back({rel - hb, rel + hb, hidden_height(eye_height, body_height, db, d)});
  }
  for (const auto& o : obstacles) add_obstacle_covers(eye, beta, half, target, o.polygon, covers);
  return visible_share(half, covers);
}

}  // namespace

double visible_fraction(const Point2& eye, const Disk& target, std::span<const Disk> blockers,
                        std::span<const Obstacle> obstacles) {
  return visible_fraction_impl(eye, 0.0, target, blockers, obstacles, kPedestrianHeight);
}

double visible_fraction_elevated(const Point2& eye, double eye_height, const Disk& target,
                                 std::span<const Disk> blockers, std::span<const Obstacle> obstacles,
                                 double body_height) {
  return visible_fraction_impl(eye, eye_height, target, blockers, obstacles, body_height);
}

}  // namespace sdmon
