#include "sdmon/sensors.hpp"

#include <algorithm>
#include <cmath>

namespace sdmon {

namespace {

std::vector<Disk> blockers_except(const WorldState& world, int id) {
  std::vector<Disk> out;
  out.reserve(world.pedestrians.size());
  for (const auto& p : world.pedestrians)
    if (p.id != id) out.push_back({p.position, p.radius});
  return out;
}

double nearest_obstacle_hit(const WorldState& world, const Point2& origin, const Vec2& dir) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& o : world.obstacles) {
    if (auto t = ray_polygon(origin, dir, o.polygon)) best = std::min(best, *t);
  }
  return best;
}

struct PixelSpan {
  int left, right, top, bottom;  // half-open [left, right) x [top, bottom)
  bool empty() const { return right <= left || bottom <= top; }
};

PixelSpan project_pedestrian(const RgbdCameraModel& cam, double rel_bearing, double half_angle,
                             double range) {
  const double vfov = cam.vertical_fov();
  auto row_of = [&](double z) {
    const double elev = std::atan2(z - cam.mount_height, range);
    return 0.5 * cam.height - elev * cam.height / vfov;
  };
  PixelSpan s{};
  s.left = static_cast<int>(std::lround(cam.column_of_bearing(rel_bearing + half_angle)));
  s.right = static_cast<int>(std::lround(cam.column_of_bearing(rel_bearing - half_angle)));
  s.top = static_cast<int>(std::lround(row_of(kPedestrianHeight)));
  s.bottom = static_cast<int>(std::lround(row_of(0.0)));
  s.left = std::clamp(s.left, 0, cam.width);
  s.right = std::clamp(s.right, 0, cam.width);
  s.top = std::clamp(s.top, 0, cam.height);
  s.bottom = std::clamp(s.bottom, 0, cam.height);
  return s;
}

struct InView {
  const Pedestrian* ped;
  double range;
  double rel_bearing;
  double half_angle;
};

}  // namespace

Frame2 camera_pose(const RobotState& robot, const RgbdCameraModel& cam) { return robot.pose * cam.mount; }

RgbdFrame sense_rgbd(const WorldState& world, const RgbdCameraModel& cam, std::mt19937_64& rng) {
  const Frame2 eye = camera_pose(world.robot, cam);
  const Point2 origin = eye.translation();
  RgbdFrame frame{{}, DepthImage(cam.width, cam.height, cam.near, cam.range)};
  DepthImage& depth = frame.depth;

  auto encode = [&](double meters) -> float {
    double q = cam.depth_quantum > 0.0 ? std::round(meters / cam.depth_quantum) * cam.depth_quantum : meters;
    const float v = static_cast<float>(q);
    return depth.valid(v) ? v : DepthImage::kNoReturn;
  };

  // Background: obstacles are taller than the camera and fill whole columns.
  std::vector<double> column_hit(cam.width);
  for (int c = 0; c < cam.width; ++c) {
    const double psi = cam.bearing_of_column(c + 0.5);
    const double hit = nearest_obstacle_hit(world, origin, unit_from_angle(eye.rotation() + psi));
    column_hit[c] = hit;
    const float v = std::isfinite(hit) ? encode(hit) : DepthImage::kNoReturn;
    if (v == DepthImage::kNoReturn) continue;
    for (int r = 0; r < cam.height; ++r) depth.set(c, r, v);
  }

  std::vector<InView> in_view;
  for (const auto& p : world.pedestrians) {
    const Vec2 to = p.position - origin;
    const double range = to.norm();
    if (range <= p.radius || range >= cam.range) continue;
    const double rel = normalize_angle(bearing(to) - eye.rotation());
    const double half = std::asin(p.radius / range);
    if (std::abs(rel) - half > 0.5 * cam.fov) continue;
    in_view.push_back({&p, range, rel, half});
  }
  // Far to near so nearer bodies overwrite farther ones.
  std::sort(in_view.begin(), in_view.end(), [](const InView& a, const InView& b) {
    return a.range > b.range || (a.range == b.range && a.ped->id < b.ped->id);
  });

  std::normal_distribution<double> noise(0.0, cam.noise_sigma_depth > 0.0 ? cam.noise_sigma_depth : 1.0);
  const bool noisy = cam.noise_sigma_depth > 0.0;
  for (const auto& iv : in_view) {
    const PixelSpan span = project_pedestrian(cam, iv.rel_bearing, iv.half_angle, iv.range);
    if (span.empty()) continue;
    for (int c = span.left; c < span.right; ++c) {
      if (column_hit[c] < iv.range) continue;
      for (int r = span.top; r < span.bottom; ++r) {
        const double d = noisy ? iv.range + noise(rng) : iv.range;
        depth.set(c, r, encode(d));
      }
    }
  }

  for (const auto& iv : in_view) {
    const Pedestrian& p = *iv.ped;
    if (iv.range <= cam.near) continue;
    if (std::abs(iv.rel_bearing) > 0.5 * cam.fov) continue;
    const auto blockers = blockers_except(world, p.id);
    const double vis = visible_fraction(origin, {p.position, p.radius}, blockers, world.obstacles);
    if (vis <= cam.min_visible_fraction + kVisibilityEpsilon) continue;
    const PixelSpan span = project_pedestrian(cam, iv.rel_bearing, iv.half_angle, iv.range);
    if (span.empty()) continue;
    frame.boxes.push_back({{static_cast<double>(span.left), static_cast<double>(span.top)},
                           static_cast<double>(span.right - span.left),
                           static_cast<double>(span.bottom - span.top), p.id});
  }
  std::sort(frame.boxes.begin(), frame.boxes.end(),
            [](const BoundingBox& a, const BoundingBox& b) { return a.ped_id < b.ped_id; });
  return frame;
}

CctvCameraModel CctvCameraModel::from_rectangle(const std::array<Point2, 4>& image_corners,
                                                double rect_width_m, double rect_height_m,
                                                double pixels_per_meter, const Frame2& gnd_to_map,
                                                int width, int height) {
  CctvCameraModel cam;
  cam.scale = 1.0 / pixels_per_meter;
  cam.top_origin = {0.0, 0.0};
  const double wpx = rect_width_m * pixels_per_meter;
  const double hpx = rect_height_m * pixels_per_meter;
  const std::array<Point2, 4> top{Point2{0.0, 0.0}, Point2{wpx, 0.0}, Point2{wpx, hpx}, Point2{0.0, hpx}};
  cam.homography = solve_homography(image_corners, top);
  cam.homography_inv = cam.homography.inverse();
  cam.gnd_to_map = gnd_to_map;
  const std::array<Point2, 4> ground{Point2{0.0, 0.0}, Point2{rect_width_m, 0.0},
                                     Point2{rect_width_m, rect_height_m}, Point2{0.0, rect_height_m}};
  std::vector<Point2> map_corners;
  for (const auto& g : ground) map_corners.push_back(gnd_to_map.apply(g));
  cam.footprint = convex_hull(map_corners);
  cam.width = width;
  cam.height = height;
  return cam;
}

std::vector<BoundingBox> sense_cctv(const WorldState& world, const CctvCameraModel& cam) {
  std::vector<BoundingBox> boxes;
  const Frame2 map_to_gnd = cam.gnd_to_map.inverse();
  for (const auto& p : world.pedestrians) {
    if (!point_in_polygon(cam.footprint, p.position)) continue;
    const auto blockers = blockers_except(world, p.id);
    const double vis = visible_fraction_elevated(cam.eye, cam.eye_height, {p.position, p.radius}, blockers,
                                                 world.obstacles);
    if (vis <= cam.min_visible_fraction + kVisibilityEpsilon) continue;

    const Point2 top = cam.ground_to_top(map_to_gnd.apply(p.position));
    const Point2 feet = apply_homography(cam.homography_inv, top);
    const Point2 side = apply_homography(cam.homography_inv, top + Point2{2.0 * p.radius / cam.scale, 0.0});
    const double wpx = std::max(2.0, distance(side, feet));
    const double hpx = wpx * kPedestrianHeight / (2.0 * p.radius);

    const double left = std::clamp(std::round(feet.x - 0.5 * wpx), 0.0, static_cast<double>(cam.width));
    const double right = std::clamp(std::round(feet.x + 0.5 * wpx), 0.0, static_cast<double>(cam.width));
    const double bottom = std::clamp(std::round(feet.y), 0.0, static_cast<double>(cam.height));
    const double top_row = std::clamp(std::round(feet.y - hpx), 0.0, bottom);
    if (right - left < 1.0 || bottom - top_row < 1.0) continue;
    boxes.push_back({{left, top_row}, right - left, bottom - top_row, p.id});
  }
  return boxes;
}

LidarScan sense_lidar(const WorldState& world, const RobotState& robot, const LidarConfig& cfg) {
  LidarScan scan;
  scan.max_range = cfg.max_range;
  scan.angle_min = -0.5 * cfg.fov;
  scan.angle_increment = cfg.beams > 1 ? cfg.fov / (cfg.beams - 1) : 0.0;
  scan.ranges.assign(static_cast<std::size_t>(cfg.beams), LidarScan::kNoReturn);
  const Point2 origin = robot.pose.translation();
  for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
    const Vec2 dir = unit_from_angle(robot.pose.rotation() + scan.angle(i));
    double best = nearest_obstacle_hit(world, origin, dir);
    for (const auto& p : world.pedestrians) {
      if (auto t = ray_circle(origin, dir, p.position, p.radius)) best = std::min(best, *t);
    }
    if (best > 0.0 && best <= cfg.max_range) scan.ranges[i] = best;
  }
  return scan;
}

void TrackIdAssigner::assign(std::vector<BoundingBox>& boxes) {
  std::set<int> now;
  for (auto& b : boxes) {
    const int truth = b.ped_id;
    now.insert(truth);
    if (!reassign_) continue;
    auto it = track_of_.find(truth);
    if (it == track_of_.end()) {
      track_of_[truth] = truth;
      truth_of_[truth] = truth;
    } else if (!visible_.contains(truth)) {
      const int fresh = next_id_++;
      it->second = fresh;
      truth_of_[fresh] = truth;
    }
    b.ped_id = track_of_[truth];
  }
  visible_ = std::move(now);
}

int TrackIdAssigner::ground_truth(int track_id) const {
  auto it = truth_of_.find(track_id);
  return it == truth_of_.end() ? track_id : it->second;
}

}  // namespace sdmon
