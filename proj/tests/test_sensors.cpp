#include <random>

#include <gtest/gtest.h>

#include "sdmon/sensors.hpp"

using namespace sdmon;

namespace {

WorldState world_with(std::vector<Point2> peds, double radius = 0.3) {
  WorldState w;
  w.bounds_min = {-20, -20};
  w.bounds_max = {20, 20};
  int id = 1;
  for (const auto& p : peds) {
    Pedestrian ped;
    ped.id = id++;
    ped.position = p;
    ped.radius = radius;
    w.pedestrians.push_back(ped);
  }
  return w;
}

// Marches along the beam in 1 mm steps until it enters a body.
double marched_range(const WorldState& w, const Point2& o, const Vec2& dir, double max_range) {
  constexpr double step = 1e-3;
  for (double t = 0.0; t <= max_range; t += step) {
    const Point2 p = o + t * dir;
    for (const auto& ped : w.pedestrians)
      if (distance(p, ped.position) <= ped.radius) return t;
    for (const auto& ob : w.obstacles)
      if (point_in_polygon(ob.polygon, p)) return t;
  }
  return LidarScan::kNoReturn;
}

CctvCameraModel square_cctv() {
  const std::array<Point2, 4> corners{Point2{360, 1000}, {1560, 1000}, {1260, 300}, {660, 300}};
  auto cam = CctvCameraModel::from_rectangle(corners, 9, 12, 100, Frame2{}, 1920, 1080);
  cam.eye = {4.5, -3};
  cam.eye_height = 4;
  return cam;
}

}  // namespace

TEST(Lidar, MatchesMarchedRaysOnRandomScenes) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-7, 7);
  for (int trial = 0; trial < 4; ++trial) {
    WorldState w = world_with({});
    for (int k = 0; k < 6; ++k) {
      Pedestrian p;
      p.id = k + 1;
      p.position = {u(rng), u(rng)};
      if (p.position.norm() < 1.0) continue;
      w.pedestrians.push_back(p);
    }
    const Point2 c{u(rng), u(rng)};
    if (c.norm() > 2.0)
      w.obstacles.push_back({ConvexPolygon::rectangle(c - Point2{0.5, 0.8}, c + Point2{0.5, 0.8})});
    w.robot.pose = Frame2(u(rng), {0, 0});
    const LidarConfig cfg;
    const LidarScan scan = sense_lidar(w, w.robot, cfg);
    ASSERT_EQ(scan.ranges.size(), 241u);
    for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
      const Vec2 dir = unit_from_angle(w.robot.pose.rotation() + scan.angle(i));
      const double want = marched_range(w, {0, 0}, dir, cfg.max_range);
      if (!LidarScan::valid(want)) {
        EXPECT_FALSE(LidarScan::valid(scan.ranges[i])) << "beam " << i;
      } else {
        ASSERT_TRUE(LidarScan::valid(scan.ranges[i])) << "beam " << i;
        EXPECT_NEAR(scan.ranges[i], want, 1.5e-3) << "beam " << i;
      }
    }
  }
}

TEST(Lidar, BeamGeometry) {
  const WorldState w = world_with({{3, 0}});
  const LidarScan scan = sense_lidar(w, w.robot);
  EXPECT_NEAR(scan.angle(0), -deg_to_rad(120), 1e-12);
  EXPECT_NEAR(scan.angle(240), deg_to_rad(120), 1e-12);
  EXPECT_NEAR(scan.ranges[120], 2.7, 1e-9);
}

TEST(Rgbd, BoxesOnlyForBodiesInsideTheViewCone) {
  // In view, behind, beyond range, and outside the cone.
  const WorldState w = world_with({{3, 0}, {-3, 0}, {7, 0}, {1, 3}});
  RgbdCameraModel cam;
  cam.noise_sigma_depth = 0.0;
  std::mt19937_64 rng(1);
  const RgbdFrame f = sense_rgbd(w, cam, rng);
  ASSERT_EQ(f.boxes.size(), 1u);
  EXPECT_EQ(f.boxes[0].ped_id, 1);
  EXPECT_NEAR(f.boxes[0].centroid().x, cam.column_of_bearing(0.0), 1.0);
  const Point2 c = f.boxes[0].centroid();
  EXPECT_NEAR(f.depth.at(static_cast<int>(c.x), static_cast<int>(c.y)), 3.0, 1e-3);
}

TEST(Rgbd, BearingColumnMappingIsLinearAndInvertible) {
  const RgbdCameraModel cam;
  EXPECT_DOUBLE_EQ(cam.column_of_bearing(0.0), 320.0);
  EXPECT_DOUBLE_EQ(cam.column_of_bearing(0.5 * cam.fov), 0.0);
  EXPECT_DOUBLE_EQ(cam.column_of_bearing(-0.5 * cam.fov), 640.0);
  for (double psi : {-0.5, -0.1, 0.0, 0.2, 0.6}) EXPECT_NEAR(cam.bearing_of_column(cam.column_of_bearing(psi)), psi, 1e-12);
}

TEST(Rgbd, MostlyHiddenBodyIsNotDetected) {
  // Pedestrian 2 stands directly behind pedestrian 1.
  const WorldState w = world_with({{2, 0}, {4, 0}});
  RgbdCameraModel cam;
  std::mt19937_64 rng(1);
  const RgbdFrame f = sense_rgbd(w, cam, rng);
  ASSERT_EQ(f.boxes.size(), 1u);
  EXPECT_EQ(f.boxes[0].ped_id, 1);
}

TEST(Cctv, DetectsOnlyInsideTheFootprint) {
  const WorldState w = world_with({{4.5, 6}, {12, 6}, {1, 1}});
  const auto cam = square_cctv();
  const auto boxes = sense_cctv(w, cam);
  std::vector<int> ids;
  for (const auto& b : boxes) ids.push_back(b.ped_id);
  EXPECT_EQ(ids, (std::vector<int>{1, 3}));
  for (const auto& b : boxes) {
    EXPECT_GE(b.top_left.x, 0.0);
    EXPECT_LE(b.top_left.x + b.width, 1920.0);
    EXPECT_GT(b.height, b.width);
  }
}

TEST(TrackIds, ReassignmentOnReentry) {
  TrackIdAssigner ideal;
  std::vector<BoundingBox> boxes{{{0, 0}, 10, 20, 5}};
  ideal.assign(boxes);
  EXPECT_EQ(boxes[0].ped_id, 5);

  TrackIdAssigner reassign(true, 1000);
  std::vector<BoundingBox> first{{{0, 0}, 10, 20, 5}};
  reassign.assign(first);
  EXPECT_EQ(first[0].ped_id, 5);
  std::vector<BoundingBox> gone;
  reassign.assign(gone);
  std::vector<BoundingBox> back{{{0, 0}, 10, 20, 5}};
  reassign.assign(back);
  EXPECT_EQ(back[0].ped_id, 1000);
  EXPECT_EQ(reassign.ground_truth(1000), 5);
  // Staying in view keeps the fresh ID.
  std::vector<BoundingBox> again{{{0, 0}, 10, 20, 5}};
  reassign.assign(again);
  EXPECT_EQ(again[0].ped_id, 1000);
}
