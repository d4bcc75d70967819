#include <random>

#include <gtest/gtest.h>

#include "sdmon/errors.hpp"
#include "sdmon/perception.hpp"

using namespace sdmon;

namespace {

constexpr double kFoot = 0.3048;

WorldState lone_robot() {
  WorldState w;
  w.bounds_min = {-20, -20};
  w.bounds_max = {20, 20};
  return w;
}

void add_ped(WorldState& w, int id, Point2 at, double radius = 0.3) {
  Pedestrian p;
  p.id = id;
  p.position = at;
  p.radius = radius;
  w.pedestrians.push_back(p);
}

CctvCameraModel table_cctv(const Frame2& gnd_to_map = {}) {
  const std::array<Point2, 4> corners{Point2{360, 1000}, {1560, 1000}, {1260, 300}, {660, 300}};
  auto cam = CctvCameraModel::from_rectangle(corners, 9, 12, 100, gnd_to_map, 1920, 1080);
  cam.eye = gnd_to_map.apply({4.5, -3});
  cam.eye_height = 4;
  return cam;
}

const BoundingBox* box_of(const std::vector<BoundingBox>& boxes, int id) {
  for (const auto& b : boxes)
    if (b.ped_id == id) return &b;
  return nullptr;
}

}  // namespace

TEST(RgbdLocalization, NoiselessGridWithinFiveCentimeters) {
  RgbdCameraModel cam;
  cam.noise_sigma_depth = 0.0;
  std::mt19937_64 rng(1);
  double worst = 0.0;
  int poses = 0;
  // 10 ranges x 20 bearings, each body entirely inside the view cone.
  for (int i = 0; i < 10; ++i) {
    const double range = 1.0 + 4.5 * i / 9.0;
    const double half = std::asin(0.3 / range);
    const double limit = 0.5 * cam.fov - half - deg_to_rad(1.0);
    for (int j = 0; j < 20; ++j) {
      const double psi = -limit + 2.0 * limit * j / 19.0;
      WorldState w = lone_robot();
      const Point2 truth = range * unit_from_angle(psi);
      add_ped(w, 1, truth);
      const RgbdFrame f = sense_rgbd(w, cam, rng);
      ASSERT_EQ(f.boxes.size(), 1u) << "range " << range << " bearing " << psi;
      const auto lp = localize_rgbd(f.boxes[0], f.depth, cam);
      EXPECT_EQ(lp.frame, FrameTag::Robot);
      worst = std::max(worst, distance(lp.position, truth));
      ++poses;
    }
  }
  EXPECT_EQ(poses, 200);
  EXPECT_LE(worst, 0.05);
}

TEST(RgbdLocalization, MountOffsetIsAppliedByTheCaller) {
  RgbdCameraModel cam;
  cam.noise_sigma_depth = 0.0;
  cam.mount = Frame2(0.0, {0.2, 0.0});
  std::mt19937_64 rng(1);
  WorldState w = lone_robot();
  add_ped(w, 1, {3.2, 0.0});
  const RgbdFrame f = sense_rgbd(w, cam, rng);
  ASSERT_EQ(f.boxes.size(), 1u);
  const auto lp = localize_rgbd(f.boxes[0], f.depth, cam);
  EXPECT_NEAR(lp.position.x, 3.0, 0.01);
  const Point2 robot = cam.mount.apply(lp.position);
  EXPECT_NEAR(robot.x, 3.2, 0.01);
}

TEST(RgbdLocalization, NearestTenPercentOfDepth) {
  // Box over a synthetic patch: 100 pixels at 2.0 m and 900 at 5.0 m.
  RgbdCameraModel cam;
  DepthImage depth(cam.width, cam.height, cam.near, cam.range);
  for (int r = 0; r < 10; ++r)
    for (int c = 0; c < 100; ++c) depth.set(270 + c, 100 + r, c < 10 ? 2.0f : 5.0f);
  const BoundingBox box{{270, 100}, 100, 10, 3};
  const auto lp = localize_rgbd(box, depth, cam);
  EXPECT_NEAR(lp.position.norm(), 2.0, 1e-6);
  EXPECT_NEAR(bearing(lp.position), 0.0, 1e-12);
}

TEST(RgbdLocalization, TooFewDepthPixelsThrows) {
  RgbdCameraModel cam;
  DepthImage depth(cam.width, cam.height, cam.near, cam.range);
  depth.set(10, 10, 2.0f);
  EXPECT_THROW(localize_rgbd({{5, 5}, 10, 10, 1}, depth, cam), InsufficientDepth);
}

TEST(CctvLocalization, FootprintGridWithinFiveCentimeters) {
  const Frame2 gnd_to_map(deg_to_rad(15.0), {2.0, -1.0});
  const auto cam = table_cctv(gnd_to_map);
  double worst = 0.0;
  int poses = 0;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 20; ++j) {
      const Point2 gnd{0.5 + 8.0 * i / 9.0, 0.5 + 11.0 * j / 19.0};
      const Point2 truth = gnd_to_map.apply(gnd);
      WorldState w = lone_robot();
      w.robot.pose = Frame2(0, {-15, -15});
      add_ped(w, 1, truth);
      const auto boxes = sense_cctv(w, cam);
      ASSERT_EQ(boxes.size(), 1u) << "ground point " << gnd.x << "," << gnd.y;
      const auto lp = localize_cctv(boxes[0], cam, true);
      EXPECT_EQ(lp.frame, FrameTag::Map);
      worst = std::max(worst, distance(lp.position, truth));
      const auto g = localize_cctv(boxes[0], cam, false);
      EXPECT_EQ(g.frame, FrameTag::Ground);
      EXPECT_NEAR(distance(g.position, gnd), distance(lp.position, truth), 1e-9);
      ++poses;
    }
  }
  EXPECT_EQ(poses, 200);
  EXPECT_LE(worst, 0.05);
}

TEST(CctvLocalization, FeetPointThroughHomography) {
  const auto cam = table_cctv();
  // The bottom-left image corner is ground corner 1.
  const BoundingBox box{{350, 800}, 20, 200, 9};
  const auto lp = localize_cctv(box, cam);
  EXPECT_NEAR(lp.position.x, 0.0, 1e-9);
  EXPECT_NEAR(lp.position.y, 0.0, 1e-9);
  EXPECT_EQ(lp.ped_id, 9);
}

TEST(PairDistances, NoisyDepthMeanErrorUnderATenthOfAFoot) {
  RgbdCameraModel cam;
  cam.noise_sigma_depth = 0.02;
  std::mt19937_64 rng(314159);
  std::uniform_real_distribution<double> range(1.2, 5.4), frac(-1.0, 1.0);
  double sum = 0.0, worst = 0.0;
  int pairs = 0;
  while (pairs < 1000) {
    std::array<Point2, 2> p;
    for (auto& q : p) {
      const double r = range(rng);
      const double lim = 0.5 * cam.fov - std::asin(0.3 / r) - deg_to_rad(1.0);
      q = r * unit_from_angle(lim * frac(rng));
    }
    if (distance(p[0], p[1]) < 0.6) continue;
    WorldState w = lone_robot();
    add_ped(w, 1, p[0]);
    add_ped(w, 2, p[1]);
    // Only pairs where neither hides the other.
    if (visible_fraction({0, 0}, {p[0], 0.3}, std::vector<Disk>{{p[1], 0.3}}, {}) < 1.0 ||
        visible_fraction({0, 0}, {p[1], 0.3}, std::vector<Disk>{{p[0], 0.3}}, {}) < 1.0)
      continue;
    const RgbdFrame f = sense_rgbd(w, cam, rng);
    const auto* a = box_of(f.boxes, 1);
    const auto* b = box_of(f.boxes, 2);
    ASSERT_TRUE(a && b);
    const std::vector<LocalizedPedestrian> located{localize_rgbd(*a, f.depth, cam), localize_rgbd(*b, f.depth, cam)};
    const auto d = pairwise_distances(located);
    ASSERT_EQ(d.size(), 1u);
    const double err = std::abs(d[0].distance - distance(p[0], p[1]));
    sum += err;
    worst = std::max(worst, err);
    ++pairs;
  }
  const double mean = sum / pairs;
  EXPECT_LE(mean, 0.1 * kFoot) << "mean " << mean << " worst " << worst;
}

TEST(PairDistances, AllPairsOrderedByKey) {
  std::vector<LocalizedPedestrian> peds{
      {7, {0, 0}, FrameTag::Map, Source::Cctv, 1.0},
      {2, {3, 4}, FrameTag::Map, Source::Cctv, 1.0},
      {5, {0, 1}, FrameTag::Map, Source::Cctv, 1.2},
  };
  const auto d = pairwise_distances(peds);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(std::make_pair(d[0].id_a, d[0].id_b), std::make_pair(2, 5));
  EXPECT_EQ(std::make_pair(d[1].id_a, d[1].id_b), std::make_pair(2, 7));
  EXPECT_EQ(std::make_pair(d[2].id_a, d[2].id_b), std::make_pair(5, 7));
  EXPECT_DOUBLE_EQ(d[1].distance, 5.0);
  EXPECT_DOUBLE_EQ(d[2].distance, 1.0);
  EXPECT_DOUBLE_EQ(d[0].timestamp, 1.2);
  EXPECT_TRUE(pairwise_distances({}).empty());
  EXPECT_TRUE(pairwise_distances(std::vector<LocalizedPedestrian>{peds[0]}).empty());
}

TEST(PairDistances, MixedFramesThrow) {
  std::vector<LocalizedPedestrian> peds{{1, {0, 0}, FrameTag::Map, Source::Cctv, 0.0},
                                        {2, {1, 0}, FrameTag::Robot, Source::Rgbd, 0.0}};
  EXPECT_THROW(pairwise_distances(peds), MixedFrames);
}
