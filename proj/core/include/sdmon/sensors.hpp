#pragma once

#include <array>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "sdmon/geometry.hpp"
#include "sdmon/simworld.hpp"

namespace sdmon {

// A detected pedestrian in image pixels: B = [top left, m_B, n_B] plus the
// tracker ID.
struct BoundingBox {
  Point2 top_left;
  double width = 0.0;   // m_B
  double height = 0.0;  // n_B
  int ped_id = 0;

  Point2 centroid() const { return {top_left.x + 0.5 * width, top_left.y + 0.5 * height}; }
  Point2 bottom_left() const { return {top_left.x, top_left.y + height}; }
  Point2 bottom_right() const { return {top_left.x + width, top_left.y + height}; }
};

// Depth pixels in meters; kNoReturn marks pixels without a valid reading.
class DepthImage {
 public:
  static constexpr float kNoReturn = 0.0f;

  DepthImage() = default;
  DepthImage(int width, int height, double near, double far)
      : width_(width), height_(height), near_(near), far_(far),
        pixels_(static_cast<std::size_t>(width) * height, kNoReturn) {}

  int width() const { return width_; }
  int height() const { return height_; }
  double near() const { return near_; }
  double far() const { return far_; }

  float at(int col, int row) const { return pixels_[index(col, row)]; }
  void set(int col, int row, float v) { pixels_[index(col, row)] = v; }
  bool valid(float v) const { return v > near_ && v < far_; }

 private:
  std::size_t index(int col, int row) const {
    return static_cast<std::size_t>(row) * width_ + col;
  }
  int width_ = 0;
  int height_ = 0;
  double near_ = 0.0;
  double far_ = 0.0;
  std::vector<float> pixels_;
};

// Robot-mounted RGB-D camera. Image columns are linear in bearing,
// psi = ((w/2 - x) / w) * fov, so bearings invert exactly from pixels.
struct RgbdCameraModel {
  double fov = deg_to_rad(70.0);
  double range = 6.0;  // R
  double near = 0.3;   // f
  int width = 640;
  int height = 480;
  Frame2 mount;  // relative to the robot base
  double mount_height = 1.0;
  double noise_sigma_depth = 0.02;
  double depth_quantum = 0.001;
  double min_visible_fraction = 0.5;

  double vertical_fov() const { return fov * height / width; }
  double column_of_bearing(double psi) const { return 0.5 * width - psi * width / fov; }
  double bearing_of_column(double x) const { return (0.5 * width - x) / width * fov; }
};

// Elevated static camera looking at the floor at an angle. `homography` maps
// angled-view pixels to top-view pixels; top-view pixel `top_origin` is corner
// 1 of the homography rectangle, which is the ground-frame origin.
struct CctvCameraModel {
  Homography homography;
  Homography homography_inv;
  double scale = 0.01;  // S, meters per top-view pixel
  Point2 top_origin;    // o_top
  Frame2 gnd_to_map;    // H^map_gnd
  ConvexPolygon footprint;  // map frame
  int width = 1920;
  int height = 1080;
  Point2 eye;  // map frame, used for occlusion
  double eye_height = 3.0;
  double min_visible_fraction = 0.5;

  // Builds the model the way the rectangle is calibrated in practice: four
  // angled-view corners of a rectangle of known size on the floor.
  static CctvCameraModel from_rectangle(const std::array<Point2, 4>& image_corners,
                                        double rect_width_m, double rect_height_m,
                                        double pixels_per_meter, const Frame2& gnd_to_map,
                                        int width, int height);

  Point2 ground_to_top(const Point2& gnd) const { return top_origin + gnd / scale; }
  Point2 top_to_ground(const Point2& top) const { return (top - top_origin) * scale; }
};

struct LidarConfig {
  int beams = 241;
  double fov = deg_to_rad(240.0);
  double max_range = 10.0;
};

struct LidarScan {
  static constexpr double kNoReturn = std::numeric_limits<double>::infinity();

  double angle_min = 0.0;  // relative to robot heading
  double angle_increment = 0.0;
  double max_range = 0.0;
  std::vector<double> ranges;

  double angle(std::size_t i) const { return angle_min + angle_increment * static_cast<double>(i); }
  static bool valid(double r) { return r != kNoReturn; }
};

struct RgbdFrame {
  std::vector<BoundingBox> boxes;
  DepthImage depth;
};

// Detection margin above min_visible_fraction: a pedestrian exactly at the
// threshold is not detected.
inline constexpr double kVisibilityEpsilon = 1e-9;

Frame2 camera_pose(const RobotState& robot, const RgbdCameraModel& cam);

// Boxes for pedestrians with center inside the FOV cone and (near, range) and
// visible fraction above the threshold; depth image with per-pixel Gaussian
// noise on pedestrian pixels. `rng` supplies the depth noise.
RgbdFrame sense_rgbd(const WorldState& world, const RgbdCameraModel& cam, std::mt19937_64& rng);

std::vector<BoundingBox> sense_cctv(const WorldState& world, const CctvCameraModel& cam);

LidarScan sense_lidar(const WorldState& world, const RobotState& robot, const LidarConfig& cfg = {});

// Ideal re-identification keeps ground-truth IDs. With reassignment enabled a
// pedestrian that drops out of a camera's view gets a fresh ID on return.
class TrackIdAssigner {
 public:
  explicit TrackIdAssigner(bool reassign_on_reentry = false, int first_fresh_id = 100000)
      : reassign_(reassign_on_reentry), next_id_(first_fresh_id) {}

  void assign(std::vector<BoundingBox>& boxes);
  // Ground-truth ID behind a tracker ID (identity unless reassigned).
  int ground_truth(int track_id) const;

 private:
  bool reassign_;
  int next_id_;
  std::map<int, int> track_of_;  // ground truth -> current track id
  std::map<int, int> truth_of_;  // track id -> ground truth
  std::set<int> visible_;
};

}  // namespace sdmon
