#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "sdmon/geometry.hpp"
#include "sdmon/sensors.hpp"

namespace sdmon {

// Six feet in meters.
inline constexpr double kSixFeet = 1.8288;

enum class Source { Rgbd, Cctv };
enum class FrameTag { Robot, Ground, Map };

std::string_view to_string(Source s);
std::string_view to_string(FrameTag f);

struct LocalizedPedestrian {
  int ped_id = 0;
  Point2 position;
  FrameTag frame = FrameTag::Robot;
  Source source = Source::Rgbd;
  double timestamp = 0.0;
};

struct PairDistance {
  int id_a = 0;  // id_a < id_b
  int id_b = 0;
  double distance = 0.0;
  double timestamp = 0.0;
  Source source = Source::Rgbd;
};

inline constexpr int kMinDepthPixels = 10;

// Camera-frame position (X forward, Y left) from the box centroid bearing and
// the mean of the smallest ceil(10%) valid depth pixels inside the box. With
// an identity mount this is the robot frame. Throws InsufficientDepth.
LocalizedPedestrian localize_rgbd(const BoundingBox& box, const DepthImage& depth,
                                  const RgbdCameraModel& cam, double timestamp = 0.0);

// Feet point (midpoint of the bottom corners) through the homography into the
// top view, then scaled into the ground frame; `to_map` applies gnd_to_map.
LocalizedPedestrian localize_cctv(const BoundingBox& box, const CctvCameraModel& cam,
                                  bool to_map = false, double timestamp = 0.0);

// All C(n, 2) Euclidean distances, keyed id_a < id_b and ordered by key.
// Throws MixedFrames when inputs disagree on frame or source.
std::vector<PairDistance> pairwise_distances(std::span<const LocalizedPedestrian> peds);

}  // namespace sdmon
