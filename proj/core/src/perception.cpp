#include "sdmon/perception.hpp"

#include <algorithm>
#include <cmath>

#include "sdmon/errors.hpp"

namespace sdmon {

std::string_view to_string(Source s) { return s == Source::Rgbd ? "rgbd" : "cctv"; }

std::string_view to_string(FrameTag f) {
  switch (f) {
    case FrameTag::Robot:
      return "robot";
    case FrameTag::Ground:
      return "gnd";
    case FrameTag::Map:
      return "map";
  }
  return "?";
}

LocalizedPedestrian localize_rgbd(const BoundingBox& box, const DepthImage& depth,
                                  const RgbdCameraModel& cam, double timestamp) {
  const int c0 = std::max(0, static_cast<int>(std::floor(box.top_left.x)));
  const int r0 = std::max(0, static_cast<int>(std::floor(box.top_left.y)));
  const int c1 = std::min(depth.width(), static_cast<int>(std::ceil(box.top_left.x + box.width)));
  const int r1 = std::min(depth.height(), static_cast<int>(std::ceil(box.top_left.y + box.height)));

  std::vector<float> values;
  for (int r = r0; r < r1; ++r)
    for (int c = c0; c < c1; ++c) {
      const float v = depth.at(c, r);
      if (depth.valid(v)) values.push_back(v);
    }
  if (static_cast<int>(values.size()) < kMinDepthPixels)
    throw InsufficientDepth("box for pedestrian " + std::to_string(box.ped_id) + " has " +
                            std::to_string(values.size()) + " valid depth pixels");

  const std::size_t k = std::max<std::size_t>(1, (values.size() + 9) / 10);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k - 1), values.end());
  std::sort(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k));
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += values[i];
  const double d_avg = sum / static_cast<double>(k);

  const double psi = cam.bearing_of_column(box.centroid().x);
  return {box.ped_id, d_avg * unit_from_angle(psi), FrameTag::Robot, Source::Rgbd, timestamp};
}

LocalizedPedestrian localize_cctv(const BoundingBox& box, const CctvCameraModel& cam, bool to_map,
                                  double timestamp) {
  const Point2 feet_ang = 0.5 * (box.bottom_left() + box.bottom_right());
  const Point2 feet_top = apply_homography(cam.homography, feet_ang);
  const Point2 gnd = cam.top_to_ground(feet_top);
  if (to_map) return {box.ped_id, cam.gnd_to_map.apply(gnd), FrameTag::Map, Source::Cctv, timestamp};
  return {box.ped_id, gnd, FrameTag::Ground, Source::Cctv, timestamp};
}

std::vector<PairDistance> pairwise_distances(std::span<const LocalizedPedestrian> peds) {
  std::vector<PairDistance> out;
  if (peds.empty()) return out;
  for (const auto& p : peds)
    if (p.frame != peds.front().frame || p.source != peds.front().source)
      throw MixedFrames("pairwise_distances needs one frame and one source");

  std::vector<const LocalizedPedestrian*> sorted;
  for (const auto& p : peds) sorted.push_back(&p);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->ped_id < b->ped_id; });
  out.reserve(sorted.size() * (sorted.size() - 1) / 2);
  for (std::size_t i = 0; i < sorted.size(); ++i)
    for (std::size_t j = i + 1; j < sorted.size(); ++j) {
      const double dx = sorted[i]->position.x - sorted[j]->position.x;
      const double dy = sorted[i]->position.y - sorted[j]->position.y;
      out.push_back({sorted[i]->ped_id, sorted[j]->ped_id, std::sqrt(dx * dx + dy * dy),
                     std::max(sorted[i]->timestamp, sorted[j]->timestamp), sorted[i]->source});
    }
  return out;
}

}  // namespace sdmon
