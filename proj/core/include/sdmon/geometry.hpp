#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace sdmon {

inline constexpr double kPi = std::numbers::pi;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Wraps an angle into (-pi, pi].
double normalize_angle(double rad);

// A point or displacement in the plane, meters unless stated otherwise.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Point2& operator+=(const Point2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Point2& operator-=(const Point2& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  friend constexpr Point2 operator+(Point2 a, const Point2& b) { return a += b; }
  friend constexpr Point2 operator-(Point2 a, const Point2& b) { return a -= b; }
  friend constexpr Point2 operator-(const Point2& a) { return {-a.x, -a.y}; }
  friend constexpr Point2 operator*(double s, const Point2& a) { return {s * a.x, s * a.y}; }
  friend constexpr Point2 operator*(const Point2& a, double s) { return {s * a.x, s * a.y}; }
  friend constexpr Point2 operator/(const Point2& a, double s) { return {a.x / s, a.y / s}; }
  friend constexpr bool operator==(const Point2&, const Point2&) = default;

  double norm() const { return std::hypot(x, y); }
  constexpr double squared_norm() const { return x * x + y * y; }
  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

using Vec2 = Point2;

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double distance(const Point2& a, const Point2& b) { return (a - b).norm(); }
inline Vec2 unit_from_angle(double rad) { return {std::cos(rad), std::sin(rad)}; }
inline double bearing(const Vec2& v) { return std::atan2(v.y, v.x); }
inline Vec2 rotate(const Vec2& v, double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Rigid planar transform: p_parent = R(rotation) * p_child + translation.
class Frame2 {
 public:
  Frame2() = default;
  Frame2(double rotation, Point2 translation)
      : rotation_(normalize_angle(rotation)), translation_(translation) {}

  double rotation() const { return rotation_; }
  const Point2& translation() const { return translation_; }

  Point2 apply(const Point2& p) const { return rotate(p, rotation_) + translation_; }
  Vec2 apply_vector(const Vec2& v) const { return rotate(v, rotation_); }

  // (a * b).apply(p) == a.apply(b.apply(p))
  friend Frame2 operator*(const Frame2& a, const Frame2& b) {
    return Frame2(a.rotation_ + b.rotation_, a.apply(b.translation_));
  }
  Frame2 inverse() const {
    return Frame2(-rotation_, rotate(-translation_, -rotation_));
  }

 private:
  double rotation_ = 0.0;
  Point2 translation_{};
};

// 3x3 projective map, normalized so m[2][2] == 1.
struct Homography {
  std::array<std::array<double, 3>, 3> m{};

  static Homography identity();
  static Homography scaling(double sx, double sy);
  Homography inverse() const;
  double determinant() const;
};

// Solves for M with M * [src_i, 1]^T ~ [dst_i, 1]^T by a direct 8x8 linear
// solve (m[2][2] fixed to 1). Throws DegenerateCorrespondence when three
// points of either quadruple are collinear.
Homography solve_homography(std::span<const Point2, 4> src, std::span<const Point2, 4> dst);

// (x/w, y/w) of m * [x, y, 1]^T; throws PointAtInfinity when |w| <= 1e-9.
Point2 apply_homography(const Homography& h, const Point2& p);

// Counter-clockwise convex polygon. One or two vertices encode the point and
// segment hulls that arise from one or two (or collinear) inputs.
class ConvexPolygon {
 public:
  ConvexPolygon() = default;
  // Vertices must already be CCW and strictly convex; no checks beyond that.
  explicit ConvexPolygon(std::vector<Point2> ccw_vertices) : vertices_(std::move(ccw_vertices)) {}

  const std::vector<Point2>& vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  bool empty() const { return vertices_.empty(); }
  double area() const;
  Point2 centroid() const;

  ConvexPolygon transformed(const Frame2& f) const;

  static ConvexPolygon rectangle(Point2 min, Point2 max);

 private:
  std::vector<Point2> vertices_;
};

// Minimal CCW hull (monotone chain, collinear points pruned). Throws EmptyInput.
ConvexPolygon convex_hull(std::span<const Point2> points);

// Inside or on the boundary, within tol meters.
bool point_in_polygon(const ConvexPolygon& poly, const Point2& p, double tol = 1e-9);

// Euclidean distance from p to the polygon region (0 when inside).
double distance_to_polygon(const ConvexPolygon& poly, const Point2& p);

double distance_to_segment(const Point2& p, const Point2& a, const Point2& b);

// Distance along a unit-direction ray to the first boundary hit, if any.
// An origin inside the region reports 0.
std::optional<double> ray_polygon(const Point2& origin, const Vec2& dir, const ConvexPolygon& poly);
std::optional<double> ray_circle(const Point2& origin, const Vec2& dir, const Point2& center,
                                 double radius);

// Minimum distance from the ray to the polygon region; 0 when they touch.
double ray_distance_to_polygon(const Point2& origin, const Vec2& dir, const ConvexPolygon& poly);

// Part of the segment [a, b] that lies outside the polygon, as parameter
// intervals in [0, 1].
std::vector<std::pair<double, double>> segment_outside_polygon(const Point2& a, const Point2& b,
                                                               const ConvexPolygon& poly);

}  // namespace sdmon
