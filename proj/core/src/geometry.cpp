#include "sdmon/geometry.hpp"

#include <algorithm>
#include <limits>

#include "sdmon/errors.hpp"

namespace sdmon {

namespace {

constexpr double kCollinearTol = 1e-9;
constexpr double kInfinityTol = 1e-9;
constexpr double kInvertibleTol = 1e-9;

bool any_three_collinear(std::span<const Point2, 4> p) {
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      for (int k = j + 1; k < 4; ++k) {
        if (std::abs(cross(p[j] - p[i], p[k] - p[i])) < kCollinearTol) return true;
      }
    }
  }
  return false;
}

// Gaussian elimination with partial pivoting; returns false when singular.
template <std::size_t N>
bool solve_linear(std::array<std::array<double, N + 1>, N>& a, std::array<double, N>& x) {
  for (std::size_t col = 0; col < N; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < N; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) < 1e-14) return false;
    std::swap(a[col], a[pivot]);
    for (std::size_t r = col + 1; r < N; ++r) {
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c <= N; ++c) a[r][c] -= f * a[col][c];
    }
  }
  for (std::size_t i = N; i-- > 0;) {
    double s = a[i][N];
    for (std::size_t c = i + 1; c < N; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return true;
}

void normalize(Homography& h) {
  const double s = h.m[2][2];
  if (std::abs(s) < 1e-15) return;
  for (auto& row : h.m)
    for (double& v : row) v /= s;
}

}  // namespace

double normalize_angle(double rad) {
  double a = std::remainder(rad, 2.0 * kPi);  // [-pi, pi]
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

Homography Homography::identity() { return scaling(1.0, 1.0); }

Homography Homography::scaling(double sx, double sy) {
  Homography h;
  h.m = {{{sx, 0.0, 0.0}, {0.0, sy, 0.0}, {0.0, 0.0, 1.0}}};
  return h;
}

double Homography::determinant() const {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

Homography Homography::inverse() const {
  const double det = determinant();
  if (std::abs(det) <= kInvertibleTol) throw DegenerateCorrespondence("homography is not invertible");
  Homography inv;
  auto& r = inv.m;
  r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
  r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
  r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
  r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
  r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
  r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
  r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
  r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
  r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  normalize(inv);
  return inv;
}

Homography solve_homography(std::span<const Point2, 4> src, std::span<const Point2, 4> dst) {
  if (any_three_collinear(src)) throw DegenerateCorrespondence("three source points are collinear");
  if (any_three_collinear(dst)) throw DegenerateCorrespondence("three target points are collinear");

  // Unknowns h0..h7 with h8 = 1:
  //   u = (h0 x + h1 y + h2) / (h6 x + h7 y + 1)
  //   v = (h3 x + h4 y + h5) / (h6 x + h7 y + 1)
  std::array<std::array<double, 9>, 8> a{};
  for (int i = 0; i < 4; ++i) {
    const double x = src[i].x, y = src[i].y, u = dst[i].x, v = dst[i].y;
    a[2 * i] = {x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, u};
    a[2 * i + 1] = {0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y, v};
  }
  std::array<double, 8> h{};
  if (!solve_linear<8>(a, h)) throw DegenerateCorrespondence("correspondence system is singular");

  Homography out;
  out.m = {{{h[0], h[1], h[2]}, {h[3], h[4], h[5]}, {h[6], h[7], 1.0}}};
  if (std::abs(out.determinant()) <= kInvertibleTol)
    throw DegenerateCorrespondence("solved homography is not invertible");
  return out;
}

Point2 apply_homography(const Homography& h, const Point2& p) {
  const auto& m = h.m;
  const double w = m[2][0] * p.x + m[2][1] * p.y + m[2][2];
  if (std::abs(w) <= kInfinityTol) throw PointAtInfinity("point maps to infinity");
  return {(m[0][0] * p.x + m[0][1] * p.y + m[0][2]) / w,
          (m[1][0] * p.x + m[1][1] * p.y + m[1][2]) / w};
}

double ConvexPolygon::area() const {
  if (vertices_.size() < 3) return 0.0;
  double a = 0.0;
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    a += cross(vertices_[i], vertices_[(i + 1) % vertices_.size()]);
  }
  return 0.5 * a;
}

Point2 ConvexPolygon::centroid() const {
  if (vertices_.empty()) return {};
  const double a = area();
  if (vertices_.size() < 3 || std::abs(a) < 1e-12) {
    Point2 s;
    for (const auto& v : vertices_) s += v;
    return s / static_cast<double>(vertices_.size());
  }
  Point2 c;
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    const Point2& p = vertices_[i];
    const Point2& q = vertices_[(i + 1) % vertices_.size()];
    const double k = cross(p, q);
    c += k * (p + q);
  }
  return c / (6.0 * a);
}

ConvexPolygon ConvexPolygon::transformed(const Frame2& f) const {
  std::vector<Point2> out;
  out.reserve(vertices_.size());
  for (const auto& v : vertices_) out.push_back(f.apply(v));
  return ConvexPolygon(std::move(out));
}

ConvexPolygon ConvexPolygon::rectangle(Point2 min, Point2 max) {
  return ConvexPolygon({min, {max.x, min.y}, max, {min.x, max.y}});
}

ConvexPolygon convex_hull(std::span<const Point2> points) {
  if (points.empty()) throw EmptyInput("convex hull of an empty point set");
  std::vector<Point2> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(),
            [](const Point2& a, const Point2& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() == 1) return ConvexPolygon(pts);

  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = pts.size() - 1; i-- > 0;) {
    const Point2& p = pts[i];
    while (k >= lower && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return ConvexPolygon(std::move(hull));
}

double distance_to_segment(const Point2& p, const Point2& a, const Point2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squared_norm();
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + t * ab);
}

bool point_in_polygon(const ConvexPolygon& poly, const Point2& p, double tol) {
  const auto& v = poly.vertices();
  if (v.empty()) return false;
  if (v.size() == 1) return distance(p, v[0]) <= tol;
  if (v.size() == 2) return distance_to_segment(p, v[0], v[1]) <= tol;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point2& a = v[i];
    const Point2& b = v[(i + 1) % v.size()];
    const Vec2 e = b - a;
    // Signed distance of p to the edge line, positive on the interior side.
    if (cross(e, p - a) / e.norm() < -tol) return false;
  }
  return true;
}

double distance_to_polygon(const ConvexPolygon& poly, const Point2& p) {
  const auto& v = poly.vertices();
  if (v.empty()) return std::numeric_limits<double>::infinity();
  if (v.size() >= 3 && point_in_polygon(poly, p, 0.0)) return 0.0;
  if (v.size() == 1) return distance(p, v[0]);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    best = std::min(best, distance_to_segment(p, v[i], v[(i + 1) % v.size()]));
  }
  return best;
}

std::optional<double> ray_polygon(const Point2& origin, const Vec2& dir, const ConvexPolygon& poly) {
  const auto& v = poly.vertices();
  if (v.size() < 2) return std::nullopt;
  if (v.size() >= 3 && point_in_polygon(poly, origin, 0.0)) return 0.0;
  std::optional<double> best;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point2& a = v[i];
    const Vec2 e = v[(i + 1) % v.size()] - a;
    const double denom = cross(dir, e);
    if (std::abs(denom) < 1e-15) continue;
    const Vec2 ao = a - origin;
    const double t = cross(ao, e) / denom;
    const double s = cross(ao, dir) / denom;
    if (t >= 0.0 && s >= 0.0 && s <= 1.0 && (!best || t < *best)) best = t;
  }
  return best;
}

std::optional<double> ray_circle(const Point2& origin, const Vec2& dir, const Point2& center,
                                 double radius) {
  const Vec2 oc = origin - center;
  const double c = oc.squared_norm() - radius * radius;
  if (c <= 0.0) return 0.0;
  const double b = dot(oc, dir);
  if (b >= 0.0) return std::nullopt;
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  return -b - std::sqrt(disc);
}

double ray_distance_to_polygon(const Point2& origin, const Vec2& dir, const ConvexPolygon& poly) {
  const auto& v = poly.vertices();
  if (v.empty()) return std::numeric_limits<double>::infinity();
  if (v.size() >= 2 && ray_polygon(origin, dir, poly)) return 0.0;
  double best = distance_to_polygon(poly, origin);
  for (const auto& p : v) {
    const double t = std::max(0.0, dot(p - origin, dir));
    best = std::min(best, distance(origin + t * dir, p));
  }
  return best;
}

std::vector<std::pair<double, double>> segment_outside_polygon(const Point2& a, const Point2& b,
                                                               const ConvexPolygon& poly) {
  const auto& v = poly.vertices();
  if (v.size() < 3) return {{0.0, 1.0}};
  // Cyrus-Beck clip of the segment to the polygon interior.
  double t0 = 0.0, t1 = 1.0;
  const Vec2 d = b - a;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point2& p = v[i];
    const Vec2 e = v[(i + 1) % v.size()] - p;
    const double num = cross(e, a - p);  // >= 0 inside
    const double den = cross(e, d);
    if (std::abs(den) < 1e-15) {
      if (num < 0.0) return {{0.0, 1.0}};
      continue;
    }
    const double t = -num / den;
    if (den > 0.0) {
      t0 = std::max(t0, t);
    } else {
      t1 = std::min(t1, t);
    }
    if (t0 > t1) return {{0.0, 1.0}};
  }
  std::vector<std::pair<double, double>> out;
  if (t0 > 0.0) out.emplace_back(0.0, t0);
  if (t1 < 1.0) out.emplace_back(t1, 1.0);
  return out;
}

}  // namespace sdmon
