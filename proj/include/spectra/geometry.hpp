#pragma once

// Planar geometry in the unit-sum plane A for d = 3 chromaticities.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "spectra/error.hpp"
#include "spectra/sensor.hpp"

namespace spectra {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  Point2 operator+(Point2 o) const { return {x + o.x, y + o.y}; }
  Point2 operator-(Point2 o) const { return {x - o.x, y - o.y}; }
  Point2 operator*(double k) const { return {x * k, y * k}; }
  bool operator==(const Point2&) const = default;
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

namespace plane {

inline const double kU[3] = {2.0 / std::sqrt(6.0), -1.0 / std::sqrt(6.0), -1.0 / std::sqrt(6.0)};
inline const double kV[3] = {0.0, 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0)};

}  // namespace plane

/// Coordinates in A with respect to the projected first two standard axes.
inline Point2 to_plane(const Chromaticity& c) {
  if (c.size() == 2) return {(c[0] - c[1]) / std::sqrt(2.0), 0.0};
  if (c.size() != 3) throw Error(ErrorKind::InvalidInput, "plane geometry needs d = 3");
  return {c[0] * plane::kU[0] + c[1] * plane::kU[1] + c[2] * plane::kU[2],
          c[0] * plane::kV[0] + c[1] * plane::kV[1] + c[2] * plane::kV[2]};
}

inline Chromaticity from_plane(Point2 p) {
  std::vector<double> c(3);
  for (int k = 0; k < 3; ++k) c[k] = 1.0 / 3.0 + p.x * plane::kU[k] + p.y * plane::kV[k];
  double r = c[0] + c[1] + c[2] - 1.0;
  c[2] -= r;
  return Chromaticity(std::move(c));
}

inline std::vector<Point2> to_plane(const std::vector<Chromaticity>& cs) {
  std::vector<Point2> out;
  out.reserve(cs.size());
  for (const auto& c : cs) out.push_back(to_plane(c));
  return out;
}

/// Angle of p - center in the fixed plane basis.
inline double plane_angle(const Chromaticity& center, const Chromaticity& p) {
  Point2 d = to_plane(p) - to_plane(center);
  if (norm(d) <= 1e-15) throw Error(ErrorKind::Geometry, "coincident points have no angle");
  return std::atan2(d.y, d.x);
}

inline double segment_distance(Point2 p, Point2 a, Point2 b) {
  Point2 ab = b - a;
  double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
  return distance(p, a + ab * t);
}

/// Counter-clockwise convex hull (monotone chain); collinear points dropped.
inline std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

inline double polygon_area(const std::vector<Point2>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) a += cross(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * a;
}

inline Point2 polygon_centroid(const std::vector<Point2>& poly) {
  double a = 0.0;
  Point2 c;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    Point2 p = poly[i];
    Point2 q = poly[(i + 1) % poly.size()];
    double w = cross(p, q);
    a += w;
    c = c + (p + q) * w;
  }
  if (std::abs(a) < 1e-300) throw Error(ErrorKind::Degenerate, "degenerate polygon");
  return c * (1.0 / (3.0 * a));
}

/// Signed distance to a CCW convex polygon: positive inside (depth), negative outside.
inline double signed_hull_distance(const std::vector<Point2>& hull, Point2 p) {
  bool inside = hull.size() >= 3;
  double best = INFINITY;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    Point2 a = hull[i];
    Point2 b = hull[(i + 1) % hull.size()];
    if (cross(b - a, p - a) < 0.0) inside = false;
    best = std::min(best, segment_distance(p, a, b));
  }
  return inside ? best : -best;
}

/// Intersection of two convex CCW polygons (Sutherland-Hodgman).
inline std::vector<Point2> clip_convex(const std::vector<Point2>& subject, const std::vector<Point2>& clip) {
  std::vector<Point2> out = subject;
  for (std::size_t i = 0; i < clip.size() && !out.empty(); ++i) {
    Point2 a = clip[i];
    Point2 b = clip[(i + 1) % clip.size()];
    std::vector<Point2> in = std::move(out);
    out.clear();
    for (std::size_t j = 0; j < in.size(); ++j) {
      Point2 p = in[j];
      Point2 q = in[(j + 1) % in.size()];
      double sp = cross(b - a, p - a);
      double sq = cross(b - a, q - a);
      if (sp >= 0.0) out.push_back(p);
      if ((sp >= 0.0) != (sq >= 0.0)) {
        double t = sp / (sp - sq);
        out.push_back(p + (q - p) * t);
      }
    }
  }
  return out;
}

/// Signed winding count of a closed polyline around `point`.
inline int winding_number(const std::vector<Point2>& closed, Point2 point) {
  const std::size_t n = closed.size();
  if (n < 3) throw Error(ErrorKind::InvalidInput, "closed polyline needs at least 3 vertices");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Point2 a = closed[i];
    Point2 b = closed[(i + 1) % n];
    if (segment_distance(point, a, b) <= 1e-9) {
      throw Error(ErrorKind::Geometry, "point lies on the curve");
    }
    Point2 u = a - point;
    Point2 v = b - point;
    total += std::atan2(cross(u, v), dot(u, v));
  }
  double turns = total / (2.0 * std::numbers::pi);
  double rounded = std::round(turns);
  if (std::abs(total - rounded * 2.0 * std::numbers::pi) > 1e-6) {
    throw Error(ErrorKind::Geometry, "winding sum is not a multiple of 2 pi");
  }
  return int(rounded);
}

inline int winding_number(const std::vector<Chromaticity>& closed, const Chromaticity& point) {
  return winding_number(to_plane(closed), to_plane(point));
}

}  // namespace spectra
