#pragma once

// Spectral locus sampling and convexity classification.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "spectra/geometry.hpp"
#include "spectra/sensor.hpp"

namespace spectra {

inline constexpr std::size_t kMinLocusSamples = 64;
inline constexpr double kDefaultHullTolerance = 2e-4;
inline constexpr double kBoundaryBand = 1e-9;
inline constexpr double kVertexSnap = 1e-9;

struct SampledLocus {
  std::vector<double> lambdas;
  std::vector<Chromaticity> points;

  SampledLocus(std::vector<double> l, std::vector<Chromaticity> p) : lambdas(std::move(l)), points(std::move(p)) {
    if (lambdas.size() != points.size()) throw Error(ErrorKind::InvalidInput, "locus arrays differ in length");
    if (lambdas.size() < kMinLocusSamples) throw Error(ErrorKind::InvalidInput, "too few samples");
    for (std::size_t i = 1; i < lambdas.size(); ++i) {
      if (!(lambdas[i] > lambdas[i - 1])) throw Error(ErrorKind::InvalidInput, "locus wavelengths not increasing");
    }
  }

  std::size_t size() const { return points.size(); }
  std::vector<Point2> plane_points() const { return to_plane(points); }

  /// Polyline interpolation in lambda, clamped to the sampled range.
  Point2 plane_at(double lambda) const {
    if (lambda <= lambdas.front()) return to_plane(points.front());
    if (lambda >= lambdas.back()) return to_plane(points.back());
    auto it = std::upper_bound(lambdas.begin(), lambdas.end(), lambda);
    std::size_t j = std::size_t(it - lambdas.begin());
    double u = (lambda - lambdas[j - 1]) / (lambdas[j] - lambdas[j - 1]);
    return to_plane(points[j - 1]) * (1.0 - u) + to_plane(points[j]) * u;
  }
};

/// n points eta(lambda_i) at uniform lambda over the support.
inline SampledLocus sample_locus(const Sensor& sensor, std::size_t n) {
  if (n < kMinLocusSamples) throw Error(ErrorKind::InvalidInput, "too few samples");
  const auto& g = sensor.grid();
  std::vector<double> lambdas(n);
  std::vector<Chromaticity> points;
  points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    lambdas[i] = i + 1 == n ? g.lambda_max() : g.lambda_min() + (g.lambda_max() - g.lambda_min()) * double(i) / double(n - 1);
    points.push_back(normalized_response(sensor, lambdas[i]));
  }
  return SampledLocus(std::move(lambdas), std::move(points));
}

/// Locus at the sensor's own grid nodes.
inline SampledLocus sample_locus(const Sensor& sensor) { return sample_locus(sensor, sensor.grid().size()); }

// ---------------------------------------------------------------------------
// Angles

struct AngleLift {
  std::vector<double> theta;
  double total = 0.0;
  double total_variation = 0.0;
  bool monotone = true;
  std::size_t first_violation = 0;  // index of the sample where the lift turns back
};

inline AngleLift lift_angles(Point2 center, const std::vector<Point2>& pts, double backward_tol = 1e-9) {
  AngleLift lift;
  if (pts.empty()) return lift;
  lift.theta.resize(pts.size());
  Point2 d0 = pts[0] - center;
  lift.theta[0] = std::atan2(d0.y, d0.x);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    Point2 u = pts[i - 1] - center;
    Point2 v = pts[i] - center;
    double step = std::atan2(cross(u, v), dot(u, v));
    lift.theta[i] = lift.theta[i - 1] + step;
    lift.total_variation += std::abs(step);
  }
  lift.total = lift.theta.back() - lift.theta.front();
  double dir = lift.total >= 0.0 ? 1.0 : -1.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (dir * (lift.theta[i] - lift.theta[i - 1]) < -backward_tol) {
      lift.monotone = false;
      lift.first_violation = i;
      break;
    }
  }
  return lift;
}

/// Continuous angle lift of the locus seen from `center`.
inline AngleLift unwrap_angles(const Chromaticity& center, const SampledLocus& locus) {
  auto pts = locus.plane_points();
  Point2 c = to_plane(center);
  double depth = signed_hull_distance(convex_hull(pts), c);
  if (depth <= 1e-6) throw Error(ErrorKind::Geometry, "center too close to the curve");
  return lift_angles(c, pts);
}

// ---------------------------------------------------------------------------
// Classification

enum class ConvexityClass { StrictlyConvex, Convex, PiecewiseConvex, NonConvex };

inline const char* to_string(ConvexityClass c) {
  switch (c) {
    case ConvexityClass::StrictlyConvex: return "StrictlyConvex";
    case ConvexityClass::Convex: return "Convex";
    case ConvexityClass::PiecewiseConvex: return "PiecewiseConvex";
    case ConvexityClass::NonConvex: return "NonConvex";
  }
  return "?";
}

struct Witness {
  std::string kind;             // "collinear": lambdas = (a, b, lambda); "angle_reversal": lambdas = (lambda)
  std::vector<double> lambdas;
  std::optional<Chromaticity> center;
};

struct ConvexityReport {
  ConvexityClass cls = ConvexityClass::NonConvex;
  std::vector<std::pair<double, double>> segments;
  std::vector<std::pair<std::size_t, std::size_t>> segment_indices;
  std::vector<std::pair<Chromaticity, Chromaticity>> purple;
  std::optional<Witness> witness;
  double max_inward_deviation = 0.0;
  double tolerance = kDefaultHullTolerance;

  bool convex() const { return cls == ConvexityClass::StrictlyConvex || cls == ConvexityClass::Convex; }
};

struct ClassifyOptions {
  double tolerance = kDefaultHullTolerance;
  double backward_tolerance = 1e-9;
  double collinear_tolerance = 1e-9;
  std::size_t min_run = 3;
  int random_centers = 8;
  std::uint64_t seed = 20240607;
};

namespace locus_detail {

/// Drops indices closer than `tol` to the last kept one.
inline std::vector<std::size_t> coalesce(const std::vector<Point2>& pts, const std::vector<std::size_t>& idx, double tol) {
  std::vector<std::size_t> out;
  for (std::size_t i : idx) {
    if (out.empty() || distance(pts[i], pts[out.back()]) >= tol) out.push_back(i);
  }
  if (!idx.empty() && out.back() != idx.back()) {
    if (out.size() > 1) out.back() = idx.back();
    else out.push_back(idx.back());
  }
  return out;
}

inline std::vector<Point2> interior_centers(const std::vector<Point2>& hull, int count, std::uint64_t seed) {
  Point2 g = polygon_centroid(hull);
  std::vector<Point2> centers{g};
  std::vector<double> areas;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    areas.push_back(std::abs(cross(hull[i] - g, hull[(i + 1) % hull.size()] - g)));
  }
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(areas.begin(), areas.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < count; ++k) {
    std::size_t i = pick(rng);
    double r1 = unit(rng);
    double r2 = unit(rng);
    if (r1 + r2 > 1.0) {
      r1 = 1.0 - r1;
      r2 = 1.0 - r2;
    }
    Point2 p = g + (hull[i] - g) * r1 + (hull[(i + 1) % hull.size()] - g) * r2;
    centers.push_back(g + (p - g) * 0.8);
  }
  return centers;
}

}  // namespace locus_detail

inline ConvexityReport classify_convexity(const SampledLocus& locus, const ClassifyOptions& opt = {}) {
  const auto pts = locus.plane_points();
  const std::size_t n = pts.size();
  const auto hull = convex_hull(pts);
  if (hull.size() < 3 || std::abs(polygon_area(hull)) < 1e-14) {
    throw Error(ErrorKind::Degenerate, "degenerate (collinear) locus");
  }

  ConvexityReport report;
  report.tolerance = opt.tolerance;
  std::vector<bool> on(n);
  std::vector<double> depth(n);
  for (std::size_t i = 0; i < n; ++i) {
    depth[i] = signed_hull_distance(hull, pts[i]);
    report.max_inward_deviation = std::max(report.max_inward_deviation, depth[i]);
    on[i] = depth[i] <= opt.tolerance;
  }

  std::vector<std::pair<std::size_t, std::size_t>> runs;
  for (std::size_t i = 0; i < n;) {
    if (!on[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && on[j + 1]) ++j;
    std::size_t a = i;
    std::size_t b = j;
    while (b - a + 1 > opt.min_run && depth[a] > kVertexSnap) ++a;
    while (b - a + 1 > opt.min_run && depth[b] > kVertexSnap) --b;
    if (j - i + 1 >= opt.min_run) runs.push_back({a, b});
    i = j + 1;
  }
  const bool all_on = std::all_of(on.begin(), on.end(), [](bool b) { return b; });
  if (all_on) runs = {{0, n - 1}};

  auto full = [&] {
    report.segments = {{locus.lambdas.front(), locus.lambdas.back()}};
    report.segment_indices = {{0, n - 1}};
  };

  if (runs.empty()) {
    report.cls = ConvexityClass::NonConvex;
    full();
    report.witness = Witness{"no_hull_arc", {}, std::nullopt};
    return report;
  }

  std::vector<std::size_t> glued;
  for (auto [a, b] : runs) {
    for (std::size_t i = a; i <= b; ++i) glued.push_back(i);
  }
  auto seq = locus_detail::coalesce(pts, glued, opt.tolerance);
  std::vector<Point2> seq_pts;
  for (std::size_t i : seq) seq_pts.push_back(pts[i]);

  for (Point2 c : locus_detail::interior_centers(hull, opt.random_centers, opt.seed)) {
    auto lift = lift_angles(c, seq_pts, opt.backward_tolerance);
    bool wraps = std::abs(lift.total) > 2.0 * std::numbers::pi + 1e-6;
    if (!lift.monotone || wraps) {
      report.cls = ConvexityClass::NonConvex;
      full();
      double lam = locus.lambdas[seq[lift.monotone ? seq.size() - 1 : lift.first_violation]];
      report.witness = Witness{"angle_reversal", {lam}, from_plane(c)};
      return report;
    }
  }

  for (auto [a, b] : runs) {
    report.segments.push_back({locus.lambdas[a], locus.lambdas[b]});
    report.segment_indices.push_back({a, b});
  }
  for (std::size_t k = 0; k < runs.size(); ++k) {
    std::size_t end = runs[k].second;
    std::size_t next = runs[(k + 1) % runs.size()].first;
    report.purple.push_back({locus.points[end], locus.points[next]});
  }

  if (!all_on) {
    report.cls = ConvexityClass::PiecewiseConvex;
    return report;
  }

  report.cls = ConvexityClass::StrictlyConvex;
  for (std::size_t k = 1; k + 1 < seq.size(); ++k) {
    Point2 u = seq_pts[k] - seq_pts[k - 1];
    Point2 v = seq_pts[k + 1] - seq_pts[k];
    if (std::abs(cross(u, v)) <= opt.collinear_tolerance * norm(u) * norm(v)) {
      report.cls = ConvexityClass::Convex;
      report.witness = Witness{"collinear",
                               {locus.lambdas[seq[k - 1]], locus.lambdas[seq[k + 1]], locus.lambdas[seq[k]]},
                               std::nullopt};
      break;
    }
  }
  return report;
}

inline nlohmann::json to_json(const ConvexityReport& r) {
  using nlohmann::json;
  json j;
  j["class"] = to_string(r.cls);
  j["segments"] = json::array();
  for (auto [a, b] : r.segments) j["segments"].push_back({a, b});
  j["purple"] = json::array();
  for (const auto& [p, q] : r.purple) j["purple"].push_back({p.components(), q.components()});
  if (r.witness) {
    json w{{"kind", r.witness->kind}, {"lambdas", r.witness->lambdas}};
    if (r.witness->center) w["center"] = r.witness->center->components();
    j["witness"] = w;
  } else {
    j["witness"] = nullptr;
  }
  j["max_inward_deviation"] = r.max_inward_deviation;
  j["tolerance"] = r.tolerance;
  return j;
}

// ---------------------------------------------------------------------------
// Hull membership

enum class HullSide { Interior, Boundary, Exterior };

struct HullMembership {
  HullSide side;
  double distance;  // depth for Interior, distance for Exterior
};

class LocusHull {
 public:
  explicit LocusHull(const SampledLocus& locus) : hull_(convex_hull(locus.plane_points())) {
    if (hull_.size() < 3) throw Error(ErrorKind::Degenerate, "degenerate (collinear) locus");
  }

  double signed_distance(const Chromaticity& p) const { return signed_hull_distance(hull_, to_plane(p)); }
  double signed_distance(Point2 p) const { return signed_hull_distance(hull_, p); }

  HullMembership classify(const Chromaticity& p) const {
    double d = signed_distance(p);
    if (std::abs(d) <= kBoundaryBand) return {HullSide::Boundary, std::abs(d)};
    return d > 0.0 ? HullMembership{HullSide::Interior, d} : HullMembership{HullSide::Exterior, -d};
  }

  const std::vector<Point2>& polygon() const { return hull_; }
  Point2 centroid() const { return polygon_centroid(hull_); }

 private:
  std::vector<Point2> hull_;
};

inline HullMembership hull_membership(const SampledLocus& locus, const Chromaticity& p) {
  return LocusHull(locus).classify(p);
}

// ---------------------------------------------------------------------------
// Half-plane preimage

/// {p in A : dot(normal, p) <= offset} in plane coordinates.
struct HalfPlane {
  Point2 normal;
  double offset = 0.0;
};

enum class PreimageKind { None, Full, Interval, Split };

struct Preimage {
  PreimageKind kind = PreimageKind::None;
  std::size_t first = 0;  // cyclic index interval [first, last]; first > last wraps
  std::size_t last = 0;
  double lambda_first = 0.0;
  double lambda_last = 0.0;
  std::size_t runs = 0;
};

inline Preimage half_plane_preimage(const SampledLocus& locus, const ConvexityReport& report, const HalfPlane& h) {
  if (!report.convex()) throw Error(ErrorKind::Geometry, "locus not classified convex");
  const auto pts = locus.plane_points();
  const std::size_t n = pts.size();
  const double scale = norm(h.normal);
  if (!(scale > 0.0)) throw Error(ErrorKind::InvalidInput, "half-plane normal is zero");
  std::vector<bool> in(n);
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    in[i] = dot(h.normal, pts[i]) / scale <= h.offset / scale + report.tolerance;
    count += in[i];
  }
  Preimage out;
  if (count == 0) return out;
  if (count == n) {
    out.kind = PreimageKind::Full;
    out.first = 0;
    out.last = n - 1;
    out.runs = 1;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      if (in[i] && !in[(i + n - 1) % n]) {
        if (out.runs == 0) out.first = i;
        ++out.runs;
      }
    }
    std::size_t j = out.first;
    while (in[(j + 1) % n]) j = (j + 1) % n;
    out.last = j;
    out.kind = out.runs == 1 ? PreimageKind::Interval : PreimageKind::Split;
  }
  out.lambda_first = locus.lambdas[out.first];
  out.lambda_last = locus.lambdas[out.last];
  return out;
}

// ---------------------------------------------------------------------------
// Torus parametrizations

struct TorusPiece {
  double t0, t1;
  double lambda0, lambda1;
};

class TorusParam {
 public:
  explicit TorusParam(std::vector<TorusPiece> pieces) : pieces_(std::move(pieces)) {
    if (pieces_.empty()) throw Error(ErrorKind::InvalidInput, "empty parametrization");
    for (std::size_t k = 0; k < pieces_.size(); ++k) {
      const auto& p = pieces_[k];
      if (!(p.t1 > p.t0) || !(p.lambda1 > p.lambda0)) {
        throw Error(ErrorKind::InvalidInput, "parametrization pieces must have positive length");
      }
      if (k > 0 && std::abs(p.t0 - pieces_[k - 1].t1) > 1e-9 * (1.0 + std::abs(p.t0))) {
        throw Error(ErrorKind::InvalidInput, "parametrization pieces must be contiguous in t");
      }
    }
    if (std::abs(pieces_.front().t0) > 0.0) throw Error(ErrorKind::InvalidInput, "parametrization starts at t = 0");
  }

  double total_width() const { return pieces_.back().t1; }
  const std::vector<TorusPiece>& pieces() const { return pieces_; }

  std::vector<double> breakpoints() const {
    std::vector<double> b;
    for (const auto& p : pieces_) b.push_back(p.t0);
    return b;
  }

  /// t taken modulo the width.
  double forward(double t) const {
    double w = total_width();
    t = std::fmod(t, w);
    if (t < 0.0) t += w;
    return forward_clamped(t);
  }

  /// t clamped to [0, width]; t = width maps to the last lambda.
  double forward_clamped(double t) const {
    t = std::clamp(t, 0.0, total_width());
    auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t, [](double v, const TorusPiece& p) { return v < p.t0; });
    const auto& p = it == pieces_.begin() ? pieces_.front() : *(it - 1);
    double u = std::min(1.0, (t - p.t0) / (p.t1 - p.t0));
    return p.lambda0 + u * (p.lambda1 - p.lambda0);
  }

  /// Glued coordinate of lambda, if lambda lies in some piece.
  std::optional<double> inverse(double lambda, double slack = 1e-9) const {
    for (const auto& p : pieces_) {
      if (lambda >= p.lambda0 - slack && lambda <= p.lambda1 + slack) {
        double u = std::clamp((lambda - p.lambda0) / (p.lambda1 - p.lambda0), 0.0, 1.0);
        return p.t0 + u * (p.t1 - p.t0);
      }
    }
    return std::nullopt;
  }

  bool covers(double lambda, double slack = 1e-9) const { return inverse(lambda, slack).has_value(); }

 private:
  std::vector<TorusPiece> pieces_;
};

/// Concatenates the report's segments; lambda_{2k} ~ lambda_{2k+1}.
inline TorusParam glue_segments(const ConvexityReport& report) {
  if (report.cls == ConvexityClass::NonConvex) throw Error(ErrorKind::Geometry, "cannot glue a non-convex locus");
  std::vector<TorusPiece> pieces;
  double t = 0.0;
  for (auto [a, b] : report.segments) {
    pieces.push_back({t, t + (b - a), a, b});
    t += b - a;
  }
  return TorusParam(std::move(pieces));
}

inline TorusParam glue_segments(const SampledLocus&, const ConvexityReport& report) { return glue_segments(report); }

inline TorusParam identity_param(double lambda_min, double lambda_max) {
  return TorusParam({{0.0, lambda_max - lambda_min, lambda_min, lambda_max}});
}

/// Points of the locus that lie in the parametrization's pieces.
inline SampledLocus restrict_locus(const SampledLocus& locus, const TorusParam& param) {
  std::vector<double> l;
  std::vector<Chromaticity> p;
  for (std::size_t i = 0; i < locus.size(); ++i) {
    if (param.covers(locus.lambdas[i])) {
      l.push_back(locus.lambdas[i]);
      p.push_back(locus.points[i]);
    }
  }
  return SampledLocus(std::move(l), std::move(p));
}

/// Arc-length parametrization scaled to the locus' lambda range.
inline TorusParam constant_speed_reparam(const SampledLocus& locus) {
  const auto pts = locus.plane_points();
  double total = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) total += distance(pts[i], pts[i - 1]);
  if (!(total > 0.0)) throw Error(ErrorKind::Degenerate, "zero-length locus");
  const double width = locus.lambdas.back() - locus.lambdas.front();
  std::vector<TorusPiece> pieces;
  double t = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    double len = distance(pts[i], pts[i - 1]);
    if (len <= 1e-15 * total) continue;
    double dt = width * len / total;
    pieces.push_back({t, t + dt, locus.lambdas[i - 1], locus.lambdas[i]});
    t += dt;
  }
  pieces.back().t1 = width;
  return TorusParam(std::move(pieces));
}

/// Resamples the locus polyline at n uniform glued coordinates.
inline SampledLocus reparametrize(const SampledLocus& locus, const TorusParam& param, std::size_t n) {
  std::vector<double> l;
  std::vector<Chromaticity> p;
  double prev = -INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    double t = param.total_width() * double(i) / double(n - 1);
    double lam = param.forward_clamped(t);
    if (!(lam > prev)) continue;
    prev = lam;
    l.push_back(lam);
    p.push_back(from_plane(locus.plane_at(lam)));
  }
  return SampledLocus(std::move(l), std::move(p));
}

/// Locus polyline plus the closing purple segment, as a closed loop.
inline std::vector<Point2> closed_locus(const SampledLocus& locus) { return locus.plane_points(); }

}  // namespace spectra
