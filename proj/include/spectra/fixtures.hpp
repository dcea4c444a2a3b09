#pragma once

// Synthetic sensors and loci with known geometry.

#include <cmath>
#include <numbers>
#include <vector>

#include "spectra/geometry.hpp"
#include "spectra/locus.hpp"
#include "spectra/sensor.hpp"

namespace spectra::fixtures {

/// Elliptic locus sweeping 300 degrees around the equal-energy point, 400-700 nm.
/// `dent` pulls the middle of the arc inward by that fraction of the radius.
inline Sensor ellipse_sensor(double dent = 0.0, std::size_t samples = 301) {
  const double pi = std::numbers::pi;
  WavelengthGrid grid(400.0, 700.0, samples);
  std::vector<std::vector<double>> ch(3, std::vector<double>(samples));
  for (std::size_t i = 0; i < samples; ++i) {
    double u = double(i) / double(samples - 1);
    double theta = -pi / 3.0 + (5.0 * pi / 3.0) * (u + 0.1 * std::sin(2.0 * pi * u));
    double r = 1.0 - dent * std::exp(-std::pow((u - 0.5) / 0.06, 2.0));
    Point2 p{0.3 * r * std::cos(theta), 0.25 * r * std::sin(theta)};
    auto eta = from_plane(p);
    double w = 0.2 + std::sin(pi * u);
    for (int k = 0; k < 3; ++k) ch[k][i] = w * eta[k];
  }
  return Sensor(grid, std::move(ch));
}

inline Sensor strictly_convex_sensor() { return ellipse_sensor(0.0); }

/// Camera-style sensor whose locus has one inward dent.
inline Sensor d90_style_sensor() { return ellipse_sensor(0.25); }

/// Two shifted triangles on 400-700 nm.
inline Sensor two_channel_sensor(std::size_t samples = 301) {
  WavelengthGrid grid(400.0, 700.0, samples);
  std::vector<std::vector<double>> ch(2, std::vector<double>(samples));
  for (std::size_t i = 0; i < samples; ++i) {
    double l = grid[i];
    ch[0][i] = std::max(0.0, 1.0 - std::abs(l - 480.0) / 200.0);
    ch[1][i] = std::max(0.0, 1.0 - std::abs(l - 620.0) / 200.0);
  }
  return Sensor(grid, std::move(ch));
}

/// Cosine-weighted channels whose channel sum is constant on [0, 1].
inline Sensor flat_sum_sensor(std::size_t samples = 2001) {
  WavelengthGrid grid(0.0, 1.0, samples);
  std::vector<std::vector<double>> ch(3, std::vector<double>(samples));
  for (std::size_t i = 0; i < samples; ++i) {
    double x = grid[i];
    for (int k = 0; k < 3; ++k) {
      ch[k][i] = (1.0 + 0.5 * std::cos(2.0 * std::numbers::pi * (x - double(k) / 3.0))) / 3.0;
    }
  }
  return Sensor(grid, std::move(ch));
}

inline SampledLocus polyline_locus(const std::vector<Point2>& pts) {
  std::vector<double> l;
  std::vector<Chromaticity> c;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    l.push_back(400.0 + 300.0 * double(i) / double(pts.size() - 1));
    c.push_back(from_plane(pts[i]));
  }
  return SampledLocus(std::move(l), std::move(c));
}

/// Two straight edges of a triangle.
inline SampledLocus straight_locus(std::size_t per_edge = 64) {
  Point2 a{-0.25, -0.2}, b{0.3, -0.1}, c{0.0, 0.3};
  std::vector<Point2> pts;
  for (std::size_t i = 0; i < per_edge; ++i) pts.push_back(a + (b - a) * (double(i) / double(per_edge)));
  for (std::size_t i = 0; i <= per_edge; ++i) pts.push_back(b + (c - b) * (double(i) / double(per_edge)));
  return polyline_locus(pts);
}

inline SampledLocus figure_eight_locus(std::size_t n = 200) {
  std::vector<Point2> pts;
  for (std::size_t i = 0; i < n; ++i) {
    double u = 2.0 * std::numbers::pi * double(i) / double(n);
    pts.push_back({0.25 * std::sin(u), 0.12 * std::sin(2.0 * u)});
  }
  return polyline_locus(pts);
}

inline SampledLocus circle_locus(std::size_t n = 128, double r = 0.2) {
  std::vector<Point2> pts;
  for (std::size_t i = 0; i < n; ++i) {
    double u = 2.0 * std::numbers::pi * double(i) / double(n);
    pts.push_back({r * std::cos(u), r * std::sin(u)});
  }
  return polyline_locus(pts);
}

}  // namespace spectra::fixtures
