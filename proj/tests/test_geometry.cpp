#include <catch_amalgamated.hpp>

#include <numbers>

#include "spectra/geometry.hpp"

using namespace spectra;
using Catch::Matchers::WithinAbs;

TEST_CASE("plane coordinates round trip", "[plane]") {
  Chromaticity c({0.5, 0.2, 0.3});
  auto back = from_plane(to_plane(c));
  for (int k = 0; k < 3; ++k) CHECK_THAT(back[k], WithinAbs(c[k], 1e-15));
  auto p = to_plane(Chromaticity({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}));
  CHECK_THAT(norm(p), WithinAbs(0.0, 1e-15));
  // vertices of the simplex sit at distance sqrt(2/3)
  CHECK_THAT(norm(to_plane(Chromaticity({1.0, 0.0, 0.0}))), WithinAbs(std::sqrt(2.0 / 3.0), 1e-15));
}

TEST_CASE("hull of a square with interior points", "[hull]") {
  std::vector<Point2> pts{{0, 0}, {1, 0}, {0.5, 0.5}, {1, 1}, {0, 1}, {0.2, 0.7}, {0.5, 0}};
  auto h = convex_hull(pts);
  REQUIRE(h.size() == 4);
  CHECK_THAT(polygon_area(h), WithinAbs(1.0, 1e-15));
  auto c = polygon_centroid(h);
  CHECK_THAT(c.x, WithinAbs(0.5, 1e-15));
  CHECK_THAT(signed_hull_distance(h, {0.5, 0.25}), WithinAbs(0.25, 1e-15));
  CHECK_THAT(signed_hull_distance(h, {2.0, 0.5}), WithinAbs(-1.0, 1e-15));
  CHECK_THAT(signed_hull_distance(h, {1.0, 0.5}), WithinAbs(0.0, 1e-15));
}

TEST_CASE("convex clipping", "[hull]") {
  std::vector<Point2> a{{0, 0}, {2, 0}, {2, 2}, {0, 2}};
  std::vector<Point2> b{{1, 1}, {3, 1}, {3, 3}, {1, 3}};
  CHECK_THAT(polygon_area(clip_convex(a, b)), WithinAbs(1.0, 1e-15));
}

TEST_CASE("winding numbers", "[winding]") {
  std::vector<Point2> circle;
  for (int i = 0; i < 100; ++i) {
    double t = 2.0 * std::numbers::pi * i / 100.0;
    circle.push_back({std::cos(t), std::sin(t)});
  }
  CHECK(winding_number(circle, {0.1, -0.2}) == 1);
  CHECK(winding_number(circle, {2.0, 0.0}) == 0);
  std::vector<Point2> reversed(circle.rbegin(), circle.rend());
  CHECK(winding_number(reversed, {0.0, 0.0}) == -1);
  std::vector<Point2> twice = circle;
  twice.insert(twice.end(), circle.begin(), circle.end());
  CHECK(winding_number(twice, {0.0, 0.0}) == 2);
  CHECK_THROWS_AS(winding_number(circle, circle[3]), Error);
}

TEST_CASE("segment distance", "[hull]") {
  CHECK_THAT(segment_distance({0.5, 1.0}, {0, 0}, {1, 0}), WithinAbs(1.0, 1e-15));
  CHECK_THAT(segment_distance({2.0, 0.0}, {0, 0}, {1, 0}), WithinAbs(1.0, 1e-15));
}
