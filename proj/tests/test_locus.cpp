#include <catch_amalgamated.hpp>

#include <random>

#include "spectra/fixtures.hpp"
#include "spectra/locus.hpp"

using namespace spectra;
using Catch::Matchers::WithinAbs;

namespace {
Sensor cie() { return load_sensor_file(std::string(SPECTRA_DATA_DIR) + "/cie1931.csv"); }
}  // namespace

TEST_CASE("classification of synthetic loci", "[classify]") {
  CHECK(classify_convexity(fixtures::circle_locus()).cls == ConvexityClass::StrictlyConvex);
  CHECK(classify_convexity(sample_locus(fixtures::strictly_convex_sensor())).cls == ConvexityClass::StrictlyConvex);

  auto straight = classify_convexity(fixtures::straight_locus());
  CHECK(straight.cls == ConvexityClass::Convex);
  REQUIRE(straight.witness);
  CHECK(straight.witness->kind == "collinear");

  auto eight = classify_convexity(fixtures::figure_eight_locus());
  CHECK(eight.cls == ConvexityClass::NonConvex);
  CHECK(eight.witness.has_value());
}

TEST_CASE("dented locus splits into two convex arcs", "[classify]") {
  auto rep = classify_convexity(sample_locus(fixtures::d90_style_sensor()));
  REQUIRE(rep.cls == ConvexityClass::PiecewiseConvex);
  REQUIRE(rep.segments.size() == 2);
  CHECK(rep.segments.front().first == 400.0);
  CHECK(rep.segments.back().second == 700.0);
  CHECK(rep.segments[0].second < 550.0);
  CHECK(rep.segments[1].first > 550.0);
  CHECK(rep.max_inward_deviation > 0.01);
  CHECK(rep.purple.size() == 2);
}

TEST_CASE("CIE 1931 locus", "[classify][cie]") {
  auto rep = classify_convexity(sample_locus(cie()));
  CHECK(rep.convex());
  CHECK(rep.max_inward_deviation < rep.tolerance);
  // z-bar vanishes from 650 nm, so the red tail runs along a straight edge
  CHECK(rep.cls == ConvexityClass::Convex);
  REQUIRE(rep.witness);
  CHECK(rep.witness->kind == "collinear");
  for (double l : rep.witness->lambdas) CHECK(l >= 650.0);
  CHECK(rep.purple.size() == 1);

  ClassifyOptions strict;
  strict.tolerance = 1e-7;
  CHECK_FALSE(classify_convexity(sample_locus(cie()), strict).convex());
}

TEST_CASE("hull membership", "[hull]") {
  auto locus = sample_locus(cie());
  CHECK(hull_membership(locus, Chromaticity({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0})).side == HullSide::Interior);
  CHECK(hull_membership(locus, Chromaticity({0.8, 0.3, -0.1})).side == HullSide::Exterior);
  LocusHull hull(locus);
  CHECK(hull.classify(from_plane(hull.polygon()[3])).side == HullSide::Boundary);
}

TEST_CASE("half-plane preimages on a strictly convex locus are single arcs", "[preimage]") {
  auto locus = sample_locus(fixtures::strictly_convex_sensor());
  auto rep = classify_convexity(locus);
  auto pts = locus.plane_points();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    double th = 2.0 * std::numbers::pi * u(rng);
    Point2 n{std::cos(th), std::sin(th)};
    double lo = INFINITY, hi = -INFINITY;
    for (auto p : pts) {
      lo = std::min(lo, dot(n, p));
      hi = std::max(hi, dot(n, p));
    }
    auto pre = half_plane_preimage(locus, rep, {n, lo + (hi - lo) * (0.05 + 0.9 * u(rng))});
    CHECK(pre.kind == PreimageKind::Interval);
    CHECK(pre.runs == 1);
  }
  auto none = half_plane_preimage(locus, rep, {{1.0, 0.0}, -10.0});
  CHECK(none.kind == PreimageKind::None);
  auto full = half_plane_preimage(locus, rep, {{1.0, 0.0}, 10.0});
  CHECK(full.kind == PreimageKind::Full);
  auto dented = classify_convexity(sample_locus(fixtures::d90_style_sensor()));
  CHECK_THROWS_AS(half_plane_preimage(locus, dented, {{1.0, 0.0}, 0.0}), Error);
}

TEST_CASE("gluing convex arcs into a torus", "[glue]") {
  auto rep = classify_convexity(sample_locus(fixtures::d90_style_sensor()));
  auto g = glue_segments(rep);
  double expect = 0.0;
  for (auto [a, b] : rep.segments) expect += b - a;
  CHECK_THAT(g.total_width(), WithinAbs(expect, 1e-12));
  for (double t : {0.0, 10.5, 117.0, 118.0, 200.0}) {
    auto back = g.inverse(g.forward(t));
    REQUIRE(back);
    CHECK_THAT(*back, WithinAbs(t, 1e-9));
  }
  CHECK_THAT(g.forward(g.total_width() + 3.0), WithinAbs(g.forward(3.0), 1e-12));
  CHECK_FALSE(g.covers(550.0));
  auto eight = classify_convexity(fixtures::figure_eight_locus());
  CHECK_THROWS_AS(glue_segments(eight), Error);
}

TEST_CASE("glued arcs close into a curve winding once around the interior", "[glue][winding]") {
  auto locus = sample_locus(fixtures::d90_style_sensor());
  auto rep = classify_convexity(locus);
  auto arcs = restrict_locus(locus, glue_segments(rep));
  auto closed = closed_locus(arcs);
  LocusHull hull(locus);
  CHECK(std::abs(winding_number(closed, hull.centroid())) == 1);
}
