#include <catch_amalgamated.hpp>

#include "spectra/analysis.hpp"
#include "spectra/fixtures.hpp"

using namespace spectra;
using Catch::Matchers::WithinAbs;

TEST_CASE("closure verdicts", "[analysis][closure]") {
  auto rows = closure_report(60);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].add == Verdict::Pass);
  CHECK(rows[0].mult == Verdict::Pass);
  CHECK(rows[1].add == Verdict::Fail);
  CHECK(rows[1].mult == Verdict::Pass);
  CHECK(rows[2].add == Verdict::Pass);
  CHECK(rows[2].mult == Verdict::Fail);
  CHECK(von_mises_product_error(50) <= 1e-12);
  CHECK(closure_csv(rows) == closure_csv(closure_report(60)));
}

TEST_CASE("Gaussian convergence table", "[analysis][gauss]") {
  auto zero = gaussian_convergence(0.0, {4, 8, 16});
  for (const auto& r : zero.rows) CHECK(r.sup_gap == 0.0);
  auto t = gaussian_convergence(1.0, {4, 8, 16});
  REQUIRE(t.rows.size() == 3);
  CHECK(std::isnan(t.rows[0].ratio));
  CHECK(t.rows[1].sup_gap < t.rows[0].sup_gap);
  CHECK(t.rows[2].ratio <= 0.2);
  CHECK(convergence_csv(t).rfind("width,sup_gap,ratio\n4,", 0) == 0);
  CHECK_THROWS_AS(gaussian_convergence(1.0, {0.5, 8}), Error);
  CHECK_THROWS_AS(gaussian_convergence(1.0, {8, 4}), Error);
}

TEST_CASE("coverage on a strictly convex fixture", "[analysis][coverage]") {
  auto s = fixtures::strictly_convex_sensor();
  auto ref = Density::constant(s.grid());
  for (auto model : {CoverageModel::VonMises, CoverageModel::Step}) {
    auto rep = coverage_map(s, ref, model, 24);
    CHECK(rep.n_solved + rep.failures.size() == rep.n_targets);
    CHECK(rep.n_solved == rep.n_targets);
    CHECK(rep.max_residual <= 1e-8);
    for (const auto& c : rep.heatmap) CHECK(c.verified_residual <= 1e-8);
  }
  CHECK_THROWS_AS(coverage_map(s, ref, CoverageModel::VonMises, 8), Error);
}

TEST_CASE("coverage is deterministic across thread counts", "[analysis][coverage]") {
  auto s = fixtures::strictly_convex_sensor();
  auto ref = Density::constant(s.grid());
  CoverageOptions one, three;
  three.threads = 3;
  auto a = coverage_map(s, ref, CoverageModel::VonMises, 16, one);
  auto b = coverage_map(s, ref, CoverageModel::VonMises, 16, three);
  CHECK(heatmap_csv(a) == heatmap_csv(b));
  CHECK(to_json(a).dump() == to_json(b).dump());
}

TEST_CASE("gluing is needed on a dented locus", "[analysis][coverage][glue]") {
  auto s = fixtures::d90_style_sensor();
  auto ref = Density::constant(s.grid());
  CoverageOptions glued;
  glued.gluing = glue_segments(classify_convexity(sample_locus(s)));
  auto with = coverage_map(s, ref, CoverageModel::VonMises, 48, glued);
  auto without = coverage_map(s, ref, CoverageModel::VonMises, 48);
  CHECK(with.n_solved == with.n_targets);
  CHECK(without.n_solved < without.n_targets);
  // the unglued failures sit beside the dent, between the two arcs
  LocusHull hull(sample_locus(s));
  auto dent = to_plane(normalized_response(s, 550.0));
  for (const auto& f : without.failures) CHECK(distance(to_plane(f.target), dent) < 0.15);
}

TEST_CASE("log-linear families on CIE", "[analysis][coverage][loglinear]") {
  auto s = load_sensor_file(std::string(SPECTRA_DATA_DIR) + "/cie1931.csv");
  auto ref = Density::constant(s.grid());
  auto rep = coverage_map(s, ref, CoverageModel::Gaussian, 16);
  CHECK(rep.n_solved == rep.n_targets);
  auto csv = heatmap_csv(rep);
  CHECK(csv.rfind("row,col,solved,s,a,residual\n", 0) == 0);
}

TEST_CASE("locus csv", "[analysis]") {
  auto csv = locus_csv(fixtures::circle_locus());
  CHECK(csv.rfind("wavelength,eta0,eta1,eta2\n400,", 0) == 0);
}
