#include <catch_amalgamated.hpp>

#include <random>

#include "spectra/models.hpp"

using namespace spectra;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("parameter validation", "[models]") {
  CHECK_THROWS_AS(validate(VonMisesParams{-1.0, 0.0, 0.0, 1.0}), Error);
  CHECK_THROWS_AS(validate(VonMisesParams{1.0, 0.0, 0.0, 0.0}), Error);
  CHECK_THROWS_AS(validate(VonMisesParams{NAN, 0.0, 0.0, 1.0}), Error);
  CHECK_THROWS_AS(validate(StepParams{0.2, 0.0}), Error);
  CHECK_THROWS_AS(validate(StepParams{0.2, 1.5}), Error);
  CHECK_NOTHROW(validate(StepParams{0.2, 1.0}));
  BandedParams overlap{{{{0.0, 2.0}}, {{1.0, 3.0}}}, {1.0, 1.0}};
  CHECK_THROWS_AS(validate(overlap), Error);
  CHECK_THROWS_AS(validate_shape({0.0, 1.0, 1.0, 0.0}), Error);
  CHECK_NOTHROW(validate_shape({0.0, 0.5, 1.0, 0.5}));
}

TEST_CASE("pointwise evaluation", "[models]") {
  VonMisesParams p{2.0, -1.0, 0.25, 1.0};
  CHECK_THAT(eval_model(p, 0.25), WithinRel(std::exp(1.0), 1e-15));
  CHECK_THAT(eval_model(p, 0.75), WithinRel(std::exp(-3.0), 1e-15));
  CHECK_THAT(eval_model(p, 1.25), WithinRel(eval_model(p, 0.25), 1e-14));

  StepParams st{0.9, 0.2};  // wraps: [0.9, 1.1)
  CHECK(eval_model(st, 0.95) == 1.0);
  CHECK(eval_model(st, 0.05) == 1.0);
  CHECK(eval_model(st, 0.5) == 0.0);

  BandedParams b{{{{400.0, 450.0}, {600.0, 650.0}}, {{500.0, 550.0}}}, {2.0, 3.0}};
  CHECK(eval_model(b, 420.0) == 2.0);
  CHECK(eval_model(b, 620.0) == 2.0);
  CHECK(eval_model(b, 510.0) == 3.0);
  CHECK(eval_model(b, 580.0) == 0.0);

  GaussianParams g{-2.0, 1.0, 0.5};
  CHECK_THAT(eval_model(g, 1.0), WithinRel(std::exp(-0.5), 1e-15));
}

TEST_CASE("von Mises products are von Mises", "[models][closure]") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    VonMisesParams p{3.0 * u(rng), u(rng) - 0.5, u(rng), 1.0};
    VonMisesParams q{3.0 * u(rng), u(rng) - 0.5, u(rng), 1.0};
    auto r = multiply_von_mises(p, q);
    for (double x = 0.0; x < 1.0; x += 0.01) {
      CHECK_THAT(eval_model(r, x), WithinRel(eval_model(p, x) * eval_model(q, x), 1e-12));
    }
  }
  VonMisesParams p{1.0, 0.0, 0.0, 1.0};
  VonMisesParams q{1.0, 0.0, 0.5, 1.0};
  auto flat = multiply_von_mises(p, q);
  CHECK_THAT(flat.a, WithinAbs(0.0, 1e-15));
  VonMisesParams other{1.0, 0.0, 0.0, 2.0};
  CHECK_THROWS_AS(multiply_von_mises(p, other), Error);
}

TEST_CASE("positive scaling shifts the offset", "[models]") {
  auto p = scale_model(VonMisesParams{2.0, 0.5, 0.1, 1.0}, 0.7);
  CHECK_THAT(p.b, WithinAbs(1.2, 1e-15));
  auto b = scale_model(BandedParams{{{{0.0, 1.0}}}, {2.0}}, std::log(3.0));
  CHECK_THAT(b.values[0], WithinRel(6.0, 1e-12));
}

TEST_CASE("Gaussian limit coefficients", "[models][gauss]") {
  SECTION("zero amplitude is exactly log-quadratic") {
    auto g = gaussian_limit_coeffs({0.0, 0.3, 0.0, 10.0}, 0.0, 1.0);
    CHECK(g.sup_gap == 0.0);
    CHECK(g.coeffs.alpha == 0.0);
    CHECK_THAT(g.coeffs.gamma, WithinAbs(0.3, 1e-15));
  }
  SECTION("second-order match at the expansion point") {
    VonMisesParams p{1.0, 0.0, 0.3, 8.0};
    auto g = gaussian_limit_coeffs(p, 0.0, 1.0);
    const double A = kTwoPi / 8.0;
    CHECK_THAT(g.coeffs.alpha, WithinAbs(-0.5 * A * A * std::cos(A * 0.3), 1e-15));
    CHECK_THAT(g.coeffs.gamma, WithinAbs(std::cos(A * 0.3), 1e-15));
    CHECK_THAT(eval_model(g.coeffs, 0.0), WithinRel(eval_model(p, 0.0), 1e-14));
  }
  SECTION("cubic rate in the period") {
    VonMisesParams p{1.0, 0.0, 1.3, 16.0};
    auto g16 = gaussian_limit_coeffs(p, 0.0, 1.0).sup_gap;
    p.width = 32.0;
    p.s = 2.6;
    auto g32 = gaussian_limit_coeffs(p, 0.0, 1.0).sup_gap;
    CHECK(g16 / g32 > 6.0);
    CHECK(g16 / g32 < 10.0);
  }
}

TEST_CASE("sign changes of distinct normalized densities", "[models][sign]") {
  const std::size_t n = 400;
  std::vector<double> w(n, 1.0 / n);
  auto density = [&](double a, double s) {
    double z = 0.0;
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) {
      f[i] = std::exp(a * std::cos(kTwoPi * (double(i) / n - s)));
      z += w[i] * f[i];
    }
    for (double& v : f) v /= z;
    return f;
  };
  auto f = density(2.0, 0.1);
  auto g = density(1.0, 0.6);
  auto pat = count_sign_changes(f, g, w);
  REQUIRE(std::holds_alternative<TwiceCyclic>(pat));
  auto tc = std::get<TwiceCyclic>(pat);
  // f - g >= 0 on an arc around the peak of f at 0.1
  CHECK((tc.first > tc.last || (tc.first <= 40 && tc.last >= 40)));
  CHECK_THROWS_AS(count_sign_changes(f, f, w), Error);
  std::vector<double> unnormalized(n, 2.0);
  CHECK_THROWS_AS(count_sign_changes(unnormalized, g, w), Error);

  // an even perturbation with four crossings is not twice-cyclic
  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = 1.0 + 0.5 * std::cos(2.0 * kTwoPi * double(i) / n);
  std::vector<double> one(n, 1.0);
  auto other = count_sign_changes(h, one, w);
  REQUIRE(std::holds_alternative<OtherSignPattern>(other));
  CHECK(std::get<OtherSignPattern>(other).count == 4);
}

TEST_CASE("model json round trip", "[models][json]") {
  std::vector<ModelParams> models{VonMisesParams{1.5, -0.25, 510.0, 300.0},
                                  StepParams{0.25, 0.5},
                                  GaussianParams{-1.0, 2.0, 3.0},
                                  BandedParams{{{{400.0, 420.0}}, {{500.0, 510.0}, {600.0, 610.0}}}, {1.0, 2.0}},
                                  LogLinearParams{{0.1, 0.2, 0.3}, "cosine"}};
  for (const auto& m : models) {
    auto j = to_json(m);
    auto back = model_from_json(nlohmann::json::parse(j.dump()));
    CHECK(to_json(back) == j);
  }
  CHECK_THROWS_AS(model_from_json(nlohmann::json{{"type", "nonsense"}}), Error);
}
