#include <catch_amalgamated.hpp>

#include "spectra/fixtures.hpp"
#include "spectra/measure.hpp"

using namespace spectra;
using Catch::Matchers::WithinAbs;

namespace {
Sensor cie() { return load_sensor_file(std::string(SPECTRA_DATA_DIR) + "/cie1931.csv"); }
}  // namespace

TEST_CASE("normalization against the Bessel integral", "[measure][oracle]") {
  auto s = fixtures::flat_sum_sensor();
  auto ref = Density::constant(s.grid());
  auto torus = full_support(s);
  for (double a : {0.0, 0.5, 1.0, 3.0, 10.0}) {
    for (double shift : {0.0, 0.3}) {
      double b = normalization_b(s, ref, a, shift, torus, Kernel{});
      CHECK_THAT(b, WithinAbs(-std::log(std::cyl_bessel_i(0.0, a)), 1e-8));
    }
  }
}

TEST_CASE("trapezoid self-convergence is second order", "[measure][quadrature]") {
  std::vector<std::vector<double>> colors;
  for (std::size_t n : {76, 151, 301, 601}) {
    auto s = fixtures::ellipse_sensor(0.0, n);
    std::vector<double> f(s.grid().size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::exp(-std::pow((s.grid()[i] - 510.0) / 70.0, 2.0));
    colors.push_back(color_of_density(s, Density::constant(s.grid()), f).components);
  }
  for (std::size_t r = 0; r + 2 < colors.size(); ++r) {
    for (int k = 0; k < 3; ++k) {
      double ratio = (colors[r][k] - colors[r + 1][k]) / (colors[r + 1][k] - colors[r + 2][k]);
      CHECK(ratio >= 3.5);
      CHECK(ratio <= 4.5);
    }
  }
}

TEST_CASE("glued measure basics", "[measure]") {
  auto s = cie();
  auto ref = Density::constant(s.grid());
  GluedMeasure m(s, ref, full_support(s));
  double total = 0.0;
  for (double w : m.weights()) total += w;
  CHECK_THAT(total, WithinAbs(1.0, 1e-12));
  CHECK(m.width() == 470.0);
  CHECK(m.amplitude_limit() == Catch::Approx(kLogUnderflow / (1.0 - std::cos(kTwoPi / 470.0))));

  auto white = m.white();
  auto wp = white_point(s, ref);
  for (int k = 0; k < 3; ++k) CHECK_THAT(white[k], WithinAbs(wp[k], 1e-13));
  auto sw = m.step_white();
  for (int k = 0; k < 3; ++k) CHECK_THAT(sw[k], WithinAbs(wp[k], 1e-13));
}

TEST_CASE("step forward map matches direct integration", "[measure][step]") {
  auto s = fixtures::d90_style_sensor();
  auto ref = Density::constant(s.grid());
  for (bool glued : {false, true}) {
    auto torus = glued ? glue_segments(classify_convexity(sample_locus(s))) : full_support(s);
    GluedMeasure m(s, ref, torus);
    for (double su : {0.0, 0.137, 0.5, 0.91}) {
      for (double delta : {0.003, 0.1, 0.45, 0.99}) {
        auto fast = m.forward_step(su, delta);
        auto direct = m.forward_step_direct(su, delta);
        auto c = chromaticity(Color{direct});
        for (int k = 0; k < 3; ++k) CHECK_THAT(fast[k], WithinAbs(c[k], 1e-12));
      }
    }
    CHECK_THAT(m.window_mass(0.3, 1.0), WithinAbs(1.0, 1e-12));
    CHECK_THAT(m.window_mass(0.3, 0.25) + m.window_mass(0.55, 0.75), WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("forward kernel matches the sampled density", "[measure]") {
  auto s = fixtures::strictly_convex_sensor();
  auto ref = Density::constant(s.grid());
  auto torus = full_support(s);
  GluedMeasure m(s, ref, torus);
  for (double a : {0.5, 5.0, 200.0}) {
    double sv = 455.0;
    auto c = m.forward_kernel(Kernel{}, a, sv);
    std::vector<double> f(s.grid().size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      f[i] = std::exp(a * std::cos(kTwoPi * (s.grid()[i] - s.grid().lambda_min() - sv) / m.width()));
    }
    auto direct = chromaticity(color_of_density(s, ref, f));
    for (int k = 0; k < 3; ++k) CHECK_THAT(c[k], WithinAbs(direct[k], 1e-12));
  }
}

TEST_CASE("normalization beyond the grid resolution", "[measure]") {
  auto s = cie();
  GluedMeasure m(s, Density::constant(s.grid()), full_support(s));
  CHECK_NOTHROW(normalization_b(m, 0.5 * m.amplitude_limit(), 100.0));
  try {
    normalization_b(m, 1e3 * m.amplitude_limit(), 100.3);
    FAIL("no resolution error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Resolution);
  }
}
