// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "spectra/analysis.hpp"
#include "spectra/fixtures.hpp"

using namespace spectra;

namespace {

int failed = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("[%s] %d %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failed;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Sensor cie() { return load_sensor_file(std::string(SPECTRA_DATA_DIR) + "/cie1931.csv"); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void coverage_cie() {
  auto s = cie();
  auto t0 = std::chrono::steady_clock::now();
  auto rep = coverage_map(s, Density::constant(s.grid()), CoverageModel::VonMises, 64);
  double t = seconds_since(t0);
  bool ok = rep.n_solved == rep.n_targets && rep.n_targets > 0 && rep.max_residual <= 1e-8 && t <= 60.0;
  report(1, "coverage", ok,
         fmt("%.0f/%.0f solved, max residual %.3g, %.1f s", double(rep.n_solved), double(rep.n_targets),
             rep.max_residual, t));
}

void piecewise_coverage() {
  auto s = fixtures::d90_style_sensor();
  auto ref = Density::constant(s.grid());
  auto cls = classify_convexity(sample_locus(s));
  CoverageOptions glued;
  glued.gluing = glue_segments(cls);
  auto with = coverage_map(s, ref, CoverageModel::VonMises, 64, glued);
  auto without = coverage_map(s, ref, CoverageModel::VonMises, 64);
  bool ok = cls.cls == ConvexityClass::PiecewiseConvex && without.n_solved < without.n_targets &&
            with.n_solved == with.n_targets && with.max_residual <= 1e-8;
  report(2, "piecewise coverage", ok,
         fmt("unglued %.0f failures, glued %.0f/%.0f solved, max residual %.3g", double(without.failures.size()),
             double(with.n_solved), double(with.n_targets), with.max_residual));
}

void bijectivity() {
  auto s = fixtures::strictly_convex_sensor();
  auto ref = Density::constant(s.grid());
  auto gluing = full_support(s);
  ModelInverter inv(s, ref, gluing, ModelKind::VonMises);
  const double W = gluing.total_width();
  double worst_image = 0.0;
  double worst_param = 0.0;
  std::size_t unsolved = 0;
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 20; ++j) {
      double sv = s.grid().lambda_min() + W * i / 40.0;
      double a = 0.5 * std::pow(100.0, j / 19.0);
      VonMisesParams p{a, 0.0, sv, W};
      p.b = normalization_b(inv.measure(), a, sv);
      auto target = chromaticity(color_of_density(s, ref, sample_on_grid(s, gluing, p)));
      auto r = inv.invert({target, 1e-8, 200});
      if (!r.solved()) {
        ++unsolved;
        continue;
      }
      auto q = std::get<VonMisesParams>(*r.params);
      auto back = chromaticity(color_of_density(s, ref, sample_on_grid(s, gluing, q)));
      worst_image = std::max(worst_image, l1_distance(back, target));
      double ds = std::abs(std::remainder(q.s - sv, W)) / W;
      worst_param = std::max({worst_param, ds, std::abs(q.a - a) / a});
    }
  }
  bool ok = unsolved == 0 && worst_image <= 1e-8 && worst_param <= 1e-5;
  report(3, "bijectivity", ok,
         fmt("%.0f unsolved of 800, image mismatch %.3g, parameter mismatch %.3g", double(unsolved), worst_image,
             worst_param));
}

bool disjoint(const BandedParams& b) {
  std::vector<Interval> all;
  for (const auto& band : b.bands) all.insert(all.end(), band.begin(), band.end());
  std::sort(all.begin(), all.end(), [](Interval x, Interval y) { return x.lo < y.lo; });
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (all[i].lo < all[i - 1].hi) return false;
  }
  return true;
}

void banded() {
  auto s = cie();
  auto ref = Density::constant(s.grid());
  auto locus = sample_locus(s);
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> pick(0, locus.size() - 1);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::size_t bad_sets = 0;
  double worst = 0.0;
  int errors = 0;
  for (int m = 0; m < 20; ++m) {
    std::vector<Chromaticity> cols;
    for (int k = 0; k < 3; ++k) {
      // chords of the locus; every fifth column sits on the locus itself
      Point2 a = to_plane(locus.points[pick(rng)]);
      Point2 b = to_plane(locus.points[pick(rng)]);
      Point2 c = to_plane(locus.points[pick(rng)]);
      double r1 = u01(rng), r2 = u01(rng);
      if ((3 * m + k) % 5 == 0) r1 = r2 = 0.0;
      Point2 p = a * (1.0 - r1) + (b * (1.0 - r2) + c * r2) * r1;
      cols.push_back(from_plane(p));
    }
    try {
      auto con = banded_from_matrix(s, ref, cols, 0.01);
      if (!disjoint(con.sets)) ++bad_sets;
      for (double e : con.errors) worst = std::max(worst, e);
    } catch (const Error&) {
      ++errors;
    }
  }
  LocusHull hull(locus);
  auto poly = hull.polygon();
  Point2 e0 = poly[0], e1 = poly[1];
  Point2 mid = (e0 + e1) * 0.5;
  Point2 dir = e1 - e0;
  Point2 out{dir.y, -dir.x};
  out = out * (1.0 / norm(out));
  if (hull.signed_distance(from_plane(mid + out * 0.01)) > 0.0) out = out * -1.0;
  auto far = from_plane(mid + out * 0.05);
  bool rejected = false;
  std::string msg;
  try {
    banded_from_matrix(s, ref, {white_point(s, ref), far}, 0.01);
  } catch (const Error& e) {
    msg = e.what();
    rejected = e.kind() == ErrorKind::OutsideCone && msg.find("at least that far") != std::string::npos;
  }
  bool ok = errors == 0 && bad_sets == 0 && worst <= 0.01 && rejected;
  report(4, "banded construction", ok,
         fmt("20 matrices, %.0f errors, %.0f overlapping, max achieved error %.3g, outside column ", double(errors),
             double(bad_sets), worst) +
             (rejected ? "rejected (" + msg + ")" : "not rejected"));
}

void closure() {
  auto band = closure_residual(BandedFamily{}, 100);
  auto vm = closure_residual(VonMisesFamily{}, 100);
  auto lin = closure_residual(GaussianBasisFamily{}, 100);
  double phasor = von_mises_product_error(100);
  bool ok = band.sum.max <= 1e-10 && band.product.max <= 1e-10 && phasor <= 1e-12 && vm.sum.median >= 1e-3 &&
            verdict(lin.sum) == Verdict::Pass && verdict(lin.product) == Verdict::Fail;
  report(5, "closure", ok,
         fmt("banded add %.3g mult %.3g; von Mises phasor %.3g add median %.3g", band.sum.max, band.product.max,
             phasor, vm.sum.median) +
             fmt("; linear add %.3g mult median %.3g", lin.sum.max, lin.product.median));
}

void gaussian_limit() {
  auto t1 = gaussian_convergence(1.0, {4, 8, 16, 32}, 0.0, 1.0);
  auto t2 = gaussian_convergence(1.0, {4, 8, 16, 32}, 0.0, 1.0);
  bool ok = convergence_csv(t1) == convergence_csv(t2);
  double worst_ratio = 0.0;
  for (std::size_t i = 1; i < t1.rows.size(); ++i) {
    ok = ok && t1.rows[i].sup_gap < t1.rows[i - 1].sup_gap && t1.rows[i].ratio <= 0.2;
    worst_ratio = std::max(worst_ratio, t1.rows[i].ratio);
  }
  report(6, "gaussian limit", ok,
         fmt("gaps %.3g %.3g %.3g %.3g", t1.rows[0].sup_gap, t1.rows[1].sup_gap, t1.rows[2].sup_gap,
             t1.rows[3].sup_gap) +
             fmt(", worst ratio %.3g, reproducible ", worst_ratio) +
             (convergence_csv(t1) == convergence_csv(t2) ? "yes" : "no"));
}

void geometry() {
  auto s = cie();
  auto ref = Density::constant(s.grid());
  LocusHull hull(sample_locus(s));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double worst = INFINITY;
  for (int k = 0; k < 1000; ++k) {
    std::vector<double> f(s.grid().size());
    int mode = k % 3;
    double c = s.grid().lambda_min() + u01(rng) * (s.grid().lambda_max() - s.grid().lambda_min());
    double w = 1.0 + 100.0 * u01(rng);
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (mode == 0) f[i] = u01(rng);
      else if (mode == 1) f[i] = std::exp(-std::pow((s.grid()[i] - c) / w, 2.0));
      else f[i] = std::abs(s.grid()[i] - c) < w ? 1.0 : 0.0;
    }
    if (std::all_of(f.begin(), f.end(), [](double v) { return v == 0.0; })) f[f.size() / 2] = 1.0;
    worst = std::min(worst, hull.signed_distance(chromaticity(color_of_density(s, ref, f))));
  }

  auto convex = sample_locus(fixtures::strictly_convex_sensor());
  auto crep = classify_convexity(convex);
  auto pts = convex.plane_points();
  int single = 0;
  for (int k = 0; k < 100; ++k) {
    double th = 2.0 * std::numbers::pi * u01(rng);
    Point2 nrm{std::cos(th), std::sin(th)};
    double lo = INFINITY, hi = -INFINITY;
    for (auto p : pts) {
      lo = std::min(lo, dot(nrm, p));
      hi = std::max(hi, dot(nrm, p));
    }
    auto pre = half_plane_preimage(convex, crep, {nrm, lo + (hi - lo) * (0.05 + 0.9 * u01(rng))});
    single += pre.kind == PreimageKind::Interval && pre.runs == 1;
  }

  auto cie_rep = classify_convexity(sample_locus(s));
  auto d90_rep = classify_convexity(sample_locus(fixtures::d90_style_sensor()));
  bool ok = worst >= -1e-9 && single == 100 && cie_rep.cls == ConvexityClass::StrictlyConvex &&
            d90_rep.cls == ConvexityClass::PiecewiseConvex;
  std::string witness;
  if (cie_rep.witness) {
    witness = " (" + cie_rep.witness->kind;
    for (double l : cie_rep.witness->lambdas) witness += " " + format_double(l);
    witness += ")";
  }
  report(7, "geometry", ok,
         fmt("min hull depth %.3g over 1000 densities, %.0f/100 single-interval preimages, ", worst, double(single)) +
             "CIE " + to_string(cie_rep.cls) + witness + ", d90-style " + to_string(d90_rep.cls));
}

void sign_changes() {
  auto s = fixtures::strictly_convex_sensor();
  auto ref = Density::constant(s.grid());
  auto gluing = full_support(s);
  GluedMeasure m(s, ref, gluing);
  const double W = m.width();
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  int twice = 0;
  double min_gap = INFINITY;
  auto vm_density = [&](double a, double sv) {
    double b = normalization_b(m, a, sv);
    std::vector<double> f(m.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::exp(a * std::cos(kTwoPi * (m.t()[i] - sv) / W) + b);
    return f;
  };
  auto step_density = [&](double su, double delta) {
    std::vector<double> f(m.size());
    double mass = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      f[i] = step_contains({su, delta}, m.t()[i] / W) ? 1.0 : 0.0;
      mass += m.weights()[i] * f[i];
    }
    for (double& v : f) v /= mass;
    return f;
  };
  auto image = [&](const std::vector<double>& f) {
    std::vector<double> c(3, 0.0);
    double tot = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      for (int k = 0; k < 3; ++k) c[k] += m.weights()[i] * f[i] * m.eta(i)[k];
      tot += m.weights()[i] * f[i];
    }
    for (double& v : c) v /= tot;
    return c;
  };
  for (int k = 0; k < 200; ++k) {
    std::vector<double> f, g;
    if (k < 100) {
      f = vm_density(0.2 + 20.0 * u01(rng), W * u01(rng));
      g = vm_density(0.2 + 20.0 * u01(rng), W * u01(rng));
    } else {
      f = step_density(u01(rng), 0.1 + 0.8 * u01(rng));
      g = step_density(u01(rng), 0.1 + 0.8 * u01(rng));
    }
    auto pat = count_sign_changes(f, g, m.weights());
    twice += std::holds_alternative<TwiceCyclic>(pat);
    min_gap = std::min(min_gap, l1(image(f), image(g)));
  }
  bool ok = twice == 200 && min_gap >= 1e-10;
  report(8, "sign changes", ok,
         fmt("%.0f/200 pairs twice-cyclic (100 von Mises, 100 step), min image distance %.3g", double(twice), min_gap));
}

void quadrature() {
  double worst_ratio_dev = 0.0;
  std::vector<double> ratios;
  std::vector<std::vector<double>> values;
  for (std::size_t n : {76, 151, 301, 601}) {
    auto s = fixtures::ellipse_sensor(0.0, n);
    std::vector<double> f(s.grid().size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::exp(-std::pow((s.grid()[i] - 510.0) / 70.0, 2.0));
    values.push_back(color_of_density(s, Density::constant(s.grid()), f).components);
  }
  bool ok = true;
  for (std::size_t r = 0; r + 2 < values.size(); ++r) {
    for (int k = 0; k < 3; ++k) {
      double ratio = std::abs(values[r][k] - values[r + 1][k]) / std::abs(values[r + 1][k] - values[r + 2][k]);
      ratios.push_back(ratio);
      ok = ok && ratio >= 3.5 && ratio <= 4.5;
      worst_ratio_dev = std::max(worst_ratio_dev, std::abs(ratio - 4.0));
    }
  }
  auto flat = fixtures::flat_sum_sensor();
  double b = normalization_b(flat, Density::constant(flat.grid()), 1.0, 0.0, full_support(flat), Kernel{});
  double oracle = -std::log(std::cyl_bessel_i(0.0, 1.0));
  ok = ok && std::abs(b - oracle) <= 1e-8;
  auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  report(9, "quadrature", ok,
         fmt("self-convergence ratios in [%.4f, %.4f]; b = %.15g vs Bessel %.15g", *lo, *hi, b, oracle));
}

}  // namespace

int main() {
  coverage_cie();
  piecewise_coverage();
  bijectivity();
  banded();
  closure();
  gaussian_limit();
  geometry();
  sign_changes();
  quadrature();
  std::printf("%d of 9 criteria failed\n", failed);
  return failed ? 1 : 0;
}
