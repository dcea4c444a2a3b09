#pragma once

// Coverage maps, Gaussian-limit tables and closure summaries.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "spectra/closure.hpp"
#include "spectra/csv.hpp"
#include "spectra/inversion.hpp"
#include "spectra/locus.hpp"
#include "spectra/models.hpp"

namespace spectra {

enum class CoverageModel { VonMises, Step, Gaussian, LogLinear };

inline const char* to_string(CoverageModel m) {
  switch (m) {
    case CoverageModel::VonMises: return "von-mises";
    case CoverageModel::Step: return "step";
    case CoverageModel::Gaussian: return "gaussian";
    case CoverageModel::LogLinear: return "log-linear";
  }
  return "unknown";
}

inline CoverageModel coverage_model_from_string(const std::string& s) {
  if (s == "von-mises") return CoverageModel::VonMises;
  if (s == "step") return CoverageModel::Step;
  if (s == "gaussian") return CoverageModel::Gaussian;
  if (s == "log-linear") return CoverageModel::LogLinear;
  throw Error(ErrorKind::InvalidInput, "unknown model '" + s + "'");
}

struct CoverageOptions {
  std::optional<TorusParam> gluing;  // full support when empty
  double tolerance = 1e-8;
  double a_max = INFINITY;
  unsigned threads = 1;
  double min_depth = 1e-4;
};

struct CoverageCell {
  std::size_t row = 0;
  std::size_t col = 0;
  Chromaticity target{{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
  bool solved = false;
  InversionStatus status = InversionStatus::NoConvergence;
  double s = NAN;  // peak position (nm on the glued torus; unit fraction for steps)
  double a = NAN;  // amplitude, or delta for steps
  double residual = INFINITY;          // solver residual
  double verified_residual = INFINITY;  // recomputed from the sampled density
  std::optional<ModelParams> params;
};

struct CoverageFailure {
  Chromaticity target;
  std::string kind;
};

struct CoverageReport {
  std::string model;
  std::size_t grid_resolution = 0;
  std::size_t n_targets = 0;
  std::size_t n_solved = 0;
  double max_residual = 0.0;
  std::vector<CoverageFailure> failures;
  std::vector<CoverageCell> heatmap;

  double solved_fraction() const { return n_targets ? double(n_solved) / double(n_targets) : 0.0; }
};

/// Barycentric grid (i/res, j/res, 1 - i/res - j/res) restricted to hull depth > min_depth.
inline std::vector<CoverageCell> interior_grid(const LocusHull& hull, std::size_t res, double min_depth) {
  std::vector<CoverageCell> cells;
  for (std::size_t i = 0; i <= res; ++i) {
    for (std::size_t j = 0; i + j <= res; ++j) {
      double x = double(i) / double(res);
      double y = double(j) / double(res);
      Chromaticity c({x, y, 1.0 - x - y});
      if (hull.signed_distance(c) <= min_depth) continue;
      CoverageCell cell;
      cell.row = i;
      cell.col = j;
      cell.target = c;
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

namespace coverage_detail {

template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& body) {
  threads = std::max(1u, std::min<unsigned>(threads, unsigned(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mutex;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      try {
        for (std::size_t i = next++; i < n; i = next++) body(i);
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

inline double chroma_residual(const Color& c, const Chromaticity& target) {
  return l1_distance(chromaticity(c), target);
}

}  // namespace coverage_detail

inline CoverageReport coverage_map(const Sensor& sensor, const Density& reference, CoverageModel model,
                                   std::size_t resolution, const CoverageOptions& opt = {}) {
  if (resolution < 16) throw Error(ErrorKind::InvalidInput, "coverage resolution must be at least 16");
  if (sensor.dims() != 3) throw Error(ErrorKind::Geometry, "coverage maps need a 3-channel sensor");
  LocusHull hull(sample_locus(sensor));
  CoverageReport rep;
  rep.model = to_string(model);
  rep.grid_resolution = resolution;
  rep.heatmap = interior_grid(hull, resolution, opt.min_depth);
  rep.n_targets = rep.heatmap.size();
  const TorusParam gluing = opt.gluing ? *opt.gluing : full_support(sensor);

  if (model == CoverageModel::VonMises || model == CoverageModel::Step) {
    InverterOptions io;
    io.a_max = opt.a_max;
    ModelInverter inv(sensor, reference, gluing,
                      model == CoverageModel::Step ? ModelKind::Step : ModelKind::VonMises, io);
    coverage_detail::parallel_for(rep.heatmap.size(), opt.threads, [&](std::size_t k) {
      auto& cell = rep.heatmap[k];
      auto r = inv.invert({cell.target, opt.tolerance, 200});
      cell.status = r.status;
      cell.residual = r.residual;
      cell.params = r.params;
      if (!r.params) return;
      if (auto* p = std::get_if<VonMisesParams>(&*r.params)) {
        cell.s = p->s;
        cell.a = p->a;
        if (std::isfinite(p->b)) {
          auto f = sample_on_grid(sensor, gluing, *r.params);
          cell.verified_residual = coverage_detail::chroma_residual(color_of_density(sensor, reference, f), cell.target);
        }
      } else if (auto* q = std::get_if<StepParams>(&*r.params)) {
        cell.s = q->s;
        cell.a = q->delta;
        Color c{inv.measure().forward_step_direct(q->s, q->delta)};
        cell.verified_residual = coverage_detail::chroma_residual(c, cell.target);
      }
    });
  } else {
    LogLinearBasis basis = model == CoverageModel::Gaussian ? LogLinearBasis::gaussian(sensor.grid())
                                                           : LogLinearBasis::cosine(sensor.grid());
    const double lo = sensor.grid().lambda_min();
    const double hi = sensor.grid().lambda_max();
    coverage_detail::parallel_for(rep.heatmap.size(), opt.threads, [&](std::size_t k) {
      auto& cell = rep.heatmap[k];
      auto r = invert_log_linear(sensor, reference, basis, Color{cell.target.components()}, 1e-2 * opt.tolerance);
      cell.status = r.status;
      auto f = log_linear_density(basis, r.params.p);
      bool finite = std::all_of(f.begin(), f.end(), [](double v) { return std::isfinite(v); });
      if (!finite) {
        cell.status = InversionStatus::NoConvergence;
        return;
      }
      cell.verified_residual = coverage_detail::chroma_residual(color_of_density(sensor, reference, f), cell.target);
      cell.residual = cell.verified_residual;
      if (model == CoverageModel::Gaussian) {
        auto g = gaussian_from_log_linear(r.params, lo, hi);
        cell.params = g;
        cell.a = -g.alpha;
        cell.s = g.alpha != 0.0 ? -g.beta / (2.0 * g.alpha) : NAN;
      } else {
        cell.params = r.params;
        cell.a = std::hypot(r.params.p[1], r.params.p[2]);
        cell.s = lo + (hi - lo) * unit_frac(std::atan2(r.params.p[2], r.params.p[1]) / kTwoPi);
      }
      if (cell.status == InversionStatus::Solved && !(cell.residual <= opt.tolerance)) {
        cell.status = InversionStatus::NoConvergence;
      }
    });
  }

  for (auto& cell : rep.heatmap) {
    cell.solved = cell.status == InversionStatus::Solved && cell.verified_residual <= opt.tolerance;
    if (cell.solved) {
      ++rep.n_solved;
      rep.max_residual = std::max(rep.max_residual, cell.verified_residual);
    } else {
      std::string kind = to_string(cell.status);
      if (cell.status == InversionStatus::Solved) kind = "verification";
      rep.failures.push_back({cell.target, kind});
    }
  }
  return rep;
}

inline std::string json_number(double v) { return std::isfinite(v) ? format_double(v) : "null"; }

inline nlohmann::ordered_json to_json(const CoverageReport& r) {
  nlohmann::ordered_json j;
  j["model"] = r.model;
  j["grid_resolution"] = r.grid_resolution;
  j["n_targets"] = r.n_targets;
  j["n_solved"] = r.n_solved;
  j["solved_fraction"] = r.solved_fraction();
  j["max_residual"] = r.max_residual;
  auto& fails = j["failures"] = nlohmann::ordered_json::array();
  for (const auto& f : r.failures) fails.push_back({{"chromaticity", f.target.components()}, {"kind", f.kind}});
  return j;
}

inline std::string heatmap_csv(const CoverageReport& r) {
  std::ostringstream out;
  out << "row,col,solved,s,a,residual\n";
  for (const auto& c : r.heatmap) {
    out << c.row << ',' << c.col << ',' << (c.solved ? 1 : 0) << ',' << format_double(c.s) << ','
        << format_double(c.a) << ',' << format_double(c.verified_residual) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

struct ConvergenceRow {
  double width = 0.0;
  double sup_gap = 0.0;
  double ratio = NAN;  // to the previous row
};

struct ConvergenceTable {
  double D = 0.0;
  double lambda_min = 0.0;
  double lambda_max = 1.0;
  std::vector<ConvergenceRow> rows;
};

/// Worst sup gap between von Mises and its quadratic expansion over a small (a, b, s) grid.
inline ConvergenceTable gaussian_convergence(double D, std::vector<double> widths, double lambda_min = 0.0,
                                             double lambda_max = 1.0) {
  if (!(D >= 0.0)) throw Error(ErrorKind::InvalidInput, "D must be nonnegative");
  if (widths.empty()) throw Error(ErrorKind::InvalidInput, "no widths");
  const double span = lambda_max - lambda_min;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (!(widths[i] > span)) throw Error(ErrorKind::InvalidInput, "widths must exceed the domain length");
    if (i && !(widths[i] > widths[i - 1])) throw Error(ErrorKind::InvalidInput, "widths must be strictly increasing");
  }
  ConvergenceTable t{D, lambda_min, lambda_max, {}};
  for (double w : widths) {
    double worst = 0.0;
    for (int ia = 0; ia <= 4; ++ia) {
      for (int ib = -1; ib <= 1; ++ib) {
        for (int is = 0; is < 64; ++is) {
          VonMisesParams p{D * ia / 4.0, D * ib, lambda_min + w * is / 64.0, w};
          worst = std::max(worst, gaussian_limit_coeffs(p, lambda_min, lambda_max).sup_gap);
        }
      }
    }
    ConvergenceRow row{w, worst, NAN};
    if (!t.rows.empty() && t.rows.back().sup_gap > 0.0) row.ratio = worst / t.rows.back().sup_gap;
    t.rows.push_back(row);
  }
  return t;
}

inline std::string convergence_csv(const ConvergenceTable& t) {
  std::ostringstream out;
  out << "width,sup_gap,ratio\n";
  for (const auto& r : t.rows) {
    out << format_double(r.width) << ',' << format_double(r.sup_gap) << ',';
    if (std::isfinite(r.ratio)) out << format_double(r.ratio);
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

inline constexpr double kClosedThreshold = 1e-8;
inline constexpr double kOpenThreshold = 1e-3;

enum class Verdict { Pass, Fail, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::Inconclusive: return "INCONCLUSIVE";
  }
  return "unknown";
}

inline Verdict verdict(const ResidualStats& s) {
  if (s.failures == 0 && s.trials > 0 && s.max <= kClosedThreshold) return Verdict::Pass;
  if (s.failures > 0 || s.median >= kOpenThreshold) return Verdict::Fail;
  return Verdict::Inconclusive;
}

struct ClosureRow {
  ClosureStats stats;
  Verdict add = Verdict::Inconclusive;
  Verdict mult = Verdict::Inconclusive;
};

inline std::vector<ClosureRow> closure_report(std::size_t trials, std::uint64_t seed = 1) {
  std::vector<ClosureRow> rows;
  for (auto st : {closure_residual(BandedFamily{}, trials, seed), closure_residual(VonMisesFamily{}, trials, seed),
                  closure_residual(GaussianBasisFamily{}, trials, seed)}) {
    rows.push_back({st, verdict(st.sum), verdict(st.product)});
  }
  return rows;
}

inline std::string closure_csv(const std::vector<ClosureRow>& rows) {
  std::ostringstream out;
  out << "family,add_max,add_mean,add_median,add,mult_max,mult_mean,mult_median,mult\n";
  for (const auto& r : rows) {
    const auto& s = r.stats;
    out << s.family << ',' << format_double(s.sum.max) << ',' << format_double(s.sum.mean) << ','
        << format_double(s.sum.median) << ',' << to_string(r.add) << ',' << format_double(s.product.max) << ','
        << format_double(s.product.mean) << ',' << format_double(s.product.median) << ',' << to_string(r.mult)
        << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

inline std::string locus_csv(const SampledLocus& locus) {
  std::ostringstream out;
  out << "wavelength";
  for (std::size_t k = 0; k < locus.points.front().size(); ++k) out << ",eta" << k;
  out << '\n';
  for (std::size_t i = 0; i < locus.lambdas.size(); ++i) {
    out << format_double(locus.lambdas[i]);
    for (double v : locus.points[i].components()) out << ',' << format_double(v);
    out << '\n';
  }
  return out.str();
}

}  // namespace spectra
