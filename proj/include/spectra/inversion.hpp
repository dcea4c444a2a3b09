#pragma once

// Chromaticity -> model parameters.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spectra/geometry.hpp"
#include "spectra/locus.hpp"
#include "spectra/measure.hpp"
#include "spectra/models.hpp"
#include "spectra/sensor.hpp"

namespace spectra {

inline constexpr double kBoundaryDepth = 1e-6;

enum class InversionStatus { Solved, Exterior, Boundary, NoConvergence };

inline const char* to_string(InversionStatus s) {
  switch (s) {
    case InversionStatus::Solved: return "solved";
    case InversionStatus::Exterior: return "exterior";
    case InversionStatus::Boundary: return "boundary";
    case InversionStatus::NoConvergence: return "no_convergence";
  }
  return "?";
}

struct InversionTarget {
  Chromaticity chroma;
  double tolerance = 1e-8;
  int max_iterations = 200;
};

struct PathPoint {
  double s = 0.0;
  double u = 0.0;
  double residual = 0.0;
};

struct InversionResult {
  InversionStatus status = InversionStatus::NoConvergence;
  std::optional<ModelParams> params;
  double residual = INFINITY;
  int iterations = 0;
  std::vector<PathPoint> path;
  std::string message;

  bool solved() const { return status == InversionStatus::Solved; }
};

inline double l1(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
  return s;
}

inline Point2 plane_of(const std::vector<double>& c) {
  return {c[0] * plane::kU[0] + c[1] * plane::kU[1] + c[2] * plane::kU[2],
          c[0] * plane::kV[0] + c[1] * plane::kV[1] + c[2] * plane::kV[2]};
}

// ---------------------------------------------------------------------------
// Continuation solver

/// A two-parameter family g(s, u), periodic in s, with g(., u -> -inf) = white.
struct SolveProblem {
  std::function<std::vector<double>(double s, double u)> forward;
  double period = 1.0;
  double u_min = -40.0;
  double u_max = 0.0;
  double u_probe = 0.0;
  std::vector<double> white;
  double s_step = 1e-5;
  double u_step = 1e-3;
};

struct SolveOutcome {
  bool converged = false;
  bool at_white = false;
  double s = 0.0;
  double u = -INFINITY;
  double residual = INFINITY;
  int iterations = 0;
  std::vector<PathPoint> path;
};

class ContinuationSolver {
 public:
  explicit ContinuationSolver(SolveProblem p) : p_(std::move(p)) {
    white_ = plane_of(p_.white);
    for (std::size_t k = 0; k < kProbe; ++k) {
      double s = p_.period * double(k) / double(kProbe);
      Point2 q = plane_of(p_.forward(s, p_.u_probe)) - white_;
      probe_angle_.push_back(std::atan2(q.y, q.x));
    }
    for (double u = p_.u_min; u < p_.u_max; u += 0.25) radial_u_.push_back(u);
    radial_u_.push_back(p_.u_max);
    for (double u : radial_u_) {
      if (u >= p_.u_probe - 8.0) table_u_.push_back(u);
    }
    for (std::size_t k = 0; k < kTableS; ++k) {
      double s = p_.period * double(k) / double(kTableS);
      for (double u : table_u_) table_.push_back({s, u, plane_of(p_.forward(s, u))});
    }
  }

  const SolveProblem& problem() const { return p_; }

  SolveOutcome solve(const std::vector<double>& target, double tol, int max_iterations) const {
    SolveOutcome out;
    if (l1(target, p_.white) <= tol) {
      out.converged = true;
      out.at_white = true;
      out.residual = l1(target, p_.white);
      return out;
    }
    const Point2 tp = plane_of(target);
    int budget = max_iterations;
    auto run = [&](double s, double u) {
      auto r = newton(tp, target, s, u, tol, budget, out.path);
      out.iterations += r.iterations;
      budget -= r.iterations;
      if (r.residual < out.residual) {
        out.s = r.s;
        out.u = r.u;
        out.residual = r.residual;
      }
      out.converged = out.residual <= tol;
      return out.converged;
    };
    std::vector<std::pair<double, double>> starts;
    for (double s0 : angle_candidates(tp)) {
      if (starts.size() < 2) starts.push_back({s0, radial_start(tp, s0)});
    }
    for (auto st : table_nearest(tp, 3)) starts.push_back(st);
    for (auto [s0, u0] : starts) {
      if (budget <= 0) break;
      if (run(s0, u0)) return out;
    }
    for (int level = 0; level < 3 && budget > 0; ++level) {
      auto [s0, u0] = grid_search(tp, kTableS << (level + 1), level);
      if (run(s0, u0)) return out;
    }
    return out;
  }

 private:
  struct TableEntry {
    double s, u;
    Point2 g;
  };

  std::vector<std::pair<double, double>> table_nearest(Point2 tp, std::size_t count) const {
    std::vector<std::pair<double, std::size_t>> d;
    d.reserve(table_.size());
    for (std::size_t i = 0; i < table_.size(); ++i) d.push_back({norm(table_[i].g - tp), i});
    std::partial_sort(d.begin(), d.begin() + std::ptrdiff_t(std::min(count * 8, d.size())), d.end());
    std::vector<std::pair<double, double>> out;
    for (std::size_t j = 0; j < d.size() && out.size() < count; ++j) {
      const auto& e = table_[d[j].second];
      bool near = false;
      for (auto [s, u] : out) {
        double ds = std::abs(std::remainder(s - e.s, p_.period));
        near = near || (ds <= 2.0 * p_.period / double(kTableS) && std::abs(u - e.u) <= 0.5);
      }
      if (!near) out.push_back({e.s, e.u});
    }
    return out;
  }

  static constexpr std::size_t kProbe = 360;
  static constexpr std::size_t kTableS = 128;
  static constexpr int kRunIterations = 60;
  static constexpr int kStallIterations = 8;

  struct NewtonRun {
    double s, u, residual;
    int iterations;
  };

  double wrap_s(double s) const {
    double r = std::fmod(s, p_.period);
    return r < 0.0 ? r + p_.period : r;
  }

  std::vector<double> angle_candidates(Point2 tp) const {
    Point2 d = tp - white_;
    double target = std::atan2(d.y, d.x);
    std::vector<std::pair<double, double>> cands;
    for (std::size_t k = 0; k < kProbe; ++k) {
      double a0 = std::remainder(probe_angle_[k] - target, kTwoPi);
      double a1 = std::remainder(probe_angle_[(k + 1) % kProbe] - target, kTwoPi);
      if ((a0 <= 0.0) != (a1 <= 0.0) && std::abs(a0 - a1) < std::numbers::pi) {
        double f = a0 / (a0 - a1);
        cands.push_back({std::min(std::abs(a0), std::abs(a1)), p_.period * (double(k) + f) / double(kProbe)});
      }
    }
    if (cands.empty()) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < kProbe; ++k) {
        if (std::abs(std::remainder(probe_angle_[k] - target, kTwoPi)) <
            std::abs(std::remainder(probe_angle_[best] - target, kTwoPi))) {
          best = k;
        }
      }
      cands.push_back({0.0, p_.period * double(best) / double(kProbe)});
    }
    std::sort(cands.begin(), cands.end());
    std::vector<double> out;
    for (std::size_t i = 0; i < cands.size() && i < 4; ++i) out.push_back(cands[i].second);
    return out;
  }

  double radial_start(Point2 tp, double s) const {
    Point2 d = tp - white_;
    double r = norm(d);
    Point2 dir = d * (1.0 / r);
    double prev_u = radial_u_.front();
    double prev_rho = 0.0;
    for (double u : radial_u_) {
      double rho = dot(plane_of(p_.forward(s, u)) - white_, dir);
      if (rho >= r) {
        double f = rho > prev_rho ? (r - prev_rho) / (rho - prev_rho) : 1.0;
        return prev_u + f * (u - prev_u);
      }
      prev_u = u;
      prev_rho = rho;
    }
    return p_.u_max - 0.5;
  }

  std::pair<double, double> grid_search(Point2 tp, std::size_t ns, int level) const {
    double best = INFINITY;
    std::pair<double, double> arg{0.0, p_.u_probe};
    double offset = 0.5 * double(level) / double(3);
    for (std::size_t k = 0; k < ns; ++k) {
      double s = p_.period * (double(k) + offset) / double(ns);
      for (double u : table_u_) {
        double r = norm(plane_of(p_.forward(s, u)) - tp);
        if (r < best) {
          best = r;
          arg = {s, u};
        }
      }
    }
    return arg;
  }

  NewtonRun newton(Point2 tp, const std::vector<double>& target, double s, double u, double tol, int budget,
                   std::vector<PathPoint>& path) const {
    u = std::clamp(u, p_.u_min, p_.u_max);
    auto g = p_.forward(s, u);
    Point2 F = plane_of(g) - tp;
    double res = l1(g, target);
    NewtonRun run{s, u, res, 0};
    path.push_back({s, u, res});
    const int cap = std::min(budget, kRunIterations);
    int stalled = 0;
    double mu = 1e-6;
    while (run.iterations < cap && res > 1e-2 * tol && stalled < kStallIterations) {
      ++run.iterations;
      const double before = res;
      double hs = p_.s_step;
      double hu = p_.u_step;
      Point2 ds = (plane_of(p_.forward(s + hs, u)) - plane_of(p_.forward(s - hs, u))) * (0.5 / hs);
      double u_hi = std::min(u + hu, p_.u_max);
      double u_lo = u_hi - 2.0 * hu;
      Point2 du = (plane_of(p_.forward(s, u_hi)) - plane_of(p_.forward(s, u_lo))) * (1.0 / (u_hi - u_lo));
      const double a11 = dot(ds, ds);
      const double a12 = dot(ds, du);
      const double a22 = dot(du, du);
      const double g1 = dot(ds, F);
      const double g2 = dot(du, F);
      const double fnorm = norm(F);
      bool moved = false;
      for (int tries = 0; tries < 40 && !moved; ++tries) {
        double m11 = a11 * (1.0 + mu);
        double m22 = a22 * (1.0 + mu);
        double det = m11 * m22 - a12 * a12;
        if (!(std::abs(det) > 0.0) || !std::isfinite(det)) {
          mu *= 4.0;
          continue;
        }
        double step_s = -(m22 * g1 - a12 * g2) / det;
        double step_u = -(m11 * g2 - a12 * g1) / det;
        double scale = 1.0;
        scale = std::min(scale, 0.25 * p_.period / std::max(std::abs(step_s), 1e-300));
        scale = std::min(scale, 2.0 / std::max(std::abs(step_u), 1e-300));
        double s1 = wrap_s(s + scale * step_s);
        double u1 = std::clamp(u + scale * step_u, p_.u_min, p_.u_max);
        auto g1v = p_.forward(s1, u1);
        Point2 F1 = plane_of(g1v) - tp;
        if (norm(F1) < fnorm) {
          s = s1;
          u = u1;
          g = std::move(g1v);
          F = F1;
          res = l1(g, target);
          moved = true;
          mu = std::max(mu / 3.0, 1e-12);
        } else {
          mu *= 4.0;
        }
      }
      path.push_back({s, u, res});
      if (!moved) break;
      stalled = res < 0.99 * before ? 0 : stalled + 1;
      if (res < run.residual) run = {s, u, res, run.iterations};
    }
    run.residual = std::min(run.residual, res);
    if (res <= run.residual) {
      run.s = s;
      run.u = u;
    }
    return run;
  }

  SolveProblem p_;
  Point2 white_;
  std::vector<double> probe_angle_;
  std::vector<double> radial_u_;
  std::vector<double> table_u_;
  std::vector<TableEntry> table_;
};

inline SolveOutcome continuation_solve(const SolveProblem& problem, const std::vector<double>& target, double tol = 1e-8,
                                       int max_iterations = 200) {
  return ContinuationSolver(problem).solve(target, tol, max_iterations);
}

// ---------------------------------------------------------------------------
// Model inverters

enum class ModelKind { VonMises, GeneralizedVonMises, Step };

struct InverterOptions {
  double a_max = INFINITY;  // capped at the grid resolution limit
  std::optional<std::vector<double>> shape;
};

/// Inverts chromaticities into one periodic family on a glued torus.
class ModelInverter {
 public:
  ModelInverter(const Sensor& sensor, const Density& reference, const TorusParam& gluing, ModelKind kind,
                InverterOptions opt = {})
      : kind_(kind),
        measure_(sensor, reference, gluing),
        hull_(sample_locus(sensor)),
        kernel_{kind == ModelKind::GeneralizedVonMises ? opt.shape : std::nullopt},
        a_max_(std::min(opt.a_max, measure_.amplitude_limit())),
        solver_(make_problem()) {
    if (sensor.dims() != 3) throw Error(ErrorKind::Geometry, "inversion needs a 3-channel sensor");
    if (kind == ModelKind::GeneralizedVonMises) {
      if (!opt.shape) throw Error(ErrorKind::InvalidInput, "generalized family needs a shape");
      validate_shape(*opt.shape);
    }
  }

  ModelInverter(const ModelInverter&) = delete;
  ModelInverter& operator=(const ModelInverter&) = delete;

  ModelKind kind() const { return kind_; }
  const GluedMeasure& measure() const { return measure_; }
  const LocusHull& hull() const { return hull_; }
  double a_max() const { return a_max_; }

  std::vector<double> forward(const ModelParams& m) const {
    if (auto* p = std::get_if<StepParams>(&m)) return measure_.forward_step(p->s, p->delta);
    if (auto* p = std::get_if<VonMisesParams>(&m)) return measure_.forward_kernel(Kernel{}, p->a, p->s);
    if (auto* p = std::get_if<GeneralizedVonMisesParams>(&m)) {
      return measure_.forward_kernel(Kernel{p->shape}, p->a, p->s);
    }
    throw Error(ErrorKind::InvalidInput, "model has no periodic forward map");
  }

  InversionResult invert(const InversionTarget& target) const {
    InversionResult out;
    if (target.chroma.size() != measure_.dims()) throw Error(ErrorKind::InvalidInput, "target dimension mismatch");
    if (!(target.tolerance > 0.0)) throw Error(ErrorKind::InvalidInput, "tolerance must be positive");
    double depth = hull_.signed_distance(target.chroma);
    if (depth < -kBoundaryBand) {
      out.status = InversionStatus::Exterior;
      out.message = "target lies " + format_double(-depth) + " outside the locus hull";
      return out;
    }
    if (depth <= kBoundaryDepth) {
      out.status = InversionStatus::Boundary;
      out.message = "target within " + format_double(kBoundaryDepth) + " of the locus hull boundary";
      return out;
    }
    auto sol = solver_.solve(target.chroma.components(), target.tolerance, target.max_iterations);
    out.iterations = sol.iterations;
    out.path = std::move(sol.path);
    out.residual = sol.residual;
    out.params = to_params(sol);
    out.status = sol.converged ? InversionStatus::Solved : InversionStatus::NoConvergence;
    if (!sol.converged) out.message = "no convergence; best residual " + format_double(sol.residual);
    return out;
  }

 private:
  SolveProblem make_problem() const {
    SolveProblem p;
    if (kind_ == ModelKind::Step) {
      p.forward = [this](double s, double u) { return measure_.forward_step(s, -std::expm1(u)); };
      p.period = 1.0;
      p.u_min = -40.0;
      p.u_max = std::log1p(-1e-7);
      p.u_probe = std::log(0.5);
      p.white = measure_.step_white();
    } else {
      p.forward = [this](double s, double u) { return measure_.forward_kernel(kernel_, std::exp(u), s); };
      p.period = measure_.width();
      p.u_min = -40.0;
      p.u_max = std::log(a_max_);
      p.u_probe = 0.0;
      p.white = measure_.white();
    }
    return p;
  }

  ModelParams to_params(const SolveOutcome& sol) const {
    if (kind_ == ModelKind::Step) {
      double delta = sol.at_white ? 1.0 : -std::expm1(sol.u);
      return StepParams{unit_frac(sol.s), delta};
    }
    double a = sol.at_white ? 0.0 : std::exp(sol.u);
    double b = 0.0;
    try {
      b = normalization_b(measure_, a, sol.s, kernel_);
    } catch (const Error&) {
      b = NAN;
    }
    if (kind_ == ModelKind::GeneralizedVonMises) {
      return GeneralizedVonMisesParams{*kernel_.shape, a, b, sol.s, measure_.width()};
    }
    return VonMisesParams{a, b, sol.s, measure_.width()};
  }

  ModelKind kind_;
  GluedMeasure measure_;
  LocusHull hull_;
  Kernel kernel_;
  double a_max_;
  ContinuationSolver solver_;
};

inline InversionResult invert_von_mises(const Sensor& sensor, const Density& reference, const TorusParam& gluing,
                                        const InversionTarget& target, InverterOptions opt = {}) {
  return ModelInverter(sensor, reference, gluing, ModelKind::VonMises, opt).invert(target);
}

inline InversionResult invert_step(const Sensor& sensor, const Density& reference, const TorusParam& gluing,
                                   const InversionTarget& target) {
  return ModelInverter(sensor, reference, gluing, ModelKind::Step).invert(target);
}

/// exp(a h((t - s)/W) + b) sampled on the sensor grid, zero off the glued support.
inline std::vector<double> sample_on_grid(const Sensor& sensor, const TorusParam& gluing, const ModelParams& m) {
  const auto& g = sensor.grid();
  std::vector<double> f(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto t = gluing.inverse(g[i]);
    if (!t) continue;
    if (auto* p = std::get_if<VonMisesParams>(&m)) f[i] = eval_model(*p, *t);
    else if (auto* q = std::get_if<GeneralizedVonMisesParams>(&m)) f[i] = eval_model(*q, *t);
    else if (auto* st = std::get_if<StepParams>(&m)) f[i] = eval_model(*st, *t / gluing.total_width());
    else throw Error(ErrorKind::InvalidInput, "model cannot be sampled on a glued torus");
  }
  return f;
}

// ---------------------------------------------------------------------------
// Log-linear

struct LogLinearBasis {
  std::string name;
  std::vector<std::vector<double>> functions;  // on the sensor grid

  static LogLinearBasis gaussian(const WavelengthGrid& g) {
    LogLinearBasis b{"gaussian", std::vector<std::vector<double>>(3, std::vector<double>(g.size()))};
    for (std::size_t i = 0; i < g.size(); ++i) {
      double x = (g[i] - g.lambda_min()) / (g.lambda_max() - g.lambda_min());
      b.functions[0][i] = 1.0;
      b.functions[1][i] = x;
      b.functions[2][i] = x * x;
    }
    return b;
  }

  /// {1, cos, sin} of the full support as one period.
  static LogLinearBasis cosine(const WavelengthGrid& g) {
    LogLinearBasis b{"cosine", std::vector<std::vector<double>>(3, std::vector<double>(g.size()))};
    double w = g.lambda_max() - g.lambda_min();
    for (std::size_t i = 0; i < g.size(); ++i) {
      double x = kTwoPi * (g[i] - g.lambda_min()) / w;
      b.functions[0][i] = 1.0;
      b.functions[1][i] = std::cos(x);
      b.functions[2][i] = std::sin(x);
    }
    return b;
  }
};

struct LogLinearResult {
  InversionStatus status = InversionStatus::NoConvergence;
  LogLinearParams params;
  double residual = INFINITY;
  int iterations = 0;
};

inline std::vector<double> log_linear_density(const LogLinearBasis& basis, const std::vector<double>& p) {
  const std::size_t n = basis.functions.front().size();
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) {
    double e = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) e += p[k] * basis.functions[k][i];
    f[i] = std::exp(e);
  }
  return f;
}

/// Damped Newton on the moment map p -> c(exp(sum p_k P_k) mu).
inline LogLinearResult invert_log_linear(const Sensor& sensor, const Density& reference, const LogLinearBasis& basis,
                                         const Color& target, double tol = 1e-10, int max_iterations = 200) {
  const auto& g = sensor.grid();
  const std::size_t n = g.size();
  const std::size_t d = sensor.dims();
  const std::size_t m = basis.functions.size();
  if (m != d) throw Error(ErrorKind::InvalidInput, "basis size must equal the sensor dimension");
  Eigen::MatrixXd bm{Eigen::Index(n), Eigen::Index(m)};
  for (std::size_t k = 0; k < m; ++k) {
    if (basis.functions[k].size() != n) throw Error(ErrorKind::GridMismatch, "basis not sampled on the sensor grid");
    for (std::size_t i = 0; i < n; ++i) bm(Eigen::Index(i), Eigen::Index(k)) = basis.functions[k][i];
  }
  if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(bm).rank() < Eigen::Index(m)) {
    throw Error(ErrorKind::InvalidInput, "rank-deficient basis");
  }
  const Density ref = resample(reference, g);
  const auto w = g.trapezoid_weights();
  Eigen::MatrixXd chi{Eigen::Index(d), Eigen::Index(n)};
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t i = 0; i < n; ++i) chi(Eigen::Index(k), Eigen::Index(i)) = w[i] * ref.values()[i] * sensor.channel(k)[i];
  }
  Eigen::VectorXd tgt = Eigen::VectorXd::Zero(Eigen::Index(d));
  for (std::size_t k = 0; k < d; ++k) tgt(Eigen::Index(k)) = target[k];
  const double scale = tgt.lpNorm<1>();
  if (!(scale > 0.0)) throw Error(ErrorKind::InvalidInput, "zero target");

  auto color = [&](const Eigen::VectorXd& p, Eigen::VectorXd& f) {
    f = (bm * p).array().exp().matrix();
    return Eigen::VectorXd(chi * f);
  };

  Eigen::VectorXd p = Eigen::VectorXd::Zero(Eigen::Index(m));
  Eigen::VectorXd f;
  Eigen::VectorXd c = color(p, f);
  for (std::size_t k = 0; k < m; ++k) {
    const auto& col = basis.functions[k];
    if (std::all_of(col.begin(), col.end(), [&](double v) { return std::abs(v - col[0]) < 1e-12; }) && col[0] != 0.0) {
      p(Eigen::Index(k)) = std::log(scale / c.lpNorm<1>()) / col[0];
      c = color(p, f);
      break;
    }
  }

  LogLinearResult out;
  double res = (c - tgt).lpNorm<1>() / scale;
  while (out.iterations < max_iterations && res > tol) {
    ++out.iterations;
    Eigen::MatrixXd J = chi * f.asDiagonal() * bm;
    Eigen::VectorXd step = J.colPivHouseholderQr().solve(tgt - c);
    bool moved = false;
    for (double lam = 1.0; lam > 1e-12; lam *= 0.5) {
      Eigen::VectorXd p1 = p + lam * step;
      Eigen::VectorXd f1;
      Eigen::VectorXd c1 = color(p1, f1);
      double r1 = (c1 - tgt).lpNorm<1>() / scale;
      if (std::isfinite(r1) && r1 < res) {
        p = p1;
        f = f1;
        c = c1;
        res = r1;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  out.residual = res;
  out.params.basis = basis.name;
  out.params.p.assign(p.data(), p.data() + p.size());
  out.status = res <= tol ? InversionStatus::Solved : InversionStatus::NoConvergence;
  return out;
}

/// exp(p0 + p1 x + p2 x^2) with x = (lambda - lo)/(hi - lo), rewritten in lambda.
inline GaussianParams gaussian_from_log_linear(const LogLinearParams& q, double lo, double hi) {
  double L = hi - lo;
  double a = q.p[2] / (L * L);
  double b = q.p[1] / L;
  return {a, b - 2.0 * a * lo, q.p[0] - b * lo + a * lo * lo};
}

// ---------------------------------------------------------------------------
// Banded construction

struct BandedConstruction {
  BandedParams sets;                  // intervals in nm; values normalize each set to unit mass
  std::vector<double> errors;         // Euclidean chromaticity error per column
  std::vector<Chromaticity> proxies;  // interior points realized by step densities
  std::vector<StepParams> steps;
  std::size_t blocks_per_column = 0;  // N
};

inline BandedConstruction banded_from_matrix(const Sensor& sensor, const Density& reference,
                                             const std::vector<Chromaticity>& columns, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidInput, "epsilon must be positive");
  if (columns.empty()) throw Error(ErrorKind::InvalidInput, "matrix has no columns");
  if (!reference.atoms().empty()) throw Error(ErrorKind::InvalidInput, "reference must be atomless");
  const std::size_t n = columns.size();
  const std::size_t d = sensor.dims();
  const auto& grid = sensor.grid();
  const double lo = grid.lambda_min();
  const double width = grid.lambda_max() - lo;
  const TorusParam full = full_support(sensor);
  ModelInverter stepper(sensor, reference, full, ModelKind::Step);
  const auto& measure = stepper.measure();
  const auto white = measure.step_white();

  BandedConstruction out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = columns[i];
    if (c.size() != d) throw Error(ErrorKind::InvalidInput, "column dimension mismatch");
    double depth = stepper.hull().signed_distance(c);
    if (depth < -kBoundaryBand) {
      throw Error(ErrorKind::OutsideCone,
                  "outside color cone: column " + std::to_string(i) + " lies " + format_double(-depth) +
                      " outside the closed color triangle; every banded color stays at least that far away");
    }
    std::vector<double> proxy = c.components();
    if (depth < 0.45 * eps) {
      double dist = 0.0;
      for (std::size_t k = 0; k < d; ++k) dist += (white[k] - proxy[k]) * (white[k] - proxy[k]);
      dist = std::sqrt(dist);
      double f = dist > 0.0 ? std::min(1.0, 0.45 * eps / dist) : 0.0;
      for (std::size_t k = 0; k < d; ++k) proxy[k] += f * (white[k] - proxy[k]);
    }
    double sum = 0.0;
    for (double v : proxy) sum += v;
    for (double& v : proxy) v /= sum;
    Chromaticity cp(proxy);
    StepParams sp{0.0, 1.0};
    if (l1(proxy, white) > 1e-12) {
      auto r = stepper.invert({cp, 1e-10, 200});
      if (!r.solved()) {
        throw Error(ErrorKind::Resolution, "step density for column " + std::to_string(i) + " not found: " + r.message);
      }
      sp = std::get<StepParams>(*r.params);
    }
    out.proxies.push_back(cp);
    out.steps.push_back(sp);
  }

  auto mass = [&](double a, double b) {
    if (!(b > a)) return 0.0;
    return measure.window_moments(a, b - a)[0];
  };
  auto window_overlap = [&](const StepParams& sp, double a, double b) {
    if (sp.delta >= 1.0) return mass(a, b);
    double m = mass(std::max(a, sp.s), std::min(b, sp.s + sp.delta));
    if (sp.s + sp.delta > 1.0) m += mass(a, std::min(b, sp.s + sp.delta - 1.0));
    return m;
  };

  const double min_segment = grid.spacing() / width / 64.0;
  for (std::size_t N = 1;; N *= 2) {
    const double seg = 1.0 / double(n * N);
    if (seg < min_segment) {
      throw Error(ErrorKind::Resolution, "epsilon " + format_double(eps) + " is smaller than the grid resolution permits");
    }
    BandedConstruction trial = out;
    trial.blocks_per_column = N;
    trial.sets.bands.assign(n, {});
    trial.sets.values.assign(n, 0.0);
    trial.errors.assign(n, 0.0);
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& sp = out.steps[i];
      double total = window_overlap(sp, 0.0, 1.0);
      std::vector<double> need(N), avail(N);
      double ratio = 0.0;
      for (std::size_t k = 0; k < N; ++k) {
        need[k] = window_overlap(sp, double(k) / double(N), double(k + 1) / double(N)) / total;
        double b0 = double(i + k * n) * seg;
        avail[k] = mass(b0, b0 + seg);
        if (avail[k] > 0.0) ratio = std::max(ratio, need[k] / avail[k]);
      }
      const double C = 1.001 * ratio;
      std::vector<double> mom(d + 1, 0.0);
      for (std::size_t k = 0; k < N; ++k) {
        if (!(need[k] > 0.0) || !(avail[k] > 0.0)) continue;
        const double b0 = double(i + k * n) * seg;
        const double want = need[k] / C;
        double a = b0;
        double b = b0 + seg;
        for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
          double mid = 0.5 * (a + b);
          (mass(b0, mid) < want ? a : b) = mid;
        }
        auto w = measure.window_moments(b0, b - b0);
        for (std::size_t k2 = 0; k2 <= d; ++k2) mom[k2] += w[k2];
        trial.sets.bands[i].push_back({lo + b0 * width, lo + b * width});
      }
      if (!(mom[0] > 0.0)) {
        ok = false;
        trial.errors[i] = INFINITY;
        continue;
      }
      double csum = 0.0;
      for (std::size_t k = 1; k <= d; ++k) csum += mom[k];
      double err = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        double diff = columns[i][k] - mom[k + 1] / csum;
        err += diff * diff;
      }
      trial.errors[i] = std::sqrt(err);
      trial.sets.values[i] = 1.0 / (mom[0] * measure.total_mass());
      ok = ok && trial.errors[i] <= eps;
    }
    if (ok) return trial;
  }
}

}  // namespace spectra
