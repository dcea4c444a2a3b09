#pragma once

// The reweighted reference measure restricted to a glued parameter torus, as
// node weights (trapezoid) and as a piecewise-linear density (for exact window
// integrals of step functions).

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "spectra/locus.hpp"
#include "spectra/models.hpp"
#include "spectra/sensor.hpp"

namespace spectra {

inline constexpr double kLogUnderflow = 36.84;  // ~ -ln(1e-16)

/// h(x) on the unit period: cos(2 pi x) unless a sampled shape is given.
struct Kernel {
  std::optional<std::vector<double>> shape;

  double operator()(double x) const {
    return shape ? eval_shape(*shape, x) : std::cos(kTwoPi * x);
  }
  bool cosine() const { return !shape; }
};

class GluedMeasure {
 public:
  GluedMeasure(const Sensor& sensor, const Density& reference, const TorusParam& param)
      : d_(sensor.dims()), width_(param.total_width()) {
    const Density ref = resample(reference, sensor.grid());
    const auto& grid = sensor.grid();
    const auto w = grid.trapezoid_weights();
    const auto& sums = sensor.response_sums();
    const std::size_t n = grid.size();

    std::vector<std::optional<double>> tpos(n);
    for (std::size_t i = 0; i < n; ++i) tpos[i] = param.inverse(grid[i]);

    std::vector<double> dens(n);
    for (std::size_t i = 0; i < n; ++i) dens[i] = ref.values()[i] * sums[i];

    double mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!tpos[i] || !(dens[i] > 0.0)) continue;
      add_node(*tpos[i], w[i] * dens[i], normalized_response(sensor, grid[i]).components(), grid[i]);
      mass += w[i] * dens[i];
    }
    for (const auto& atom : ref.atoms()) {
      auto t = param.inverse(atom.lambda);
      double m = atom.weight * sensor.response_sum_at(atom.lambda);
      if (!t || !(m > 0.0)) continue;
      atoms_.push_back(nodes_.size());
      add_node(*t, m, normalized_response(sensor, atom.lambda).components(), atom.lambda);
      mass += m;
    }
    if (!(mass > 0.0)) throw Error(ErrorKind::Degenerate, "empty reference support");
    mass_ = mass;
    for (double& x : weight_) x /= mass;

    // Piecewise-linear density cells between consecutive covered nodes of one piece.
    double cell_mass = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!tpos[i] || !tpos[i + 1]) continue;
      double t0 = *tpos[i];
      double t1 = *tpos[i + 1];
      auto tm = param.inverse(0.5 * (grid[i] + grid[i + 1]));
      if (!(t1 > t0) || !tm || !(*tm > t0 && *tm < t1)) continue;
      Cell c{t0, t1, {}, {}};
      c.v0.assign(d_ + 1, 0.0);
      c.v1.assign(d_ + 1, 0.0);
      c.v0[0] = dens[i] / mass;
      c.v1[0] = dens[i + 1] / mass;
      for (std::size_t k = 0; k < d_; ++k) {
        c.v0[k + 1] = ref.values()[i] * sensor.channel(k)[i] / mass;
        c.v1[k + 1] = ref.values()[i + 1] * sensor.channel(k)[i + 1] / mass;
      }
      cells_.push_back(std::move(c));
    }
    std::sort(cells_.begin(), cells_.end(), [](const Cell& a, const Cell& b) { return a.t0 < b.t0; });
    prefix_.assign((cells_.size() + 1) * (d_ + 1), 0.0);
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      for (std::size_t k = 0; k <= d_; ++k) {
        prefix_[(c + 1) * (d_ + 1) + k] =
            prefix_[c * (d_ + 1) + k] + 0.5 * (cells_[c].t1 - cells_[c].t0) * (cells_[c].v0[k] + cells_[c].v1[k]);
      }
      cell_mass += 0.5 * (cells_[c].t1 - cells_[c].t0) * (cells_[c].v0[0] + cells_[c].v1[0]);
    }
    double atom_mass = 0.0;
    for (std::size_t a : atoms_) atom_mass += weight_[a];
    step_total_ = cell_mass + atom_mass;

    double h = grid.spacing() * width_ / span_of(param);
    amplitude_limit_ = kLogUnderflow / (1.0 - std::cos(kTwoPi * h / width_));

    cos_.resize(nodes_.size());
    sin_.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      cos_[i] = std::cos(kTwoPi * nodes_[i] / width_);
      sin_[i] = std::sin(kTwoPi * nodes_[i] / width_);
    }
  }

  std::size_t dims() const { return d_; }
  std::size_t size() const { return nodes_.size(); }
  double width() const { return width_; }
  double total_mass() const { return mass_; }
  const std::vector<double>& t() const { return nodes_; }
  const std::vector<double>& weights() const { return weight_; }
  const std::vector<double>& lambdas() const { return lambdas_; }
  const double* eta(std::size_t i) const { return &eta_[i * d_]; }

  /// Largest amplitude whose cosine bump still spans two nodes.
  double amplitude_limit() const { return amplitude_limit_; }

  /// ln of sum_i w_i exp(a h((t_i - s)/W)), and the count of nodes that matter.
  std::pair<double, std::size_t> log_partition(const Kernel& h, double a, double s) const {
    std::vector<double> lw(nodes_.size());
    double top = -INFINITY;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      lw[i] = std::log(weight_[i]) + a * kernel_at(h, i, s);
      top = std::max(top, lw[i]);
    }
    double acc = 0.0;
    std::size_t support = 0;
    for (double v : lw) {
      acc += std::exp(v - top);
      support += v >= top - kLogUnderflow;
    }
    return {top + std::log(acc), support};
  }

  /// Chromaticity of exp(a h((t - s)/W)) against the measure.
  std::vector<double> forward_kernel(const Kernel& h, double a, double s) const {
    const std::size_t n = nodes_.size();
    std::vector<double> ex(n);
    double top = -INFINITY;
    for (std::size_t i = 0; i < n; ++i) {
      ex[i] = a * kernel_at(h, i, s);
      top = std::max(top, ex[i]);
    }
    std::vector<double> acc(d_, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double f = weight_[i] * std::exp(ex[i] - top);
      total += f;
      const double* e = eta(i);
      for (std::size_t k = 0; k < d_; ++k) acc[k] += f * e[k];
    }
    for (double& v : acc) v /= total;
    return acc;
  }

  /// Mass and first moments of the window [s, s + delta) (unit coordinates) on the torus.
  std::vector<double> window_moments(double s_unit, double delta) const {
    std::vector<double> out(d_ + 1, 0.0);
    if (delta >= 1.0) {
      for (std::size_t k = 0; k <= d_; ++k) out[k] = prefix_[cells_.size() * (d_ + 1) + k];
      for (std::size_t a : atoms_) accumulate_atom(a, out);
      return out;
    }
    double a = unit_frac(s_unit) * width_;
    double b = a + delta * width_;
    auto add = [&](double x, double y, double sign) {
      auto fy = cumulative(y);
      auto fx = cumulative(x);
      for (std::size_t k = 0; k <= d_; ++k) out[k] += sign * (fy[k] - fx[k]);
    };
    if (b <= width_) {
      add(a, b, 1.0);
    } else {
      add(a, width_, 1.0);
      add(0.0, b - width_, 1.0);
    }
    StepParams p{unit_frac(s_unit), delta};
    for (std::size_t at : atoms_) {
      if (step_contains(p, nodes_[at] / width_)) accumulate_atom(at, out);
    }
    return out;
  }

  std::vector<double> forward_step(double s_unit, double delta) const {
    auto m = window_moments(s_unit, delta);
    if (!(m[0] > 0.0)) throw Error(ErrorKind::Degenerate, "step window carries no mass");
    std::vector<double> c(d_);
    double sum = 0.0;
    for (std::size_t k = 0; k < d_; ++k) sum += m[k + 1];
    for (std::size_t k = 0; k < d_; ++k) c[k] = m[k + 1] / sum;
    return c;
  }

  /// Window mass relative to the full step measure.
  double window_mass(double s_unit, double delta) const { return window_moments(s_unit, delta)[0] / step_total_; }

  std::vector<double> white() const { return forward_kernel(Kernel{}, 0.0, 0.0); }
  std::vector<double> step_white() const { return forward_step(0.0, 1.0); }

  /// Naive cell-by-cell evaluation of the step window, for cross-checks.
  std::vector<double> forward_step_direct(double s_unit, double delta) const {
    std::vector<double> m(d_ + 1, 0.0);
    double a = delta >= 1.0 ? 0.0 : unit_frac(s_unit) * width_;
    double b = delta >= 1.0 ? width_ : a + delta * width_;
    for (const auto& c : cells_) {
      for (double shift : {0.0, width_}) {
        double lo = std::max(c.t0 + shift, a);
        double hi = std::min(c.t1 + shift, b);
        if (!(hi > lo)) continue;
        double u0 = (lo - shift - c.t0) / (c.t1 - c.t0);
        double u1 = (hi - shift - c.t0) / (c.t1 - c.t0);
        for (std::size_t k = 0; k <= d_; ++k) {
          double v0 = c.v0[k] + (c.v1[k] - c.v0[k]) * u0;
          double v1 = c.v0[k] + (c.v1[k] - c.v0[k]) * u1;
          m[k] += 0.5 * (hi - lo) * (v0 + v1);
        }
      }
    }
    StepParams p{unit_frac(s_unit), std::min(delta, 1.0)};
    for (std::size_t at : atoms_) {
      if (step_contains(p, nodes_[at] / width_)) accumulate_atom(at, m);
    }
    std::vector<double> out(d_);
    double sum = 0.0;
    for (std::size_t k = 0; k < d_; ++k) sum += m[k + 1];
    for (std::size_t k = 0; k < d_; ++k) out[k] = m[k + 1] / sum;
    return out;
  }

 private:
  struct Cell {
    double t0, t1;
    std::vector<double> v0, v1;  // density, then density * chi
  };

  static double span_of(const TorusParam& param) {
    double s = 0.0;
    for (const auto& p : param.pieces()) s += p.lambda1 - p.lambda0;
    return s;
  }

  void add_node(double t, double w, const std::vector<double>& e, double lambda) {
    nodes_.push_back(t);
    weight_.push_back(w);
    lambdas_.push_back(lambda);
    eta_.insert(eta_.end(), e.begin(), e.end());
  }

  double kernel_at(const Kernel& h, std::size_t i, double s) const {
    if (h.cosine()) {
      double as = kTwoPi * s / width_;
      return cos_.empty() ? std::cos(kTwoPi * (nodes_[i] - s) / width_)
                          : cos_[i] * std::cos(as) + sin_[i] * std::sin(as);
    }
    return h((nodes_[i] - s) / width_);
  }

  void accumulate_atom(std::size_t a, std::vector<double>& out) const {
    out[0] += weight_[a];
    for (std::size_t k = 0; k < d_; ++k) out[k + 1] += weight_[a] * eta(a)[k];
  }

  /// Integral of the piecewise-linear cells over [0, x].
  std::vector<double> cumulative(double x) const {
    std::vector<double> out(d_ + 1, 0.0);
    auto it = std::upper_bound(cells_.begin(), cells_.end(), x, [](double v, const Cell& c) { return v < c.t0; });
    std::size_t c = std::size_t(it - cells_.begin());
    if (c == 0) return out;
    const Cell& cell = cells_[c - 1];
    for (std::size_t k = 0; k <= d_; ++k) out[k] = prefix_[(c - 1) * (d_ + 1) + k];
    double hi = std::min(x, cell.t1);
    double u = (hi - cell.t0) / (cell.t1 - cell.t0);
    for (std::size_t k = 0; k <= d_; ++k) {
      double vx = cell.v0[k] + (cell.v1[k] - cell.v0[k]) * u;
      out[k] += 0.5 * (hi - cell.t0) * (cell.v0[k] + vx);
    }
    return out;
  }

  std::size_t d_;
  double width_;
  double mass_ = 0.0;
  double step_total_ = 0.0;
  double amplitude_limit_ = INFINITY;
  std::vector<double> nodes_;
  std::vector<double> weight_;
  std::vector<double> lambdas_;
  std::vector<double> eta_;
  std::vector<std::size_t> atoms_;
  std::vector<Cell> cells_;
  std::vector<double> prefix_;
  std::vector<double> cos_;
  std::vector<double> sin_;
};

/// b with the normalized member integrating to 1 against the unit-mass reweighted reference.
inline double normalization_b(const GluedMeasure& m, double a, double s, const Kernel& h = {}) {
  if (!std::isfinite(a) || !std::isfinite(s)) throw Error(ErrorKind::InvalidInput, "non-finite parameter");
  if (a < 0.0) throw Error(ErrorKind::InvalidInput, "amplitude must be nonnegative");
  auto [lz, support] = m.log_partition(h, a, s);
  if (support < 2) {
    throw Error(ErrorKind::Resolution, "resolution exceeded: a = " + format_double(a) +
                                           " leaves fewer than 2 grid points in the effective support");
  }
  return -lz;
}

inline double normalization_b(const Sensor& sensor, const Density& reference, double a, double s,
                              const TorusParam& gluing, const Kernel& h = {}) {
  return normalization_b(GluedMeasure(sensor, reference, gluing), a, s, h);
}

inline TorusParam full_support(const Sensor& sensor) {
  return identity_param(sensor.grid().lambda_min(), sensor.grid().lambda_max());
}

}  // namespace spectra
