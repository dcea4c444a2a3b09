#pragma once

// Sensors, spectral densities and the color map on a uniform wavelength grid.
//
// All integrals use the trapezoid rule over the grid nodes; discrete parts of a
// measure are carried as a finite atom list and integrated exactly against the
// linearly interpolated response.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spectra/csv.hpp"
#include "spectra/error.hpp"

namespace spectra {

inline constexpr std::size_t kMinGridSamples = 16;
inline constexpr double kSupportThreshold = 1e-12;
inline constexpr double kNegativeResponseTolerance = 1e-9;

class WavelengthGrid {
 public:
  WavelengthGrid(double lambda_min, double lambda_max, std::size_t count)
      : min_(lambda_min), max_(lambda_max), count_(count) {
    if (!std::isfinite(lambda_min) || !std::isfinite(lambda_max) || !(lambda_min < lambda_max)) {
      throw Error(ErrorKind::InvalidInput, "wavelength grid needs lambda_min < lambda_max");
    }
    if (count < kMinGridSamples) {
      throw Error(ErrorKind::InvalidInput, "wavelength grid needs at least " +
                                               std::to_string(kMinGridSamples) + " samples");
    }
  }

  /// Builds a grid from explicit samples, which must be uniformly spaced.
  static WavelengthGrid from_samples(std::span<const double> samples) {
    if (samples.size() < 2) {
      throw Error(ErrorKind::InvalidInput, "wavelength grid needs at least 2 samples");
    }
    for (std::size_t i = 1; i < samples.size(); ++i) {
      if (!(samples[i] > samples[i - 1])) {
        throw Error(ErrorKind::InvalidInput, "non-monotone wavelengths at row " + std::to_string(i));
      }
    }
    double h = (samples.back() - samples.front()) / double(samples.size() - 1);
    for (std::size_t i = 1; i < samples.size(); ++i) {
      if (std::abs((samples[i] - samples[i - 1]) - h) > 1e-6 * h) {
        throw Error(ErrorKind::InvalidInput, "non-uniform wavelength spacing at row " + std::to_string(i));
      }
    }
    return WavelengthGrid(samples.front(), samples.back(), samples.size());
  }

  double lambda_min() const { return min_; }
  double lambda_max() const { return max_; }
  double spacing() const { return (max_ - min_) / double(count_ - 1); }
  std::size_t size() const { return count_; }

  double operator[](std::size_t i) const {
    return i + 1 == count_ ? max_ : min_ + spacing() * double(i);
  }

  std::vector<double> samples() const {
    std::vector<double> out(count_);
    for (std::size_t i = 0; i < count_; ++i) out[i] = (*this)[i];
    return out;
  }

  std::vector<double> trapezoid_weights() const {
    std::vector<double> w(count_, spacing());
    w.front() *= 0.5;
    w.back() *= 0.5;
    return w;
  }

  bool contains(double lambda, double slack = 1e-9) const {
    return lambda >= min_ - slack && lambda <= max_ + slack;
  }

  /// Cell index i and fraction u with lambda = (1-u) x_i + u x_{i+1}; clamped to the grid.
  std::pair<std::size_t, double> locate(double lambda) const {
    double pos = (lambda - min_) / spacing();
    if (pos <= 0.0) return {0, 0.0};
    if (pos >= double(count_ - 1)) return {count_ - 2, 1.0};
    auto i = static_cast<std::size_t>(pos);
    if (i > count_ - 2) i = count_ - 2;
    return {i, pos - double(i)};
  }

  bool operator==(const WavelengthGrid&) const = default;

 private:
  double min_;
  double max_;
  std::size_t count_;
};

/// Linear interpolation of grid samples; zero outside the grid.
inline double interpolate(const WavelengthGrid& grid, std::span<const double> values, double lambda) {
  if (!grid.contains(lambda)) return 0.0;
  auto [i, u] = grid.locate(lambda);
  return (1.0 - u) * values[i] + u * values[i + 1];
}

class Sensor {
 public:
  Sensor(WavelengthGrid grid, std::vector<std::vector<double>> channels)
      : grid_(grid), channels_(std::move(channels)) {
    validate();
    sums_.assign(grid_.size(), 0.0);
    for (const auto& ch : channels_) {
      for (std::size_t i = 0; i < grid_.size(); ++i) sums_[i] += ch[i];
    }
  }

  const WavelengthGrid& grid() const { return grid_; }
  std::size_t dims() const { return channels_.size(); }
  const std::vector<double>& channel(std::size_t k) const { return channels_[k]; }

  std::vector<double> response(std::size_t i) const {
    std::vector<double> out(dims());
    for (std::size_t k = 0; k < dims(); ++k) out[k] = channels_[k][i];
    return out;
  }

  /// chi(lambda) by linear interpolation; zero outside the support.
  std::vector<double> response_at(double lambda) const {
    std::vector<double> out(dims(), 0.0);
    if (!grid_.contains(lambda)) return out;
    auto [i, u] = grid_.locate(lambda);
    for (std::size_t k = 0; k < dims(); ++k) {
      out[k] = (1.0 - u) * channels_[k][i] + u * channels_[k][i + 1];
    }
    return out;
  }

  /// <chi(lambda_i), 1> at every node.
  const std::vector<double>& response_sums() const { return sums_; }

  double response_sum_at(double lambda) const { return interpolate(grid_, sums_, lambda); }

 private:
  void validate() const {
    if (channels_.size() < 2) throw Error(ErrorKind::InvalidInput, "fewer than 2 channels");
    const std::size_t n = grid_.size();
    for (std::size_t k = 0; k < channels_.size(); ++k) {
      const auto& ch = channels_[k];
      if (ch.size() != n) throw Error(ErrorKind::InvalidInput, "channel length does not match grid");
      bool any_positive = false;
      for (double v : ch) {
        if (!std::isfinite(v)) throw Error(ErrorKind::InvalidInput, "non-finite response value");
        if (v < 0.0) throw Error(ErrorKind::InvalidInput, "negative response value");
        any_positive = any_positive || v > 0.0;
      }
      if (!any_positive) {
        throw Error(ErrorKind::Degenerate, "degenerate channel " + std::to_string(k));
      }
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
      bool any = false;
      for (const auto& ch : channels_) any = any || ch[i] > 0.0;
      if (!any) {
        throw Error(ErrorKind::Degenerate,
                    "response vanishes inside the support at " + std::to_string(grid_[i]) + " nm");
      }
    }
    Eigen::MatrixXd m(channels_.size(), n);
    for (std::size_t k = 0; k < channels_.size(); ++k) {
      for (std::size_t i = 0; i < n; ++i) m(Eigen::Index(k), Eigen::Index(i)) = channels_[k][i];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m * m.transpose());
    lu.setThreshold(1e-12);
    if (lu.rank() < Eigen::Index(channels_.size())) {
      throw Error(ErrorKind::Degenerate, "degenerate color cone: channels are linearly dependent");
    }
  }

  WavelengthGrid grid_;
  std::vector<std::vector<double>> channels_;
  std::vector<double> sums_;
};

/// Nonnegative spectral density on a grid plus a finite list of atoms.
class Density {
 public:
  Density(WavelengthGrid grid, std::vector<double> values, std::vector<Atom> atoms = {})
      : grid_(grid), values_(std::move(values)), atoms_(std::move(atoms)) {
    if (values_.size() != grid_.size()) {
      throw Error(ErrorKind::InvalidInput, "density length does not match grid");
    }
    for (double& v : values_) {
      if (!std::isfinite(v)) throw Error(ErrorKind::InvalidInput, "non-finite density value");
      if (v < -1e-12) throw Error(ErrorKind::InvalidInput, "negative density value");
      v = std::max(v, 0.0);
    }
    for (const auto& atom : atoms_) {
      if (!std::isfinite(atom.lambda) || !std::isfinite(atom.weight)) {
        throw Error(ErrorKind::InvalidInput, "non-finite atom");
      }
      if (atom.weight < 0.0) throw Error(ErrorKind::InvalidInput, "negative atom weight");
      if (!grid_.contains(atom.lambda)) {
        throw Error(ErrorKind::InvalidInput, "atom at " + std::to_string(atom.lambda) + " nm outside grid");
      }
    }
  }

  static Density constant(const WavelengthGrid& grid, double value = 1.0) {
    return Density(grid, std::vector<double>(grid.size(), value));
  }

  const WavelengthGrid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<Atom>& atoms() const { return atoms_; }

  double value_at(double lambda) const { return interpolate(grid_, values_, lambda); }

 private:
  WavelengthGrid grid_;
  std::vector<double> values_;
  std::vector<Atom> atoms_;
};

struct Color {
  std::vector<double> components;

  double sum() const { return std::accumulate(components.begin(), components.end(), 0.0); }
  std::size_t size() const { return components.size(); }
  double operator[](std::size_t k) const { return components[k]; }
};

/// Point of the unit-sum hyperplane A.
class Chromaticity {
 public:
  static constexpr double kSumTolerance = 1e-12;

  explicit Chromaticity(std::vector<double> components) : components_(std::move(components)) {
    if (components_.size() < 2) throw Error(ErrorKind::InvalidInput, "chromaticity needs d >= 2");
    double s = 0.0;
    for (double v : components_) {
      if (!std::isfinite(v)) throw Error(ErrorKind::InvalidInput, "non-finite chromaticity");
      s += v;
    }
    if (std::abs(s - 1.0) > kSumTolerance) {
      throw Error(ErrorKind::InvalidInput, "chromaticity components must sum to 1");
    }
  }

  const std::vector<double>& components() const { return components_; }
  std::size_t size() const { return components_.size(); }
  double operator[](std::size_t k) const { return components_[k]; }

  bool operator==(const Chromaticity&) const = default;

 private:
  std::vector<double> components_;
};

inline double l1_distance(const Chromaticity& a, const Chromaticity& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
  return s;
}

// ---------------------------------------------------------------------------
// Ingestion

/// Builds a sensor from a `wavelength,ch0,ch1,...` table, trimming the support to
/// the smallest interval outside which every channel is below 1e-12 of its max.
inline Sensor load_sensor(const Table& table) {
  if (table.columns.size() < 3) throw Error(ErrorKind::InvalidInput, "fewer than 2 channels");
  const auto& wl = table.columns.front();
  const std::size_t n = wl.size();
  for (std::size_t i = 1; i < n; ++i) {
    if (!(wl[i] > wl[i - 1])) {
      throw Error(ErrorKind::InvalidInput, "non-monotone wavelengths at row " + std::to_string(i + 1));
    }
  }
  std::vector<std::vector<double>> channels(table.columns.begin() + 1, table.columns.end());
  std::vector<double> thresholds;
  for (auto& ch : channels) {
    double peak = 0.0;
    for (double& v : ch) {
      if (!std::isfinite(v)) throw Error(ErrorKind::InvalidInput, "non-finite response value");
      if (v < -kNegativeResponseTolerance) {
        throw Error(ErrorKind::InvalidInput, "negative response value " + format_double(v));
      }
      v = std::max(v, 0.0);
      peak = std::max(peak, v);
    }
    thresholds.push_back(kSupportThreshold * peak);
  }
  std::size_t first = n;
  std::size_t last = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < channels.size(); ++k) {
      if (channels[k][i] > 0.0 && channels[k][i] >= thresholds[k]) {
        first = std::min(first, i);
        last = std::max(last, i);
      }
    }
  }
  if (first >= last) throw Error(ErrorKind::Degenerate, "sensor has empty support");
  std::vector<double> kept(wl.begin() + std::ptrdiff_t(first), wl.begin() + std::ptrdiff_t(last) + 1);
  auto grid = WavelengthGrid::from_samples(kept);
  for (auto& ch : channels) {
    ch = std::vector<double>(ch.begin() + std::ptrdiff_t(first), ch.begin() + std::ptrdiff_t(last) + 1);
  }
  return Sensor(grid, std::move(channels));
}

inline Sensor load_sensor_file(const std::string& path) {
  auto table = read_table_file(path);
  try {
    return load_sensor(table);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

/// Density from a `wavelength,value` table with optional atom comment lines.
inline Density load_density(const Table& table) {
  if (table.columns.size() != 2) {
    throw Error(ErrorKind::InvalidInput, "density table needs exactly one value column");
  }
  auto grid = WavelengthGrid::from_samples(table.columns[0]);
  return Density(grid, table.columns[1], table.atoms);
}

inline Density load_density_file(const std::string& path) {
  auto table = read_table_file(path);
  try {
    return load_density(table);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Color map

/// Linear resampling onto `target`; the source grid must cover the target range.
inline Density resample(const Density& spd, const WavelengthGrid& target) {
  if (spd.grid() == target) return spd;
  if (!spd.grid().contains(target.lambda_min()) || !spd.grid().contains(target.lambda_max())) {
    throw Error(ErrorKind::GridMismatch, "density grid does not cover the sensor support");
  }
  std::vector<double> values(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) values[i] = spd.value_at(target[i]);
  std::vector<Atom> atoms;
  for (const auto& atom : spd.atoms()) {
    if (target.contains(atom.lambda)) atoms.push_back(atom);
  }
  return Density(target, std::move(values), std::move(atoms));
}

inline Color tristimulus(const Sensor& sensor, const Density& spd) {
  const Density density = resample(spd, sensor.grid());
  const auto w = sensor.grid().trapezoid_weights();
  Color c{std::vector<double>(sensor.dims(), 0.0)};
  for (std::size_t k = 0; k < sensor.dims(); ++k) {
    const auto& ch = sensor.channel(k);
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * ch[i] * density.values()[i];
    c.components[k] = acc;
  }
  for (const auto& atom : density.atoms()) {
    auto chi = sensor.response_at(atom.lambda);
    for (std::size_t k = 0; k < sensor.dims(); ++k) c.components[k] += atom.weight * chi[k];
  }
  return c;
}

inline Chromaticity chromaticity(const Color& color) {
  double s = color.sum();
  if (!(s > 0.0) || !std::isfinite(s)) throw Error(ErrorKind::InvalidInput, "zero color");
  std::vector<double> out(color.size());
  for (std::size_t k = 0; k < color.size(); ++k) out[k] = color[k] / s;
  double r = std::accumulate(out.begin(), out.end(), 0.0) - 1.0;
  out[std::size_t(std::max_element(out.begin(), out.end()) - out.begin())] -= r;
  return Chromaticity(std::move(out));
}

/// eta(lambda) = chi / <1, chi>. Where the denominator vanishes at an end of the
/// support the ratio is extended linearly from the two innermost valid samples.
inline Chromaticity normalized_response(const Sensor& sensor, double lambda) {
  const auto& grid = sensor.grid();
  if (!std::isfinite(lambda) || !grid.contains(lambda)) {
    throw Error(ErrorKind::InvalidInput, "wavelength " + format_double(lambda) + " outside support");
  }
  auto chi = sensor.response_at(lambda);
  double s = std::accumulate(chi.begin(), chi.end(), 0.0);
  double scale = *std::max_element(sensor.response_sums().begin(), sensor.response_sums().end());
  if (s > 1e-300 * scale && s > 0.0) return chromaticity(Color{chi});

  const auto& sums = sensor.response_sums();
  const std::size_t n = grid.size();
  auto [cell, u] = grid.locate(lambda);
  bool near_low = cell == 0 && sums[0] <= 0.0;
  bool near_high = cell == n - 2 && sums[n - 1] <= 0.0;
  if (!near_low && !near_high) {
    throw Error(ErrorKind::Degenerate, "response vanishes at " + format_double(lambda) + " nm");
  }
  std::vector<std::size_t> valid;
  if (near_low) {
    for (std::size_t i = 0; i < n && valid.size() < 2; ++i) if (sums[i] > 0.0) valid.push_back(i);
  } else {
    for (std::size_t i = n; i-- > 0 && valid.size() < 2;) if (sums[i] > 0.0) valid.push_back(i);
  }
  if (valid.size() < 2) {
    throw Error(ErrorKind::Degenerate, "cannot extend normalized response to " + format_double(lambda));
  }
  const double l1 = grid[valid[0]];
  const double l2 = grid[valid[1]];
  const double t = (lambda - l1) / (l1 - l2);
  std::vector<double> out(sensor.dims());
  for (std::size_t k = 0; k < sensor.dims(); ++k) {
    double e1 = sensor.channel(k)[valid[0]] / sums[valid[0]];
    double e2 = sensor.channel(k)[valid[1]] / sums[valid[1]];
    out[k] = std::max(0.0, e1 + (e1 - e2) * t);
  }
  return chromaticity(Color{out});
}

/// mu~ = <chi, 1> mu, on the sensor grid.
inline Density reweighted_density(const Sensor& sensor, const Density& spd) {
  const Density density = resample(spd, sensor.grid());
  std::vector<double> values(sensor.grid().size());
  const auto& sums = sensor.response_sums();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = density.values()[i] * sums[i];
  std::vector<Atom> atoms;
  for (const auto& atom : density.atoms()) {
    atoms.push_back({atom.lambda, atom.weight * sensor.response_sum_at(atom.lambda)});
  }
  return Density(sensor.grid(), std::move(values), std::move(atoms));
}

inline double total_mass(const Density& density) {
  const auto w = density.grid().trapezoid_weights();
  double m = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) m += w[i] * density.values()[i];
  for (const auto& atom : density.atoms()) m += atom.weight;
  return m;
}

/// c_mu(f) = c(f mu) for f sampled on the sensor grid.
inline Color color_of_density(const Sensor& sensor, const Density& reference, std::span<const double> f) {
  if (f.size() != sensor.grid().size()) {
    throw Error(ErrorKind::GridMismatch, "sampled function does not match the sensor grid");
  }
  std::vector<double> values(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!std::isfinite(f[i])) throw Error(ErrorKind::InvalidInput, "non-finite density factor");
    if (f[i] < -1e-12) throw Error(ErrorKind::InvalidInput, "negative density factor");
    values[i] = std::max(f[i], 0.0);
  }
  const Density ref = resample(reference, sensor.grid());
  if (!(total_mass(reweighted_density(sensor, ref)) > 0.0)) {
    throw Error(ErrorKind::Degenerate, "empty reference support");
  }
  std::vector<double> product(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) product[i] = values[i] * ref.values()[i];
  std::vector<Atom> atoms;
  for (const auto& atom : ref.atoms()) {
    atoms.push_back({atom.lambda, atom.weight * std::max(0.0, interpolate(sensor.grid(), values, atom.lambda))});
  }
  return tristimulus(sensor, Density(sensor.grid(), std::move(product), std::move(atoms)));
}

inline Chromaticity white_point(const Sensor& sensor, const Density& reference) {
  std::vector<double> ones(sensor.grid().size(), 1.0);
  return chromaticity(color_of_density(sensor, reference, ones));
}

}  // namespace spectra
