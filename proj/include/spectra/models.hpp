#pragma once

// Model families: von Mises, generalized von Mises, Gaussian, step, banded and
// log-linear densities, with their pointwise algebra.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "spectra/csv.hpp"
#include "spectra/error.hpp"

namespace spectra {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct VonMisesParams {
  double a = 0.0;
  double b = 0.0;
  double s = 0.0;
  double width = 1.0;
};

/// Periodic shape h sampled at j/m, j = 0..m-1, on the unit period.
struct GeneralizedVonMisesParams {
  std::vector<double> shape;
  double a = 0.0;
  double b = 0.0;
  double s = 0.0;
  double width = 1.0;
};

struct GaussianParams {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

/// Cyclic indicator of [s, s + delta] on the unit torus.
struct StepParams {
  double s = 0.0;
  double delta = 1.0;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Band i is a union of half-open intervals [lo, hi) with value values[i].
struct BandedParams {
  std::vector<std::vector<Interval>> bands;
  std::vector<double> values;
};

struct LogLinearParams {
  std::vector<double> p;
  std::string basis;
};

using ModelParams = std::variant<VonMisesParams, GeneralizedVonMisesParams, GaussianParams, StepParams,
                                 BandedParams, LogLinearParams>;

// ---------------------------------------------------------------------------
// Validation

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(ErrorKind::InvalidInput, std::string("non-finite parameter ") + what);
}

inline void validate(const VonMisesParams& p) {
  require_finite(p.a, "a");
  require_finite(p.b, "b");
  require_finite(p.s, "s");
  require_finite(p.width, "width");
  if (!(p.width > 0.0)) throw Error(ErrorKind::InvalidInput, "von Mises width must be positive");
  if (p.a < 0.0) throw Error(ErrorKind::InvalidInput, "von Mises amplitude must be nonnegative");
}

/// Checks the sampled shape has exactly one strict maximum on the period.
inline void validate_shape(const std::vector<double>& h) {
  if (h.size() < 4) throw Error(ErrorKind::InvalidInput, "shape needs at least 4 samples");
  for (double v : h) require_finite(v, "shape");
  auto [lo, hi] = std::minmax_element(h.begin(), h.end());
  double range = *hi - *lo;
  if (!(range > 0.0)) throw Error(ErrorKind::InvalidInput, "shape is constant");
  std::size_t top = 0;
  for (double v : h) top += v >= *hi - 1e-12 * range;
  if (top != 1) throw Error(ErrorKind::InvalidInput, "shape maximum is not unique");
}

inline void validate(const GeneralizedVonMisesParams& p) {
  validate_shape(p.shape);
  validate(VonMisesParams{p.a, p.b, p.s, p.width});
}

inline void validate(const GaussianParams& p) {
  require_finite(p.alpha, "alpha");
  require_finite(p.beta, "beta");
  require_finite(p.gamma, "gamma");
}

inline void validate(const StepParams& p) {
  require_finite(p.s, "s");
  require_finite(p.delta, "delta");
  if (p.s < 0.0 || p.s >= 1.0) throw Error(ErrorKind::InvalidInput, "step start must lie in [0, 1)");
  if (!(p.delta > 0.0) || p.delta > 1.0) throw Error(ErrorKind::InvalidInput, "step width must lie in (0, 1]");
}

inline void validate(const BandedParams& p) {
  if (p.bands.empty() || p.bands.size() != p.values.size()) {
    throw Error(ErrorKind::InvalidInput, "banded model needs k >= 1 bands with one value each");
  }
  std::vector<Interval> all;
  for (std::size_t i = 0; i < p.bands.size(); ++i) {
    require_finite(p.values[i], "band value");
    if (p.values[i] < 0.0) throw Error(ErrorKind::InvalidInput, "band values must be nonnegative");
    for (auto iv : p.bands[i]) {
      require_finite(iv.lo, "band");
      require_finite(iv.hi, "band");
      if (!(iv.hi > iv.lo)) throw Error(ErrorKind::InvalidInput, "band interval must have positive length");
      all.push_back(iv);
    }
  }
  std::sort(all.begin(), all.end(), [](Interval x, Interval y) { return x.lo < y.lo; });
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (all[i].lo < all[i - 1].hi) throw Error(ErrorKind::InvalidInput, "bands overlap");
  }
}

inline void validate(const LogLinearParams& p) {
  for (double v : p.p) require_finite(v, "p");
}

inline void validate(const ModelParams& m) {
  std::visit([](const auto& p) { validate(p); }, m);
}

// ---------------------------------------------------------------------------
// Evaluation

inline double unit_frac(double x) {
  double f = x - std::floor(x);
  return f >= 1.0 ? 0.0 : f;
}

/// Periodic cubic (Catmull-Rom) interpolation of h at x in unit-period coordinates.
inline double eval_shape(const std::vector<double>& h, double x) {
  const std::size_t m = h.size();
  double pos = unit_frac(x) * double(m);
  auto i = static_cast<std::size_t>(pos) % m;
  double u = pos - std::floor(pos);
  double p0 = h[(i + m - 1) % m];
  double p1 = h[i];
  double p2 = h[(i + 1) % m];
  double p3 = h[(i + 2) % m];
  return p1 + 0.5 * u * (p2 - p0 + u * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + u * (3.0 * (p1 - p2) + p3 - p0)));
}

inline double log_eval(const VonMisesParams& p, double x) {
  return p.b + p.a * std::cos(kTwoPi * (x - p.s) / p.width);
}

inline double log_eval(const GeneralizedVonMisesParams& p, double x) {
  return p.b + p.a * eval_shape(p.shape, (x - p.s) / p.width);
}

inline double log_eval(const GaussianParams& p, double x) {
  return (p.alpha * x + p.beta) * x + p.gamma;
}

inline bool step_contains(const StepParams& p, double t) {
  if (p.delta >= 1.0) return true;
  return unit_frac(t - p.s) <= p.delta;
}

inline double eval_model(const VonMisesParams& p, double x) { return std::exp(log_eval(p, x)); }
inline double eval_model(const GeneralizedVonMisesParams& p, double x) { return std::exp(log_eval(p, x)); }
inline double eval_model(const GaussianParams& p, double x) { return std::exp(log_eval(p, x)); }
inline double eval_model(const StepParams& p, double t) { return step_contains(p, t) ? 1.0 : 0.0; }

inline double eval_model(const BandedParams& p, double x) {
  for (std::size_t i = 0; i < p.bands.size(); ++i) {
    for (auto iv : p.bands[i]) {
      if (x >= iv.lo && x < iv.hi) return p.values[i];
    }
  }
  return 0.0;
}

/// Log-linear members need their basis samples; see LogLinearBasis.
inline double eval_model(const LogLinearParams&, double) {
  throw Error(ErrorKind::InvalidInput, "log-linear evaluation needs a sampled basis");
}

inline double eval_model(const ModelParams& m, double x) {
  if (std::isnan(x)) throw Error(ErrorKind::InvalidInput, "NaN argument");
  validate(m);
  return std::visit([x](const auto& p) { return eval_model(p, x); }, m);
}

// ---------------------------------------------------------------------------
// Algebra

/// Product of two von Mises densities of equal width.
inline VonMisesParams multiply_von_mises(const VonMisesParams& p, const VonMisesParams& q) {
  validate(p);
  validate(q);
  if (std::abs(p.width - q.width) > 1e-12 * std::max(p.width, q.width)) {
    throw Error(ErrorKind::InvalidInput, "von Mises width mismatch");
  }
  double phi = kTwoPi * p.s / p.width;
  double psi = kTwoPi * q.s / q.width;
  double x = p.a * std::cos(phi) + q.a * std::cos(psi);
  double y = p.a * std::sin(phi) + q.a * std::sin(psi);
  VonMisesParams r;
  r.width = p.width;
  r.b = p.b + q.b;
  r.a = std::hypot(x, y);
  double scale = std::max(std::abs(p.a), std::abs(q.a));
  r.s = r.a <= 1e-15 * scale ? 0.0 : unit_frac(std::atan2(y, x) / kTwoPi) * p.width;
  if (r.a <= 1e-15 * scale) r.a = 0.0;
  return r;
}

/// e^t f.
inline VonMisesParams scale_model(VonMisesParams p, double t) {
  p.b += t;
  return p;
}

inline GaussianParams scale_model(GaussianParams p, double t) {
  p.gamma += t;
  return p;
}

inline BandedParams scale_model(BandedParams p, double t) {
  for (double& v : p.values) v *= std::exp(t);
  return p;
}

struct GaussianLimit {
  GaussianParams coeffs;
  double sup_gap = 0.0;
};

/// Sup over [lo, hi] of |f - g| by dense sampling plus golden-section refinement.
template <class F>
double sup_abs(F&& f, double lo, double hi, std::size_t samples = 20001) {
  std::size_t best_i = 0;
  double best = -1.0;
  std::vector<double> vals(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    double x = lo + (hi - lo) * double(i) / double(samples - 1);
    vals[i] = std::abs(f(x));
    if (vals[i] > best) {
      best = vals[i];
      best_i = i;
    }
  }
  double h = (hi - lo) / double(samples - 1);
  double a = std::max(lo, lo + h * (double(best_i) - 1.0));
  double b = std::min(hi, lo + h * (double(best_i) + 1.0));
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 80; ++it) {
    double x1 = b - g * (b - a);
    double x2 = a + g * (b - a);
    if (std::abs(f(x1)) > std::abs(f(x2))) b = x2;
    else a = x1;
  }
  return std::max(best, std::abs(f(0.5 * (a + b))));
}

/// Second-order expansion of the von Mises exponent about lambda_min.
inline GaussianLimit gaussian_limit_coeffs(const VonMisesParams& p, double lambda_min, double lambda_max) {
  validate(p);
  if (!(lambda_max > lambda_min)) throw Error(ErrorKind::InvalidInput, "empty domain");
  const double A = kTwoPi / p.width;
  const double c = std::cos(A * (p.s - lambda_min));
  const double s = std::sin(A * (p.s - lambda_min));
  double al = -A * A * p.a / 2.0 * c;
  double be = A * p.a * s;
  double ga = p.b + p.a * c;
  GaussianLimit out;
  out.coeffs.alpha = al;
  out.coeffs.beta = be - 2.0 * al * lambda_min;
  out.coeffs.gamma = ga - be * lambda_min + al * lambda_min * lambda_min;
  if (p.a == 0.0) return out;
  auto diff = [&](double x) {
    double u = x - lambda_min;
    return std::exp(log_eval(p, x)) - std::exp((al * u + be) * u + ga);
  };
  out.sup_gap = sup_abs(diff, lambda_min, lambda_max);
  return out;
}

// ---------------------------------------------------------------------------
// Sign changes

struct TwiceCyclic {
  std::size_t first = 0;  // cyclic index run where f - g >= 0
  std::size_t last = 0;
};

struct OtherSignPattern {
  std::size_t count = 0;
};

using SignPattern = std::variant<TwiceCyclic, OtherSignPattern>;

/// Cyclic sign structure of f - g on a grid carrying the probability weights `w`.
inline SignPattern count_sign_changes(const std::vector<double>& f, const std::vector<double>& g,
                                      const std::vector<double>& w) {
  const std::size_t n = f.size();
  if (g.size() != n || w.size() != n || n < 3) throw Error(ErrorKind::InvalidInput, "sign test needs equal cyclic grids");
  double mf = 0.0;
  double mg = 0.0;
  double sup = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mf += w[i] * f[i];
    mg += w[i] * g[i];
    sup = std::max(sup, std::abs(f[i] - g[i]));
  }
  if (std::abs(mf - 1.0) > 1e-9 || std::abs(mg - 1.0) > 1e-9) {
    throw Error(ErrorKind::InvalidInput, "sign test needs normalized densities");
  }
  if (sup < 1e-12) throw Error(ErrorKind::InvalidInput, "identical");
  const double zero = 1e-12 * sup;
  std::vector<int> sign(n);
  double pos_mass = 0.0;
  double neg_mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = f[i] - g[i];
    sign[i] = d > zero ? 1 : (d < -zero ? -1 : 0);
    if (sign[i] > 0) pos_mass += w[i];
    if (sign[i] < 0) neg_mass += w[i];
  }
  std::vector<int> nz;
  for (int s : sign) {
    if (s != 0) nz.push_back(s);
  }
  std::size_t changes = 0;
  for (std::size_t i = 0; i < nz.size(); ++i) changes += nz[i] != nz[(i + 1) % nz.size()];
  if (changes != 2 || !(pos_mass > 0.0) || !(neg_mass > 0.0)) return OtherSignPattern{changes};
  TwiceCyclic out;
  for (std::size_t i = 0; i < n; ++i) {
    if (sign[i] >= 0 && sign[(i + n - 1) % n] < 0) out.first = i;
  }
  std::size_t j = out.first;
  while (sign[(j + 1) % n] >= 0) j = (j + 1) % n;
  out.last = j;
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const ModelParams& m) {
  using nlohmann::json;
  return std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, VonMisesParams>) {
          return {{"type", "von_mises"}, {"a", p.a}, {"b", p.b}, {"s", p.s}, {"width", p.width}};
        } else if constexpr (std::is_same_v<T, GeneralizedVonMisesParams>) {
          return {{"type", "generalized_von_mises"}, {"shape", p.shape}, {"a", p.a},
                  {"b", p.b}, {"s", p.s}, {"width", p.width}};
        } else if constexpr (std::is_same_v<T, GaussianParams>) {
          return {{"type", "gaussian"}, {"alpha", p.alpha}, {"beta", p.beta}, {"gamma", p.gamma}};
        } else if constexpr (std::is_same_v<T, StepParams>) {
          return {{"type", "step"}, {"s", p.s}, {"delta", p.delta}};
        } else if constexpr (std::is_same_v<T, BandedParams>) {
          json bands = json::array();
          for (const auto& band : p.bands) {
            json b = json::array();
            for (auto iv : band) b.push_back({iv.lo, iv.hi});
            bands.push_back(b);
          }
          return {{"type", "banded"}, {"bands", bands}, {"values", p.values}};
        } else {
          return {{"type", "log_linear"}, {"p", p.p}, {"basis", p.basis}};
        }
      },
      m);
}

inline ModelParams model_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  ModelParams out;
  if (type == "von_mises") {
    out = VonMisesParams{j.at("a"), j.at("b"), j.at("s"), j.at("width")};
  } else if (type == "generalized_von_mises") {
    out = GeneralizedVonMisesParams{j.at("shape").get<std::vector<double>>(), j.at("a"), j.at("b"), j.at("s"),
                                    j.at("width")};
  } else if (type == "gaussian") {
    out = GaussianParams{j.at("alpha"), j.at("beta"), j.at("gamma")};
  } else if (type == "step") {
    out = StepParams{j.at("s"), j.at("delta")};
  } else if (type == "banded") {
    BandedParams p;
    for (const auto& band : j.at("bands")) {
      std::vector<Interval> ivs;
      for (const auto& iv : band) ivs.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
      p.bands.push_back(ivs);
    }
    p.values = j.at("values").get<std::vector<double>>();
    out = p;
  } else if (type == "log_linear") {
    out = LogLinearParams{j.at("p").get<std::vector<double>>(), j.value("basis", std::string())};
  } else {
    throw Error(ErrorKind::Parse, "unknown model type '" + type + "'");
  }
  validate(out);
  return out;
}

}  // namespace spectra
