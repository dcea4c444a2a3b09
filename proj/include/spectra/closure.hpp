#pragma once

// Empirical closure of model families under pointwise sums and products.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spectra/error.hpp"
#include "spectra/models.hpp"

namespace spectra {

/// A family sampled on a fixed grid with a best-fit projection back onto itself.
template <class F>
concept ClosureFamily = requires(const F& f, std::mt19937_64& rng, const std::vector<double>& v,
                                 const typename F::Member& m) {
  { f.random_member(rng) } -> std::same_as<typename F::Member>;
  { f.sample(m) } -> std::same_as<std::vector<double>>;
  { f.project(v) } -> std::same_as<std::vector<double>>;
  { f.name() } -> std::convertible_to<std::string>;
};

inline std::vector<double> unit_grid(std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = double(i) / double(n);
  return x;
}

inline double relative_l2(const std::vector<double>& v, const std::vector<double>& w) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    num += (v[i] - w[i]) * (v[i] - w[i]);
    den += v[i] * v[i];
  }
  return std::sqrt(num / den);
}

namespace closure_detail {

inline std::vector<double> least_squares(const Eigen::MatrixXd& basis, const std::vector<double>& v) {
  Eigen::Map<const Eigen::VectorXd> y(v.data(), Eigen::Index(v.size()));
  Eigen::VectorXd c = basis.colPivHouseholderQr().solve(y);
  Eigen::VectorXd fit = basis * c;
  return {fit.data(), fit.data() + fit.size()};
}

}  // namespace closure_detail

class BandedFamily {
 public:
  using Member = std::vector<double>;

  explicit BandedFamily(std::size_t k = 4, std::size_t n = 256) : k_(k), x_(unit_grid(n)) {
    basis_ = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(k));
    for (std::size_t i = 0; i < n; ++i) basis_(Eigen::Index(i), Eigen::Index(band_of(x_[i]))) = 1.0;
  }

  std::string name() const { return "banded(k=" + std::to_string(k_) + ")"; }

  Member random_member(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> v(0.1, 2.0);
    Member m(k_);
    for (double& x : m) x = v(rng);
    return m;
  }

  std::vector<double> sample(const Member& m) const {
    std::vector<double> out(x_.size());
    for (std::size_t i = 0; i < x_.size(); ++i) out[i] = m[band_of(x_[i])];
    return out;
  }

  std::vector<double> project(const std::vector<double>& v) const { return closure_detail::least_squares(basis_, v); }

 private:
  std::size_t band_of(double x) const { return std::min(k_ - 1, std::size_t(x * double(k_))); }

  std::size_t k_;
  std::vector<double> x_;
  Eigen::MatrixXd basis_;
};

class VonMisesFamily {
 public:
  using Member = VonMisesParams;

  explicit VonMisesFamily(std::size_t n = 256) : x_(unit_grid(n)) {}

  std::string name() const { return "von_mises"; }

  Member random_member(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> a(0.5, 3.0), b(-1.0, 1.0), s(0.0, 1.0);
    VonMisesParams p;
    p.a = a(rng);
    p.b = b(rng);
    p.s = s(rng);
    p.width = 1.0;
    return p;
  }

  std::vector<double> sample(const Member& m) const {
    std::vector<double> out(x_.size());
    for (std::size_t i = 0; i < x_.size(); ++i) out[i] = eval_model(m, x_[i]);
    return out;
  }

  /// Fit of exp(c0 + c1 cos + c2 sin): log-linear start, then Gauss-Newton on values.
  std::vector<double> project(const std::vector<double>& v) const {
    const auto n = Eigen::Index(x_.size());
    Eigen::MatrixXd B(n, 3);
    Eigen::VectorXd logv(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(v[std::size_t(i)] > 0.0)) throw Error(ErrorKind::InvalidInput, "von Mises fit needs positive samples");
      double t = kTwoPi * x_[std::size_t(i)];
      B(i, 0) = 1.0;
      B(i, 1) = std::cos(t);
      B(i, 2) = std::sin(t);
      logv(i) = std::log(v[std::size_t(i)]);
      y(i) = v[std::size_t(i)];
    }
    Eigen::VectorXd c = B.colPivHouseholderQr().solve(logv);
    auto model = [&](const Eigen::VectorXd& cc) { return Eigen::VectorXd((B * cc).array().exp().matrix()); };
    Eigen::VectorXd f = model(c);
    double err = (f - y).squaredNorm();
    double mu = 1e-6;
    for (int it = 0; it < 50; ++it) {
      Eigen::MatrixXd J = f.asDiagonal() * B;
      Eigen::MatrixXd H = J.transpose() * J;
      Eigen::VectorXd g = J.transpose() * (y - f);
      bool moved = false;
      for (int tries = 0; tries < 20 && !moved; ++tries) {
        Eigen::MatrixXd Hd = H;
        Hd.diagonal() *= 1.0 + mu;
        Eigen::VectorXd c1 = c + Hd.ldlt().solve(g);
        Eigen::VectorXd f1 = model(c1);
        double e1 = (f1 - y).squaredNorm();
        if (std::isfinite(e1) && e1 < err) {
          moved = err - e1 > 1e-15 * err;
          c = c1;
          f = f1;
          err = e1;
          mu = std::max(mu / 3.0, 1e-12);
          if (!moved) break;
        } else {
          mu *= 4.0;
        }
      }
      if (!moved) break;
    }
    return {f.data(), f.data() + f.size()};
  }

 private:
  std::vector<double> x_;
};

/// Nonnegative combinations of three fixed Gaussian bumps.
class GaussianBasisFamily {
 public:
  using Member = std::vector<double>;

  explicit GaussianBasisFamily(std::size_t n = 256) : x_(unit_grid(n)) {
    basis_.resize(Eigen::Index(n), 3);
    const double centers[3] = {0.2, 0.5, 0.8};
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k < 3; ++k) basis_(Eigen::Index(i), k) = std::exp(-std::pow((x_[i] - centers[k]) / 0.15, 2.0));
    }
  }

  std::string name() const { return "linear_gaussian_basis"; }

  Member random_member(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> v(0.1, 2.0);
    return {v(rng), v(rng), v(rng)};
  }

  std::vector<double> sample(const Member& m) const {
    Eigen::Map<const Eigen::VectorXd> c(m.data(), 3);
    Eigen::VectorXd f = basis_ * c;
    return {f.data(), f.data() + f.size()};
  }

  std::vector<double> project(const std::vector<double>& v) const { return closure_detail::least_squares(basis_, v); }

 private:
  std::vector<double> x_;
  Eigen::MatrixXd basis_;
};

struct ResidualStats {
  double max = 0.0;
  double mean = 0.0;
  double median = 0.0;
  std::size_t trials = 0;
  std::size_t failures = 0;
};

struct ClosureStats {
  std::string family;
  ResidualStats sum;
  ResidualStats product;
};

inline ResidualStats summarize(std::vector<double> r, std::size_t failures) {
  ResidualStats s;
  s.trials = r.size() + failures;
  s.failures = failures;
  if (r.empty()) return s;
  std::sort(r.begin(), r.end());
  s.max = r.back();
  for (double v : r) s.mean += v;
  s.mean /= double(r.size());
  s.median = r.size() % 2 ? r[r.size() / 2] : 0.5 * (r[r.size() / 2 - 1] + r[r.size() / 2]);
  return s;
}

/// Relative L2 residual of projecting sums and products of random pairs back onto the family.
template <ClosureFamily F>
ClosureStats closure_residual(const F& family, std::size_t trials, std::uint64_t seed = 1) {
  std::vector<double> sums, products;
  std::size_t sum_fail = 0, prod_fail = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    std::mt19937_64 rng(seed * 1000003ULL + t);
    auto f = family.sample(family.random_member(rng));
    auto g = family.sample(family.random_member(rng));
    std::vector<double> s(f.size()), p(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      s[i] = f[i] + g[i];
      p[i] = f[i] * g[i];
    }
    try {
      sums.push_back(relative_l2(s, family.project(s)));
    } catch (const Error&) {
      ++sum_fail;
    }
    try {
      products.push_back(relative_l2(p, family.project(p)));
    } catch (const Error&) {
      ++prod_fail;
    }
  }
  return {family.name(), summarize(sums, sum_fail), summarize(products, prod_fail)};
}

/// Max relative pointwise error of f_p f_q against f_{multiply(p, q)}.
inline double von_mises_product_error(std::size_t trials, std::uint64_t seed = 1, std::size_t n = 256) {
  VonMisesFamily fam(n);
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    std::mt19937_64 rng(seed * 1000003ULL + t);
    auto p = fam.random_member(rng);
    auto q = fam.random_member(rng);
    auto r = multiply_von_mises(p, q);
    auto fp = fam.sample(p), fq = fam.sample(q), fr = fam.sample(r);
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(fp[i] * fq[i] - fr[i]) / (fp[i] * fq[i]));
  }
  return worst;
}

}  // namespace spectra
