#pragma once

// Reduction of multivariate continuous data to multinomial data: a
// componentwise Gaussian-CDF map onto the unit cube, equal-sized binning into
// kappa^d hypercubes, and the theoretical bin-count rule.

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "ldptest/matrix.hpp"

namespace ldptest {

enum class Transform { GaussCDF, None };

struct BinningSpec {
  int d = 1;      // data dimension
  int kappa = 4;  // bins per side
  Transform transform = Transform::GaussCDF;

  [[nodiscard]] int k() const {
    long long total = 1;
    for (int j = 0; j < d; ++j) {
      total *= kappa;
      if (total > (1LL << 30))
        throw std::invalid_argument("kappa^d category count too large");
    }
    return static_cast<int>(total);
  }

  void validate() const {
    if (d < 1) throw std::invalid_argument("dimension d must be >= 1");
    if (kappa < 1) throw std::invalid_argument("kappa must be >= 1");
    (void)k();
  }
};

enum class SmoothnessClass { Holder, Besov };

struct SmoothnessSpec {
  double s = 1.0;  // smoothness, > 0
  int d = 1;
  SmoothnessClass cls = SmoothnessClass::Holder;

  void validate() const {
    if (!(s > 0.0)) throw std::invalid_argument("smoothness s must be > 0");
    if (d < 1) throw std::invalid_argument("dimension d must be >= 1");
  }
};

// Standard normal CDF through the complementary error function; absolute
// error well below 1e-10 and strictly monotone.
inline double normal_cdf(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("normal_cdf needs finite input");
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

inline std::vector<double> transform_to_unit_cube(std::span<const double> x,
                                                  const BinningSpec& spec) {
  std::vector<double> u(x.size());
  if (spec.transform == Transform::GaussCDF) {
    for (std::size_t j = 0; j < x.size(); ++j) u[j] = normal_cdf(x[j]);
  } else {
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (!(x[j] >= 0.0 && x[j] <= 1.0))
        throw std::domain_error("identity transform needs input in [0,1]^d");
      u[j] = x[j];
    }
  }
  return u;
}

// Index of the equal-sized hypercube containing u. Per dimension
// min(floor(u_j * kappa), kappa - 1), so the closed top face u_j = 1 belongs
// to the last bin; combined row-major with dimension 0 most significant.
inline int bin_index(std::span<const double> u, int kappa) {
  if (kappa < 1) throw std::invalid_argument("kappa must be >= 1");
  long long index = 0;
  for (double uj : u) {
    if (!(uj >= 0.0) || !(uj <= 1.0))
      throw std::domain_error("bin_index needs input in [0,1]^d");
    int ij = static_cast<int>(uj * kappa);
    if (ij > kappa - 1) ij = kappa - 1;
    index = index * kappa + ij;
  }
  return static_cast<int>(index);
}

// Minimax bin count: floor of n1^(2/(4s+d)) ^ (n1 a^2)^(2/(4s+3d)) for the
// Holder class, the largest power of two below the same minimum for Besov,
// clamped to at least one bin.
inline int theoretical_kappa(long long n1, double alpha, const SmoothnessSpec& spec) {
  spec.validate();
  if (n1 < 2) throw std::invalid_argument("n1 must be >= 2");
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
  const double fn1 = static_cast<double>(n1);
  const double holder_term = std::pow(fn1, 2.0 / (4.0 * spec.s + spec.d));
  const double privacy_term =
      std::pow(fn1 * alpha * alpha, 2.0 / (4.0 * spec.s + 3.0 * spec.d));
  const double bound = std::min(holder_term, privacy_term);
  if (spec.cls == SmoothnessClass::Holder)
    return std::max(1, static_cast<int>(std::floor(bound)));
  int kappa = 1;
  while (2.0 * kappa <= bound) kappa *= 2;
  return kappa;
}

inline std::vector<int> bin_dataset(const Matrix& points, const BinningSpec& spec) {
  spec.validate();
  if (points.cols() != static_cast<std::size_t>(spec.d))
    throw std::invalid_argument("point dimension does not match binning spec");
  std::vector<int> cats(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto u = transform_to_unit_cube(points.row(i), spec);
    cats[i] = bin_index(u, spec.kappa);
  }
  return cats;
}

}  // namespace ldptest
