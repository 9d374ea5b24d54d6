#pragma once

// Test statistics over privatized views: the l2 U-statistic (naive and
// algebraically accelerated forms), the two-sample chi-square statistic, and
// the projected Hotelling-type statistic.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldptest/matrix.hpp"

namespace ldptest {

enum class StatisticKind { L2U, Chi, ProjChi };

inline const char* to_string(StatisticKind s) {
  switch (s) {
    case StatisticKind::L2U: return "l2";
    case StatisticKind::Chi: return "chi";
    case StatisticKind::ProjChi: return "projchi";
  }
  throw std::invalid_argument("unknown statistic");
}

inline StatisticKind statistic_from_string(const std::string& s) {
  if (s == "l2") return StatisticKind::L2U;
  if (s == "chi") return StatisticKind::Chi;
  if (s == "projchi") return StatisticKind::ProjChi;
  throw std::invalid_argument("unknown statistic: " + s);
}

namespace detail {

// Neumaier-compensated accumulator; the permutation engine evaluates the
// group sums B*reps times, so plain accumulation drift is worth suppressing.
struct Compensated {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      carry += (sum - t) + v;
    else
      carry += (v - t) + sum;
    sum = t;
  }
  [[nodiscard]] double value() const { return sum + carry; }
};

}  // namespace detail

// Within-group vector sums and sums of squared row norms; together they carry
// everything the l2 U-statistic needs from a group assignment.
struct GroupSums {
  std::vector<double> sum_y;  // S_Y, length k
  std::vector<double> sum_z;  // S_Z, length k
  double sqnorm_y = 0.0;      // Q_Y
  double sqnorm_z = 0.0;      // Q_Z
  std::size_t n1 = 0;
  std::size_t n2 = 0;
};

// assignment[i] == 1 puts row i in group Y.
inline GroupSums build_group_sums(const Matrix& views,
                                  std::span<const std::uint8_t> assignment) {
  if (assignment.size() != views.rows())
    throw std::invalid_argument("assignment length must match row count");
  const std::size_t k = views.cols();
  GroupSums g;
  g.sum_y.assign(k, 0.0);
  g.sum_z.assign(k, 0.0);
  std::vector<detail::Compensated> acc_y(k), acc_z(k);
  detail::Compensated q_y, q_z;
  for (std::size_t i = 0; i < views.rows(); ++i) {
    const auto row = views.row(i);
    double sq = 0.0;
    for (double v : row) sq += v * v;
    if (assignment[i]) {
      for (std::size_t m = 0; m < k; ++m) acc_y[m].add(row[m]);
      q_y.add(sq);
      ++g.n1;
    } else {
      for (std::size_t m = 0; m < k; ++m) acc_z[m].add(row[m]);
      q_z.add(sq);
      ++g.n2;
    }
  }
  for (std::size_t m = 0; m < k; ++m) {
    g.sum_y[m] = acc_y[m].value();
    g.sum_z[m] = acc_z[m].value();
  }
  g.sqnorm_y = q_y.value();
  g.sqnorm_z = q_z.value();
  return g;
}

// Literal evaluation of the three sums: ordered within-group pair inner
// products divided by n(n-1), minus twice the cross mean. O(n^2 k); kept as
// the oracle for the accelerated form.
inline double u_statistic_naive(const Matrix& views,
                                std::span<const std::uint8_t> assignment) {
  if (assignment.size() != views.rows())
    throw std::invalid_argument("assignment length must match row count");
  std::vector<std::size_t> ys, zs;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    (assignment[i] ? ys : zs).push_back(i);
  const std::size_t n1 = ys.size(), n2 = zs.size();
  if (n1 < 2 || n2 < 2)
    throw std::invalid_argument("u-statistic needs at least 2 rows per group");

  const auto dot = [&](std::size_t a, std::size_t b) {
    const auto ra = views.row(a), rb = views.row(b);
    double d = 0.0;
    for (std::size_t m = 0; m < ra.size(); ++m) d += ra[m] * rb[m];
    return d;
  };

  double within_y = 0.0, within_z = 0.0, cross = 0.0;
  for (std::size_t a = 0; a < n1; ++a)
    for (std::size_t b = 0; b < n1; ++b)
      if (a != b) within_y += dot(ys[a], ys[b]);
  for (std::size_t a = 0; a < n2; ++a)
    for (std::size_t b = 0; b < n2; ++b)
      if (a != b) within_z += dot(zs[a], zs[b]);
  for (std::size_t a = 0; a < n1; ++a)
    for (std::size_t b = 0; b < n2; ++b) cross += dot(ys[a], zs[b]);

  return within_y / (static_cast<double>(n1) * (n1 - 1)) +
         within_z / (static_cast<double>(n2) * (n2 - 1)) -
         2.0 * cross / (static_cast<double>(n1) * n2);
}

// Same value as u_statistic_naive via ||S||^2 - Q identities, in O(k).
inline double u_statistic_fast(const GroupSums& g, std::size_t n1, std::size_t n2) {
  if (n1 < 2 || n2 < 2)
    throw std::invalid_argument("u-statistic needs at least 2 rows per group");
  double sy2 = 0.0, sz2 = 0.0, syz = 0.0;
  for (std::size_t m = 0; m < g.sum_y.size(); ++m) {
    sy2 += g.sum_y[m] * g.sum_y[m];
    sz2 += g.sum_z[m] * g.sum_z[m];
    syz += g.sum_y[m] * g.sum_z[m];
  }
  return (sy2 - g.sqnorm_y) / (static_cast<double>(n1) * (n1 - 1)) +
         (sz2 - g.sqnorm_z) / (static_cast<double>(n2) * (n2 - 1)) -
         2.0 * syz / (static_cast<double>(n1) * n2);
}

// Two-sample chi-square statistic on category views. Categories with zero
// pooled frequency contribute nothing (their group frequencies are zero too).
inline double chi_statistic(std::span<const int> y_cats,
                            std::span<const int> z_cats, int k) {
  if (y_cats.empty() || z_cats.empty())
    throw std::invalid_argument("chi statistic needs at least 1 row per group");
  std::vector<double> cy(static_cast<std::size_t>(k), 0.0);
  std::vector<double> cz(static_cast<std::size_t>(k), 0.0);
  for (int c : y_cats) cy[static_cast<std::size_t>(c)] += 1.0;
  for (int c : z_cats) cz[static_cast<std::size_t>(c)] += 1.0;
  const double n1 = static_cast<double>(y_cats.size());
  const double n2 = static_cast<double>(z_cats.size());
  double total = 0.0;
  for (int m = 0; m < k; ++m) {
    const double pooled = (cy[m] + cz[m]) / (n1 + n2);
    if (pooled == 0.0) continue;
    const double diff = cy[m] / n1 - cz[m] / n2;
    total += diff * diff / pooled;
  }
  return total * (n1 * n2 / (n1 + n2));
}

// Projected Hotelling-type statistic on 0/1 views:
//   (1/n1 + 1/n2)^(-1) (ybar - zbar)' P Sigma^+ P (ybar - zbar)
// with P = I - (1/k) 11' and Sigma^+ the eigendecomposition pseudo-inverse of
// the pooled covariance (relative eigenvalue cutoff 1e-10). The finite-sample
// covariance of bit views can be rank-deficient beyond the structural
// one-vector direction, hence the pseudo-inverse.
inline double proj_chi_statistic(const Matrix& y_views, const Matrix& z_views) {
  const std::size_t n1 = y_views.rows(), n2 = z_views.rows();
  if (n1 < 2 || n2 < 2)
    throw std::invalid_argument("projected chi needs at least 2 rows per group");
  if (y_views.cols() != z_views.cols())
    throw std::invalid_argument("group views must share the category count");
  const std::size_t k = y_views.cols();

  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  Eigen::Map<const MatrixXd> y(y_views.data().data(), k, n1);  // column-major over rows
  Eigen::Map<const MatrixXd> z(z_views.data().data(), k, n2);

  const VectorXd mean_y = y.rowwise().mean();
  const VectorXd mean_z = z.rowwise().mean();

  MatrixXd centered_y = y.colwise() - mean_y;
  MatrixXd centered_z = z.colwise() - mean_z;
  const MatrixXd pooled_cov =
      (centered_y * centered_y.transpose() + centered_z * centered_z.transpose()) /
      static_cast<double>(n1 + n2 - 2);

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(pooled_cov);
  const VectorXd& values = eig.eigenvalues();
  const double max_eig = values.cwiseAbs().maxCoeff();
  if (!(max_eig > 0.0))
    throw std::domain_error("degenerate pooled covariance: all views identical");
  const double cutoff = 1e-10 * max_eig;
  VectorXd inv = VectorXd::Zero(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (values[i] > cutoff) inv[i] = 1.0 / values[i];
  const MatrixXd pinv =
      eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();

  VectorXd diff = mean_y - mean_z;
  diff.array() -= diff.mean();  // P v = v - (1'v / k) 1
  const double quad = diff.dot(pinv * diff);
  const double factor =
      1.0 / (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2));
  return factor * quad;
}

}  // namespace ldptest
