#pragma once

// Monte-Carlo permutation calibration over pooled privatized views, plus an
// exact enumeration oracle for small samples.
//
// Every supported statistic is invariant to within-group row order, so a
// uniform permutation of the pooled rows is realized as a uniform group
// reassignment: shuffle the index array and take the first n1 entries as
// group Y. Permutation b draws its shuffle from substream task_id = b of the
// caller's key, which makes the result independent of the worker count.
//
// Ties count as exceedances. Assignments that tie in exact arithmetic can
// land a few ulps apart once the summation order changes, so the comparison
// carries a relative 1e-12 tolerance; near-ties are always exceedances,
// which errs on the conservative side.

#include <atomic>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "ldptest/matrix.hpp"
#include "ldptest/mechanisms.hpp"
#include "ldptest/parallel.hpp"
#include "ldptest/random.hpp"
#include "ldptest/statistics.hpp"

namespace ldptest {

struct PermutationResult {
  double observed = 0.0;
  double p_value = 1.0;       // (1 + exceed_count) / (B + 1)
  long B = 0;
  long exceed_count = 0;      // permuted statistics >= observed, ties included
};

namespace detail {
inline double tie_threshold(double observed) {
  return observed - 1e-12 * (1.0 + std::abs(observed));
}
}  // namespace detail

// ---- evaluators -------------------------------------------------------------
//
// An evaluator computes its statistic for the group assignment "first n1
// entries of order are group Y". Construction precomputes whatever is
// assignment-invariant. eval() is const and takes a caller-owned workspace so
// permutations can run concurrently.

// l2 U-statistic over dense real views. Per call: the group-Y sums in
// O(n1 k), the rest from assignment-invariant totals.
class L2uEvaluator {
 public:
  struct Workspace {
    std::vector<double> sum_y;
    std::vector<double> block;
  };

  explicit L2uEvaluator(const Matrix& views) : views_(&views) {
    const std::size_t n = views.rows(), k = views.cols();
    row_sqnorm_.resize(n);
    std::vector<detail::Compensated> total(k);
    detail::Compensated total_sq;
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = views.row(i);
      double sq = 0.0;
      for (std::size_t m = 0; m < k; ++m) {
        total[m].add(row[m]);
        sq += row[m] * row[m];
      }
      row_sqnorm_[i] = sq;
      total_sq.add(sq);
    }
    total_sum_.resize(k);
    for (std::size_t m = 0; m < k; ++m) total_sum_[m] = total[m].value();
    total_sqnorm_ = total_sq.value();
  }

  [[nodiscard]] Workspace make_workspace() const {
    return Workspace{std::vector<double>(views_->cols(), 0.0),
                     std::vector<double>(views_->cols(), 0.0)};
  }

  double eval(std::span<const std::uint32_t> order, std::size_t n1,
              Workspace& ws) const {
    const std::size_t n = views_->rows(), k = views_->cols();
    const std::size_t n2 = n - n1;
    if (n1 < 2 || n2 < 2)
      throw std::invalid_argument("u-statistic needs at least 2 rows per group");

    // Two-level blocked summation keeps the accumulated error O((n/block +
    // block) eps) across the B * reps evaluations.
    auto& sum_y = ws.sum_y;
    auto& block = ws.block;
    std::fill(sum_y.begin(), sum_y.end(), 0.0);
    std::fill(block.begin(), block.end(), 0.0);
    constexpr std::size_t kBlock = 256;
    double q_y = 0.0, q_block = 0.0;
    for (std::size_t a = 0; a < n1; ++a) {
      const auto row = views_->row(order[a]);
      for (std::size_t m = 0; m < k; ++m) block[m] += row[m];
      q_block += row_sqnorm_[order[a]];
      if ((a + 1) % kBlock == 0 || a + 1 == n1) {
        for (std::size_t m = 0; m < k; ++m) {
          sum_y[m] += block[m];
          block[m] = 0.0;
        }
        q_y += q_block;
        q_block = 0.0;
      }
    }

    double sy2 = 0.0, syz = 0.0;
    for (std::size_t m = 0; m < k; ++m) {
      const double sz = total_sum_[m] - sum_y[m];
      sy2 += sum_y[m] * sum_y[m];
      syz += sum_y[m] * sz;
    }
    double sz2 = 0.0;
    for (std::size_t m = 0; m < k; ++m) {
      const double sz = total_sum_[m] - sum_y[m];
      sz2 += sz * sz;
    }
    const double q_z = total_sqnorm_ - q_y;
    return (sy2 - q_y) / (static_cast<double>(n1) * (n1 - 1)) +
           (sz2 - q_z) / (static_cast<double>(n2) * (n2 - 1)) -
           2.0 * syz / (static_cast<double>(n1) * n2);
  }

  [[nodiscard]] std::size_t rows() const { return views_->rows(); }

 private:
  const Matrix* views_;
  std::vector<double> row_sqnorm_;
  std::vector<double> total_sum_;
  double total_sqnorm_ = 0.0;
};

// l2 U-statistic over one-hot views given as category indices (GenRR): the
// group sum is a count vector, so one evaluation costs O(n1 + k).
class L2uOneHotEvaluator {
 public:
  struct Workspace {
    std::vector<double> counts_y;
  };

  L2uOneHotEvaluator(std::span<const int> cats, int k) : cats_(cats), k_(k) {
    total_counts_.assign(static_cast<std::size_t>(k), 0.0);
    for (int c : cats) {
      check_category(c, k);
      total_counts_[static_cast<std::size_t>(c)] += 1.0;
    }
  }

  [[nodiscard]] Workspace make_workspace() const {
    return Workspace{std::vector<double>(static_cast<std::size_t>(k_), 0.0)};
  }

  double eval(std::span<const std::uint32_t> order, std::size_t n1,
              Workspace& ws) const {
    const std::size_t n = cats_.size();
    const std::size_t n2 = n - n1;
    if (n1 < 2 || n2 < 2)
      throw std::invalid_argument("u-statistic needs at least 2 rows per group");
    auto& cy = ws.counts_y;
    std::fill(cy.begin(), cy.end(), 0.0);
    for (std::size_t a = 0; a < n1; ++a)
      cy[static_cast<std::size_t>(cats_[order[a]])] += 1.0;
    double sy2 = 0.0, sz2 = 0.0, syz = 0.0;
    for (std::size_t m = 0; m < cy.size(); ++m) {
      const double cz = total_counts_[m] - cy[m];
      sy2 += cy[m] * cy[m];
      sz2 += cz * cz;
      syz += cy[m] * cz;
    }
    // One-hot rows have unit norm, so the squared-norm sums are the group sizes.
    return (sy2 - static_cast<double>(n1)) / (static_cast<double>(n1) * (n1 - 1)) +
           (sz2 - static_cast<double>(n2)) / (static_cast<double>(n2) * (n2 - 1)) -
           2.0 * syz / (static_cast<double>(n1) * n2);
  }

  [[nodiscard]] std::size_t rows() const { return cats_.size(); }

 private:
  std::span<const int> cats_;
  int k_;
  std::vector<double> total_counts_;
};

// Two-sample chi-square over category views; pooled frequencies are
// assignment-invariant, so one evaluation is O(n + k).
class ChiEvaluator {
 public:
  struct Workspace {
    std::vector<double> counts_y;
  };

  ChiEvaluator(std::span<const int> cats, int k) : cats_(cats), k_(k) {
    total_counts_.assign(static_cast<std::size_t>(k), 0.0);
    for (int c : cats) {
      check_category(c, k);
      total_counts_[static_cast<std::size_t>(c)] += 1.0;
    }
  }

  [[nodiscard]] Workspace make_workspace() const {
    return Workspace{std::vector<double>(static_cast<std::size_t>(k_), 0.0)};
  }

  double eval(std::span<const std::uint32_t> order, std::size_t n1,
              Workspace& ws) const {
    const std::size_t n = cats_.size();
    if (n1 < 1 || n1 >= n)
      throw std::invalid_argument("chi statistic needs at least 1 row per group");
    const double fn1 = static_cast<double>(n1);
    const double fn2 = static_cast<double>(n - n1);
    auto& cy = ws.counts_y;
    std::fill(cy.begin(), cy.end(), 0.0);
    for (std::size_t a = 0; a < n1; ++a)
      cy[static_cast<std::size_t>(cats_[order[a]])] += 1.0;
    double total = 0.0;
    for (std::size_t m = 0; m < cy.size(); ++m) {
      const double pooled = total_counts_[m] / (fn1 + fn2);
      if (pooled == 0.0) continue;
      const double diff = cy[m] / fn1 - (total_counts_[m] - cy[m]) / fn2;
      total += diff * diff / pooled;
    }
    return total * (fn1 * fn2 / (fn1 + fn2));
  }

  [[nodiscard]] std::size_t rows() const { return cats_.size(); }

 private:
  std::span<const int> cats_;
  int k_;
  std::vector<double> total_counts_;
};

// Projected Hotelling-type statistic. The pooled second-moment matrix
// sum(x x') is assignment-invariant; per evaluation only the group means and
// a k x k eigendecomposition remain.
class ProjChiEvaluator {
 public:
  struct Workspace {};  // Eigen allocates internally

  explicit ProjChiEvaluator(const Matrix& views) : views_(&views) {
    const std::size_t k = views.cols();
    outer_total_ = Eigen::MatrixXd::Zero(k, k);
    Eigen::Map<const Eigen::MatrixXd> cols(views.data().data(), k, views.rows());
    outer_total_ = cols * cols.transpose();
  }

  [[nodiscard]] Workspace make_workspace() const { return {}; }

  double eval(std::span<const std::uint32_t> order, std::size_t n1,
              Workspace&) const {
    const std::size_t n = views_->rows(), k = views_->cols();
    const std::size_t n2 = n - n1;
    if (n1 < 2 || n2 < 2)
      throw std::invalid_argument("projected chi needs at least 2 rows per group");

    Eigen::VectorXd sum_y = Eigen::VectorXd::Zero(k);
    for (std::size_t a = 0; a < n1; ++a) {
      const auto row = views_->row(order[a]);
      for (std::size_t m = 0; m < k; ++m) sum_y[m] += row[m];
    }
    Eigen::Map<const Eigen::MatrixXd> cols(views_->data().data(), k, n);
    const Eigen::VectorXd sum_all = cols.rowwise().sum();
    const Eigen::VectorXd mean_y = sum_y / static_cast<double>(n1);
    const Eigen::VectorXd mean_z = (sum_all - sum_y) / static_cast<double>(n2);

    // (n1-1) S1 + (n2-1) S2 = sum(x x') - n1 ybar ybar' - n2 zbar zbar'
    const Eigen::MatrixXd pooled_cov =
        (outer_total_ - static_cast<double>(n1) * mean_y * mean_y.transpose() -
         static_cast<double>(n2) * mean_z * mean_z.transpose()) /
        static_cast<double>(n1 + n2 - 2);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(pooled_cov);
    const Eigen::VectorXd& values = eig.eigenvalues();
    const double max_eig = values.cwiseAbs().maxCoeff();
    if (!(max_eig > 0.0))
      throw std::domain_error("degenerate pooled covariance: all views identical");
    const double cutoff = 1e-10 * max_eig;
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(values.size());
    for (Eigen::Index i = 0; i < values.size(); ++i)
      if (values[i] > cutoff) inv[i] = 1.0 / values[i];

    Eigen::VectorXd diff = mean_y - mean_z;
    diff.array() -= diff.mean();
    const Eigen::VectorXd rotated = eig.eigenvectors().transpose() * diff;
    const double quad = (rotated.array().square() * inv.array()).sum();
    const double factor =
        1.0 / (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2));
    return factor * quad;
  }

  [[nodiscard]] std::size_t rows() const { return views_->rows(); }

 private:
  const Matrix* views_;
  Eigen::MatrixXd outer_total_;
};

// ---- Monte-Carlo p-value -----------------------------------------------------

template <class Evaluator>
PermutationResult mc_permutation_pvalue(const Evaluator& evaluator,
                                        std::size_t n1, long B, StreamKey key,
                                        int threads = 1) {
  if (B < 0) throw std::invalid_argument("permutation count B must be >= 0");
  const std::size_t n = evaluator.rows();
  if (n1 < 1 || n1 >= n)
    throw std::invalid_argument("split must satisfy 1 <= n1 < n");

  std::vector<std::uint32_t> identity(n);
  std::iota(identity.begin(), identity.end(), 0u);
  auto obs_ws = evaluator.make_workspace();
  const double observed = evaluator.eval(identity, n1, obs_ws);

  const StreamKey perm_domain = key.child(kSaltPermutation);
  const double threshold = detail::tie_threshold(observed);
  std::atomic<long> exceed{0};

  const int workers = resolve_threads(threads);
  parallel_for(static_cast<std::size_t>(workers), workers, [&](std::size_t w) {
    auto ws = evaluator.make_workspace();
    std::vector<std::uint32_t> order(n);
    long local = 0;
    for (long b = 1 + static_cast<long>(w); b <= B; b += workers) {
      RandomStream stream =
          derive_stream(perm_domain.with_task(static_cast<std::uint64_t>(b)));
      std::iota(order.begin(), order.end(), 0u);
      for (std::size_t i = n - 1; i > 0; --i)
        std::swap(order[i], order[stream.below(i + 1)]);
      if (evaluator.eval(order, n1, ws) >= threshold) ++local;
    }
    exceed.fetch_add(local, std::memory_order_relaxed);
  });

  PermutationResult r;
  r.observed = observed;
  r.B = B;
  r.exceed_count = exceed.load();
  r.p_value = (1.0 + static_cast<double>(r.exceed_count)) / (B + 1.0);
  return r;
}

// ---- exact enumeration oracle -------------------------------------------------

// Full permutation p-value by enumerating every distinct group assignment;
// counts the identity assignment. Refuses when C(n, n1) exceeds max_choose.
template <class Evaluator>
double exact_permutation_pvalue(const Evaluator& evaluator, std::size_t n1,
                                std::uint64_t max_choose = 200000) {
  const std::size_t n = evaluator.rows();
  if (n1 < 1 || n1 >= n)
    throw std::invalid_argument("split must satisfy 1 <= n1 < n");

  double choose = 1.0;
  for (std::size_t i = 0; i < n1; ++i)
    choose = choose * static_cast<double>(n - i) / static_cast<double>(i + 1);
  if (choose > static_cast<double>(max_choose))
    throw std::length_error("assignment enumeration exceeds max_choose");
  const std::uint64_t total = static_cast<std::uint64_t>(choose + 0.5);

  std::vector<std::uint32_t> identity(n);
  std::iota(identity.begin(), identity.end(), 0u);
  auto ws = evaluator.make_workspace();
  const double observed = evaluator.eval(identity, n1, ws);
  const double threshold = detail::tie_threshold(observed);

  std::vector<std::uint32_t> chosen(n1);
  std::iota(chosen.begin(), chosen.end(), 0u);
  std::vector<std::uint32_t> order(n);
  std::uint64_t exceed = 0, visited = 0;

  while (true) {
    std::size_t pos = 0;
    std::vector<bool> in_y(n, false);
    for (std::uint32_t c : chosen) {
      order[pos++] = c;
      in_y[c] = true;
    }
    for (std::uint32_t i = 0; i < n; ++i)
      if (!in_y[i]) order[pos++] = i;
    if (evaluator.eval(order, n1, ws) >= threshold) ++exceed;
    ++visited;

    // next combination in lexicographic order
    std::size_t j = n1;
    while (j > 0 && chosen[j - 1] == n - n1 + (j - 1)) --j;
    if (j == 0) break;
    ++chosen[j - 1];
    for (std::size_t i = j; i < n1; ++i) chosen[i] = chosen[i - 1] + 1;
  }
  if (visited != total)
    throw std::logic_error("combination enumeration miscounted");
  return static_cast<double>(exceed) / static_cast<double>(total);
}

// ---- dispatch over view containers --------------------------------------------

inline PermutationResult mc_permutation_pvalue(const PrivateViewMatrix& views,
                                               StatisticKind statistic, long B,
                                               StreamKey key, int threads = 1) {
  views.validate();
  switch (statistic) {
    case StatisticKind::L2U:
      return mc_permutation_pvalue(L2uEvaluator(views.rows), views.n1, B, key,
                                   threads);
    case StatisticKind::ProjChi:
      return mc_permutation_pvalue(ProjChiEvaluator(views.rows), views.n1, B,
                                   key, threads);
    case StatisticKind::Chi:
      throw std::invalid_argument(
          "chi statistic runs on category views, not view matrices");
  }
  throw std::invalid_argument("unknown statistic");
}

inline double exact_permutation_pvalue(const PrivateViewMatrix& views,
                                       StatisticKind statistic,
                                       std::uint64_t max_choose = 200000) {
  views.validate();
  switch (statistic) {
    case StatisticKind::L2U:
      return exact_permutation_pvalue(L2uEvaluator(views.rows), views.n1,
                                      max_choose);
    case StatisticKind::ProjChi:
      return exact_permutation_pvalue(ProjChiEvaluator(views.rows), views.n1,
                                      max_choose);
    case StatisticKind::Chi:
      throw std::invalid_argument(
          "chi statistic runs on category views, not view matrices");
  }
  throw std::invalid_argument("unknown statistic");
}

}  // namespace ldptest
