#pragma once

// Smoothness-adaptive multiscale private density test: N sub-tests at bin
// resolutions 2, 4, ..., 2^N per side, each privatized fresh with budget
// alpha/N and tested at level gamma/N; the aggregate rejects when any
// sub-test rejects. Budget composition gives the full alpha guarantee; the
// union bound gives the overall level.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ldptest/binning.hpp"
#include "ldptest/testing.hpp"

namespace ldptest {

struct AdaptivePlan {
  int n_tests = 1;
  double per_test_alpha = 0.0;  // alpha / N
  double per_test_gamma = 0.0;  // gamma / N
  std::vector<int> kappas;      // 2, 4, ..., 2^N bins per side
};

// Number of sub-tests:
//   ceil( (2/d) log2(n1 / ln ln n1)
//         ^ (2/(3d)) log2(n1 a^2 / ((ln n1)^2 ln ln n1)) ),
// clamped to at least one test. Inner logarithms are natural; only the outer
// ones are base 2.
inline int adaptive_test_count(long long n1, double alpha, int d) {
  if (n1 < 16)
    throw std::invalid_argument("adaptive test needs n1 >= 16");
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
  if (d < 1) throw std::invalid_argument("dimension d must be >= 1");
  const double fn1 = static_cast<double>(n1);
  const double log_n1 = std::log(fn1);
  const double loglog_n1 = std::log(log_n1);
  const double term_resolution = (2.0 / d) * std::log2(fn1 / loglog_n1);
  const double term_privacy =
      (2.0 / (3.0 * d)) *
      std::log2(fn1 * alpha * alpha / (log_n1 * log_n1 * loglog_n1));
  const double bound = std::min(term_resolution, term_privacy);
  return std::max(1, static_cast<int>(std::ceil(bound)));
}

inline AdaptivePlan make_adaptive_plan(long long n1, double alpha, double gamma,
                                       int d) {
  AdaptivePlan plan;
  plan.n_tests = adaptive_test_count(n1, alpha, d);
  plan.per_test_alpha = alpha / plan.n_tests;
  plan.per_test_gamma = gamma / plan.n_tests;
  plan.kappas.resize(static_cast<std::size_t>(plan.n_tests));
  int kappa = 2;
  for (auto& value : plan.kappas) {
    value = kappa;
    kappa *= 2;
  }
  return plan;
}

// Each sub-test privatizes a fresh set of views: the composition argument
// needs N independent (alpha/N)-private releases, never reused noise. The
// reported p-value is the Bonferroni-adjusted min(1, N * min_t p_t); the
// decision itself is the union of the sub-test decisions at level gamma/N.
inline TestResult adaptive_density_test(const Matrix& y_points,
                                        const Matrix& z_points, Mechanism mech,
                                        double alpha, double gamma, long B,
                                        StreamKey key, int threads = 1) {
  if (y_points.cols() != z_points.cols())
    throw std::invalid_argument("samples must share the dimension");
  const int d = static_cast<int>(y_points.cols());
  const AdaptivePlan plan =
      make_adaptive_plan(static_cast<long long>(y_points.rows()), alpha, gamma, d);

  TestResult result;
  result.calibration = CalibrationKind::Permutation;
  result.B = B;
  result.gamma = gamma;
  result.mechanism = mech;
  result.statistic_kind = StatisticKind::L2U;
  result.seed = key.master_seed;
  result.reject = false;

  const StreamKey sub_domain = key.child(kSaltAdaptive);
  double min_p = 1.0;
  std::size_t best = 0;
  for (int t = 0; t < plan.n_tests; ++t) {
    const BinningSpec spec{d, plan.kappas[static_cast<std::size_t>(t)],
                           Transform::GaussCDF};
    const PrivacyConfig cfg{mech, plan.per_test_alpha, spec.k()};
    TestResult sub = density_test(
        y_points, z_points, spec, cfg, StatisticKind::L2U, plan.per_test_gamma,
        B, sub_domain.with_task(static_cast<std::uint64_t>(t)), threads);
    if (sub.p_value < min_p) {
      min_p = sub.p_value;
      best = static_cast<std::size_t>(t);
    }
    result.reject = result.reject || sub.reject;
    result.sub_results.push_back(std::move(sub));
  }
  result.p_value = std::min(1.0, plan.n_tests * min_p);
  result.statistic = result.sub_results[best].statistic;
  return result;
}

}  // namespace ldptest
