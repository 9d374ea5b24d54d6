#pragma once

// End-to-end two-sample tests: privatize every owner once, compute the
// statistic, calibrate by Monte-Carlo permutation or by the asymptotic
// chi-square null distribution.
//
// The asymptotic calibrations exist only for the pairs they were derived
// for: GenRR with the chi-square statistic and RAPPOR with the projected
// chi-square statistic. Any mechanism pairs with the l2 U-statistic under
// permutation calibration.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldptest/binning.hpp"
#include "ldptest/chisq.hpp"
#include "ldptest/mechanisms.hpp"
#include "ldptest/permutation.hpp"
#include "ldptest/random.hpp"
#include "ldptest/statistics.hpp"

namespace ldptest {

enum class CalibrationKind { Permutation, AsymptoticChiSq };

inline const char* to_string(CalibrationKind c) {
  switch (c) {
    case CalibrationKind::Permutation: return "perm";
    case CalibrationKind::AsymptoticChiSq: return "asymptotic";
  }
  throw std::invalid_argument("unknown calibration");
}

inline CalibrationKind calibration_from_string(const std::string& s) {
  if (s == "perm") return CalibrationKind::Permutation;
  if (s == "asymptotic") return CalibrationKind::AsymptoticChiSq;
  throw std::invalid_argument("unknown calibration: " + s);
}

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  bool reject = false;
  CalibrationKind calibration = CalibrationKind::Permutation;
  long B = 0;  // 0 for asymptotic calibration
  double gamma = 0.05;
  Mechanism mechanism = Mechanism::Rappor;
  StatisticKind statistic_kind = StatisticKind::L2U;
  std::uint64_t seed = 0;
  std::vector<TestResult> sub_results;  // filled by the adaptive test
};

// Asymptotic rule: reject iff the statistic strictly exceeds the upper-gamma
// chi-square quantile. The boundary itself does not reject.
inline bool asymptotic_reject(double statistic, double gamma, int dof) {
  return statistic > chi_square_quantile(1.0 - gamma, dof);
}

inline void validate_combination(Mechanism mech, StatisticKind stat,
                                 CalibrationKind cal) {
  if (stat == StatisticKind::Chi && mech != Mechanism::GenRR)
    throw std::invalid_argument("chi statistic requires the genrr mechanism");
  if (stat == StatisticKind::ProjChi && mech != Mechanism::Rappor)
    throw std::invalid_argument("projected chi requires the rappor mechanism");
  if (cal == CalibrationKind::AsymptoticChiSq && stat == StatisticKind::L2U)
    throw std::invalid_argument(
        "asymptotic calibration exists only for chi and projected chi");
}

inline TestResult multinomial_test(std::span<const int> y_cats,
                                   std::span<const int> z_cats, int k,
                                   const PrivacyConfig& cfg, StatisticKind stat,
                                   CalibrationKind cal, double gamma, long B,
                                   StreamKey key, int threads = 1) {
  cfg.validate();
  if (cfg.k != k)
    throw std::invalid_argument("privacy config k does not match data k");
  if (!(gamma > 0.0) || !(gamma < 1.0))
    throw std::invalid_argument("significance level gamma must lie in (0,1)");
  validate_combination(cfg.mechanism, stat, cal);

  const std::size_t n1 = y_cats.size(), n2 = z_cats.size();
  const std::size_t min_group = (stat == StatisticKind::Chi) ? 1 : 2;
  if (n1 < min_group || n2 < min_group)
    throw std::invalid_argument("sample too small for the chosen statistic");

  std::vector<int> pooled(n1 + n2);
  std::copy(y_cats.begin(), y_cats.end(), pooled.begin());
  std::copy(z_cats.begin(), z_cats.end(), pooled.begin() + n1);
  const StreamKey owner_domain = key.child(kSaltPrivatize);

  TestResult result;
  result.calibration = cal;
  result.gamma = gamma;
  result.mechanism = cfg.mechanism;
  result.statistic_kind = stat;
  result.seed = key.master_seed;

  if (cfg.mechanism == Mechanism::GenRR && stat != StatisticKind::ProjChi) {
    const std::vector<int> cats = privatize_dataset_genrr(pooled, cfg, owner_domain);
    if (cal == CalibrationKind::AsymptoticChiSq) {
      result.statistic = chi_statistic(std::span(cats).first(n1),
                                       std::span(cats).subspan(n1), k);
      result.p_value = chi_square_sf(result.statistic, k - 1);
      result.reject = asymptotic_reject(result.statistic, gamma, k - 1);
      result.B = 0;
      return result;
    }
    PermutationResult perm;
    if (stat == StatisticKind::L2U)
      perm = mc_permutation_pvalue(L2uOneHotEvaluator(cats, k), n1, B, key, threads);
    else
      perm = mc_permutation_pvalue(ChiEvaluator(cats, k), n1, B, key, threads);
    result.statistic = perm.observed;
    result.p_value = perm.p_value;
    result.reject = perm.p_value <= gamma;
    result.B = B;
    return result;
  }

  const PrivateViewMatrix views = privatize_dataset(pooled, n1, cfg, owner_domain);
  if (cal == CalibrationKind::AsymptoticChiSq) {
    // only (rappor, projchi) reaches here
    Matrix y_views(n1, views.rows.cols()), z_views(n2, views.rows.cols());
    for (std::size_t i = 0; i < n1; ++i)
      std::copy(views.rows.row(i).begin(), views.rows.row(i).end(),
                y_views.row(i).begin());
    for (std::size_t j = 0; j < n2; ++j)
      std::copy(views.rows.row(n1 + j).begin(), views.rows.row(n1 + j).end(),
                z_views.row(j).begin());
    result.statistic = proj_chi_statistic(y_views, z_views);
    result.p_value = chi_square_sf(result.statistic, k - 1);
    result.reject = asymptotic_reject(result.statistic, gamma, k - 1);
    result.B = 0;
    return result;
  }

  const PermutationResult perm = mc_permutation_pvalue(views, stat, B, key, threads);
  result.statistic = perm.observed;
  result.p_value = perm.p_value;
  result.reject = perm.p_value <= gamma;
  result.B = B;
  return result;
}

inline TestResult density_test(const Matrix& y_points, const Matrix& z_points,
                               const BinningSpec& spec, const PrivacyConfig& cfg,
                               StatisticKind stat, double gamma, long B,
                               StreamKey key, int threads = 1,
                               CalibrationKind cal = CalibrationKind::Permutation) {
  spec.validate();
  if (cfg.k != spec.k())
    throw std::invalid_argument("privacy config k must equal kappa^d");
  const std::vector<int> y_cats = bin_dataset(y_points, spec);
  const std::vector<int> z_cats = bin_dataset(z_points, spec);
  return multinomial_test(y_cats, z_cats, spec.k(), cfg, stat, cal, gamma, B,
                          key, threads);
}

}  // namespace ldptest
