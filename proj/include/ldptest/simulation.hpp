#pragma once

// Data-generating scenarios and Monte-Carlo estimation of size and power.
// Every replication derives its own stream from (master seed, replication
// index), so estimates are reproducible bit-for-bit on any worker count and
// sweep tables come out byte-identical.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ldptest/adaptive.hpp"
#include "ldptest/matrix.hpp"
#include "ldptest/parallel.hpp"
#include "ldptest/random.hpp"
#include "ldptest/testing.hpp"

namespace ldptest {

enum class ScenarioKind {
  UniformNull,
  PowerLawNull,
  PerturbedUniform,
  PowerLawAlt,
  GaussianNull,      // both groups N(0, I_d)
  GaussianLocation,  // means +-0.5 * 1_d, covariance 0.5 J + 0.5 I
  GaussianScale,     // zero means, Sigma_Z = 5 Sigma_Y
};

inline const char* to_string(ScenarioKind s) {
  switch (s) {
    case ScenarioKind::UniformNull: return "uniform_null";
    case ScenarioKind::PowerLawNull: return "powerlaw_null";
    case ScenarioKind::PerturbedUniform: return "perturbed_uniform";
    case ScenarioKind::PowerLawAlt: return "powerlaw_alt";
    case ScenarioKind::GaussianNull: return "gaussian_null";
    case ScenarioKind::GaussianLocation: return "gaussian_location";
    case ScenarioKind::GaussianScale: return "gaussian_scale";
  }
  throw std::invalid_argument("unknown scenario");
}

inline ScenarioKind scenario_from_string(const std::string& s) {
  if (s == "uniform_null") return ScenarioKind::UniformNull;
  if (s == "powerlaw_null") return ScenarioKind::PowerLawNull;
  if (s == "perturbed_uniform") return ScenarioKind::PerturbedUniform;
  if (s == "powerlaw_alt") return ScenarioKind::PowerLawAlt;
  if (s == "gaussian_null") return ScenarioKind::GaussianNull;
  if (s == "gaussian_location") return ScenarioKind::GaussianLocation;
  if (s == "gaussian_scale") return ScenarioKind::GaussianScale;
  throw std::invalid_argument("unknown scenario: " + s);
}

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::UniformNull;
  int k = 0;            // multinomial scenarios
  int d = 0;            // density scenarios
  double eta = 0.0;     // perturbed uniform
  double exponent_y = 2.45;  // power-law alternative
  double exponent_z = 2.3;

  [[nodiscard]] bool is_multinomial() const {
    switch (kind) {
      case ScenarioKind::UniformNull:
      case ScenarioKind::PowerLawNull:
      case ScenarioKind::PerturbedUniform:
      case ScenarioKind::PowerLawAlt:
        return true;
      default:
        return false;
    }
  }

  [[nodiscard]] bool is_null() const {
    return kind == ScenarioKind::UniformNull ||
           kind == ScenarioKind::PowerLawNull ||
           kind == ScenarioKind::GaussianNull;
  }

  void validate() const {
    if (is_multinomial()) {
      if (k < 2) throw std::invalid_argument("multinomial scenario needs k >= 2");
      if (kind == ScenarioKind::PerturbedUniform) {
        if (k % 2 != 0)
          throw std::invalid_argument("perturbed uniform needs even k");
        if (!(1.0 / k + eta < 1.0) || !(1.0 / k - eta > 0.0))
          throw std::invalid_argument("perturbed uniform needs 1/k +- eta in (0,1)");
      }
    } else {
      if (d < 1) throw std::invalid_argument("density scenario needs d >= 1");
    }
  }
};

// Probability vectors of the multinomial scenarios. The perturbed-uniform
// signs follow the 1-based category numbering: category m gets (-1)^m eta for
// Y and the opposite sign for Z.
inline std::pair<std::vector<double>, std::vector<double>> scenario_prob_vectors(
    const ScenarioSpec& spec) {
  spec.validate();
  if (!spec.is_multinomial())
    throw std::invalid_argument("probability vectors exist for multinomial scenarios only");
  const std::size_t k = static_cast<std::size_t>(spec.k);
  std::vector<double> py(k), pz(k);
  switch (spec.kind) {
    case ScenarioKind::UniformNull:
      for (std::size_t i = 0; i < k; ++i) py[i] = pz[i] = 1.0 / spec.k;
      break;
    case ScenarioKind::PowerLawNull: {
      double total = 0.0;
      for (std::size_t i = 0; i < k; ++i) total += 1.0 / static_cast<double>(i + 1);
      for (std::size_t i = 0; i < k; ++i)
        py[i] = pz[i] = (1.0 / static_cast<double>(i + 1)) / total;
      break;
    }
    case ScenarioKind::PerturbedUniform:
      for (std::size_t i = 0; i < k; ++i) {
        const double sign = (i % 2 == 0) ? -1.0 : 1.0;  // (-1)^m with m = i+1
        py[i] = 1.0 / spec.k + sign * spec.eta;
        pz[i] = 1.0 / spec.k - sign * spec.eta;
      }
      break;
    case ScenarioKind::PowerLawAlt: {
      double total_y = 0.0, total_z = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        const double m = static_cast<double>(i + 1);
        py[i] = std::pow(m, spec.exponent_y);
        pz[i] = std::pow(m, spec.exponent_z);
        total_y += py[i];
        total_z += pz[i];
      }
      for (std::size_t i = 0; i < k; ++i) {
        py[i] /= total_y;
        pz[i] /= total_z;
      }
      break;
    }
    default:
      throw std::invalid_argument("not a multinomial scenario");
  }
  return {py, pz};
}

struct ScenarioData {
  std::vector<int> y_cats, z_cats;  // multinomial scenarios
  Matrix y_points, z_points;        // density scenarios
};

namespace detail {

// X = mu + sqrt(c) g0 1_d + sqrt(c) g realizes covariance c (J + I); with
// c = 0.5 this is exactly the 0.5 J + 0.5 I design covariance.
template <UniformSource S>
void fill_equicorrelated(Matrix& out, double mu, double scale, S& stream) {
  std::vector<double> draws(out.cols() + 1);
  const double c = std::sqrt(0.5) * scale;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    sample_std_gaussian(draws, stream);
    const double shared = c * draws[0];
    auto row = out.row(i);
    for (std::size_t j = 0; j < out.cols(); ++j)
      row[j] = mu + shared + c * draws[j + 1];
  }
}

template <UniformSource S>
void fill_std_gaussian(Matrix& out, S& stream) {
  for (std::size_t i = 0; i < out.rows(); ++i) sample_std_gaussian(out.row(i), stream);
}

}  // namespace detail

inline ScenarioData sample_scenario(const ScenarioSpec& spec, std::size_t n1,
                                    std::size_t n2, StreamKey key) {
  spec.validate();
  if (n1 < 1 || n2 < 1) throw std::invalid_argument("sample sizes must be >= 1");
  const StreamKey domain = key.child(kSaltScenario);
  RandomStream stream_y = derive_stream(domain.with_task(0));
  RandomStream stream_z = derive_stream(domain.with_task(1));

  ScenarioData data;
  if (spec.is_multinomial()) {
    const auto [py, pz] = scenario_prob_vectors(spec);
    const CategoricalSampler sampler_y(py), sampler_z(pz);
    data.y_cats.resize(n1);
    data.z_cats.resize(n2);
    for (auto& c : data.y_cats) c = sampler_y.sample(stream_y);
    for (auto& c : data.z_cats) c = sampler_z.sample(stream_z);
    return data;
  }

  data.y_points = Matrix(n1, static_cast<std::size_t>(spec.d));
  data.z_points = Matrix(n2, static_cast<std::size_t>(spec.d));
  switch (spec.kind) {
    case ScenarioKind::GaussianNull:
      detail::fill_std_gaussian(data.y_points, stream_y);
      detail::fill_std_gaussian(data.z_points, stream_z);
      break;
    case ScenarioKind::GaussianLocation:
      detail::fill_equicorrelated(data.y_points, 0.5, 1.0, stream_y);
      detail::fill_equicorrelated(data.z_points, -0.5, 1.0, stream_z);
      break;
    case ScenarioKind::GaussianScale:
      detail::fill_equicorrelated(data.y_points, 0.0, 1.0, stream_y);
      detail::fill_equicorrelated(data.z_points, 0.0, std::sqrt(5.0), stream_z);
      break;
    default:
      throw std::invalid_argument("not a density scenario");
  }
  return data;
}

// What test to run on each sampled replication.
struct TestPlan {
  Mechanism mechanism = Mechanism::Rappor;
  StatisticKind statistic = StatisticKind::L2U;
  CalibrationKind calibration = CalibrationKind::Permutation;
  double alpha = 1.0;
  double gamma = 0.05;
  long B = 299;
  int kappa = 4;          // density scenarios
  bool adaptive = false;  // density scenarios: multiscale budget-split test
};

inline TestResult run_scenario_test(const ScenarioSpec& spec, const TestPlan& plan,
                                    std::size_t n1, std::size_t n2, StreamKey key,
                                    int threads = 1) {
  const ScenarioData data = sample_scenario(spec, n1, n2, key);
  if (spec.is_multinomial()) {
    if (plan.adaptive)
      throw std::invalid_argument("adaptive test applies to density scenarios");
    const PrivacyConfig cfg{plan.mechanism, plan.alpha, spec.k};
    return multinomial_test(data.y_cats, data.z_cats, spec.k, cfg, plan.statistic,
                            plan.calibration, plan.gamma, plan.B, key, threads);
  }
  if (plan.adaptive)
    return adaptive_density_test(data.y_points, data.z_points, plan.mechanism,
                                 plan.alpha, plan.gamma, plan.B, key, threads);
  const BinningSpec spec_bins{spec.d, plan.kappa, Transform::GaussCDF};
  const PrivacyConfig cfg{plan.mechanism, plan.alpha, spec_bins.k()};
  return density_test(data.y_points, data.z_points, spec_bins, cfg, plan.statistic,
                      plan.gamma, plan.B, key, threads, plan.calibration);
}

struct PowerEstimate {
  double rejection_rate = 0.0;
  long replications = 0;
  double std_error = 0.0;  // sqrt(r (1-r) / reps)
};

inline PowerEstimate estimate_power(const ScenarioSpec& spec, const TestPlan& plan,
                                    std::size_t n1, std::size_t n2, long reps,
                                    StreamKey key, int threads = 1) {
  if (reps < 1) throw std::invalid_argument("reps must be >= 1");
  const StreamKey rep_domain = key.child(kSaltReplication);
  std::atomic<long> rejections{0};
  parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
    const TestResult result =
        run_scenario_test(spec, plan, n1, n2, rep_domain.with_task(r), 1);
    if (result.reject) rejections.fetch_add(1, std::memory_order_relaxed);
  });
  PowerEstimate est;
  est.replications = reps;
  est.rejection_rate = static_cast<double>(rejections.load()) / reps;
  est.std_error =
      std::sqrt(est.rejection_rate * (1.0 - est.rejection_rate) / reps);
  return est;
}

// One test run per replication; empirical size at every grid point from the
// stored p-values in a single pass. Permutation calibration rejects at
// p <= gamma; the asymptotic rule "statistic above the quantile" is p < gamma.
inline std::vector<std::pair<double, double>> estimate_size_curve(
    const ScenarioSpec& spec, const TestPlan& plan,
    std::span<const double> gamma_grid, std::size_t n1, std::size_t n2,
    long reps, StreamKey key, int threads = 1) {
  if (!spec.is_null())
    throw std::invalid_argument("size curve needs a null scenario");
  if (reps < 1) throw std::invalid_argument("reps must be >= 1");
  const StreamKey rep_domain = key.child(kSaltReplication);
  std::vector<double> p_values(static_cast<std::size_t>(reps));
  parallel_for(p_values.size(), threads, [&](std::size_t r) {
    p_values[r] =
        run_scenario_test(spec, plan, n1, n2, rep_domain.with_task(r), 1).p_value;
  });
  std::vector<std::pair<double, double>> curve;
  curve.reserve(gamma_grid.size());
  for (double gamma : gamma_grid) {
    long count = 0;
    for (double p : p_values) {
      const bool reject = (plan.calibration == CalibrationKind::Permutation)
                              ? (p <= gamma)
                              : (p < gamma);
      if (reject) ++count;
    }
    curve.emplace_back(gamma, static_cast<double>(count) / reps);
  }
  return curve;
}

// ---- sweep -------------------------------------------------------------------

struct SweepConfig {
  std::vector<ScenarioSpec> scenarios;
  std::vector<Mechanism> mechanisms;
  std::vector<StatisticKind> statistics;
  CalibrationKind calibration = CalibrationKind::Permutation;
  std::vector<double> alphas;
  std::vector<long> sample_sizes;  // n1 = n2 = n
  double gamma = 0.05;
  long B = 299;
  long reps = 500;
  int kappa = 4;
};

inline constexpr const char* kResultCsvHeader =
    "scenario,mechanism,statistic,calibration,k,d,kappa,alpha,gamma,n1,n2,B,"
    "reps,rejection_rate,std_error,seed";

namespace detail {

inline std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace detail

// One CSV line in the result-table format (no trailing newline). Floats use
// 6 significant digits.
inline std::string result_csv_row(const ScenarioSpec& scenario,
                                  const TestPlan& plan, long n1, long n2,
                                  long reps, const PowerEstimate& est,
                                  std::uint64_t seed) {
  const bool multinomial = scenario.is_multinomial();
  const int kappa = multinomial ? 0 : plan.kappa;
  int k = scenario.k;
  if (!multinomial) {
    const BinningSpec bins{scenario.d, plan.kappa, Transform::GaussCDF};
    k = plan.adaptive ? 0 : bins.k();
  }
  std::string row;
  row += to_string(scenario.kind);
  row += ',';
  row += to_string(plan.mechanism);
  row += ',';
  row += to_string(plan.statistic);
  row += ',';
  row += to_string(plan.calibration);
  row += ',';
  row += std::to_string(k);
  row += ',';
  row += std::to_string(scenario.d);
  row += ',';
  row += std::to_string(kappa);
  row += ',';
  row += detail::fmt_g(plan.alpha);
  row += ',';
  row += detail::fmt_g(plan.gamma);
  row += ',';
  row += std::to_string(n1);
  row += ',';
  row += std::to_string(n2);
  row += ',';
  row += std::to_string(plan.B);
  row += ',';
  row += std::to_string(reps);
  row += ',';
  row += detail::fmt_g(est.rejection_rate);
  row += ',';
  row += detail::fmt_g(est.std_error);
  row += ',';
  row += std::to_string(seed);
  return row;
}

// Emits one row per (scenario x mechanism x statistic x alpha x n) in config
// order, flushed row by row so partial results survive interruption. The
// optional config_echo is written as a '#' comment line above the header.
inline void run_sweep(const SweepConfig& config, std::ostream& out,
                      std::uint64_t master_seed, int threads = 1,
                      const std::string& config_echo = "") {
  if (config.scenarios.empty() || config.mechanisms.empty() ||
      config.statistics.empty() || config.alphas.empty() ||
      config.sample_sizes.empty())
    throw std::invalid_argument("sweep config needs non-empty lists");
  if (!config_echo.empty()) out << "# " << config_echo << "\n";
  out << kResultCsvHeader << "\n";
  out.flush();

  const StreamKey master{master_seed, 0};
  const StreamKey row_domain = master.child(kSaltSweepRow);
  std::uint64_t row_index = 0;
  for (const auto& scenario : config.scenarios)
    for (const auto mechanism : config.mechanisms)
      for (const auto statistic : config.statistics)
        for (const double alpha : config.alphas)
          for (const long n : config.sample_sizes) {
            TestPlan plan;
            plan.mechanism = mechanism;
            plan.statistic = statistic;
            plan.calibration = config.calibration;
            plan.alpha = alpha;
            plan.gamma = config.gamma;
            plan.B = config.B;
            plan.kappa = config.kappa;
            const PowerEstimate est =
                estimate_power(scenario, plan, static_cast<std::size_t>(n),
                               static_cast<std::size_t>(n), config.reps,
                               row_domain.with_task(row_index), threads);
            out << result_csv_row(scenario, plan, n, n, config.reps,
                                          est, master_seed)
                << "\n";
            out.flush();
            ++row_index;
          }
}

}  // namespace ldptest
