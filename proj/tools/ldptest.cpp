// Command-line surface: privatize data files, run a single test, estimate
// power for one configuration, or execute a sweep over a config cross
// product. All randomness is seeded; identical invocations produce identical
// output bytes regardless of --threads.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ldptest/ldptest.hpp"

namespace {

using nlohmann::json;
using namespace ldptest;

std::vector<std::vector<double>> read_numeric_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open data file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::invalid_argument("non-numeric cell in " + path + ": " + cell);
      }
    }
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::invalid_argument("ragged rows in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("no data rows in " + path);
  return rows;
}

std::vector<int> read_categories_csv(const std::string& path) {
  const auto rows = read_numeric_csv(path);
  if (rows.front().size() != 1)
    throw std::invalid_argument("category file must have one column: " + path);
  std::vector<int> cats;
  cats.reserve(rows.size());
  for (const auto& row : rows) {
    const int c = static_cast<int>(row[0]);
    if (static_cast<double>(c) != row[0] || c < 0)
      throw std::invalid_argument("category indices must be non-negative integers");
    cats.push_back(c);
  }
  return cats;
}

Matrix read_points_csv(const std::string& path) {
  const auto rows = read_numeric_csv(path);
  Matrix points(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) points(i, j) = rows[i][j];
  return points;
}

std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Output stream selection: --out path or stdout.
class OutFile {
 public:
  explicit OutFile(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw std::runtime_error("cannot open output file: " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

ScenarioSpec scenario_from_json(const json& j) {
  ScenarioSpec spec;
  spec.kind = scenario_from_string(j.at("kind").get<std::string>());
  spec.k = j.value("k", 0);
  spec.d = j.value("d", 0);
  spec.eta = j.value("eta", 0.0);
  spec.exponent_y = j.value("exponent_y", 2.45);
  spec.exponent_z = j.value("exponent_z", 2.3);
  spec.validate();
  return spec;
}

struct CommonFlags {
  std::string mechanism = "rappor";
  std::string stat = "l2";
  std::string calibration = "perm";
  double alpha = 0.0;
  double gamma = 0.05;
  long B = 999;
  int k = 0;
  int d = 0;
  int kappa = 4;
  long reps = 0;  // 0 = take the config value
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = hardware
  std::string mode = "multinomial";
  std::string y_path, z_path, out_path, config_path;
};

int run_test(const CommonFlags& f) {
  const Mechanism mech = mechanism_from_string(f.mechanism);
  const StatisticKind stat = statistic_from_string(f.stat);
  const CalibrationKind cal = calibration_from_string(f.calibration);
  const StreamKey key{f.seed, 0};
  const int threads = resolve_threads(f.threads);

  TestResult result;
  if (f.mode == "multinomial") {
    if (f.k < 2) throw std::invalid_argument("--k is required for multinomial mode");
    const auto y = read_categories_csv(f.y_path);
    const auto z = read_categories_csv(f.z_path);
    for (int c : y) check_category(c, f.k);
    for (int c : z) check_category(c, f.k);
    const PrivacyConfig cfg{mech, f.alpha, f.k};
    result = multinomial_test(y, z, f.k, cfg, stat, cal, f.gamma, f.B, key, threads);
  } else if (f.mode == "density" || f.mode == "adaptive") {
    const Matrix y = read_points_csv(f.y_path);
    const Matrix z = read_points_csv(f.z_path);
    if (y.cols() != z.cols())
      throw std::invalid_argument("samples must share the dimension");
    if (f.d != 0 && static_cast<std::size_t>(f.d) != y.cols())
      throw std::invalid_argument("--d does not match the data files");
    if (f.mode == "adaptive") {
      result = adaptive_density_test(y, z, mech, f.alpha, f.gamma, f.B, key, threads);
    } else {
      const BinningSpec bins{static_cast<int>(y.cols()), f.kappa, Transform::GaussCDF};
      const PrivacyConfig cfg{mech, f.alpha, bins.k()};
      result = density_test(y, z, bins, cfg, stat, f.gamma, f.B, key, threads, cal);
    }
  } else {
    throw std::invalid_argument("unknown mode: " + f.mode);
  }

  json out{
      {"statistic", result.statistic},
      {"p_value", result.p_value},
      {"reject", result.reject},
      {"B", result.B},
      {"seed", result.seed},
      {"method", f.mode + "/" + to_string(result.mechanism) + "+" +
                     to_string(result.statistic_kind) + "+" +
                     to_string(result.calibration)},
  };
  std::cout << out.dump() << "\n";
  return 0;
}

int run_privatize(const CommonFlags& f) {
  const Mechanism mech = mechanism_from_string(f.mechanism);
  const StreamKey key{f.seed, 0};

  std::vector<int> cats;
  int k = 0;
  if (f.mode == "multinomial") {
    if (f.k < 2) throw std::invalid_argument("--k is required for multinomial mode");
    k = f.k;
    cats = read_categories_csv(f.y_path);
    for (int c : cats) check_category(c, k);
  } else if (f.mode == "density") {
    const Matrix points = read_points_csv(f.y_path);
    const BinningSpec bins{static_cast<int>(points.cols()), f.kappa,
                           Transform::GaussCDF};
    k = bins.k();
    cats = bin_dataset(points, bins);
  } else {
    throw std::invalid_argument("privatize supports multinomial or density mode");
  }

  const PrivacyConfig cfg{mech, f.alpha, k};
  // n1 split is irrelevant for bare privatization; use half to satisfy the
  // view-matrix invariant.
  const std::size_t n1 = cats.size() > 1 ? cats.size() / 2 : 1;
  const PrivateViewMatrix views =
      privatize_dataset(cats, n1, cfg, key.child(kSaltPrivatize));

  OutFile out_file(f.out_path);
  auto& out = out_file.stream();
  const json echo{{"command", "privatize"}, {"mode", f.mode},
                  {"mechanism", f.mechanism}, {"alpha", f.alpha},
                  {"k", k},                   {"kappa", f.kappa},
                  {"seed", f.seed},           {"rows", cats.size()}};
  out << "# " << echo.dump() << "\n";
  for (std::size_t i = 0; i < views.rows.rows(); ++i) {
    const auto row = views.rows.row(i);
    for (std::size_t m = 0; m < row.size(); ++m) {
      if (m) out << ',';
      out << fmt_full(row[m]);
    }
    out << "\n";
  }
  return 0;
}

TestPlan plan_from_json(const json& j) {
  TestPlan plan;
  plan.mechanism = mechanism_from_string(j.value("mechanism", "rappor"));
  plan.statistic = statistic_from_string(j.value("statistic", "l2"));
  plan.calibration = calibration_from_string(j.value("calibration", "perm"));
  plan.alpha = j.at("alpha").get<double>();
  plan.gamma = j.value("gamma", 0.05);
  plan.B = j.value("B", 299L);
  plan.kappa = j.value("kappa", 4);
  plan.adaptive = j.value("adaptive", false);
  return plan;
}

int run_simulate(const CommonFlags& f) {
  std::ifstream in(f.config_path);
  if (!in) throw std::invalid_argument("cannot open config: " + f.config_path);
  const json config = json::parse(in);

  const ScenarioSpec scenario = scenario_from_json(config.at("scenario"));
  const TestPlan plan = plan_from_json(config);
  const long n1 = config.at("n1").get<long>();
  const long n2 = config.value("n2", n1);
  const long reps = f.reps > 0 ? f.reps : config.value("reps", 500L);
  const StreamKey key{f.seed, 0};
  const int threads = resolve_threads(f.threads);

  OutFile out_file(f.out_path);
  auto& out = out_file.stream();
  json echo = config;
  echo["command"] = "simulate";
  echo["seed"] = f.seed;
  echo["reps"] = reps;
  out << "# " << echo.dump() << "\n";
  out << kResultCsvHeader << "\n";

  if (config.contains("gamma_grid")) {
    const auto grid = config.at("gamma_grid").get<std::vector<double>>();
    const auto curve = estimate_size_curve(scenario, plan, grid,
                                           static_cast<std::size_t>(n1),
                                           static_cast<std::size_t>(n2), reps,
                                           key, threads);
    for (const auto& [gamma, size] : curve) {
      TestPlan row_plan = plan;
      row_plan.gamma = gamma;
      PowerEstimate est;
      est.rejection_rate = size;
      est.replications = reps;
      est.std_error = std::sqrt(size * (1.0 - size) / reps);
      out << ldptest::result_csv_row(scenario, row_plan, n1, n2, reps,
                                             est, f.seed)
          << "\n";
    }
    return 0;
  }

  const PowerEstimate est =
      estimate_power(scenario, plan, static_cast<std::size_t>(n1),
                     static_cast<std::size_t>(n2), reps, key, threads);
  out << ldptest::result_csv_row(scenario, plan, n1, n2, reps, est,
                                         f.seed)
      << "\n";
  return 0;
}

int run_sweep_cmd(const CommonFlags& f) {
  std::ifstream in(f.config_path);
  if (!in) throw std::invalid_argument("cannot open config: " + f.config_path);
  const json config = json::parse(in);

  SweepConfig sweep;
  for (const auto& s : config.at("scenarios"))
    sweep.scenarios.push_back(scenario_from_json(s));
  for (const auto& m : config.at("mechanisms"))
    sweep.mechanisms.push_back(mechanism_from_string(m.get<std::string>()));
  for (const auto& s : config.at("statistics"))
    sweep.statistics.push_back(statistic_from_string(s.get<std::string>()));
  sweep.calibration = calibration_from_string(config.value("calibration", "perm"));
  sweep.alphas = config.at("alphas").get<std::vector<double>>();
  sweep.sample_sizes = config.at("ns").get<std::vector<long>>();
  sweep.gamma = config.value("gamma", 0.05);
  sweep.B = config.value("B", 299L);
  sweep.reps = f.reps > 0 ? f.reps : config.value("reps", 500L);
  sweep.kappa = config.value("kappa", 4);

  json echo = config;
  echo["command"] = "sweep";
  echo["seed"] = f.seed;
  echo["reps"] = sweep.reps;

  OutFile out_file(f.out_path);
  run_sweep(sweep, out_file.stream(), f.seed, resolve_threads(f.threads),
            echo.dump());
  return 0;
}

void add_common_flags(CLI::App* cmd, CommonFlags& f, bool needs_alpha) {
  cmd->add_option("--mechanism", f.mechanism, "lapu|disclapu|rappor|genrr");
  cmd->add_option("--stat", f.stat, "l2|chi|projchi");
  cmd->add_option("--calibration", f.calibration, "perm|asymptotic");
  auto* alpha = cmd->add_option("--alpha", f.alpha, "privacy budget");
  if (needs_alpha) alpha->required();
  cmd->add_option("--gamma", f.gamma, "significance level");
  cmd->add_option("--B", f.B, "Monte-Carlo permutation count");
  cmd->add_option("--k", f.k, "category count (multinomial mode)");
  cmd->add_option("--d", f.d, "data dimension (density modes)");
  cmd->add_option("--kappa", f.kappa, "bins per side (density mode)");
  cmd->add_option("--reps", f.reps, "replications (overrides the config value)");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--threads", f.threads, "worker cap (0 = hardware)");
  cmd->add_option("--out", f.out_path, "output file (default stdout)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-sample hypothesis testing under local differential privacy"};
  app.require_subcommand(1);

  CommonFlags f;

  auto* privatize = app.add_subcommand("privatize", "privatize a raw data file");
  add_common_flags(privatize, f, true);
  privatize->add_option("--mode", f.mode, "multinomial|density");
  privatize->add_option("--y", f.y_path, "input CSV (categories or points)")
      ->required()
      ->check(CLI::ExistingFile);

  auto* test = app.add_subcommand("test", "run a single two-sample test");
  add_common_flags(test, f, true);
  test->add_option("--mode", f.mode, "multinomial|density|adaptive");
  test->add_option("--y", f.y_path, "first-sample CSV")->required()->check(CLI::ExistingFile);
  test->add_option("--z", f.z_path, "second-sample CSV")->required()->check(CLI::ExistingFile);

  auto* simulate = app.add_subcommand("simulate", "estimate power or a size curve");
  add_common_flags(simulate, f, false);
  simulate->add_option("--config", f.config_path, "scenario config JSON")
      ->required()
      ->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("sweep", "run a configuration cross product");
  add_common_flags(sweep, f, false);
  sweep->add_option("--config", f.config_path, "sweep config JSON")
      ->required()
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (privatize->parsed()) return run_privatize(f);
    if (test->parsed()) return run_test(f);
    if (simulate->parsed()) return run_simulate(f);
    if (sweep->parsed()) return run_sweep_cmd(f);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
