#include "ldptest/statistics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ldptest/mechanisms.hpp"
#include "ldptest/random.hpp"
#include "test_util.hpp"

namespace ldptest {
namespace {

using testutil::Moments;
using testutil::sample_moments;

Matrix from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

std::vector<std::uint8_t> first_n1(std::size_t n, std::size_t n1) {
  std::vector<std::uint8_t> a(n, 0);
  std::fill(a.begin(), a.begin() + n1, 1);
  return a;
}

TEST(UStatistic, HandExamples) {
  // Separated one-hot groups: 1 + 1 - 0.
  const Matrix separated =
      from_rows({{1, 0}, {1, 0}, {0, 1}, {0, 1}});
  EXPECT_DOUBLE_EQ(u_statistic_naive(separated, first_n1(4, 2)), 2.0);

  // Identical rows everywhere: 1 + 1 - 2.
  const Matrix identical = from_rows({{1, 0}, {1, 0}, {1, 0}, {1, 0}});
  EXPECT_DOUBLE_EQ(u_statistic_naive(identical, first_n1(4, 2)), 0.0);

  // Mixed groups with orthogonal within-pairs: 0 + 0 - 1.
  const Matrix mixed = from_rows({{1, 0}, {0, 1}, {1, 0}, {0, 1}});
  EXPECT_DOUBLE_EQ(u_statistic_naive(mixed, first_n1(4, 2)), -1.0);
}

TEST(UStatistic, FastMatchesHandExamples) {
  for (const auto& rows : {std::vector<std::vector<double>>{{1, 0}, {1, 0}, {0, 1}, {0, 1}},
                           {{1, 0}, {1, 0}, {1, 0}, {1, 0}},
                           {{1, 0}, {0, 1}, {1, 0}, {0, 1}}}) {
    const Matrix views = from_rows(rows);
    const auto assignment = first_n1(4, 2);
    const GroupSums sums = build_group_sums(views, assignment);
    EXPECT_DOUBLE_EQ(u_statistic_fast(sums, 2, 2),
                     u_statistic_naive(views, assignment));
  }
}

TEST(UStatistic, RejectsDegenerateGroups) {
  const Matrix views = from_rows({{1, 0}, {0, 1}, {1, 0}});
  EXPECT_THROW(u_statistic_naive(views, first_n1(3, 1)), std::invalid_argument);
  const GroupSums sums = build_group_sums(views, first_n1(3, 2));
  EXPECT_THROW(u_statistic_fast(sums, 2, 1), std::invalid_argument);
}

TEST(UStatistic, FastEqualsNaiveOnRandomInstances) {
  RandomStream stream = derive_stream({200, 0});
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 4 + stream.below(27);   // up to 30
    const std::size_t k = 1 + stream.below(50);   // up to 50
    const std::size_t n1 = 2 + stream.below(n - 3);
    Matrix views(n, k);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k; ++j)
        views(i, j) = 10.0 * (stream.uniform() - 0.5);
    std::vector<std::uint8_t> assignment(n, 0);
    std::fill(assignment.begin(), assignment.begin() + n1, 1);
    for (std::size_t i = n - 1; i > 0; --i)
      std::swap(assignment[i], assignment[stream.below(i + 1)]);

    const double naive = u_statistic_naive(views, assignment);
    const double fast =
        u_statistic_fast(build_group_sums(views, assignment), n1, n - n1);
    EXPECT_LT(std::abs(fast - naive), 1e-9 * (1.0 + std::abs(naive)));
  }
}

TEST(UStatistic, LabelSwapSymmetryForEqualGroups) {
  RandomStream stream = derive_stream({201, 0});
  Matrix views(8, 3);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 3; ++j) views(i, j) = stream.uniform();
  std::vector<std::uint8_t> assignment{1, 0, 1, 0, 0, 1, 1, 0};
  std::vector<std::uint8_t> flipped(assignment);
  for (auto& a : flipped) a = 1 - a;
  const double u = u_statistic_fast(build_group_sums(views, assignment), 4, 4);
  const double u_flipped =
      u_statistic_fast(build_group_sums(views, flipped), 4, 4);
  EXPECT_DOUBLE_EQ(u, u_flipped);
}

TEST(ChiStatistic, HandExamples) {
  // Identical count vectors in both groups.
  const std::vector<int> same{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(chi_statistic(same, same, 2), 0.0);

  // Y counts (2,0), Z counts (0,2): factor 1, T = 1/0.5 + 1/0.5.
  const std::vector<int> y{0, 0};
  const std::vector<int> z{1, 1};
  EXPECT_DOUBLE_EQ(chi_statistic(y, z, 2), 4.0);

  // A category unobserved in both groups contributes nothing.
  EXPECT_DOUBLE_EQ(chi_statistic(y, z, 3), chi_statistic(y, z, 2));
}

TEST(ChiStatistic, RowOrderInvariant) {
  const std::vector<int> y{0, 1, 2, 1, 0};
  const std::vector<int> y_shuffled{1, 0, 1, 2, 0};
  const std::vector<int> z{2, 2, 0, 1};
  EXPECT_DOUBLE_EQ(chi_statistic(y, z, 3), chi_statistic(y_shuffled, z, 3));
}

TEST(ProjChi, ZeroWhenMeansEqual) {
  const Matrix y = from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  EXPECT_NEAR(proj_chi_statistic(y, y), 0.0, 1e-12);
}

TEST(ProjChi, ConstantShiftInvariance) {
  RandomStream stream = derive_stream({202, 0});
  Matrix y(6, 4), z(5, 4);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 4; ++j) y(i, j) = stream.below(2);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 4; ++j) z(i, j) = stream.below(2);
  const double base = proj_chi_statistic(y, z);
  Matrix y2 = y, z2 = z;
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 4; ++j) y2(i, j) += 3.25;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 4; ++j) z2(i, j) += 3.25;
  EXPECT_NEAR(proj_chi_statistic(y2, z2), base, 1e-9 * (1.0 + std::abs(base)));
}

TEST(ProjChi, DegenerateCovarianceThrows) {
  const Matrix y = from_rows({{1, 0}, {1, 0}, {1, 0}});
  EXPECT_THROW(proj_chi_statistic(y, y), std::domain_error);
}

TEST(ProjChi, RowOrderInvariant) {
  RandomStream stream = derive_stream({203, 0});
  Matrix y(7, 3), z(6, 3);
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 3; ++j) y(i, j) = stream.below(2);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 3; ++j) z(i, j) = stream.below(2);
  Matrix y_rev(7, 3);
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 3; ++j) y_rev(i, j) = y(6 - i, j);
  const double a = proj_chi_statistic(y, z);
  const double b = proj_chi_statistic(y_rev, z);
  EXPECT_NEAR(a, b, 1e-10 * (1.0 + std::abs(a)));
}

// Monte-Carlo mean of U over independent privatized datasets approximates
// k ||p_Y - p_Z||^2 for the additive mechanisms (0.1024 at k=4, eta=0.04)
// and alpha_bf^2 ||p_Y - p_Z||^2 for RAPPOR.
TEST(UStatistic, UnbiasednessSmoke) {
  const int k = 4;
  const double eta = 0.04;
  std::vector<double> py(k), pz(k);
  for (int m = 0; m < k; ++m) {
    const double sign = (m % 2 == 0) ? -1.0 : 1.0;
    py[m] = 1.0 / k + sign * eta;
    pz[m] = 1.0 / k - sign * eta;
  }
  const CategoricalSampler sampler_y(py), sampler_z(pz);
  const std::size_t n1 = 50, n2 = 50;

  struct Case {
    Mechanism mech;
    double target;
  };
  const double l2sq = 16.0 * eta * eta;  // k (2 eta)^2
  for (const Case c : {Case{Mechanism::LapU, 4.0 * l2sq},
                       Case{Mechanism::Rappor, 0.244919 * 0.244919 * l2sq}}) {
    RandomStream data_stream = derive_stream({204, static_cast<std::uint64_t>(c.mech)});
    const int reps = 4000;
    std::vector<double> us(reps);
    std::vector<int> cats(n1 + n2);
    for (int r = 0; r < reps; ++r) {
      for (std::size_t i = 0; i < n1; ++i) cats[i] = sampler_y.sample(data_stream);
      for (std::size_t i = 0; i < n2; ++i)
        cats[n1 + i] = sampler_z.sample(data_stream);
      const auto views = privatize_dataset(
          cats, n1, {c.mech, 1.0, k},
          StreamKey{205, static_cast<std::uint64_t>(r)}.child(kSaltPrivatize));
      us[r] = u_statistic_fast(
          build_group_sums(views.rows, first_n1(n1 + n2, n1)), n1, n2);
    }
    const Moments m = sample_moments(us);
    EXPECT_NEAR(m.mean, c.target, 3.0 * m.se_mean)
        << "mechanism " << to_string(c.mech);
  }
}

}  // namespace
}  // namespace ldptest
