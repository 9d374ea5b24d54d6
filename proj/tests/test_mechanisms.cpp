#include "ldptest/mechanisms.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ldptest/random.hpp"
#include "test_util.hpp"

namespace ldptest {
namespace {

using testutil::ConstStream;
using testutil::Moments;
using testutil::sample_moments;

TEST(DeriveParams, ClosedForms) {
  const MechanismParams p = derive_params({Mechanism::LapU, 1.0, 4});
  EXPECT_NEAR(p.sigma_alpha, 2.0 * std::sqrt(8.0), 1e-12);
  EXPECT_NEAR(p.sigma_alpha, 5.65685, 1e-5);
  EXPECT_NEAR(p.zeta_alpha, std::exp(-0.25), 1e-12);
  EXPECT_NEAR(p.zeta_alpha, 0.77880, 1e-5);
  EXPECT_NEAR(p.alpha_bf, 0.244919, 1e-5);
  EXPECT_NEAR(p.lambda_bf, 0.377541, 1e-5);
  EXPECT_NEAR(p.w_genrr, (std::exp(1.0) - 1.0) / (std::exp(1.0) + 3.0), 1e-12);
}

TEST(DeriveParams, Invariants) {
  for (const double alpha : {0.1, 0.5, 1.0, 2.0, 10.0})
    for (const int k : {2, 4, 40, 400}) {
      const MechanismParams p = derive_params({Mechanism::Rappor, alpha, k});
      EXPECT_NEAR(p.alpha_bf + 2.0 * p.lambda_bf, 1.0, 1e-14);
      EXPECT_GT(p.w_genrr, 0.0);
      EXPECT_LT(p.w_genrr, 1.0);
      EXPECT_GT(p.zeta_alpha, 0.0);
      EXPECT_LT(p.zeta_alpha, 1.0);
    }
  EXPECT_THROW(derive_params({Mechanism::LapU, 0.0, 4}), std::invalid_argument);
  EXPECT_THROW(derive_params({Mechanism::LapU, 1.0, 1}), std::invalid_argument);
}

TEST(LapU, ZeroNoiseStub) {
  // uniform == 0.5 maps to a zero Laplace draw, exposing the sqrt(k) e_x signal.
  ConstStream mid{0.5};
  const auto view = privatize_lapu(2, {Mechanism::LapU, 1.0, 4}, mid);
  const std::vector<double> expected{0.0, 0.0, 2.0, 0.0};
  EXPECT_EQ(view, expected);
  EXPECT_THROW(privatize_lapu(4, {Mechanism::LapU, 1.0, 4}, mid),
               std::invalid_argument);
  EXPECT_THROW(privatize_lapu(-1, {Mechanism::LapU, 1.0, 4}, mid),
               std::invalid_argument);
}

TEST(LapU, EntrywiseMoments) {
  const PrivacyConfig cfg{Mechanism::LapU, 1.0, 4};
  const std::vector<double> probs{0.1, 0.2, 0.3, 0.4};
  const CategoricalSampler data(probs);
  RandomStream stream = derive_stream({100, 0});
  const int reps = 200000;
  std::vector<std::vector<double>> entries(4, std::vector<double>(reps));
  for (int r = 0; r < reps; ++r) {
    const auto view = privatize_lapu(data.sample(stream), cfg, stream);
    for (int m = 0; m < 4; ++m) entries[m][r] = view[m];
  }
  for (int m = 0; m < 4; ++m) {
    const Moments mm = sample_moments(entries[m]);
    EXPECT_NEAR(mm.mean, 2.0 * probs[m], 3.0 * mm.se_mean) << "entry " << m;
  }

  // Noise variance isolated on a fixed input: sigma^2 Var(Lap(1/sqrt 2)) = 8k/a^2.
  std::vector<double> fixed(500000);
  for (auto& v : fixed) v = privatize_lapu(0, cfg, stream)[1];
  const Moments mv = sample_moments(fixed);
  EXPECT_NEAR(mv.var, 32.0, 3.0 * mv.se_var);
}

TEST(DiscLapU, ZeroNoiseStub) {
  ConstStream mid{0.5};
  const auto view = privatize_disclapu(0, {Mechanism::DiscLapU, 1.0, 4}, mid);
  const std::vector<double> expected{2.0, 0.0, 0.0, 0.0};
  EXPECT_EQ(view, expected);
}

TEST(DiscLapU, EntrywiseMoments) {
  const PrivacyConfig cfg{Mechanism::DiscLapU, 1.0, 4};
  const std::vector<double> probs{0.1, 0.2, 0.3, 0.4};
  const CategoricalSampler data(probs);
  RandomStream stream = derive_stream({101, 0});
  const int reps = 200000;
  std::vector<std::vector<double>> entries(4, std::vector<double>(reps));
  for (int r = 0; r < reps; ++r) {
    const auto view = privatize_disclapu(data.sample(stream), cfg, stream);
    for (int m = 0; m < 4; ++m) entries[m][r] = view[m];
  }
  for (int m = 0; m < 4; ++m) {
    const Moments mm = sample_moments(entries[m]);
    EXPECT_NEAR(mm.mean, 2.0 * probs[m], 3.0 * mm.se_mean) << "entry " << m;
  }

  std::vector<double> fixed(500000);
  for (auto& v : fixed) v = privatize_disclapu(0, cfg, stream)[1];
  const Moments mv = sample_moments(fixed);
  EXPECT_LE(mv.var, 32.0 + 3.0 * mv.se_var);
}

TEST(Rappor, LargeBudgetKeepsOneHot) {
  const PrivacyConfig cfg{Mechanism::Rappor, 50.0, 4};
  RandomStream stream = derive_stream({102, 0});
  int kept = 0;
  const int reps = 10000;
  for (int r = 0; r < reps; ++r) {
    const auto view = privatize_rappor(2, cfg, stream);
    const std::vector<double> expected{0.0, 0.0, 1.0, 0.0};
    if (view == expected) ++kept;
  }
  EXPECT_GT(static_cast<double>(kept) / reps, 0.999);
}

TEST(Rappor, EntrywiseMoments) {
  const PrivacyConfig cfg{Mechanism::Rappor, 1.0, 4};
  const MechanismParams p = derive_params(cfg);
  const std::vector<double> probs{0.1, 0.2, 0.3, 0.4};
  const CategoricalSampler data(probs);
  RandomStream stream = derive_stream({103, 0});
  const int reps = 1000000;
  std::vector<long> ones(4, 0);
  for (int r = 0; r < reps; ++r) {
    const auto view = privatize_rappor(data.sample(stream), cfg, stream);
    for (int m = 0; m < 4; ++m)
      if (view[m] == 1.0) ++ones[m];
  }
  for (int m = 0; m < 4; ++m) {
    const double q = p.alpha_bf * probs[m] + p.lambda_bf;
    const double freq = static_cast<double>(ones[m]) / reps;
    const double se = std::sqrt(q * (1.0 - q) / reps);
    EXPECT_NEAR(freq, q, 3.0 * se) << "entry " << m;
    // Bernoulli moments: the empirical variance must match q(1-q) as well.
    const double var = freq * (1.0 - freq);
    EXPECT_NEAR(var, q * (1.0 - q), 3.0 * se);
  }
}

TEST(GenRR, ZeroBudgetIsUniform) {
  RandomStream stream = derive_stream({104, 0});
  const int reps = 200000;
  long zeros = 0;
  for (int r = 0; r < reps; ++r)
    if (genrr_draw(1, 2, 0.0, stream) == 0) ++zeros;
  const double se = std::sqrt(0.25 / reps);
  EXPECT_NEAR(static_cast<double>(zeros) / reps, 0.5, 3.0 * se);
}

TEST(GenRR, KeepProbability) {
  const PrivacyConfig cfg{Mechanism::GenRR, 1.0, 4};
  RandomStream stream = derive_stream({105, 0});
  const int reps = 1000000;
  long kept = 0;
  for (int r = 0; r < reps; ++r)
    if (privatize_genrr(0, cfg, stream) == 0) ++kept;
  const double expect = std::exp(1.0) / (std::exp(1.0) + 3.0);  // 0.47536...
  const double se = std::sqrt(expect * (1.0 - expect) / reps);
  EXPECT_NEAR(static_cast<double>(kept) / reps, expect, 3.0 * se);
}

TEST(GenRR, MarginalMixtureIdentity) {
  const PrivacyConfig cfg{Mechanism::GenRR, 1.0, 4};
  const MechanismParams p = derive_params(cfg);
  const std::vector<double> probs{0.1, 0.2, 0.3, 0.4};
  const CategoricalSampler data(probs);
  RandomStream stream = derive_stream({106, 0});
  const int reps = 1000000;
  std::vector<long> counts(4, 0);
  for (int r = 0; r < reps; ++r)
    ++counts[static_cast<std::size_t>(privatize_genrr(data.sample(stream), cfg, stream))];
  for (int m = 0; m < 4; ++m) {
    const double q = p.w_genrr * probs[m] + (1.0 - p.w_genrr) / 4.0;
    const double se = std::sqrt(q * (1.0 - q) / reps);
    EXPECT_NEAR(static_cast<double>(counts[m]) / reps, q, 3.0 * se) << "entry " << m;
  }
}

TEST(OneHot, Basics) {
  EXPECT_EQ(one_hot(0, 3), (std::vector<double>{1.0, 0.0, 0.0}));
  EXPECT_EQ(one_hot(2, 3), (std::vector<double>{0.0, 0.0, 1.0}));
  for (int x = 0; x < 3; ++x) {
    double total = 0.0;
    for (double v : one_hot(x, 3)) total += v;
    EXPECT_EQ(total, 1.0);
  }
  EXPECT_THROW(one_hot(3, 3), std::invalid_argument);
}

TEST(PrivacyRatio, GenRRExact) {
  for (const int k : {2, 10, 100})
    for (const double alpha : {0.1, 1.0, 2.0}) {
      const double ratio = exact_privacy_ratio({Mechanism::GenRR, alpha, k});
      EXPECT_NEAR(ratio, std::exp(alpha), 1e-12 * std::exp(alpha))
          << "k=" << k << " alpha=" << alpha;
    }
}

TEST(PrivacyRatio, RapporBruteForce) {
  const double ratio = exact_privacy_ratio({Mechanism::Rappor, 1.0, 3});
  // Sharp: attained when both differing bit positions flip against their inputs.
  EXPECT_NEAR(ratio, std::exp(1.0), 1e-12 * std::exp(1.0));
  EXPECT_EQ(exact_privacy_ratio({Mechanism::Rappor, 0.0, 3}), 1.0);
  EXPECT_THROW(exact_privacy_ratio({Mechanism::LapU, 1.0, 3}),
               std::invalid_argument);
  EXPECT_THROW(exact_privacy_ratio({Mechanism::Rappor, 1.0, 16}),
               std::invalid_argument);
}

TEST(PrivacyRatio, LdpPropertyHolds) {
  for (const double alpha : {0.1, 0.5, 1.0, 2.0}) {
    const double bound = std::exp(alpha) * (1.0 + 1e-12);
    for (const int k : {2, 3, 4, 8})
      EXPECT_LE(exact_privacy_ratio({Mechanism::Rappor, alpha, k}), bound);
    for (const int k : {2, 10, 100})
      EXPECT_LE(exact_privacy_ratio({Mechanism::GenRR, alpha, k}), bound);
  }
}

// Formal density/pmf ratio between the two inputs at fixed outputs, for the
// additive mechanisms at k = 2: never above e^alpha on a grid.
TEST(PrivacyRatio, AdditiveMechanismSpotCheck) {
  const int k = 2;
  const double root_k = std::sqrt(2.0);
  for (const double alpha : {0.5, 1.0, 2.0}) {
    const MechanismParams p = derive_params({Mechanism::LapU, alpha, k});
    const double laplace_rate = std::sqrt(2.0) / p.sigma_alpha;  // |.|/b with b = sigma/sqrt2
    const double log_zeta = std::log(p.zeta_alpha);
    double worst_lap = 0.0, worst_disc = 0.0;
    for (double v0 = -3.0; v0 <= 4.0; v0 += 0.25)
      for (double v1 = -3.0; v1 <= 4.0; v1 += 0.25) {
        const auto shifted = [&](double v, int x, int m) {
          return std::abs(v - (x == m ? root_k : 0.0));
        };
        const double lap_log_ratio =
            laplace_rate * (shifted(v0, 1, 0) + shifted(v1, 1, 1) -
                            shifted(v0, 0, 0) - shifted(v1, 0, 1));
        const double disc_log_ratio =
            -log_zeta * (shifted(v0, 1, 0) + shifted(v1, 1, 1) -
                         shifted(v0, 0, 0) - shifted(v1, 0, 1));
        worst_lap = std::max(worst_lap, lap_log_ratio);
        worst_disc = std::max(worst_disc, disc_log_ratio);
      }
    EXPECT_LE(worst_lap, alpha * (1.0 + 1e-9));
    EXPECT_LE(worst_disc, alpha * (1.0 + 1e-9));
  }
}

TEST(DatasetPrivatization, ShapesAndRanges) {
  const std::vector<int> cats{0, 1, 2, 3, 0, 1, 2, 3};
  const StreamKey domain = StreamKey{7, 0}.child(kSaltPrivatize);

  const auto rappor =
      privatize_dataset(cats, 4, {Mechanism::Rappor, 1.0, 4}, domain);
  EXPECT_EQ(rappor.rows.rows(), 8u);
  EXPECT_EQ(rappor.rows.cols(), 4u);
  for (std::size_t i = 0; i < 8; ++i)
    for (double v : rappor.rows.row(i)) EXPECT_TRUE(v == 0.0 || v == 1.0);

  const auto genrr =
      privatize_dataset(cats, 4, {Mechanism::GenRR, 1.0, 4}, domain);
  for (std::size_t i = 0; i < 8; ++i) {
    double total = 0.0;
    for (double v : genrr.rows.row(i)) {
      EXPECT_TRUE(v == 0.0 || v == 1.0);
      total += v;
    }
    EXPECT_EQ(total, 1.0);
  }

  // Owner substreams: a permuted owner order reproduces each row exactly.
  const auto again =
      privatize_dataset(cats, 4, {Mechanism::Rappor, 1.0, 4}, domain);
  EXPECT_EQ(rappor.rows.data(), again.rows.data());
}

}  // namespace
}  // namespace ldptest
