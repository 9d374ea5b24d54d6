#pragma once

// Deterministic, splittable random streams plus the samplers used by the
// privacy mechanisms and the simulation scenarios.
//
// A stream is keyed by (master_seed, task_id). The generator state is a pure
// function of the key, so replications, permutations and data owners can each
// derive their own stream and be evaluated on any number of workers without
// changing the output.

#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace ldptest {

namespace detail {

// Finalizer from splitmix64 (Stafford mix13): full avalanche on 64 bits.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  return mix64(state);
}

}  // namespace detail

struct StreamKey {
  std::uint64_t master_seed = 0;
  std::uint64_t task_id = 0;

  // Fresh master seed for a sub-domain (privatization, permutations,
  // replications, ...). Distinct salts give unrelated child domains.
  [[nodiscard]] StreamKey child(std::uint64_t salt) const {
    std::uint64_t h =
        detail::mix64(master_seed + 0x9e3779b97f4a7c15ULL * (salt + 1));
    return {detail::mix64(h ^ task_id), 0};
  }

  [[nodiscard]] StreamKey with_task(std::uint64_t t) const {
    return {master_seed, t};
  }
};

// Domain salts for StreamKey::child. Keeping them in one place documents the
// nesting scheme: replication keys wrap test keys, which wrap owner and
// permutation streams.
inline constexpr std::uint64_t kSaltPrivatize = 0x01;
inline constexpr std::uint64_t kSaltPermutation = 0x02;
inline constexpr std::uint64_t kSaltReplication = 0x03;
inline constexpr std::uint64_t kSaltAdaptive = 0x04;
inline constexpr std::uint64_t kSaltSweepRow = 0x05;
inline constexpr std::uint64_t kSaltScenario = 0x06;

// xoshiro256++ seeded through splitmix64 from the avalanche-mixed key.
class RandomStream {
 public:
  explicit RandomStream(StreamKey key) {
    std::uint64_t h = detail::mix64(key.master_seed ^ 0x6a09e667f3bcc909ULL);
    h = detail::mix64(h ^ key.task_id);
    for (auto& word : state_) word = detail::splitmix64(h);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform draw on the open interval (0,1). Endpoints are excluded so that
  // log(u) and log(1-u) stay finite in the inverse-CDF samplers.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound) via the multiply-shift reduction. The bias
  // is O(bound / 2^64), irrelevant at the bounds used here.
  std::uint64_t below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> state_;
};

inline RandomStream derive_stream(StreamKey key) { return RandomStream(key); }

// Anything with a uniform() draw on (0,1); lets tests substitute stub noise.
template <class S>
concept UniformSource = requires(S s) {
  { s.uniform() } -> std::convertible_to<double>;
};

// Centered Laplace with scale b, by inverse CDF: x = -b sgn(u-1/2) ln(1-2|u-1/2|).
template <UniformSource S>
double sample_laplace(double scale, S& stream) {
  if (!(scale > 0.0)) throw std::invalid_argument("laplace scale must be > 0");
  const double u = stream.uniform() - 0.5;
  const double sign = u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0);
  return -scale * sign * std::log1p(-2.0 * std::abs(u));
}

struct DiscreteLaplaceParam {
  double zeta = 0.0;  // must lie in (0,1)
};

// One draw W with P(W=w) = ((1-zeta)/(1+zeta)) zeta^|w|, as the difference of
// two geometric counts. The geometric uses inversion floor(ln u / ln zeta),
// which has exact support {0,1,2,...} and no rejection loop.
template <UniformSource S>
long long sample_discrete_laplace(DiscreteLaplaceParam p, S& stream) {
  if (!(p.zeta > 0.0) || !(p.zeta < 1.0))
    throw std::invalid_argument("discrete-laplace zeta must be in (0,1)");
  const double log_zeta = std::log(p.zeta);
  const auto geometric = [&]() -> long long {
    return static_cast<long long>(std::log(stream.uniform()) / log_zeta);
  };
  const long long g1 = geometric();
  const long long g2 = geometric();
  return g1 - g2;
}

// Categorical sampling by cumulative-sum inversion. Validates the probability
// vector once; reuse the sampler when drawing many times from the same law.
class CategoricalSampler {
 public:
  explicit CategoricalSampler(std::span<const double> probs) {
    if (probs.empty()) throw std::invalid_argument("empty probability vector");
    cdf_.resize(probs.size());
    double total = 0.0;
    for (std::size_t m = 0; m < probs.size(); ++m) {
      if (!(probs[m] >= 0.0))
        throw std::invalid_argument("negative categorical probability");
      total += probs[m];
      cdf_[m] = total;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument("categorical probabilities must sum to 1");
    cdf_.back() = 1.0;
  }

  template <UniformSource S>
  int sample(S& stream) const {
    const double u = stream.uniform();
    std::size_t lo = 0, hi = cdf_.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (cdf_[mid] < u)
        lo = mid + 1;
      else
        hi = mid;
    }
    return static_cast<int>(lo);
  }

  [[nodiscard]] int size() const { return static_cast<int>(cdf_.size()); }

 private:
  std::vector<double> cdf_;
};

template <UniformSource S>
int sample_categorical(std::span<const double> probs, S& stream) {
  return CategoricalSampler(probs).sample(stream);
}

// Fills out with independent standard normal draws using the Marsaglia polar
// method; deviates are produced in pairs and the spare from an odd-length
// request is discarded.
template <UniformSource S>
void sample_std_gaussian(std::span<double> out, S& stream) {
  std::size_t i = 0;
  while (i < out.size()) {
    double v1, v2, s;
    do {
      v1 = 2.0 * stream.uniform() - 1.0;
      v2 = 2.0 * stream.uniform() - 1.0;
      s = v1 * v1 + v2 * v2;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    out[i++] = v1 * f;
    if (i < out.size()) out[i++] = v2 * f;
  }
}

template <UniformSource S>
std::vector<double> sample_std_gaussian_vector(std::size_t d, S& stream) {
  if (d == 0) throw std::invalid_argument("gaussian vector dimension must be >= 1");
  std::vector<double> out(d);
  sample_std_gaussian(out, stream);
  return out;
}

}  // namespace ldptest
