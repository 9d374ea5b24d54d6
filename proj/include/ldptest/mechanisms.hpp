#pragma once

// The four local-privatization mechanisms for multinomial data, the closed
// forms of their derived constants, and exact privacy-ratio computation for
// the discrete mechanisms.
//
// View conventions:
//   LapU      sqrt(k) * e_x + sigma_alpha * W,  W ~ Lap(1/sqrt(2)) per entry
//   DiscLapU  sqrt(k) * e_x + W,                W ~ DL(zeta_alpha) per entry
//   RAPPOR    entrywise bit flip of e_x, keep probability e^(a/2)/(e^(a/2)+1)
//   GenRR     category resampled, keep odds e^a : 1 per other category
//
// DiscLapU adds its integer noise unscaled: the privacy argument and the
// variance bound both hold for sqrt(k) e_x + W, and scaling the noise by
// sigma_alpha would break them.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldptest/matrix.hpp"
#include "ldptest/random.hpp"

namespace ldptest {

enum class Mechanism { LapU, DiscLapU, Rappor, GenRR };

inline const char* to_string(Mechanism m) {
  switch (m) {
    case Mechanism::LapU: return "lapu";
    case Mechanism::DiscLapU: return "disclapu";
    case Mechanism::Rappor: return "rappor";
    case Mechanism::GenRR: return "genrr";
  }
  throw std::invalid_argument("unknown mechanism");
}

inline Mechanism mechanism_from_string(const std::string& s) {
  if (s == "lapu") return Mechanism::LapU;
  if (s == "disclapu") return Mechanism::DiscLapU;
  if (s == "rappor") return Mechanism::Rappor;
  if (s == "genrr") return Mechanism::GenRR;
  throw std::invalid_argument("unknown mechanism: " + s);
}

struct PrivacyConfig {
  Mechanism mechanism = Mechanism::Rappor;
  double alpha = 1.0;  // privacy budget, > 0
  int k = 2;           // number of categories, >= 2

  void validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("privacy budget alpha must be > 0");
    if (k < 2) throw std::invalid_argument("category count k must be >= 2");
  }
};

// All derived constants in one place so a single config evaluation serves any
// mechanism.
struct MechanismParams {
  double sigma_alpha;  // LapU noise multiplier, 2 sqrt(2k) / alpha
  double zeta_alpha;   // DiscLapU parameter, exp(-alpha / (2 sqrt(k)))
  double alpha_bf;     // RAPPOR signal coefficient, (e^(a/2)-1)/(e^(a/2)+1)
  double lambda_bf;    // RAPPOR bias, 1/(e^(a/2)+1)
  double w_genrr;      // GenRR mixing weight, (e^a-1)/(e^a+k-1)
};

inline MechanismParams derive_params(const PrivacyConfig& cfg) {
  cfg.validate();
  const double root_k = std::sqrt(static_cast<double>(cfg.k));
  const double ea2 = std::exp(cfg.alpha / 2.0);
  const double ea = std::exp(cfg.alpha);
  return MechanismParams{
      .sigma_alpha = 2.0 * std::sqrt(2.0 * cfg.k) / cfg.alpha,
      .zeta_alpha = std::exp(-cfg.alpha / (2.0 * root_k)),
      .alpha_bf = (ea2 - 1.0) / (ea2 + 1.0),
      .lambda_bf = 1.0 / (ea2 + 1.0),
      .w_genrr = (ea - 1.0) / (ea + cfg.k - 1.0),
  };
}

inline void check_category(int x, int k) {
  if (x < 0 || x >= k) throw std::invalid_argument("category index out of range");
}

inline std::vector<double> one_hot(int x, int k) {
  check_category(x, k);
  std::vector<double> e(static_cast<std::size_t>(k), 0.0);
  e[static_cast<std::size_t>(x)] = 1.0;
  return e;
}

// ---- low-level view writers ----------------------------------------------

template <UniformSource S>
void lapu_view(int x, int k, double sigma_alpha, S& stream, std::span<double> out) {
  check_category(x, k);
  const double root_k = std::sqrt(static_cast<double>(k));
  for (int m = 0; m < k; ++m) {
    const double signal = (m == x) ? root_k : 0.0;
    out[static_cast<std::size_t>(m)] =
        signal + sigma_alpha * sample_laplace(1.0 / std::sqrt(2.0), stream);
  }
}

template <UniformSource S>
void disclapu_view(int x, int k, double zeta_alpha, S& stream, std::span<double> out) {
  check_category(x, k);
  const double root_k = std::sqrt(static_cast<double>(k));
  const DiscreteLaplaceParam param{zeta_alpha};
  for (int m = 0; m < k; ++m) {
    const double signal = (m == x) ? root_k : 0.0;
    out[static_cast<std::size_t>(m)] =
        signal + static_cast<double>(sample_discrete_laplace(param, stream));
  }
}

template <UniformSource S>
void rappor_view(int x, int k, double alpha, S& stream, std::span<double> out) {
  check_category(x, k);
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
  const double keep_prob = std::exp(alpha / 2.0) / (std::exp(alpha / 2.0) + 1.0);
  for (int m = 0; m < k; ++m) {
    const double bit = (m == x) ? 1.0 : 0.0;
    out[static_cast<std::size_t>(m)] =
        (stream.uniform() < keep_prob) ? bit : 1.0 - bit;
  }
}

template <UniformSource S>
int genrr_draw(int x, int k, double alpha, S& stream) {
  check_category(x, k);
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
  const double ea = std::exp(alpha);
  const double keep_prob = ea / (ea + k - 1);
  if (stream.uniform() < keep_prob) return x;
  // Uniform over the other k-1 categories.
  int j = static_cast<int>(stream.uniform() * (k - 1));
  if (j >= k - 1) j = k - 2;
  return j >= x ? j + 1 : j;
}

// ---- single-datum privatization ops ----------------------------------------

template <UniformSource S>
std::vector<double> privatize_lapu(int x, const PrivacyConfig& cfg, S& stream) {
  cfg.validate();
  std::vector<double> out(static_cast<std::size_t>(cfg.k));
  lapu_view(x, cfg.k, derive_params(cfg).sigma_alpha, stream, out);
  return out;
}

template <UniformSource S>
std::vector<double> privatize_disclapu(int x, const PrivacyConfig& cfg, S& stream) {
  cfg.validate();
  std::vector<double> out(static_cast<std::size_t>(cfg.k));
  disclapu_view(x, cfg.k, derive_params(cfg).zeta_alpha, stream, out);
  return out;
}

template <UniformSource S>
std::vector<double> privatize_rappor(int x, const PrivacyConfig& cfg, S& stream) {
  if (cfg.k < 2) throw std::invalid_argument("category count k must be >= 2");
  std::vector<double> out(static_cast<std::size_t>(cfg.k));
  rappor_view(x, cfg.k, cfg.alpha, stream, out);
  return out;
}

template <UniformSource S>
int privatize_genrr(int x, const PrivacyConfig& cfg, S& stream) {
  if (cfg.k < 2) throw std::invalid_argument("category count k must be >= 2");
  return genrr_draw(x, cfg.k, cfg.alpha, stream);
}

// ---- dataset privatization -------------------------------------------------

// One privatized view per data owner. Rows 0..n1-1 are sample Y. Owner i
// draws from its own substream, so owners can be privatized in any order or
// in parallel with identical output.
struct PrivateViewMatrix {
  Matrix rows;
  std::size_t n1 = 0;

  void validate() const {
    if (n1 < 1 || n1 >= rows.rows())
      throw std::invalid_argument("split must satisfy 1 <= n1 < n");
  }
};

// GenRR keeps its category-index form; the l2 pipeline consumes the unscaled
// one-hot encodings of these indices.
inline std::vector<int> privatize_dataset_genrr(std::span<const int> cats,
                                                const PrivacyConfig& cfg,
                                                StreamKey owner_domain) {
  std::vector<int> out(cats.size());
  for (std::size_t i = 0; i < cats.size(); ++i) {
    RandomStream stream = derive_stream(owner_domain.with_task(i));
    out[i] = genrr_draw(cats[i], cfg.k, cfg.alpha, stream);
  }
  return out;
}

// n1 is recorded, not validated: the statistic and permutation layers check
// the split. Bare privatization accepts any row count.
inline PrivateViewMatrix privatize_dataset(std::span<const int> cats,
                                           std::size_t n1,
                                           const PrivacyConfig& cfg,
                                           StreamKey owner_domain) {
  cfg.validate();
  PrivateViewMatrix views{Matrix(cats.size(), static_cast<std::size_t>(cfg.k)), n1};
  const MechanismParams params = derive_params(cfg);
  for (std::size_t i = 0; i < cats.size(); ++i) {
    RandomStream stream = derive_stream(owner_domain.with_task(i));
    const auto out = views.rows.row(i);
    switch (cfg.mechanism) {
      case Mechanism::LapU:
        lapu_view(cats[i], cfg.k, params.sigma_alpha, stream, out);
        break;
      case Mechanism::DiscLapU:
        disclapu_view(cats[i], cfg.k, params.zeta_alpha, stream, out);
        break;
      case Mechanism::Rappor:
        rappor_view(cats[i], cfg.k, cfg.alpha, stream, out);
        break;
      case Mechanism::GenRR: {
        const int m = genrr_draw(cats[i], cfg.k, cfg.alpha, stream);
        out[static_cast<std::size_t>(m)] = 1.0;
        break;
      }
    }
  }
  return views;
}

// ---- exact privacy ratios ---------------------------------------------------

// Worst-case conditional-probability ratio over all output events and input
// pairs, computable in closed form for GenRR and by brute force over the 2^k
// output vectors for RAPPOR. Continuous mechanisms have no finite event
// enumeration and are rejected.
inline double exact_privacy_ratio(const PrivacyConfig& cfg) {
  if (cfg.k < 2) throw std::invalid_argument("category count k must be >= 2");
  if (!(cfg.alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");

  if (cfg.mechanism == Mechanism::GenRR) {
    const double ea = std::exp(cfg.alpha);
    const double denom = ea + cfg.k - 1;
    double worst = 0.0;
    for (int out = 0; out < cfg.k; ++out)
      for (int x = 0; x < cfg.k; ++x)
        for (int xp = 0; xp < cfg.k; ++xp) {
          const double num = (out == x) ? ea : 1.0;
          const double den = (out == xp) ? ea : 1.0;
          worst = std::max(worst, (num / denom) / (den / denom));
        }
    return worst;
  }

  if (cfg.mechanism == Mechanism::Rappor) {
    if (cfg.k > 12)
      throw std::invalid_argument("RAPPOR brute force limited to k <= 12");
    const double keep =
        std::exp(cfg.alpha / 2.0) / (std::exp(cfg.alpha / 2.0) + 1.0);
    const double flip = 1.0 - keep;
    double worst = 0.0;
    for (std::uint32_t bits = 0; bits < (1u << cfg.k); ++bits) {
      for (int x = 0; x < cfg.k; ++x)
        for (int xp = 0; xp < cfg.k; ++xp) {
          double num = 1.0, den = 1.0;
          for (int m = 0; m < cfg.k; ++m) {
            const bool bit = (bits >> m) & 1u;
            num *= (bit == (m == x)) ? keep : flip;
            den *= (bit == (m == xp)) ? keep : flip;
          }
          worst = std::max(worst, num / den);
        }
    }
    return worst;
  }

  throw std::invalid_argument(
      "exact privacy ratio is only defined for the discrete mechanisms");
}

}  // namespace ldptest
