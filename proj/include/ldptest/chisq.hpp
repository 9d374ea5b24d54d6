#pragma once

// Chi-square distribution helpers for the asymptotic calibration path.

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <stdexcept>

namespace ldptest {

inline double chi_square_cdf(double x, int dof) {
  if (dof < 1) throw std::invalid_argument("degrees of freedom must be >= 1");
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_p(dof / 2.0, x / 2.0);
}

// Upper tail computed directly; avoids the 1 - cdf cancellation far out in
// the tail.
inline double chi_square_sf(double x, int dof) {
  if (dof < 1) throw std::invalid_argument("degrees of freedom must be >= 1");
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(dof / 2.0, x / 2.0);
}

// p-quantile by bisection on the regularized lower incomplete gamma, to
// absolute tolerance 1e-9.
inline double chi_square_quantile(double p, int dof) {
  if (dof < 1) throw std::invalid_argument("degrees of freedom must be >= 1");
  if (!(p > 0.0) || !(p < 1.0))
    throw std::invalid_argument("quantile probability must lie in (0,1)");
  double lo = 0.0;
  double hi = dof + 10.0 * std::sqrt(2.0 * dof) + 10.0;
  while (chi_square_cdf(hi, dof) < p) hi *= 2.0;
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    if (chi_square_cdf(mid, dof) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace ldptest
