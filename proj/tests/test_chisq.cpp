#include "ldptest/chisq.hpp"

#include <gtest/gtest.h>

namespace ldptest {
namespace {

TEST(ChiSquareQuantile, SupportBoundary) {
  EXPECT_LT(chi_square_quantile(1e-12, 1), 1e-4);
  EXPECT_LT(chi_square_quantile(1e-12, 3), 1e-2);
}

TEST(ChiSquareQuantile, KnownValue) {
  EXPECT_NEAR(chi_square_quantile(0.95, 3), 7.8147, 1e-4);
}

TEST(ChiSquareQuantile, RoundTrip) {
  for (const double p : {0.05, 0.5, 0.99})
    for (const int dof : {1, 3, 39})
      EXPECT_NEAR(chi_square_cdf(chi_square_quantile(p, dof), dof), p, 1e-8)
          << "p=" << p << " dof=" << dof;
}

TEST(ChiSquareQuantile, RejectsBadArguments) {
  EXPECT_THROW(chi_square_quantile(0.0, 3), std::invalid_argument);
  EXPECT_THROW(chi_square_quantile(1.0, 3), std::invalid_argument);
  EXPECT_THROW(chi_square_quantile(-0.1, 3), std::invalid_argument);
  EXPECT_THROW(chi_square_quantile(0.5, 0), std::invalid_argument);
}

TEST(ChiSquareCdf, Basics) {
  EXPECT_EQ(chi_square_cdf(0.0, 3), 0.0);
  EXPECT_EQ(chi_square_cdf(-1.0, 3), 0.0);
  EXPECT_NEAR(chi_square_cdf(7.8147, 3), 0.95, 1e-4);
  EXPECT_GT(chi_square_cdf(1000.0, 3), 1.0 - 1e-12);
}

TEST(ChiSquareSf, ComplementsCdfAndStaysPositiveInTheTail) {
  for (const double x : {0.5, 3.0, 7.8147, 30.0})
    EXPECT_NEAR(chi_square_sf(x, 3) + chi_square_cdf(x, 3), 1.0, 1e-12);
  EXPECT_EQ(chi_square_sf(0.0, 3), 1.0);
  // far tail: strictly positive where 1 - cdf would round to zero
  EXPECT_GT(chi_square_sf(400.0, 3), 0.0);
  EXPECT_EQ(1.0 - chi_square_cdf(400.0, 3), 0.0);
}

}  // namespace
}  // namespace ldptest
