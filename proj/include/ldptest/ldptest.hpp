#pragma once

// Umbrella header: two-sample hypothesis testing under local differential
// privacy. Privatize multinomial or continuous samples with one of four
// mechanisms, test with permutation-calibrated l2 U-statistics or asymptotic
// chi-square baselines, and estimate size/power reproducibly.

#include "ldptest/adaptive.hpp"
#include "ldptest/binning.hpp"
#include "ldptest/chisq.hpp"
#include "ldptest/matrix.hpp"
#include "ldptest/mechanisms.hpp"
#include "ldptest/parallel.hpp"
#include "ldptest/permutation.hpp"
#include "ldptest/random.hpp"
#include "ldptest/simulation.hpp"
#include "ldptest/statistics.hpp"
#include "ldptest/testing.hpp"
