#pragma once

#include <cstdint>
#include <span>

#include "spanel/testresult.hpp"
#include "spanel/weights.hpp"

namespace spanel {

enum class AutocorrStatistic { moran, geary };

// Global Moran's I with moments under the normality null; two-tailed.
TestResult morans_i(std::span<const double> z, const WeightMatrix& w);

// Global Geary's C, E(C) = 1, values below one mean positive autocorrelation.
TestResult gearys_c(std::span<const double> z, const WeightMatrix& w);

// Random-permutation inference for either statistic under the spatial
// randomization null: p = (1 + #{at least as extreme}) / (reps + 1),
// two-tailed around the theoretical expectation. Deterministic given seed.
TestResult permutation_test(std::span<const double> z, const WeightMatrix& w, AutocorrStatistic statistic,
                            int reps, std::uint64_t seed);

}  // namespace spanel
