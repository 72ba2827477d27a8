#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "spanel/autocorr.hpp"
#include "spanel/error.hpp"

using namespace spanel;

namespace {

// two disconnected pairs holding equal values: perfect clustering
WeightMatrix paired_weights() {
    Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(4, 4);
    raw(0, 1) = raw(1, 0) = 1.0;
    raw(2, 3) = raw(3, 2) = 1.0;
    return testutil::weights_from_raw(raw);
}

// exact permutation p-value by full enumeration of value assignments
double exhaustive_p(const std::vector<double>& z, const WeightMatrix& w, bool moran) {
    std::vector<int> order(z.size());
    std::iota(order.begin(), order.end(), 0);
    const double expectation = moran ? -1.0 / (static_cast<double>(z.size()) - 1.0) : 1.0;
    std::vector<double> permuted(z.size());
    const double observed = moran ? testutil::moran_oracle(z, w.standardized())
                                  : testutil::geary_oracle(z, w.standardized());
    const double observed_dev = std::fabs(observed - expectation);
    long total = 0, extreme = 0;
    do {
        for (std::size_t i = 0; i < z.size(); ++i) permuted[i] = z[static_cast<std::size_t>(order[i])];
        const double stat = moran ? testutil::moran_oracle(permuted, w.standardized())
                                  : testutil::geary_oracle(permuted, w.standardized());
        if (std::fabs(stat - expectation) >= observed_dev - 1e-12) ++extreme;
        ++total;
    } while (std::next_permutation(order.begin(), order.end()));
    return static_cast<double>(extreme) / static_cast<double>(total);
}

}  // namespace

TEST_CASE("perfect clustering: I = 1 and C = 0") {
    const WeightMatrix w = paired_weights();
    const std::vector<double> z{1.0, 1.0, -1.0, -1.0};
    const TestResult moran = morans_i(z, w);
    CHECK(moran.statistic == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(moran.expectation == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));
    const TestResult geary = gearys_c(z, w);
    CHECK(geary.statistic == doctest::Approx(0.0).scale(1).epsilon(1e-12));
    CHECK(geary.expectation == 1.0);
    CHECK(geary.z < 0.0);
}

TEST_CASE("expectation is exactly -1/(n-1), -0.01 at n = 101") {
    spanel::Rng rng(5);
    const WeightMatrix w = testutil::random_weights(101, rng, 0.1);
    std::vector<double> z(101);
    for (auto& v : z) v = rng.normal();
    const TestResult moran = morans_i(z, w);
    CHECK(moran.expectation == -1.0 / 100.0);
    CHECK(moran.expectation == doctest::Approx(-0.01).epsilon(1e-15));
    const TestResult geary = gearys_c(z, w);
    CHECK(geary.expectation == 1.0);
}

TEST_CASE("degenerate inputs are rejected") {
    const WeightMatrix w = paired_weights();
    const std::vector<double> constant{2.0, 2.0, 2.0, 2.0};
    CHECK_THROWS_WITH_AS(morans_i(constant, w), doctest::Contains("zero variance"), Error);
    CHECK_THROWS_AS(gearys_c(constant, w), Error);
    const std::vector<double> wrong_size{1.0, 2.0};
    CHECK_THROWS_AS(morans_i(wrong_size, w), Error);
}

TEST_CASE("matrix formulas equal the explicit double-sum oracle on random instances") {
    spanel::Rng rng(23);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 3 + static_cast<int>(rng.uniform_int(4));  // n in 3..6
        const WeightMatrix w = testutil::random_weights(n, rng, 0.7);
        std::vector<double> z(static_cast<std::size_t>(n));
        for (auto& v : z) v = rng.uniform(-3.0, 3.0);
        const double moran = morans_i(z, w).statistic;
        const double geary = gearys_c(z, w).statistic;
        CHECK(std::fabs(moran - testutil::moran_oracle(z, w.standardized())) < 1e-12);
        CHECK(std::fabs(geary - testutil::geary_oracle(z, w.standardized())) < 1e-12);
    }
}

TEST_CASE("affine transforms leave both statistics unchanged") {
    spanel::Rng rng(29);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 4 + static_cast<int>(rng.uniform_int(10));
        const WeightMatrix w = testutil::random_weights(n, rng);
        std::vector<double> z(static_cast<std::size_t>(n)), transformed(static_cast<std::size_t>(n));
        for (auto& v : z) v = rng.normal();
        const double a = rng.uniform(0.1, 5.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        const double b = rng.uniform(-10.0, 10.0);
        for (std::size_t i = 0; i < z.size(); ++i) transformed[i] = a * z[i] + b;
        CHECK(morans_i(transformed, w).statistic == doctest::Approx(morans_i(z, w).statistic).epsilon(1e-12));
        CHECK(gearys_c(transformed, w).statistic == doctest::Approx(gearys_c(z, w).statistic).epsilon(1e-12));
    }
}

TEST_CASE("normality-null standard deviations track the permutation spread") {
    // the closed-form moments are the documented choice; the permutation
    // distribution provides the distribution-free cross-check
    spanel::Rng rng(73);
    const WeightMatrix w = testutil::random_weights(60, rng, 0.15);
    std::vector<double> z(60);
    for (auto& v : z) v = rng.normal();
    const TestResult moran = morans_i(z, w);
    const TestResult moran_perm = permutation_test(z, w, AutocorrStatistic::moran, 1999, 31);
    CHECK(moran_perm.sd == doctest::Approx(moran.sd).epsilon(0.15));
    const TestResult geary = gearys_c(z, w);
    const TestResult geary_perm = permutation_test(z, w, AutocorrStatistic::geary, 1999, 37);
    CHECK(geary_perm.sd == doctest::Approx(geary.sd).epsilon(0.15));
}

TEST_CASE("normal-approximation z broadly agrees with permutation inference") {
    spanel::Rng rng(31);
    const WeightMatrix w = testutil::random_weights(40, rng, 0.2);
    std::vector<double> z(40);
    for (auto& v : z) v = rng.normal();
    // under an exchangeable null both p-values must be of the same order
    const TestResult normal_test = morans_i(z, w);
    const TestResult perm = permutation_test(z, w, AutocorrStatistic::moran, 999, 99);
    CHECK(perm.statistic == doctest::Approx(normal_test.statistic));
    if (normal_test.p_value > 0.2) CHECK(perm.p_value > 0.05);
    if (normal_test.p_value < 0.01) CHECK(perm.p_value < 0.1);
}

TEST_CASE("permutation inference is deterministic and matches exhaustive enumeration") {
    const WeightMatrix w = paired_weights();
    const std::vector<double> z{1.0, 1.0, -1.0, -1.0};

    const TestResult first = permutation_test(z, w, AutocorrStatistic::moran, 999, 42);
    const TestResult second = permutation_test(z, w, AutocorrStatistic::moran, 999, 42);
    CHECK(first.p_value == second.p_value);
    CHECK(first.sd == second.sd);

    // with tied values many relabelings reproduce I = 1: the exact p-value
    // is 1/3, far from significant at any conventional level
    const double exact = exhaustive_p(z, w, true);
    CHECK(exact == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(first.p_value == doctest::Approx(exact).epsilon(0.15));

    CHECK_THROWS_AS(permutation_test(z, w, AutocorrStatistic::moran, 50, 1), Error);  // too few reps
}

TEST_CASE("distinct paired values make maximal clustering significant") {
    // four disconnected pairs, distinct values within and across pairs
    Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(8, 8);
    for (int p = 0; p < 4; ++p) raw(2 * p, 2 * p + 1) = raw(2 * p + 1, 2 * p) = 1.0;
    const WeightMatrix w = testutil::weights_from_raw(raw);
    const std::vector<double> z{1.0, 1.1, -1.0, -1.05, 2.0, 2.1, -2.0, -2.1};

    const double exact = exhaustive_p(z, w, true);
    CHECK(exact < 0.05);
    const TestResult perm = permutation_test(z, w, AutocorrStatistic::moran, 1999, 7);
    CHECK(perm.p_value < 0.05);
    CHECK(perm.p_value == doctest::Approx(exact).epsilon(1.0).scale(0.02));
}
