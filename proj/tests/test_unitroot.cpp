#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "spanel/error.hpp"
#include "spanel/rng.hpp"
#include "spanel/unitroot.hpp"

using namespace spanel;

namespace {

// pure random walk per unit
Eigen::MatrixXd random_walk_panel(int n, int T, std::uint64_t seed) {
    spanel::Rng rng(seed);
    Eigen::MatrixXd panel(n, T);
    for (int i = 0; i < n; ++i) {
        double level = rng.normal();
        for (int t = 0; t < T; ++t) {
            panel(i, t) = level;
            level += rng.normal();
        }
    }
    return panel;
}

// stationary AR(1) around a unit-specific mean
Eigen::MatrixXd stationary_panel(int n, int T, double ar, std::uint64_t seed) {
    spanel::Rng rng(seed);
    Eigen::MatrixXd panel(n, T);
    for (int i = 0; i < n; ++i) {
        const double mean = rng.normal(0.0, 2.0);
        double state = rng.normal() / std::sqrt(1.0 - ar * ar);
        for (int t = 0; t < T; ++t) {
            panel(i, t) = mean + state;
            state = ar * state + rng.normal();
        }
    }
    return panel;
}

}  // namespace

TEST_CASE("stationary data rejects the unit-root null") {
    const Eigen::MatrixXd panel = stationary_panel(20, 25, 0.5, 31);
    const LlcResult result = llc_test(panel);
    CHECK(result.adjusted_t < -1.645);
    CHECK(result.p_value < 0.05);
    CHECK(result.n == 20);
    CHECK(result.T == 25);
    CHECK(result.lags == 3);  // ceil(25^(1/4))
}

TEST_CASE("random-walk data does not produce extreme rejections") {
    const Eigen::MatrixXd panel = random_walk_panel(20, 30, 17);
    const LlcResult result = llc_test(panel);
    CHECK(std::fabs(result.adjusted_t) < 4.0);
    CHECK(result.p_value > 1e-4);
}

TEST_CASE("statistic is invariant to scaling the whole panel") {
    const Eigen::MatrixXd panel = random_walk_panel(12, 22, 23);
    const LlcResult base = llc_test(panel);
    const LlcResult scaled = llc_test(7.3 * panel);
    CHECK(base.adjusted_t == doctest::Approx(scaled.adjusted_t).epsilon(1e-8));
}

TEST_CASE("statistic is invariant to per-unit constants under individual intercepts") {
    Eigen::MatrixXd panel = random_walk_panel(12, 22, 29);
    const LlcResult base = llc_test(panel);
    spanel::Rng rng(5);
    for (int i = 0; i < 12; ++i) panel.row(i).array() += rng.uniform(-100.0, 100.0);
    const LlcResult shifted = llc_test(panel);
    CHECK(base.adjusted_t == doctest::Approx(shifted.adjusted_t).epsilon(1e-8));
}

TEST_CASE("deterministic for fixed inputs and lag choice") {
    const Eigen::MatrixXd panel = random_walk_panel(10, 20, 37);
    LlcOptions options;
    options.lags = 2;
    const LlcResult one = llc_test(panel, options);
    const LlcResult two = llc_test(panel, options);
    CHECK(one.adjusted_t == two.adjusted_t);
    CHECK(one.p_value == two.p_value);
    CHECK(one.lags == 2);
}

TEST_CASE("dimension and degeneracy errors") {
    const Eigen::MatrixXd tiny = random_walk_panel(5, 4, 41);
    CHECK_THROWS_AS(llc_test(tiny), Error);  // T = 4 is below the minimum

    Eigen::MatrixXd constant = Eigen::MatrixXd::Constant(5, 20, 1.0);
    CHECK_THROWS_AS(llc_test(constant), Error);

    LlcOptions huge_lags;
    huge_lags.lags = 30;
    const Eigen::MatrixXd panel = random_walk_panel(5, 20, 43);
    CHECK_THROWS_AS(llc_test(panel, huge_lags), Error);
}

TEST_CASE("deterministic specifications differ as expected") {
    const Eigen::MatrixXd panel = stationary_panel(15, 25, 0.5, 47);
    LlcOptions none, intercept, trend;
    none.deterministic = LlcDeterministic::none;
    intercept.deterministic = LlcDeterministic::intercept;
    trend.deterministic = LlcDeterministic::trend;
    const LlcResult r_none = llc_test(panel, none);
    const LlcResult r_int = llc_test(panel, intercept);
    const LlcResult r_trend = llc_test(panel, trend);
    // all three run and give finite statistics
    CHECK(std::isfinite(r_none.adjusted_t));
    CHECK(std::isfinite(r_int.adjusted_t));
    CHECK(std::isfinite(r_trend.adjusted_t));
    // the intercept spec has the most power against mean-reverting data here
    CHECK(r_int.p_value < 0.05);
}
