#include "spanel/autocorr.hpp"

#include <cmath>
#include <numeric>
#include <vector>

#include "spanel/error.hpp"
#include "spanel/rng.hpp"
#include "spanel/stats.hpp"

namespace spanel {

namespace {

struct WeightSums {
    double total = 0.0;  // W = sum of all w_ij
    double s1 = 0.0;     // (1/2) sum (w_ij + w_ji)^2
    double s2 = 0.0;     // sum_i (row_i + col_i)^2
};

WeightSums weight_sums(const Eigen::MatrixXd& w) {
    WeightSums sums;
    const Eigen::Index n = w.rows();
    sums.total = w.sum();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double pair = w(i, j) + w(j, i);
            sums.s1 += 0.5 * pair * pair;
        }
        const double cross = w.row(i).sum() + w.col(i).sum();
        sums.s2 += cross * cross;
    }
    return sums;
}

void check_input(std::span<const double> z, const WeightMatrix& w) {
    if (static_cast<int>(z.size()) != w.size()) {
        fail(errc::usage, "value vector length " + std::to_string(z.size()) + " does not match matrix size " +
                              std::to_string(w.size()));
    }
    if (z.size() < 2) fail(errc::dimension, "need at least two observations");
}

// matrix form of the cross product: dev' W dev over the deviations
double moran_statistic(std::span<const double> z, const Eigen::MatrixXd& w, double w_total) {
    const Eigen::Index n = static_cast<Eigen::Index>(z.size());
    const Eigen::Map<const Eigen::VectorXd> zv(z.data(), n);
    const Eigen::VectorXd dev = zv.array() - zv.mean();
    return (static_cast<double>(n) / w_total) * dev.dot(w * dev) / dev.squaredNorm();
}

// sum w_ij (z_i - z_j)^2 expanded to row/column sums and a quadratic form
double geary_statistic(std::span<const double> z, const Eigen::MatrixXd& w, double w_total) {
    const Eigen::Index n = static_cast<Eigen::Index>(z.size());
    const Eigen::Map<const Eigen::VectorXd> zv(z.data(), n);
    const Eigen::VectorXd dev = zv.array() - zv.mean();
    const Eigen::VectorXd sq = zv.array().square();
    const double diff = w.rowwise().sum().dot(sq) + w.colwise().sum().dot(sq) - 2.0 * zv.dot(w * zv);
    return (static_cast<double>(n) - 1.0) * diff / (2.0 * w_total * dev.squaredNorm());
}

void check_degenerate(std::span<const double> z, double w_total) {
    double z_bar = stats::mean(z), ss = 0.0;
    for (double v : z) ss += (v - z_bar) * (v - z_bar);
    if (ss <= 0.0) fail(errc::degenerate, "values have zero variance");
    if (w_total <= 0.0) fail(errc::degenerate, "weight matrix has no positive entries");
}

}  // namespace

TestResult morans_i(std::span<const double> z, const WeightMatrix& w) {
    check_input(z, w);
    const Eigen::MatrixXd& mat = w.standardized();
    const WeightSums sums = weight_sums(mat);
    check_degenerate(z, sums.total);

    const double n = static_cast<double>(z.size());
    TestResult result;
    result.name = "Moran's I";
    result.statistic = moran_statistic(z, mat, sums.total);
    result.expectation = -1.0 / (n - 1.0);
    // Normality-null moments (Cliff-Ord): Var(I) =
    //   (n^2 S1 - n S2 + 3 W^2) / (W^2 (n^2 - 1)) - E(I)^2
    // The permutation test provides a distribution-free cross-check.
    const double w2 = sums.total * sums.total;
    const double var =
        (n * n * sums.s1 - n * sums.s2 + 3.0 * w2) / (w2 * (n * n - 1.0)) - result.expectation * result.expectation;
    if (var <= 0.0) fail(errc::numerical, "nonpositive variance for Moran's I");
    result.sd = std::sqrt(var);
    result.z = (result.statistic - result.expectation) / result.sd;
    result.p_value = stats::normal_two_tailed_p(result.z);
    result.tails = 2;
    return result;
}

TestResult gearys_c(std::span<const double> z, const WeightMatrix& w) {
    check_input(z, w);
    const Eigen::MatrixXd& mat = w.standardized();
    const WeightSums sums = weight_sums(mat);
    check_degenerate(z, sums.total);

    const double n = static_cast<double>(z.size());
    TestResult result;
    result.name = "Geary's c";
    result.statistic = geary_statistic(z, mat, sums.total);
    result.expectation = 1.0;
    // Normality-null moments (Cliff-Ord): Var(C) =
    //   ((2 S1 + S2)(n - 1) - 4 W^2) / (2 (n + 1) W^2)
    const double w2 = sums.total * sums.total;
    const double var = ((2.0 * sums.s1 + sums.s2) * (n - 1.0) - 4.0 * w2) / (2.0 * (n + 1.0) * w2);
    if (var <= 0.0) fail(errc::numerical, "nonpositive variance for Geary's c");
    result.sd = std::sqrt(var);
    result.z = (result.statistic - result.expectation) / result.sd;
    result.p_value = stats::normal_two_tailed_p(result.z);
    result.tails = 2;
    return result;
}

TestResult permutation_test(std::span<const double> z, const WeightMatrix& w, AutocorrStatistic statistic,
                            int reps, std::uint64_t seed) {
    if (reps < 99) fail(errc::usage, "permutation test needs at least 99 replications");
    check_input(z, w);
    const Eigen::MatrixXd& mat = w.standardized();
    const double w_total = mat.sum();
    check_degenerate(z, w_total);

    const bool moran = statistic == AutocorrStatistic::moran;
    const double observed = moran ? moran_statistic(z, mat, w_total) : geary_statistic(z, mat, w_total);
    const double expectation = moran ? -1.0 / (static_cast<double>(z.size()) - 1.0) : 1.0;
    const double observed_dev = std::fabs(observed - expectation);

    std::vector<double> draws(static_cast<std::size_t>(reps));
    int extreme = 0;
    for (int r = 0; r < reps; ++r) {
        // each replication owns a derived stream, so the loop could be
        // partitioned across threads without changing results
        std::vector<double> permuted(z.begin(), z.end());
        Rng rng(derive_seed(seed, "permutation", static_cast<std::uint64_t>(r)));
        rng.shuffle(permuted);
        const double stat = moran ? moran_statistic(permuted, mat, w_total) : geary_statistic(permuted, mat, w_total);
        draws[static_cast<std::size_t>(r)] = stat;
        if (std::fabs(stat - expectation) >= observed_dev - 1e-12) ++extreme;
    }

    TestResult result;
    result.name = std::string(moran ? "Moran's I" : "Geary's c") + " (permutation)";
    result.statistic = observed;
    result.expectation = expectation;
    result.sd = stats::sd(draws);
    result.z = result.sd > 0.0 ? (observed - stats::mean(draws)) / result.sd : 0.0;
    result.p_value = (1.0 + extreme) / (static_cast<double>(reps) + 1.0);
    result.tails = 2;
    return result;
}

}  // namespace spanel
