// Maintenance tool: regenerates the finite-sample moment table embedded in
// src/unitroot.cpp. For each effective time dimension T~ = T - p - 1 under
// the automatic lag rule, it simulates driftless Gaussian random walks,
// computes the pooled t-statistic and its centering multiplier through the
// production llc_pieces() path, and prints the mean/sd adjustments that make
// the adjusted statistic standard normal under the null.
//
// Usage: llc_moment_table [reps-per-knot]   (default 20000)

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "spanel/rng.hpp"
#include "spanel/unitroot.hpp"

using namespace spanel;

namespace {

struct Knot {
    int T;        // panel length fed to the test
    int lags;     // automatic rule at this T
    double t_tilde;
};

int auto_lags(int T) { return static_cast<int>(std::ceil(std::pow(T, 0.25))); }

Eigen::MatrixXd random_walks(int n, int T, Rng& rng) {
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

struct Moments {
    double mu, sd;
};

Moments calibrate(int T, int lags, LlcDeterministic det, int reps, int n) {
    LlcOptions options;
    options.lags = lags;
    options.deterministic = det;
    std::vector<double> t_deltas(static_cast<std::size_t>(reps)), multipliers(static_cast<std::size_t>(reps));
    double sum_t = 0.0, sum_a = 0.0;
    for (int r = 0; r < reps; ++r) {
        Rng rng(derive_seed(0x11cULL, "moment-table", (static_cast<std::uint64_t>(T) << 32) ^
                                                          (static_cast<std::uint64_t>(det) << 24) ^
                                                          static_cast<std::uint64_t>(r)));
        const LlcPieces pieces = llc_pieces(random_walks(n, T, rng), options);
        t_deltas[static_cast<std::size_t>(r)] = pieces.t_delta;
        multipliers[static_cast<std::size_t>(r)] = pieces.multiplier;
        sum_t += pieces.t_delta;
        sum_a += pieces.multiplier;
    }
    Moments m;
    m.mu = sum_t / sum_a;  // centers E[t_delta - mu * multiplier] at zero
    double mean_centered = 0.0;
    for (int r = 0; r < reps; ++r) mean_centered += t_deltas[static_cast<std::size_t>(r)] - m.mu * multipliers[static_cast<std::size_t>(r)];
    mean_centered /= reps;
    double var = 0.0;
    for (int r = 0; r < reps; ++r) {
        const double c = t_deltas[static_cast<std::size_t>(r)] - m.mu * multipliers[static_cast<std::size_t>(r)] - mean_centered;
        var += c * c;
    }
    m.sd = std::sqrt(var / (reps - 1));
    return m;
}

}  // namespace

int main(int argc, char** argv) {
    const int reps = argc > 1 ? std::atoi(argv[1]) : 20000;
    const int n = 40;  // the moments are free of the cross-section size

    std::vector<Knot> knots;
    for (int T : {12, 15, 20, 25, 30, 35, 40, 45, 50, 60, 70, 82, 100, 150, 256, 506}) {
        const int lags = auto_lags(T);
        knots.push_back(Knot{T, lags, static_cast<double>(T - lags - 1)});
    }

    std::printf("constexpr MomentRow kMoments[] = {\n");
    for (const Knot& knot : knots) {
        const int knot_reps = knot.T >= 150 ? std::max(reps / 5, 1000) : reps;
        const Moments none = calibrate(knot.T, knot.lags, LlcDeterministic::none, knot_reps, n);
        const Moments intercept = calibrate(knot.T, knot.lags, LlcDeterministic::intercept, knot_reps, n);
        const Moments trend = calibrate(knot.T, knot.lags, LlcDeterministic::trend, knot_reps, n);
        std::printf("    {%.1f, %.4f, %.4f, %.4f, %.4f, %.4f, %.4f},\n", knot.t_tilde, none.mu, none.sd,
                    intercept.mu, intercept.sd, trend.mu, trend.sd);
        std::fflush(stdout);
    }
    std::printf("};\n");
    return 0;
}
