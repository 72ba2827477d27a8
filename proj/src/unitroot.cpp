#include "spanel/unitroot.hpp"

#include <cmath>
#include <vector>

#include "spanel/error.hpp"
#include "spanel/stats.hpp"

namespace spanel {

namespace {

// Finite-sample moments of the pooled t-statistic under the common-unit-root
// null, keyed by the effective time dimension T~ = T - p - 1. Regenerated by
// tools/llc_moment_table.cpp (driftless Gaussian random walks, automatic lag
// rule p = ceil(T^(1/4)), autoregressive long-run variance of order
// ceil(2 T^(1/3)), 20000 replications per knot); linear interpolation between knots, clamped at the
// ends. Re-run the tool after touching any estimator convention below.
struct MomentRow {
    double t_tilde;
    double mu_none, sd_none;
    double mu_intercept, sd_intercept;
    double mu_trend, sd_trend;
};

constexpr MomentRow kMoments[] = {
    {9.0, -0.0651, 1.3695, -0.7976, 2.3633, -0.9964, 4.0573},
    {12.0, -0.0543, 1.1444, -0.7915, 1.7342, -0.9751, 2.1545},
    {16.0, -0.0924, 1.0847, -0.7698, 1.6763, -0.9334, 2.0090},
    {21.0, -0.0743, 1.0105, -0.6812, 1.3524, -0.8044, 1.5373},
    {26.0, -0.0627, 0.9787, -0.6580, 1.2551, -0.7846, 1.3790},
    {31.0, -0.0540, 0.9624, -0.6253, 1.1539, -0.7293, 1.2250},
    {36.0, -0.0515, 0.9663, -0.6052, 1.0621, -0.6919, 1.1218},
    {41.0, -0.0455, 0.9486, -0.6164, 1.0479, -0.7105, 1.1053},
    {46.0, -0.0409, 0.9466, -0.6015, 0.9957, -0.6822, 1.0441},
    {56.0, -0.0360, 0.9526, -0.5819, 0.9345, -0.6446, 0.9561},
    {66.0, -0.0322, 0.9515, -0.5730, 0.9187, -0.6355, 0.9329},
    {77.0, -0.0283, 0.9523, -0.5486, 0.8728, -0.5902, 0.8633},
    {95.0, -0.0263, 0.9659, -0.5483, 0.8620, -0.5880, 0.8243},
    {145.0, -0.0203, 0.9490, -0.5333, 0.8027, -0.5628, 0.7317},
    {251.0, -0.0137, 0.9758, -0.5234, 0.7560, -0.5439, 0.6697},
    {500.0, -0.0141, 0.9828, -0.5150, 0.7452, -0.5267, 0.6089},
};

std::pair<double, double> select(const MomentRow& row, LlcDeterministic det) {
    switch (det) {
        case LlcDeterministic::none: return {row.mu_none, row.sd_none};
        case LlcDeterministic::intercept: return {row.mu_intercept, row.sd_intercept};
        case LlcDeterministic::trend: return {row.mu_trend, row.sd_trend};
    }
    return {0.0, 1.0};
}

std::pair<double, double> adjustment_moments(double t_tilde, LlcDeterministic det) {
    constexpr int rows = static_cast<int>(sizeof(kMoments) / sizeof(kMoments[0]));
    if (t_tilde <= kMoments[0].t_tilde) return select(kMoments[0], det);
    for (int i = 1; i < rows; ++i) {
        if (t_tilde <= kMoments[i].t_tilde) {
            const double f =
                (t_tilde - kMoments[i - 1].t_tilde) / (kMoments[i].t_tilde - kMoments[i - 1].t_tilde);
            const auto [mu0, sd0] = select(kMoments[i - 1], det);
            const auto [mu1, sd1] = select(kMoments[i], det);
            return {mu0 + f * (mu1 - mu0), sd0 + f * (sd1 - sd0)};
        }
    }
    return select(kMoments[rows - 1], det);
}

// residual of y on columns; empty design returns y unchanged
Eigen::VectorXd residualize(const Eigen::VectorXd& y, const Eigen::MatrixXd& x) {
    if (x.cols() == 0) return y;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(x.transpose() * x);
    if (ldlt.info() != Eigen::Success) fail(errc::rank, "collinear ADF regressors");
    return y - x * ldlt.solve(x.transpose() * y);
}

// Autoregressive spectral estimate at frequency zero of a (demeaned or
// detrended) difference series: fit AR(q) and return sigma^2/(1 - sum phi)^2.
// Under the unit-root null the differences are near-white and the estimate
// sits at the plain variance; for over-differenced stationary data the
// coefficient sum goes negative and the estimate tracks the vanishing
// spectral mass that kernel estimators cannot resolve.
double long_run_variance(const Eigen::VectorXd& d, int max_order) {
    const int m = static_cast<int>(d.size());
    const int q = std::min(max_order, m / 3);
    const int usable = m - q;
    if (usable < 4 || q <= 0) return d.squaredNorm() / static_cast<double>(m);

    Eigen::MatrixXd x(usable, q);
    Eigen::VectorXd y(usable);
    for (int s = 0; s < usable; ++s) {
        const int t = q + s;
        y(s) = d(t);
        for (int l = 1; l <= q; ++l) x(s, l - 1) = d(t - l);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(x.transpose() * x);
    if (ldlt.info() != Eigen::Success) return d.squaredNorm() / static_cast<double>(m);
    const Eigen::VectorXd phi = ldlt.solve(x.transpose() * y);
    const double sigma2 = (y - x * phi).squaredNorm() / static_cast<double>(usable);
    // differences of an I(1) panel cannot be persistent, so a fitted
    // coefficient sum near one is sampling noise; the floor keeps a rare
    // explosive fit from blowing up the ratio
    const double denom = std::max(std::fabs(1.0 - phi.sum()), 0.2);
    return sigma2 / (denom * denom);
}

}  // namespace

LlcPieces llc_pieces(const Eigen::MatrixXd& series, const LlcOptions& options) {
    const int n = static_cast<int>(series.rows());
    const int T = static_cast<int>(series.cols());
    if (n < 1) fail(errc::dimension, "need at least one cross-section unit");
    if (!series.allFinite()) fail(errc::validation, "panel contains non-finite values");

    const int lags = options.lags ? *options.lags : static_cast<int>(std::ceil(std::pow(T, 0.25)));
    if (options.lags && *options.lags < 0) fail(errc::usage, "negative lag order");
    const int lrv_order = options.lrv_order
                              ? *options.lrv_order
                              : static_cast<int>(std::ceil(2.0 * std::cbrt(static_cast<double>(T))));
    if (lrv_order < 0) fail(errc::usage, "negative long-run variance order");
    if (T < 6 + lags) {
        fail(errc::dimension, "time dimension " + std::to_string(T) + " too small for lag order " +
                                  std::to_string(lags) + " (need T >= " + std::to_string(6 + lags) + ")");
    }

    const int nobs = T - lags - 1;  // usable observations per unit
    const double t_tilde = static_cast<double>(T - lags - 1);

    std::vector<double> pooled_e, pooled_v;
    pooled_e.reserve(static_cast<std::size_t>(n) * nobs);
    pooled_v.reserve(static_cast<std::size_t>(n) * nobs);
    double sd_ratio_sum = 0.0;

    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd y = series.row(i).transpose();
        Eigen::VectorXd dy(T - 1);
        for (int t = 1; t < T; ++t) dy(t - 1) = y(t) - y(t - 1);
        if (dy.squaredNorm() <= 0.0) {
            fail(errc::degenerate, "unit " + std::to_string(i) + " has a constant series");
        }

        // auxiliary design: lagged differences plus deterministic terms
        const int det_cols = options.deterministic == LlcDeterministic::none ? 0
                             : options.deterministic == LlcDeterministic::intercept ? 1 : 2;
        Eigen::MatrixXd aux(nobs, lags + det_cols);
        Eigen::VectorXd dep(nobs);    // delta y_t
        Eigen::VectorXd level(nobs);  // y_{t-1}
        for (int s = 0; s < nobs; ++s) {
            const int t = lags + 1 + s;  // first usable index into y
            dep(s) = y(t) - y(t - 1);
            level(s) = y(t - 1);
            for (int l = 1; l <= lags; ++l) aux(s, l - 1) = y(t - l) - y(t - l - 1);
            if (det_cols >= 1) aux(s, lags) = 1.0;
            if (det_cols == 2) aux(s, lags + 1) = static_cast<double>(t);
        }
        const Eigen::VectorXd e = residualize(dep, aux);
        const Eigen::VectorXd v = residualize(level, aux);

        const double vv = v.squaredNorm();
        if (vv <= 0.0) fail(errc::degenerate, "unit " + std::to_string(i) + " has no level variation");
        const double delta_i = v.dot(e) / vv;
        const double sigma2_ei = (e - delta_i * v).squaredNorm() / static_cast<double>(nobs);
        if (sigma2_ei <= 0.0) {
            fail(errc::degenerate, "unit " + std::to_string(i) + " has zero innovation variance");
        }
        const double sigma_ei = std::sqrt(sigma2_ei);

        for (int s = 0; s < nobs; ++s) {
            pooled_e.push_back(e(s) / sigma_ei);
            pooled_v.push_back(v(s) / sigma_ei);
        }

        // long-run / short-run standard deviation ratio
        Eigen::VectorXd d = dy;
        if (options.deterministic != LlcDeterministic::none) {
            const int d_det = options.deterministic == LlcDeterministic::intercept ? 1 : 2;
            Eigen::MatrixXd det_design(d.size(), d_det);
            det_design.col(0).setOnes();
            if (d_det == 2) {
                for (Eigen::Index t = 0; t < d.size(); ++t) det_design(t, 1) = static_cast<double>(t + 1);
            }
            d = residualize(d, det_design);
        }
        const double lrv = long_run_variance(d, lrv_order);
        sd_ratio_sum += std::sqrt(std::max(lrv, 1e-300)) / sigma_ei;
    }

    // pooled regression of normalized residuals
    double sum_ve = 0.0, sum_vv = 0.0;
    for (std::size_t idx = 0; idx < pooled_e.size(); ++idx) {
        sum_ve += pooled_v[idx] * pooled_e[idx];
        sum_vv += pooled_v[idx] * pooled_v[idx];
    }
    if (sum_vv <= 0.0) fail(errc::degenerate, "pooled level residuals have zero variance");
    const double delta = sum_ve / sum_vv;
    double rss = 0.0;
    for (std::size_t idx = 0; idx < pooled_e.size(); ++idx) {
        const double r = pooled_e[idx] - delta * pooled_v[idx];
        rss += r * r;
    }
    const double total_obs = static_cast<double>(pooled_e.size());
    const double sigma2_pooled = rss / total_obs;
    const double se_delta = std::sqrt(sigma2_pooled / sum_vv);

    LlcPieces pieces;
    pieces.t_delta = delta / se_delta;
    pieces.delta = delta;
    pieces.mean_sd_ratio = sd_ratio_sum / static_cast<double>(n);
    pieces.multiplier =
        static_cast<double>(n) * t_tilde * pieces.mean_sd_ratio * se_delta / sigma2_pooled;
    pieces.lags = lags;
    pieces.t_tilde = t_tilde;
    return pieces;
}

LlcResult llc_test(const Eigen::MatrixXd& series, const LlcOptions& options) {
    const LlcPieces pieces = llc_pieces(series, options);
    const auto [mu_star, sd_star] = adjustment_moments(pieces.t_tilde, options.deterministic);
    const double adjusted = (pieces.t_delta - pieces.multiplier * mu_star) / sd_star;

    LlcResult result;
    result.adjusted_t = adjusted;
    result.p_value = stats::normal_cdf(adjusted);
    result.lags = pieces.lags;
    result.n = static_cast<int>(series.rows());
    result.T = static_cast<int>(series.cols());
    result.delta = pieces.delta;
    result.t_delta = pieces.t_delta;
    result.mean_sd_ratio = pieces.mean_sd_ratio;
    return result;
}

}  // namespace spanel
