#include "spanel/effects.hpp"

#include <algorithm>
#include <cmath>

#include "spanel/error.hpp"
#include "spanel/rng.hpp"
#include "spanel/stats.hpp"

namespace spanel {

namespace {

void check_admissible(double rho, const WeightMatrix& w) {
    const Eigen::VectorXd& eigs = w.eigenvalues();
    for (Eigen::Index i = 0; i < eigs.size(); ++i) {
        if (1.0 - rho * eigs(i) <= 1e-12) {
            fail(errc::domain, "I - rho*W is singular at rho = " + std::to_string(rho));
        }
    }
}

// gamma coefficient for a regressor, zero when the fit carries no W-lag
double gamma_for(const FitResult& fit, std::size_t regressor_index) {
    if (fit.gamma.size() == 0) return 0.0;
    const std::string lagged_name = "W" + fit.regressor_names[regressor_index];
    for (std::size_t j = 0; j < fit.lagged_names.size(); ++j) {
        if (fit.lagged_names[j] == lagged_name) return fit.gamma(static_cast<Eigen::Index>(j));
    }
    return 0.0;
}

struct Decomposition {
    std::vector<double> direct, indirect, total;
};

// one inverse per parameter vector, then every regressor is O(n^2)
Decomposition decompose_at(const Eigen::VectorXd& beta, const std::vector<double>& gamma, double rho,
                           const WeightMatrix& w) {
    const int n = w.size();
    const Eigen::MatrixXd& wm = w.standardized();
    const Eigen::MatrixXd a_inv = spatial_multiplier(rho, w);

    const double mean_diag_ainv = a_inv.trace() / n;
    double mean_diag_ainv_w = 0.0;
    for (int i = 0; i < n; ++i) mean_diag_ainv_w += a_inv.row(i).dot(wm.col(i));
    mean_diag_ainv_w /= n;
    const Eigen::VectorXd row_sums_ainv = a_inv.rowwise().sum();
    const Eigen::VectorXd row_sums_ainv_w = a_inv * wm.rowwise().sum();
    const double mean_rows_ainv = row_sums_ainv.mean();
    const double mean_rows_ainv_w = row_sums_ainv_w.mean();

    Decomposition out;
    const std::size_t k = static_cast<std::size_t>(beta.size());
    out.direct.resize(k);
    out.indirect.resize(k);
    out.total.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
        const double b = beta(static_cast<Eigen::Index>(j));
        const double g = gamma[j];
        out.direct[j] = b * mean_diag_ainv + g * mean_diag_ainv_w;
        out.total[j] = b * mean_rows_ainv + g * mean_rows_ainv_w;
        out.indirect[j] = out.total[j] - out.direct[j];
    }
    return out;
}

double two_tailed_p(double point, double se) {
    if (se > 0.0) return stats::normal_two_tailed_p(point / se);
    return point == 0.0 ? 1.0 : 0.0;
}

}  // namespace

Eigen::MatrixXd spatial_multiplier(double rho, const WeightMatrix& w) {
    check_admissible(rho, w);
    const int n = w.size();
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - rho * w.standardized();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    return lu.solve(Eigen::MatrixXd::Identity(n, n));
}

Eigen::MatrixXd effects_matrix(const FitResult& fit, const WeightMatrix& w, const std::string& regressor) {
    if (!fit.has_spatial_lag()) {
        fail(errc::usage, "effects_matrix needs a SAR or SDM fit");
    }
    const auto it = std::find(fit.regressor_names.begin(), fit.regressor_names.end(), regressor);
    if (it == fit.regressor_names.end()) fail(errc::usage, "unknown regressor '" + regressor + "'");
    const std::size_t j = static_cast<std::size_t>(it - fit.regressor_names.begin());
    const double beta_k = fit.beta(static_cast<Eigen::Index>(j));
    const double gamma_k = gamma_for(fit, j);
    const int n = w.size();
    const Eigen::MatrixXd inner =
        beta_k * Eigen::MatrixXd::Identity(n, n) + gamma_k * w.standardized();
    return spatial_multiplier(*fit.rho, w) * inner;
}

EffectsTable decompose(const FitResult& fit, const WeightMatrix& w) {
    EffectsTable table;
    table.model = fit.kind;
    table.spillovers = fit.has_spatial_lag();
    const std::size_t k = fit.regressor_names.size();

    if (!table.spillovers) {
        // no spatial lag of the dependent variable: effects are the
        // coefficients themselves and spillovers are not applicable
        for (std::size_t j = 0; j < k; ++j) {
            EffectEntry row;
            row.name = fit.regressor_names[j];
            row.direct = row.total = fit.beta(static_cast<Eigen::Index>(j));
            table.rows.push_back(std::move(row));
        }
        return table;
    }

    std::vector<double> gamma(k);
    for (std::size_t j = 0; j < k; ++j) gamma[j] = gamma_for(fit, j);
    const Decomposition point = decompose_at(fit.beta, gamma, *fit.rho, w);
    for (std::size_t j = 0; j < k; ++j) {
        EffectEntry row;
        row.name = fit.regressor_names[j];
        row.direct = point.direct[j];
        row.indirect = point.indirect[j];
        row.total = point.total[j];
        table.rows.push_back(std::move(row));
    }
    return table;
}

EffectsTable effects_inference(const FitResult& fit, const WeightMatrix& w, int draws, std::uint64_t seed) {
    if (draws < 100) fail(errc::usage, "effects inference needs at least 100 draws");
    EffectsTable table = decompose(fit, w);
    table.draws = draws;
    table.seed = seed;

    const std::size_t k = fit.regressor_names.size();
    const bool spatial = table.spillovers;
    // parameter stack: beta, gamma, then rho for spatial-lag fits
    const Eigen::Index p_beta = fit.beta.size();
    const Eigen::Index p_gamma = fit.gamma.size();
    const Eigen::Index p = spatial ? p_beta + p_gamma + 1 : p_beta;
    Eigen::VectorXd center(p);
    center.head(p_beta) = fit.beta;
    if (p_gamma > 0) center.segment(p_beta, p_gamma) = fit.gamma;
    if (spatial) center(p - 1) = *fit.rho;

    // factor of the asymptotic covariance; eigenvalue clamp if not PD
    const Eigen::MatrixXd cov = fit.vcov.topLeftCorner(p, p);
    Eigen::MatrixXd factor;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() == Eigen::Success) {
        factor = llt.matrixL();
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        factor = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }

    const auto [lo, hi] = spatial ? w.admissible_interval() : std::pair<double, double>{0.0, 0.0};
    std::vector<std::vector<double>> direct_draws(k), indirect_draws(k), total_draws(k);
    for (auto& v : direct_draws) v.reserve(static_cast<std::size_t>(draws));
    for (auto& v : indirect_draws) v.reserve(static_cast<std::size_t>(draws));
    for (auto& v : total_draws) v.reserve(static_cast<std::size_t>(draws));

    int rejected = 0;
    for (int d = 0; d < draws; ++d) {
        Rng rng(derive_seed(seed, "effects-draw", static_cast<std::uint64_t>(d)));
        Eigen::VectorXd theta;
        for (;;) {
            Eigen::VectorXd shock(p);
            for (Eigen::Index i = 0; i < p; ++i) shock(i) = rng.normal();
            theta = center + factor * shock;
            if (!spatial) break;
            const double rho = theta(p - 1);
            if (rho > lo && rho < hi) break;
            if (++rejected > draws) {
                fail(errc::inference, "more than half of the parameter draws were inadmissible");
            }
        }
        if (spatial) {
            std::vector<double> gamma(k, 0.0);
            for (std::size_t j = 0; j < k; ++j) {
                const std::string lagged_name = "W" + fit.regressor_names[j];
                for (std::size_t g = 0; g < fit.lagged_names.size(); ++g) {
                    if (fit.lagged_names[g] == lagged_name) gamma[j] = theta(p_beta + static_cast<Eigen::Index>(g));
                }
            }
            const Decomposition dec = decompose_at(theta.head(p_beta), gamma, theta(p - 1), w);
            for (std::size_t j = 0; j < k; ++j) {
                direct_draws[j].push_back(dec.direct[j]);
                indirect_draws[j].push_back(dec.indirect[j]);
                total_draws[j].push_back(dec.total[j]);
            }
        } else {
            for (std::size_t j = 0; j < k; ++j) {
                const double value = theta(static_cast<Eigen::Index>(j));
                direct_draws[j].push_back(value);
                total_draws[j].push_back(value);
            }
        }
    }
    table.rejected_draws = rejected;

    for (std::size_t j = 0; j < k; ++j) {
        EffectEntry& row = table.rows[j];
        row.direct_se = stats::sd(direct_draws[j]);
        row.direct_p = two_tailed_p(row.direct, row.direct_se);
        row.total_se = stats::sd(total_draws[j]);
        row.total_p = two_tailed_p(row.total, row.total_se);
        if (spatial) {
            row.indirect_se = stats::sd(indirect_draws[j]);
            row.indirect_p = two_tailed_p(*row.indirect, *row.indirect_se);
        }
    }
    return table;
}

ConvergenceReport convergence_rate(double B, std::optional<double> p_value) {
    if (B <= -1.0) fail(errc::domain, "total effect " + std::to_string(B) + " is at or below -1");
    ConvergenceReport report;
    report.B = B;
    report.rate = -std::log(B + 1.0);
    report.divergent = B > 0.0;
    report.significant = p_value && *p_value < 0.05;
    return report;
}

ConvergenceReport convergence_from_effects(const EffectsTable& table) {
    if (table.rows.empty()) fail(errc::usage, "empty effects table");
    const EffectEntry& first = table.rows.front();
    std::optional<double> p;
    if (table.draws > 0) p = first.total_p;
    return convergence_rate(first.total, p);
}

}  // namespace spanel
