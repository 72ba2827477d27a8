#include "spanel/montecarlo.hpp"

#include <cmath>
#include <string>

#include "spanel/effects.hpp"
#include "spanel/error.hpp"
#include "spanel/rng.hpp"

namespace spanel {

namespace {

std::string unit_label(int i) { return "U" + std::to_string(i + 1); }

void check_config(const SimConfig& cfg) {
    if (cfg.n < 2 || cfg.T_eff < 2) fail(errc::usage, "simulation needs n >= 2 and T >= 2");
    if (cfg.sigma <= 0.0) fail(errc::usage, "sigma must be positive");
    if (cfg.beta.empty()) fail(errc::usage, "at least one regressor is required");
    if (cfg.model != ModelKind::SAR && cfg.model != ModelKind::SEM && cfg.model != ModelKind::SDM) {
        fail(errc::usage, "generator must be SAR, SEM or SDM");
    }
    if (cfg.model == ModelKind::SDM) {
        if (cfg.lagged_regressors.empty() || cfg.gamma.size() != cfg.lagged_regressors.size()) {
            fail(errc::usage, "SDM generator needs aligned lagged_regressors and gamma");
        }
        for (int idx : cfg.lagged_regressors) {
            if (idx < 0 || idx >= static_cast<int>(cfg.beta.size())) {
                fail(errc::usage, "lagged regressor index out of range");
            }
        }
    } else if (!cfg.gamma.empty() || !cfg.lagged_regressors.empty()) {
        fail(errc::usage, "gamma terms are only valid for the SDM generator");
    }
}

}  // namespace

std::shared_ptr<const WeightMatrix> synthetic_weights(int n, double expected_degree, std::uint64_t seed) {
    if (n < 2) fail(errc::usage, "synthetic weights need n >= 2");
    Rng rng(derive_seed(seed, "weights"));
    const double edge_prob = std::min(1.0, expected_degree / static_cast<double>(n - 1));
    std::vector<std::string> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = unit_label(i);

    std::vector<FlowRecord> flows;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (rng.uniform() < edge_prob) {
                flows.push_back(FlowRecord{labels[i], labels[j], 2000, rng.uniform(0.5, 1.5)});
            }
        }
    }
    // guarantee no isolated unit: chain any empty row to its neighbor
    std::vector<char> connected(static_cast<std::size_t>(n), 0);
    for (const auto& f : flows) {
        connected[static_cast<std::size_t>(std::stoi(f.origin.substr(1)) - 1)] = 1;
        connected[static_cast<std::size_t>(std::stoi(f.dest.substr(1)) - 1)] = 1;
    }
    for (int i = 0; i < n; ++i) {
        if (!connected[static_cast<std::size_t>(i)]) {
            flows.push_back(FlowRecord{labels[i], labels[(i + 1) % n], 2000, rng.uniform(0.5, 1.5)});
        }
    }
    auto built = build_weights(flows, labels);
    return std::make_shared<const WeightMatrix>(std::move(built.weights));
}

SimulatedPanel simulate_panel(const SimConfig& cfg) {
    check_config(cfg);
    const int n = cfg.n;
    const int T = cfg.T_eff;
    const int k = static_cast<int>(cfg.beta.size());

    SimulatedPanel out;
    out.weights = cfg.weights ? cfg.weights : synthetic_weights(n, cfg.expected_degree, cfg.seed);
    const WeightMatrix& w = *out.weights;
    if (w.size() != n) fail(errc::usage, "weight matrix size does not match n");
    const auto [lo, hi] = w.admissible_interval();
    if (cfg.spatial_param <= lo || cfg.spatial_param >= hi) {
        fail(errc::domain, "spatial parameter outside the admissible interval");
    }

    RegressionFrame& frame = out.frame;
    frame.n = n;
    frame.T_eff = T;
    frame.countries = w.labels();
    frame.regressor_names.push_back("Ln(CI)_t-1");
    for (int j = 1; j < k; ++j) frame.regressor_names.push_back("x" + std::to_string(j + 1));
    frame.X.resize(static_cast<Eigen::Index>(n) * T, k);
    frame.y.resize(static_cast<Eigen::Index>(n) * T);
    out.shocks.resize(static_cast<Eigen::Index>(n) * T);
    out.fixed_effects.resize(n);

    Rng mu_rng(derive_seed(cfg.seed, "mu"));
    for (int i = 0; i < n; ++i) out.fixed_effects(i) = mu_rng.normal(0.0, cfg.mu_scale);

    // stationary AR(1) regressors with unit marginal variance
    Rng x_rng(derive_seed(cfg.seed, "x"));
    const double ar = cfg.regressor_ar;
    const double innovation_sd = std::sqrt(std::max(1e-12, 1.0 - ar * ar));
    for (int j = 0; j < k; ++j) {
        for (int i = 0; i < n; ++i) {
            double state = x_rng.normal();
            for (int t = 0; t < T; ++t) {
                frame.X(static_cast<Eigen::Index>(t) * n + i, j) = state;
                state = ar * state + innovation_sd * x_rng.normal();
            }
        }
    }

    Rng eps_rng(derive_seed(cfg.seed, "eps"));
    for (Eigen::Index r = 0; r < out.shocks.size(); ++r) out.shocks(r) = eps_rng.normal(0.0, cfg.sigma);

    const Eigen::MatrixXd& wm = w.standardized();
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
    if (cfg.model == ModelKind::SEM) {
        // y_t = X_t beta + mu + (I - lambda W)^-1 eps_t
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(identity - cfg.spatial_param * wm);
        for (int t = 0; t < T; ++t) {
            const Eigen::Index offset = static_cast<Eigen::Index>(t) * n;
            const Eigen::VectorXd u = lu.solve(out.shocks.segment(offset, n));
            frame.y.segment(offset, n) =
                frame.X.middleRows(offset, n) * Eigen::Map<const Eigen::VectorXd>(cfg.beta.data(), k) +
                out.fixed_effects + u;
        }
    } else {
        // y_t = (I - rho W)^-1 (X_t beta [+ W X_t gamma] + mu + eps_t)
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(identity - cfg.spatial_param * wm);
        for (int t = 0; t < T; ++t) {
            const Eigen::Index offset = static_cast<Eigen::Index>(t) * n;
            Eigen::VectorXd rhs =
                frame.X.middleRows(offset, n) * Eigen::Map<const Eigen::VectorXd>(cfg.beta.data(), k) +
                out.fixed_effects + out.shocks.segment(offset, n);
            for (std::size_t g = 0; g < cfg.lagged_regressors.size(); ++g) {
                rhs += cfg.gamma[g] * (wm * frame.X.block(offset, cfg.lagged_regressors[g], n, 1));
            }
            frame.y.segment(offset, n) = lu.solve(rhs);
        }
    }
    return out;
}

namespace {

struct Accumulator {
    double truth = 0.0;
    double sum_err = 0.0;
    double sum_sq_err = 0.0;
    int covered = 0;
    int count = 0;

    void add(double estimate, double se) {
        const double err = estimate - truth;
        sum_err += err;
        sum_sq_err += err * err;
        if (std::fabs(err) <= 1.959963984540054 * se) ++covered;
        ++count;
    }
    CoefficientRecovery summary(const std::string& name) const {
        CoefficientRecovery r;
        r.name = name;
        r.truth = truth;
        if (count > 0) {
            r.bias = sum_err / count;
            r.rmse = std::sqrt(sum_sq_err / count);
            r.coverage = static_cast<double>(covered) / count;
        }
        return r;
    }
};

}  // namespace

CampaignReport run_campaign(const SimConfig& cfg, int reps, std::span<const ModelKind> estimators) {
    if (reps < 50) fail(errc::usage, "campaign needs at least 50 replications");
    if (estimators.empty()) fail(errc::usage, "campaign needs at least one estimator");
    check_config(cfg);

    // one weight matrix shared by every replication (its eigenvalues are
    // computed once and reused by all fits)
    std::shared_ptr<const WeightMatrix> weights =
        cfg.weights ? cfg.weights : synthetic_weights(cfg.n, cfg.expected_degree, cfg.seed);

    const int k = static_cast<int>(cfg.beta.size());
    std::vector<std::string> lag_names;
    for (int idx : cfg.lagged_regressors) {
        lag_names.push_back(idx == 0 ? "Ln(CI)_t-1" : "x" + std::to_string(idx + 1));
    }
    // estimated SDMs lag the configured regressors, or the last one by default
    std::vector<std::string> estimate_lags = lag_names;
    if (estimate_lags.empty()) estimate_lags.push_back(k == 1 ? "Ln(CI)_t-1" : "x" + std::to_string(k));

    struct PerEstimator {
        Accumulator spatial;
        std::vector<Accumulator> coefficients;
        double rate_sum = 0.0;
        int rate_count = 0;
        int failed = 0;
        int ok = 0;
    };
    std::vector<PerEstimator> state(estimators.size());
    for (std::size_t e = 0; e < estimators.size(); ++e) {
        state[e].spatial.truth = cfg.spatial_param;
        state[e].coefficients.resize(static_cast<std::size_t>(k));
        for (int j = 0; j < k; ++j) state[e].coefficients[static_cast<std::size_t>(j)].truth = cfg.beta[static_cast<std::size_t>(j)];
    }

    int total_failures = 0;
    for (int rep = 0; rep < reps; ++rep) {
        SimConfig rep_cfg = cfg;
        rep_cfg.weights = weights;
        rep_cfg.seed = derive_seed(cfg.seed, "rep", static_cast<std::uint64_t>(rep));
        const SimulatedPanel panel = simulate_panel(rep_cfg);

        for (std::size_t e = 0; e < estimators.size(); ++e) {
            PerEstimator& acc = state[e];
            try {
                FitResult fit;
                switch (estimators[e]) {
                    case ModelKind::FE: fit = fit_fe(panel.frame); break;
                    case ModelKind::RE: fit = fit_re(panel.frame); break;
                    case ModelKind::SAR: fit = fit_sar(panel.frame, *weights); break;
                    case ModelKind::SEM: fit = fit_sem(panel.frame, *weights); break;
                    case ModelKind::SDM: fit = fit_sdm(panel.frame, *weights, estimate_lags); break;
                }
                if (fit.rho) acc.spatial.add(*fit.rho, fit.rho_se.value_or(0.0));
                if (fit.lambda) acc.spatial.add(*fit.lambda, fit.lambda_se.value_or(0.0));
                for (int j = 0; j < k; ++j) {
                    acc.coefficients[static_cast<std::size_t>(j)].add(fit.beta(j), fit.beta_se(j));
                }
                const EffectsTable effects = decompose(fit, *weights);
                const double total = effects.rows.front().total;
                if (total > -1.0) {
                    acc.rate_sum += -std::log(total + 1.0);
                    ++acc.rate_count;
                }
                ++acc.ok;
            } catch (const Error&) {
                ++acc.failed;
                ++total_failures;
            }
        }
    }

    const int attempts = reps * static_cast<int>(estimators.size());
    if (total_failures * 5 > attempts) {
        fail(errc::campaign, std::to_string(total_failures) + " of " + std::to_string(attempts) +
                                 " fits failed (more than 20%)");
    }

    CampaignReport report;
    report.reps = reps;
    report.seed = cfg.seed;
    double fe_rate = 0.0, sdm_rate = 0.0;
    bool have_fe = false, have_sdm = false;
    for (std::size_t e = 0; e < estimators.size(); ++e) {
        EstimatorSummary summary;
        summary.model = estimators[e];
        summary.reps_ok = state[e].ok;
        summary.reps_failed = state[e].failed;
        if (estimators[e] != ModelKind::FE && estimators[e] != ModelKind::RE) {
            summary.spatial = state[e].spatial.summary(estimators[e] == ModelKind::SEM ? "lambda" : "rho");
        }
        for (int j = 0; j < k; ++j) {
            summary.coefficients.push_back(state[e].coefficients[static_cast<std::size_t>(j)].summary(
                j == 0 ? "Ln(CI)_t-1" : "x" + std::to_string(j + 1)));
        }
        summary.mean_convergence_rate = state[e].rate_count > 0 ? state[e].rate_sum / state[e].rate_count : 0.0;
        if (estimators[e] == ModelKind::FE) {
            fe_rate = summary.mean_convergence_rate;
            have_fe = true;
        }
        if (estimators[e] == ModelKind::SDM) {
            sdm_rate = summary.mean_convergence_rate;
            have_sdm = true;
        }
        report.estimators.push_back(std::move(summary));
    }
    report.has_rate_comparison = have_fe && have_sdm;
    report.fe_rate_below_sdm = report.has_rate_comparison && fe_rate < sdm_rate;
    return report;
}

}  // namespace spanel
