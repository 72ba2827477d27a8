#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "spanel/estimators.hpp"
#include "spanel/panel.hpp"
#include "spanel/weights.hpp"

namespace spanel {

// Data-generating process for a synthetic spatial panel.
struct SimConfig {
    int n = 100;
    int T_eff = 17;
    ModelKind model = ModelKind::SAR;  // SAR, SEM or SDM generator
    double spatial_param = 0.4;        // rho (SAR/SDM) or lambda (SEM)
    std::vector<double> beta{-0.2, 0.1};
    std::vector<int> lagged_regressors;  // indices into beta receiving a W-lag (SDM)
    std::vector<double> gamma;           // aligned with lagged_regressors
    double sigma = 0.1;
    double mu_scale = 1.0;      // fixed-effect dispersion
    double regressor_ar = 0.5;  // AR(1) coefficient of the covariate processes
    double expected_degree = 6.0;  // synthetic-graph density when no matrix given
    std::shared_ptr<const WeightMatrix> weights;  // synthetic when null
    std::uint64_t seed = 1;
};

struct SimulatedPanel {
    RegressionFrame frame;
    std::shared_ptr<const WeightMatrix> weights;
    Eigen::VectorXd shocks;         // stored innovations, country-major within year
    Eigen::VectorXd fixed_effects;  // true mu_i
};

// Symmetric random proximity graph with the given expected degree, routed
// through the flow-based construction so the production code path is used.
std::shared_ptr<const WeightMatrix> synthetic_weights(int n, double expected_degree, std::uint64_t seed);

// Draws regressors as per-country stationary AR(1) processes and solves the
// model equation exactly; deterministic given cfg.seed.
SimulatedPanel simulate_panel(const SimConfig& cfg);

struct CoefficientRecovery {
    std::string name;
    double truth = 0.0;
    double bias = 0.0;
    double rmse = 0.0;
    double coverage = 0.0;  // share of reps whose 95% interval covers truth
};

struct EstimatorSummary {
    ModelKind model = ModelKind::FE;
    int reps_ok = 0;
    int reps_failed = 0;
    CoefficientRecovery spatial;  // empty name for FE
    std::vector<CoefficientRecovery> coefficients;
    double mean_convergence_rate = 0.0;
};

struct CampaignReport {
    int reps = 0;
    std::uint64_t seed = 0;
    std::vector<EstimatorSummary> estimators;
    bool has_rate_comparison = false;
    bool fe_rate_below_sdm = false;  // the no-spillover bias signature
};

// Replicated parameter-recovery experiment. Individual fit failures are
// recorded and skipped; more than 20% failures abort the campaign.
CampaignReport run_campaign(const SimConfig& cfg, int reps, std::span<const ModelKind> estimators);

}  // namespace spanel
