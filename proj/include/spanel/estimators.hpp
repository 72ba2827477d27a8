#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spanel/panel.hpp"
#include "spanel/testresult.hpp"
#include "spanel/weights.hpp"

namespace spanel {

enum class ModelKind { FE, RE, SAR, SEM, SDM };

const char* model_name(ModelKind kind);
ModelKind parse_model(const std::string& name);

struct FitOptions {
    // forward orthonormal time transform instead of simple demeaning
    // (removes the incidental-parameter variance bias, off by default)
    bool orthonormal_transform = false;
    // numerical Hessian of the full likelihood instead of the analytic
    // expected information matrix
    bool numerical_hessian = false;
    // skip the spatial-parameter search and evaluate at this value
    std::optional<double> fixed_spatial = {};
    int grid_points = 96;
    double tol = 1e-8;
};

// Estimated model. Coefficient covariance rows follow vcov_names:
// regressors, then W-lagged regressors, then the spatial parameter.
struct FitResult {
    ModelKind kind = ModelKind::FE;
    std::vector<std::string> regressor_names;
    Eigen::VectorXd beta;
    Eigen::VectorXd beta_se;
    std::vector<std::string> lagged_names;  // SDM: W-lagged regressors
    Eigen::VectorXd gamma;
    Eigen::VectorXd gamma_se;
    std::optional<double> rho;  // SAR/SDM
    std::optional<double> rho_se;
    std::optional<double> lambda;  // SEM
    std::optional<double> lambda_se;
    std::optional<double> intercept;  // RE only
    double sigma2 = 0.0;
    double sigma2_se = 0.0;
    double loglik = 0.0;
    Eigen::VectorXd fixed_effects;
    double pseudo_r2 = 0.0;  // squared correlation of fitted and observed within variation
    int n = 0, T_eff = 0, k = 0;
    std::pair<double, double> admissible{0.0, 0.0};
    Eigen::MatrixXd vcov;
    std::vector<std::string> vcov_names;
    std::vector<std::string> warnings;

    double spatial_param() const { return rho ? *rho : (lambda ? *lambda : 0.0); }
    bool has_spatial_lag() const { return kind == ModelKind::SAR || kind == ModelKind::SDM; }
};

FitResult fit_fe(const RegressionFrame& frame, const FitOptions& options = {});
FitResult fit_re(const RegressionFrame& frame, const FitOptions& options = {});
FitResult fit_sar(const RegressionFrame& frame, const WeightMatrix& w, const FitOptions& options = {});
FitResult fit_sem(const RegressionFrame& frame, const WeightMatrix& w, const FitOptions& options = {});
// lagged: regressor names receiving an additional W-lagged column
FitResult fit_sdm(const RegressionFrame& frame, const WeightMatrix& w, std::span<const std::string> lagged,
                  const FitOptions& options = {});

// Declarative model description used by the CLI and the simulation harness.
struct ModelSpec {
    ModelKind kind = ModelKind::FE;
    std::vector<std::string> spatial_lag_regressors;  // SDM only
    FitOptions options;
};

// dispatches on spec.kind; weights may be null for FE/RE
FitResult fit_model(const ModelSpec& spec, const RegressionFrame& frame, const WeightMatrix* weights);

// joint chi-squared test that every regressor coefficient (and W-lag
// coefficient) is zero
TestResult wald_test(const FitResult& fit);

// FE against RE on the same frame; df = number of slope coefficients
TestResult hausman_test(const FitResult& fe, const FitResult& re);

// 2 (loglik_u - loglik_r) with df = parameter-count difference
TestResult lr_test(const FitResult& restricted, const FitResult& unrestricted);

}  // namespace spanel
