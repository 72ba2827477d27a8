#pragma once

#include <Eigen/Dense>
#include <optional>

namespace spanel {

enum class LlcDeterministic {
    none,       // no deterministic terms
    intercept,  // individual intercepts (default)
    trend,      // individual intercepts and trends
};

struct LlcOptions {
    // common ADF lag order; ceil(T^(1/4)) when unset
    std::optional<int> lags;
    // Order of the autoregressive long-run variance estimator;
    // ceil(2 T^(1/3)) when unset. Kernel estimators with any fixed
    // truncation cannot track the vanishing long-run variance of
    // over-differenced data, which destroys power, so the spectral mass at
    // zero is read off an AR fit instead.
    std::optional<int> lrv_order;
    LlcDeterministic deterministic = LlcDeterministic::intercept;
};

struct LlcResult {
    double adjusted_t = 0.0;  // t* statistic, standard normal under the null
    double p_value = 1.0;     // left tail
    int lags = 0;
    int n = 0;
    int T = 0;
    // diagnostics
    double delta = 0.0;       // pooled autoregressive coefficient
    double t_delta = 0.0;     // unadjusted pooled t
    double mean_sd_ratio = 0.0;
};

// Raw ingredients of the adjusted statistic: the pooled t and the centering
// multiplier N T~ S_N se(delta) / sigma^2. Exposed so the moment-table
// calibration tool shares the exact estimator conventions with the test.
struct LlcPieces {
    double t_delta = 0.0;
    double multiplier = 0.0;
    double delta = 0.0;
    double mean_sd_ratio = 0.0;
    int lags = 0;
    double t_tilde = 0.0;
};

LlcPieces llc_pieces(const Eigen::MatrixXd& series /* n x T */, const LlcOptions& options = {});

// Pooled panel unit-root test: per-country ADF orthogonalization, residuals
// normalized by the regression standard error, pooled slope t-statistic
// centered and scaled by tabulated finite-sample moments.
LlcResult llc_test(const Eigen::MatrixXd& series /* n x T */, const LlcOptions& options = {});

}  // namespace spanel
