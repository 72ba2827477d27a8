#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spanel/estimators.hpp"
#include "spanel/weights.hpp"

namespace spanel {

// One regressor's direct / indirect / total effects. Indirect is absent for
// models without a spatial lag of the dependent variable (FE, SEM).
struct EffectEntry {
    std::string name;
    double direct = 0.0;
    double total = 0.0;
    std::optional<double> indirect;
    double direct_se = 0.0, direct_p = 1.0;
    double total_se = 0.0, total_p = 1.0;
    std::optional<double> indirect_se, indirect_p;
};

struct EffectsTable {
    ModelKind model = ModelKind::FE;
    std::vector<EffectEntry> rows;
    bool spillovers = false;  // true when the model propagates shocks through W
    int draws = 0;            // 0 for a point-only decomposition
    std::uint64_t seed = 0;
    int rejected_draws = 0;  // inadmissible spatial-parameter draws, redrawn
};

// (I - rho W)^-1 by factorized solve; rho must keep the matrix nonsingular
Eigen::MatrixXd spatial_multiplier(double rho, const WeightMatrix& w);

// per-regressor partial-derivative matrix (I - rho W)^-1 (beta_k I + gamma_k W)
Eigen::MatrixXd effects_matrix(const FitResult& fit, const WeightMatrix& w, const std::string& regressor);

// Point decomposition: direct = mean diagonal, total = mean row sum,
// indirect = total - direct, for every regressor. FE/SEM fits reduce to the
// coefficients themselves with indirect not applicable.
EffectsTable decompose(const FitResult& fit, const WeightMatrix& w);

// Parametric-simulation inference: draws (beta, gamma, rho) from the
// asymptotic normal at the estimates, recomputes the decomposition per draw,
// and reports empirical standard errors with two-tailed normal p-values.
EffectsTable effects_inference(const FitResult& fit, const WeightMatrix& w, int draws, std::uint64_t seed);

struct ConvergenceReport {
    double B = 0.0;     // total effect of the lagged dependent level
    double rate = 0.0;  // -ln(B + 1)
    bool significant = false;
    bool divergent = false;  // B > 0: reported with a warning
};

// rate from a total effect; B must exceed -1
ConvergenceReport convergence_rate(double B, std::optional<double> p_value = {});

// convenience: reads B from the first regressor's total effect
ConvergenceReport convergence_from_effects(const EffectsTable& table);

}  // namespace spanel
