#include <cmath>
#include <cstring>

#include "doctest.h"
#include "helpers.hpp"
#include "spanel/error.hpp"
#include "spanel/estimators.hpp"
#include "spanel/montecarlo.hpp"
#include "spanel/stats.hpp"

using namespace spanel;

namespace {

struct FeDgp {
    RegressionFrame frame;
    Eigen::VectorXd mu;
    Eigen::VectorXd beta;
};

// y_it = mu_i + x_it' beta + eps_it with iid standard-normal regressors
FeDgp make_fe_frame(int n, int T, std::vector<double> beta, double sigma, double mu_scale, std::uint64_t seed) {
    FeDgp out;
    const int k = static_cast<int>(beta.size());
    out.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), k);
    out.frame.n = n;
    out.frame.T_eff = T;
    out.frame.countries = testutil::labels(n);
    for (int j = 0; j < k; ++j) out.frame.regressor_names.push_back("x" + std::to_string(j + 1));
    spanel::Rng rng(seed);
    out.mu.resize(n);
    for (int i = 0; i < n; ++i) out.mu(i) = rng.normal(0.0, mu_scale);
    out.frame.X.resize(static_cast<Eigen::Index>(n) * T, k);
    out.frame.y.resize(static_cast<Eigen::Index>(n) * T);
    for (int t = 0; t < T; ++t) {
        for (int i = 0; i < n; ++i) {
            const Eigen::Index row = static_cast<Eigen::Index>(t) * n + i;
            for (int j = 0; j < k; ++j) out.frame.X(row, j) = rng.normal();
            out.frame.y(row) = out.mu(i) + out.frame.X.row(row).dot(out.beta) + rng.normal(0.0, sigma);
        }
    }
    return out;
}

// plain pooled OLS with intercept, used as an independent reference
Eigen::VectorXd pooled_ols_slopes(const RegressionFrame& frame) {
    const Eigen::Index n_rows = frame.X.rows();
    Eigen::MatrixXd design(n_rows, frame.X.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(frame.X.cols()) = frame.X;
    const Eigen::VectorXd coef = (design.transpose() * design).ldlt().solve(design.transpose() * frame.y);
    return coef.tail(frame.X.cols());
}

}  // namespace

TEST_CASE("within estimator recovers a strong signal") {
    const FeDgp dgp = make_fe_frame(50, 10, {0.5}, 0.01, 1.0, 101);
    const FitResult fit = fit_fe(dgp.frame);
    CHECK(std::fabs(fit.beta(0) - 0.5) < 0.01);
    CHECK(fit.beta_se(0) > 0.0);
    CHECK(fit.pseudo_r2 > 0.9);
    CHECK(fit.n == 50);
    CHECK(fit.T_eff == 10);
    // recovered fixed effects track the simulated ones
    std::vector<double> est(fit.fixed_effects.data(), fit.fixed_effects.data() + 50);
    std::vector<double> truth(dgp.mu.data(), dgp.mu.data() + 50);
    CHECK(stats::correlation(est, truth) > 0.999);
}

TEST_CASE("no-signal regressor has a near-zero slope") {
    const FeDgp dgp = make_fe_frame(40, 8, {0.0}, 1.0, 1.0, 202);
    const FitResult fit = fit_fe(dgp.frame);
    CHECK(std::fabs(fit.beta(0)) < 3.0 * fit.beta_se(0));
    CHECK(std::fabs(fit.beta(0)) < 0.1);
}

TEST_CASE("per-country level shifts do not move the slopes") {
    FeDgp dgp = make_fe_frame(20, 6, {0.3, -0.2}, 0.5, 1.0, 303);
    const FitResult base = fit_fe(dgp.frame);
    spanel::Rng rng(404);
    Eigen::VectorXd shift(20);
    for (int i = 0; i < 20; ++i) shift(i) = rng.uniform(-50.0, 50.0);
    for (int t = 0; t < 6; ++t) dgp.frame.y.segment(static_cast<Eigen::Index>(t) * 20, 20) += shift;
    const FitResult shifted = fit_fe(dgp.frame);
    CHECK((base.beta - shifted.beta).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("forward orthogonal deviations reproduce the within slopes") {
    const FeDgp dgp = make_fe_frame(25, 7, {0.4, 0.1}, 0.3, 1.0, 505);
    const FitResult demeaned = fit_fe(dgp.frame);
    FitOptions options;
    options.orthonormal_transform = true;
    const FitResult orthogonal = fit_fe(dgp.frame, options);
    CHECK((demeaned.beta - orthogonal.beta).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("FE error paths") {
    FeDgp dgp = make_fe_frame(10, 5, {0.5, 0.2}, 0.5, 1.0, 606);
    // duplicated column is collinear
    RegressionFrame collinear = dgp.frame;
    collinear.X.col(1) = collinear.X.col(0);
    CHECK_THROWS_WITH_AS(fit_fe(collinear), doctest::Contains("collinear"), Error);
    // time-constant regressor has no within variance
    RegressionFrame constant = dgp.frame;
    for (int t = 0; t < 5; ++t) {
        for (int i = 0; i < 10; ++i) constant.X(static_cast<Eigen::Index>(t) * 10 + i, 1) = 2.0 + i;
    }
    CHECK_THROWS_WITH_AS(fit_fe(constant), doctest::Contains("within variance"), Error);
    // too few observations
    const FeDgp tiny = make_fe_frame(6, 1, {0.5}, 0.5, 1.0, 707);
    CHECK_THROWS_AS(fit_fe(tiny.frame), Error);
}

TEST_CASE("RE equals pooled OLS when the effect variance clamps at zero") {
    // no individual effects: the Swamy-Arora component estimate goes
    // negative for this seed and clamps, leaving theta = 0
    const FeDgp dgp = make_fe_frame(30, 6, {0.3}, 1.0, 0.0, 808);
    const FitResult re = fit_re(dgp.frame);
    REQUIRE(!re.warnings.empty());
    const Eigen::VectorXd pooled = pooled_ols_slopes(dgp.frame);
    CHECK(std::fabs(re.beta(0) - pooled(0)) < 1e-12);
}

TEST_CASE("RE sits between FE and pooled OLS under correlated effects") {
    // regressor loads on the individual effect, biasing pooled OLS upward
    const int n = 60, T = 8;
    spanel::Rng rng(909);
    RegressionFrame frame;
    frame.n = n;
    frame.T_eff = T;
    frame.countries = testutil::labels(n);
    frame.regressor_names = {"x1"};
    frame.X.resize(static_cast<Eigen::Index>(n) * T, 1);
    frame.y.resize(static_cast<Eigen::Index>(n) * T);
    Eigen::VectorXd mu(n);
    for (int i = 0; i < n; ++i) mu(i) = rng.normal(0.0, 1.0);
    for (int t = 0; t < T; ++t) {
        for (int i = 0; i < n; ++i) {
            const Eigen::Index row = static_cast<Eigen::Index>(t) * n + i;
            frame.X(row, 0) = mu(i) + rng.normal(0.0, 0.7);
            frame.y(row) = mu(i) + 0.5 * frame.X(row, 0) + rng.normal(0.0, 0.5);
        }
    }
    const FitResult fe = fit_fe(frame);
    const FitResult re = fit_re(frame);
    const Eigen::VectorXd pooled = pooled_ols_slopes(frame);
    CHECK(std::fabs(fe.beta(0) - 0.5) < 0.05);
    CHECK(fe.beta(0) < re.beta(0));
    CHECK(re.beta(0) < pooled(0));

    const TestResult hausman = hausman_test(fe, re);
    CHECK(hausman.statistic > 0.0);
    CHECK(hausman.df == 1);
    CHECK(hausman.p_value < 0.05);
}

TEST_CASE("hausman is zero for identical coefficient vectors") {
    const FeDgp dgp = make_fe_frame(20, 6, {0.3}, 0.5, 1.0, 111);
    const FitResult fe = fit_fe(dgp.frame);
    FitResult re = fit_re(dgp.frame);
    re.beta = fe.beta;
    const TestResult test = hausman_test(fe, re);
    CHECK(test.statistic == 0.0);

    FitResult other = fit_re(make_fe_frame(20, 6, {0.3, 0.1}, 0.5, 1.0, 112).frame);
    CHECK_THROWS_AS(hausman_test(fe, other), Error);  // mismatched regressors
}

TEST_CASE("SAR nests the within estimator at rho = 0") {
    SimConfig cfg;
    cfg.n = 40;
    cfg.T_eff = 8;
    cfg.model = ModelKind::SAR;
    cfg.spatial_param = 0.0;
    cfg.beta = {-0.2, 0.1};
    cfg.sigma = 0.1;
    cfg.seed = 42;
    const SimulatedPanel panel = simulate_panel(cfg);

    const FitResult fe = fit_fe(panel.frame);
    FitOptions at_zero;
    at_zero.fixed_spatial = 0.0;
    const FitResult sar0 = fit_sar(panel.frame, *panel.weights, at_zero);
    CHECK(sar0.loglik == doctest::Approx(fe.loglik).epsilon(1e-9));
    CHECK((sar0.beta - fe.beta).cwiseAbs().maxCoeff() < 1e-10);

    const FitResult sar = fit_sar(panel.frame, *panel.weights);
    CHECK(sar.loglik >= fe.loglik - 1e-9);
    CHECK(std::fabs(*sar.rho) <= 2.0 * *sar.rho_se);
}

TEST_CASE("SAR recovers the spatial parameter on generated data") {
    SimConfig cfg;
    cfg.n = 60;
    cfg.T_eff = 10;
    cfg.model = ModelKind::SAR;
    cfg.spatial_param = 0.4;
    cfg.beta = {-0.2, 0.1};
    cfg.sigma = 0.1;
    cfg.seed = 4242;
    const SimulatedPanel panel = simulate_panel(cfg);
    const FitResult fit = fit_sar(panel.frame, *panel.weights);
    CHECK(std::fabs(*fit.rho - 0.4) < 0.12);
    CHECK(std::fabs(fit.beta(0) + 0.2) < 0.05);
    CHECK(std::fabs(fit.beta(1) - 0.1) < 0.05);
    CHECK(*fit.rho > fit.admissible.first);
    CHECK(*fit.rho < fit.admissible.second);
    CHECK(*fit.rho_se > 0.0);
    CHECK(fit.sigma2_se > 0.0);
    CHECK(fit.pseudo_r2 >= 0.0);
    CHECK(fit.pseudo_r2 <= 1.0);

    // the optimum is a local maximum of the concentrated likelihood
    FitOptions left, right;
    left.fixed_spatial = *fit.rho - 0.01;
    right.fixed_spatial = *fit.rho + 0.01;
    CHECK(fit_sar(panel.frame, *panel.weights, left).loglik <= fit.loglik + 1e-9);
    CHECK(fit_sar(panel.frame, *panel.weights, right).loglik <= fit.loglik + 1e-9);
}

TEST_CASE("numerical-Hessian standard errors agree with the analytic information") {
    SimConfig cfg;
    cfg.n = 40;
    cfg.T_eff = 8;
    cfg.model = ModelKind::SAR;
    cfg.spatial_param = 0.3;
    cfg.beta = {-0.2};
    cfg.sigma = 0.1;
    cfg.seed = 77;
    const SimulatedPanel panel = simulate_panel(cfg);
    const FitResult analytic = fit_sar(panel.frame, *panel.weights);
    FitOptions options;
    options.numerical_hessian = true;
    const FitResult numeric = fit_sar(panel.frame, *panel.weights, options);
    CHECK(*numeric.rho == doctest::Approx(*analytic.rho).epsilon(1e-8));
    CHECK(*numeric.rho_se == doctest::Approx(*analytic.rho_se).epsilon(0.15));
    CHECK(numeric.beta_se(0) == doctest::Approx(analytic.beta_se(0)).epsilon(0.15));
}

TEST_CASE("SEM nests the within estimator at lambda = 0 and recovers lambda") {
    SimConfig cfg;
    cfg.n = 50;
    cfg.T_eff = 8;
    cfg.model = ModelKind::SEM;
    cfg.spatial_param = 0.0;
    cfg.beta = {0.3};
    cfg.sigma = 0.2;
    cfg.seed = 1234;
    const SimulatedPanel panel = simulate_panel(cfg);
    const FitResult fe = fit_fe(panel.frame);
    FitOptions at_zero;
    at_zero.fixed_spatial = 0.0;
    const FitResult sem0 = fit_sem(panel.frame, *panel.weights, at_zero);
    CHECK(sem0.loglik == doctest::Approx(fe.loglik).epsilon(1e-9));

    SimConfig cfg5 = cfg;
    cfg5.spatial_param = 0.5;
    cfg5.seed = 555;
    const SimulatedPanel panel5 = simulate_panel(cfg5);
    const FitResult sem = fit_sem(panel5.frame, *panel5.weights);
    CHECK(std::fabs(*sem.lambda - 0.5) < 0.15);
    CHECK(*sem.lambda_se > 0.0);

    FitOptions numeric;
    numeric.numerical_hessian = true;
    const FitResult sem_numeric = fit_sem(panel5.frame, *panel5.weights, numeric);
    CHECK(*sem_numeric.lambda == doctest::Approx(*sem.lambda).epsilon(1e-8));
    CHECK(*sem_numeric.lambda_se == doctest::Approx(*sem.lambda_se).epsilon(0.15));
}

TEST_CASE("SDM on SAR-generated data finds no W-lag signal") {
    SimConfig cfg;
    cfg.n = 60;
    cfg.T_eff = 10;
    cfg.model = ModelKind::SAR;
    cfg.spatial_param = 0.4;
    cfg.beta = {-0.2, 0.1};
    cfg.sigma = 0.1;
    cfg.seed = 31;
    const SimulatedPanel panel = simulate_panel(cfg);
    const std::vector<std::string> lag{"x2"};
    const FitResult sdm = fit_sdm(panel.frame, *panel.weights, lag);
    REQUIRE(sdm.gamma.size() == 1);
    CHECK(sdm.lagged_names[0] == "Wx2");
    CHECK(std::fabs(sdm.gamma(0)) <= 2.0 * sdm.gamma_se(0));

    const FitResult sar = fit_sar(panel.frame, *panel.weights);
    const TestResult lr = lr_test(sar, sdm);
    CHECK(lr.df == 1);
    CHECK(lr.statistic >= 0.0);
    CHECK(lr.p_value > 0.01);
}

TEST_CASE("SEM-generated data looks like the common-factor restriction to a full SDM") {
    SimConfig cfg;
    cfg.n = 50;
    cfg.T_eff = 10;
    cfg.model = ModelKind::SEM;
    cfg.spatial_param = 0.5;
    cfg.beta = {0.4, -0.3};
    cfg.sigma = 0.15;
    cfg.seed = 808;
    const SimulatedPanel panel = simulate_panel(cfg);
    const FitResult sem = fit_sem(panel.frame, *panel.weights);
    const std::vector<std::string> all_lags{"Ln(CI)_t-1", "x2"};
    const FitResult sdm = fit_sdm(panel.frame, *panel.weights, all_lags);
    CHECK(sdm.loglik >= sem.loglik - 1e-6);
    const TestResult lr = lr_test(sem, sdm);
    CHECK(lr.df == 2);
    CHECK(lr.p_value > 0.01);  // restriction holds in the generating process
    // gamma estimates sit near -rho * beta
    for (int j = 0; j < 2; ++j) {
        const double implied = -*sdm.rho * sdm.beta(j);
        CHECK(std::fabs(sdm.gamma(j) - implied) < 4.0 * sdm.gamma_se(j));
    }
}

TEST_CASE("log-determinant via eigenvalues equals the direct determinant") {
    spanel::Rng rng(404);
    const WeightMatrix w = testutil::random_weights(50, rng, 0.2);
    const Eigen::VectorXd& eigs = w.eigenvalues();
    const auto [lo, hi] = w.admissible_interval();
    for (int trial = 0; trial < 20; ++trial) {
        const double rho = rng.uniform(lo * 0.95, hi * 0.95);
        double eig_sum = 0.0;
        for (Eigen::Index i = 0; i < eigs.size(); ++i) eig_sum += std::log(std::fabs(1.0 - rho * eigs(i)));
        const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(50, 50) - rho * w.standardized();
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
        const double direct = lu.matrixLU().diagonal().array().abs().log().sum();
        CHECK(eig_sum == doctest::Approx(direct).epsilon(1e-8));
    }
}

TEST_CASE("spatial fits are bitwise deterministic") {
    SimConfig cfg;
    cfg.n = 30;
    cfg.T_eff = 6;
    cfg.model = ModelKind::SAR;
    cfg.spatial_param = 0.3;
    cfg.beta = {-0.2};
    cfg.sigma = 0.1;
    cfg.seed = 99;
    const SimulatedPanel panel = simulate_panel(cfg);
    const FitResult one = fit_sar(panel.frame, *panel.weights);
    const FitResult two = fit_sar(panel.frame, *panel.weights);
    CHECK(std::memcmp(one.beta.data(), two.beta.data(), sizeof(double) * one.beta.size()) == 0);
    CHECK(*one.rho == *two.rho);
    CHECK(one.loglik == two.loglik);
    CHECK(std::memcmp(one.vcov.data(), two.vcov.data(), sizeof(double) * one.vcov.size()) == 0);
}

TEST_CASE("wald test separates signal from noise") {
    const FeDgp strong = make_fe_frame(40, 8, {0.5, -0.4}, 0.05, 1.0, 117);
    const TestResult significant = wald_test(fit_fe(strong.frame));
    CHECK(significant.df == 2);
    CHECK(significant.p_value < 0.01);

    // under the null the rejection rate stays near the nominal level
    int rejections = 0;
    const int seeds = 100;
    for (int s = 0; s < seeds; ++s) {
        const FeDgp noise = make_fe_frame(20, 6, {0.0, 0.0}, 1.0, 1.0, 2000 + static_cast<std::uint64_t>(s));
        if (wald_test(fit_fe(noise.frame)).p_value < 0.05) ++rejections;
    }
    CHECK(rejections <= 12);
}

TEST_CASE("likelihood-ratio edge cases") {
    const FeDgp dgp = make_fe_frame(20, 6, {0.3}, 0.5, 1.0, 118);
    const FitResult fe = fit_fe(dgp.frame);
    const TestResult self_test = lr_test(fe, fe);
    CHECK(self_test.statistic == 0.0);
    CHECK(self_test.df == 0);
    CHECK(self_test.p_value == 1.0);

    SimConfig cfg;
    cfg.n = 20;
    cfg.T_eff = 6;
    cfg.model = ModelKind::SAR;
    cfg.spatial_param = 0.3;
    cfg.beta = {0.3};
    cfg.sigma = 0.2;
    cfg.seed = 11;
    const SimulatedPanel panel = simulate_panel(cfg);
    const FitResult sar = fit_sar(panel.frame, *panel.weights);
    const FitResult sem = fit_sem(panel.frame, *panel.weights);
    CHECK_THROWS_AS(lr_test(sar, sem), Error);  // not nested

    const FeDgp other = make_fe_frame(21, 6, {0.3}, 0.5, 1.0, 119);
    CHECK_THROWS_AS(lr_test(fit_fe(other.frame), fe), Error);  // different data
}

TEST_CASE("model dispatch checks the spec invariants") {
    const FeDgp dgp = make_fe_frame(20, 6, {0.3}, 0.5, 1.0, 120);
    ModelSpec sar_spec;
    sar_spec.kind = ModelKind::SAR;
    CHECK_THROWS_WITH_AS(fit_model(sar_spec, dgp.frame, nullptr), doctest::Contains("weight"), Error);

    ModelSpec fe_spec;
    fe_spec.kind = ModelKind::FE;
    fe_spec.spatial_lag_regressors = {"x1"};
    CHECK_THROWS_AS(fit_model(fe_spec, dgp.frame, nullptr), Error);

    fe_spec.spatial_lag_regressors.clear();
    const FitResult fe = fit_model(fe_spec, dgp.frame, nullptr);
    CHECK(fe.kind == ModelKind::FE);
}

TEST_CASE("isolated countries are tolerated with a warning") {
    SimConfig cfg;
    cfg.n = 20;
    cfg.T_eff = 6;
    cfg.model = ModelKind::SAR;
    cfg.spatial_param = 0.3;
    cfg.beta = {0.3};
    cfg.sigma = 0.2;
    cfg.seed = 23;
    const SimulatedPanel panel = simulate_panel(cfg);

    // cut the last country out of the proximity base entirely
    Eigen::MatrixXd raw = panel.weights->raw();
    raw.row(19).setZero();
    raw.col(19).setZero();
    const WeightMatrix with_isolated(panel.weights->labels(), raw);
    REQUIRE(with_isolated.isolated() == std::vector<int>{19});

    const FitResult fit = fit_sar(panel.frame, with_isolated);
    REQUIRE(!fit.warnings.empty());
    CHECK(fit.warnings[0].find("isolated") != std::string::npos);
    CHECK(*fit.rho > fit.admissible.first);
    CHECK(*fit.rho < fit.admissible.second);
}

TEST_CASE("SEM campaign recovers lambda tightly at survey scale") {
    SimConfig cfg;
    cfg.n = 100;
    cfg.T_eff = 17;
    cfg.model = ModelKind::SEM;
    cfg.spatial_param = 0.5;
    cfg.beta = {0.3};
    cfg.sigma = 0.15;
    cfg.seed = 5150;
    const std::vector<ModelKind> estimators{ModelKind::SEM};
    const CampaignReport report = run_campaign(cfg, 200, estimators);
    CHECK(report.estimators[0].reps_failed == 0);
    CHECK(std::fabs(report.estimators[0].spatial.bias) < 0.03);
    // rmse below 0.05 puts nearly every estimate within 0.10 of the truth
    CHECK(report.estimators[0].spatial.rmse < 0.05);
    CHECK(report.estimators[0].spatial.coverage >= 0.90);
}

TEST_CASE("spatial fit error paths") {
    SimConfig cfg;
    cfg.n = 20;
    cfg.T_eff = 6;
    cfg.model = ModelKind::SAR;
    cfg.spatial_param = 0.3;
    cfg.beta = {0.3, 0.2};
    cfg.sigma = 0.2;
    cfg.seed = 21;
    const SimulatedPanel panel = simulate_panel(cfg);

    FitOptions outside;
    outside.fixed_spatial = 5.0;
    CHECK_THROWS_AS(fit_sar(panel.frame, *panel.weights, outside), Error);

    const std::vector<std::string> unknown{"nope"};
    CHECK_THROWS_WITH_AS(fit_sdm(panel.frame, *panel.weights, unknown), doctest::Contains("unknown"), Error);
    CHECK_THROWS_AS(fit_sdm(panel.frame, *panel.weights, {}), Error);

    // a cross-sectionally constant regressor makes Wx collinear with x
    RegressionFrame modified = panel.frame;
    for (int t = 0; t < 6; ++t) {
        for (int i = 0; i < 20; ++i) modified.X(static_cast<Eigen::Index>(t) * 20 + i, 1) = 1.0 + t;
    }
    const std::vector<std::string> lag_x2{"x2"};
    CHECK_THROWS_WITH_AS(fit_sdm(modified, *panel.weights, lag_x2), doctest::Contains("collinear"), Error);

    // label mismatch between frame and weights
    RegressionFrame renamed = panel.frame;
    renamed.countries[0] = "ZZ";
    CHECK_THROWS_AS(fit_sar(renamed, *panel.weights), Error);
}
