#include "spanel/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "spanel/error.hpp"
#include "spanel/stats.hpp"

namespace spanel {

const char* model_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::FE: return "FE";
        case ModelKind::RE: return "RE";
        case ModelKind::SAR: return "SAR";
        case ModelKind::SEM: return "SEM";
        case ModelKind::SDM: return "SDM";
    }
    return "?";
}

ModelKind parse_model(const std::string& name) {
    std::string upper = name;
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    if (upper == "FE") return ModelKind::FE;
    if (upper == "RE") return ModelKind::RE;
    if (upper == "SAR" || upper == "SLM") return ModelKind::SAR;
    if (upper == "SEM") return ModelKind::SEM;
    if (upper == "SDM") return ModelKind::SDM;
    fail(errc::usage, "unknown model '" + name + "' (expected FE, RE, SAR, SEM or SDM)");
}

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

Eigen::VectorXd apply_w_per_period(const Eigen::MatrixXd& w, const Eigen::VectorXd& stacked, int n, int T) {
    Eigen::VectorXd out(stacked.size());
    for (int t = 0; t < T; ++t) out.segment(static_cast<Eigen::Index>(t) * n, n) = w * stacked.segment(static_cast<Eigen::Index>(t) * n, n);
    return out;
}

Eigen::MatrixXd apply_w_per_period(const Eigen::MatrixXd& w, const Eigen::MatrixXd& stacked, int n, int T) {
    Eigen::MatrixXd out(stacked.rows(), stacked.cols());
    for (int t = 0; t < T; ++t) {
        out.middleRows(static_cast<Eigen::Index>(t) * n, n) = w * stacked.middleRows(static_cast<Eigen::Index>(t) * n, n);
    }
    return out;
}

// subtract each country's time mean (annihilates fixed effects)
Eigen::MatrixXd demean_by_country(const Eigen::MatrixXd& stacked, int n, int T) {
    Eigen::MatrixXd means = Eigen::MatrixXd::Zero(n, stacked.cols());
    for (int t = 0; t < T; ++t) means += stacked.middleRows(static_cast<Eigen::Index>(t) * n, n);
    means /= static_cast<double>(T);
    Eigen::MatrixXd out(stacked.rows(), stacked.cols());
    for (int t = 0; t < T; ++t) out.middleRows(static_cast<Eigen::Index>(t) * n, n) = stacked.middleRows(static_cast<Eigen::Index>(t) * n, n) - means;
    return out;
}

// forward orthogonal deviations: T periods in, T-1 out, errors stay iid
Eigen::MatrixXd forward_orthogonal(const Eigen::MatrixXd& stacked, int n, int T) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n) * (T - 1), stacked.cols());
    for (int t = 0; t < T - 1; ++t) {
        const double remaining = static_cast<double>(T - 1 - t);
        const double scale = std::sqrt(remaining / (remaining + 1.0));
        Eigen::MatrixXd tail_mean = Eigen::MatrixXd::Zero(n, stacked.cols());
        for (int s = t + 1; s < T; ++s) tail_mean += stacked.middleRows(static_cast<Eigen::Index>(s) * n, n);
        tail_mean /= remaining;
        out.middleRows(static_cast<Eigen::Index>(t) * n, n) =
            scale * (stacked.middleRows(static_cast<Eigen::Index>(t) * n, n) - tail_mean);
    }
    return out;
}

Eigen::MatrixXd time_transform(const Eigen::MatrixXd& stacked, int n, int T, bool orthonormal) {
    return orthonormal ? forward_orthogonal(stacked, n, T) : demean_by_country(stacked, n, T);
}

void check_columns(const Eigen::MatrixXd& transformed, const Eigen::MatrixXd& raw,
                   const std::vector<std::string>& names) {
    for (Eigen::Index j = 0; j < transformed.cols(); ++j) {
        const double within = transformed.col(j).squaredNorm();
        const double level = raw.col(j).squaredNorm();
        if (within <= 1e-24 * std::max(1.0, level)) {
            fail(errc::degenerate, "regressor '" + names[j] + "' has zero within variance");
        }
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(transformed);
    if (qr.rank() < transformed.cols()) {
        const auto perm = qr.colsPermutation().indices();
        std::ostringstream msg;
        msg << "collinear regressors:";
        for (Eigen::Index p = qr.rank(); p < transformed.cols(); ++p) msg << " '" << names[perm(p)] << "'";
        fail(errc::rank, msg.str());
    }
}

struct Ols {
    Eigen::VectorXd beta;
    Eigen::VectorXd resid;
    Eigen::MatrixXd xtx_inv;
    double rss = 0.0;
};

Ols ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    Ols fit;
    const Eigen::MatrixXd xtx = x.transpose() * x;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
    if (ldlt.info() != Eigen::Success) fail(errc::rank, "normal equations not positive definite");
    fit.beta = ldlt.solve(x.transpose() * y);
    fit.xtx_inv = ldlt.solve(Eigen::MatrixXd::Identity(x.cols(), x.cols()));
    fit.resid = y - x * fit.beta;
    fit.rss = fit.resid.squaredNorm();
    return fit;
}

double squared_correlation(const Eigen::VectorXd& observed, const Eigen::VectorXd& fitted) {
    std::vector<double> a(observed.data(), observed.data() + observed.size());
    std::vector<double> b(fitted.data(), fitted.data() + fitted.size());
    const double r = stats::correlation(a, b);
    return r * r;
}

// grid scan plus golden-section refinement of a concave-ish 1-d objective
double maximize_1d(const std::function<double(double)>& f, double lo, double hi, int grid_points, double tol) {
    const double span = hi - lo;
    int best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    std::vector<double> points(static_cast<std::size_t>(grid_points));
    for (int g = 0; g < grid_points; ++g) {
        const double x = lo + span * (g + 0.5) / grid_points;
        points[static_cast<std::size_t>(g)] = x;
        const double value = f(x);
        if (value > best_value) {
            best_value = value;
            best = g;
        }
    }
    double a = points[static_cast<std::size_t>(std::max(0, best - 1))];
    double b = points[static_cast<std::size_t>(std::min(grid_points - 1, best + 1))];
    if (best == 0) a = lo;
    if (best == grid_points - 1) b = hi;
    const double inv_phi = 0.6180339887498948482;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

void check_alignment(const RegressionFrame& frame, const WeightMatrix& w) {
    if (w.labels() != frame.countries) {
        fail(errc::usage, "weight matrix labels do not match frame countries (order included)");
    }
}

void check_se(const Eigen::VectorXd& se, const std::string& what) {
    for (Eigen::Index i = 0; i < se.size(); ++i) {
        if (!std::isfinite(se(i)) || se(i) <= 0.0) {
            fail(errc::numerical, "nonpositive " + what + " standard error at index " + std::to_string(i));
        }
    }
}

// central-difference Hessian of a smooth scalar function
Eigen::MatrixXd numerical_hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                                  const Eigen::VectorXd& at) {
    const Eigen::Index p = at.size();
    Eigen::MatrixXd h(p, p);
    Eigen::VectorXd step(p);
    for (Eigen::Index i = 0; i < p; ++i) step(i) = 1e-5 * std::max(1.0, std::fabs(at(i)));
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = i; j < p; ++j) {
            Eigen::VectorXd pp = at, pm = at, mp = at, mm = at;
            pp(i) += step(i); pp(j) += step(j);
            pm(i) += step(i); pm(j) -= step(j);
            mp(i) -= step(i); mp(j) += step(j);
            mm(i) -= step(i); mm(j) -= step(j);
            h(i, j) = h(j, i) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * step(i) * step(j));
        }
    }
    return h;
}

Eigen::MatrixXd invert_information(const Eigen::MatrixXd& info) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
    if (!lu.isInvertible()) fail(errc::numerical, "information matrix is singular");
    return lu.inverse();
}

struct StackedData {
    Eigen::VectorXd y;   // transformed
    Eigen::MatrixXd x;   // transformed
    Eigen::VectorXd wy;  // transformed W-lag of y (spatial fits)
    int n = 0, T = 0;    // periods after the transform
};

}  // namespace

// ---------------------------------------------------------------------------
// non-spatial within estimator
// ---------------------------------------------------------------------------

FitResult fit_fe(const RegressionFrame& frame, const FitOptions& options) {
    const int n = frame.n;
    const int k = static_cast<int>(frame.regressor_names.size());
    const Eigen::MatrixXd xt = time_transform(frame.X, n, frame.T_eff, options.orthonormal_transform);
    const Eigen::MatrixXd yt_m = time_transform(frame.y, n, frame.T_eff, options.orthonormal_transform);
    const Eigen::VectorXd yt = yt_m.col(0);
    const Eigen::Index N = xt.rows();
    if (N <= k + n) fail(errc::dimension, "too few observations for the within estimator");
    check_columns(xt, frame.X, frame.regressor_names);

    const Ols within = ols(xt, yt);
    const double sigma2_ml = within.rss / static_cast<double>(N);
    const double dof = static_cast<double>(N - n - k);
    const double sigma2_se_basis = within.rss / dof;

    FitResult fit;
    fit.kind = ModelKind::FE;
    fit.regressor_names = frame.regressor_names;
    fit.beta = within.beta;
    fit.vcov = sigma2_se_basis * within.xtx_inv;
    fit.vcov_names = frame.regressor_names;
    fit.beta_se = fit.vcov.diagonal().cwiseSqrt();
    check_se(fit.beta_se, "coefficient");
    fit.sigma2 = sigma2_ml;
    fit.sigma2_se = std::sqrt(2.0 * sigma2_ml * sigma2_ml / static_cast<double>(N));
    fit.loglik = -0.5 * static_cast<double>(N) * (kLogTwoPi + 1.0 + std::log(sigma2_ml));
    fit.n = n;
    fit.T_eff = frame.T_eff;
    fit.k = k;
    fit.pseudo_r2 = squared_correlation(yt, xt * within.beta);

    // per-country means of the residuals on the untransformed data
    fit.fixed_effects = Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd raw_resid = frame.y - frame.X * within.beta;
    for (int t = 0; t < frame.T_eff; ++t) fit.fixed_effects += raw_resid.segment(static_cast<Eigen::Index>(t) * n, n);
    fit.fixed_effects /= static_cast<double>(frame.T_eff);
    return fit;
}

// ---------------------------------------------------------------------------
// random effects (Swamy-Arora) for the Hausman comparison
// ---------------------------------------------------------------------------

FitResult fit_re(const RegressionFrame& frame, const FitOptions& options) {
    (void)options;
    const int n = frame.n;
    const int T = frame.T_eff;
    const int k = static_cast<int>(frame.regressor_names.size());
    const Eigen::Index N = frame.X.rows();
    if (n <= k + 1) fail(errc::dimension, "too few countries for the between regression");

    // within step for the idiosyncratic variance
    const Eigen::MatrixXd xt = demean_by_country(frame.X, n, T);
    const Eigen::VectorXd yt = demean_by_country(frame.y, n, T).col(0);
    check_columns(xt, frame.X, frame.regressor_names);
    const Ols within = ols(xt, yt);
    const double sigma2_e = within.rss / static_cast<double>(N - n - k);

    // between step for the individual-effect variance
    Eigen::MatrixXd x_mean = Eigen::MatrixXd::Zero(n, k);
    Eigen::VectorXd y_mean = Eigen::VectorXd::Zero(n);
    for (int t = 0; t < T; ++t) {
        x_mean += frame.X.middleRows(static_cast<Eigen::Index>(t) * n, n);
        y_mean += frame.y.segment(static_cast<Eigen::Index>(t) * n, n);
    }
    x_mean /= static_cast<double>(T);
    y_mean /= static_cast<double>(T);
    Eigen::MatrixXd between_x(n, k + 1);
    between_x.col(0).setOnes();
    between_x.rightCols(k) = x_mean;
    const Ols between = ols(between_x, y_mean);
    const double sigma2_between = between.rss / static_cast<double>(n - k - 1);

    FitResult fit;
    fit.kind = ModelKind::RE;
    double sigma2_mu = sigma2_between - sigma2_e / static_cast<double>(T);
    if (sigma2_mu < 0.0) {
        sigma2_mu = 0.0;
        fit.warnings.push_back("negative individual-effect variance estimate clamped to zero");
    }
    const double theta = 1.0 - std::sqrt(sigma2_e / (sigma2_e + T * sigma2_mu));

    // quasi-demeaned GLS
    Eigen::MatrixXd x_star(N, k + 1);
    Eigen::VectorXd y_star(N);
    for (int t = 0; t < T; ++t) {
        const Eigen::Index offset = static_cast<Eigen::Index>(t) * n;
        x_star.block(offset, 0, n, 1).setConstant(1.0 - theta);
        x_star.block(offset, 1, n, k) = frame.X.middleRows(offset, n) - theta * x_mean;
        y_star.segment(offset, n) = frame.y.segment(offset, n) - theta * y_mean;
    }
    const Ols gls = ols(x_star, y_star);

    fit.regressor_names = frame.regressor_names;
    fit.intercept = gls.beta(0);
    fit.beta = gls.beta.tail(k);
    const Eigen::MatrixXd vcov_full = sigma2_e * gls.xtx_inv;
    fit.vcov = vcov_full.bottomRightCorner(k, k);
    fit.vcov_names = frame.regressor_names;
    fit.beta_se = fit.vcov.diagonal().cwiseSqrt();
    check_se(fit.beta_se, "coefficient");
    fit.sigma2 = sigma2_e;
    fit.sigma2_se = std::sqrt(2.0 * sigma2_e * sigma2_e / static_cast<double>(N));
    fit.n = n;
    fit.T_eff = T;
    fit.k = k;
    fit.pseudo_r2 = squared_correlation(y_star, x_star * gls.beta);

    // exact Gaussian likelihood under the equicorrelated error structure
    const double sigma2_1 = sigma2_e + T * sigma2_mu;
    const double quad = gls.rss / sigma2_e;
    fit.loglik = -0.5 * (static_cast<double>(N) * kLogTwoPi + static_cast<double>(N - n) * std::log(sigma2_e) +
                         static_cast<double>(n) * std::log(sigma2_1) + quad);

    // BLUP of the individual effects
    fit.fixed_effects = Eigen::VectorXd::Zero(n);
    const double shrink = (T * sigma2_mu) / (sigma2_e + T * sigma2_mu);
    for (int i = 0; i < n; ++i) {
        fit.fixed_effects(i) = shrink * (y_mean(i) - *fit.intercept - x_mean.row(i).dot(fit.beta));
    }
    return fit;
}

// ---------------------------------------------------------------------------
// spatial-lag family (SAR, SDM): concentrated likelihood over rho
// ---------------------------------------------------------------------------

namespace {

FitResult fit_spatial_lag(const RegressionFrame& frame, const WeightMatrix& w,
                          std::span<const std::string> lagged, const FitOptions& options, ModelKind kind) {
    check_alignment(frame, w);
    const int n = frame.n;

    // regressor matrix, augmented with W-lagged columns for the SDM
    Eigen::MatrixXd x_full = frame.X;
    std::vector<std::string> names = frame.regressor_names;
    const int k_base = static_cast<int>(names.size());
    if (kind == ModelKind::SDM) {
        if (lagged.empty()) fail(errc::usage, "SDM needs at least one W-lagged regressor");
        Eigen::MatrixXd wx(frame.X.rows(), static_cast<Eigen::Index>(lagged.size()));
        for (std::size_t c = 0; c < lagged.size(); ++c) {
            const auto it = std::find(names.begin(), names.end(), lagged[c]);
            if (it == names.end()) fail(errc::usage, "unknown regressor '" + std::string(lagged[c]) + "' to W-lag");
            const Eigen::Index col = it - names.begin();
            wx.col(static_cast<Eigen::Index>(c)) =
                apply_w_per_period(w.standardized(), Eigen::VectorXd(frame.X.col(col)), n, frame.T_eff);
        }
        x_full.conservativeResize(Eigen::NoChange, k_base + static_cast<Eigen::Index>(lagged.size()));
        x_full.rightCols(static_cast<Eigen::Index>(lagged.size())) = wx;
        for (const auto& name : lagged) names.push_back("W" + std::string(name));
    } else if (!lagged.empty()) {
        fail(errc::usage, "W-lagged regressors are only valid for the SDM");
    }
    const int k = static_cast<int>(names.size());

    FitResult fit;
    fit.kind = kind;
    if (!w.isolated().empty()) {
        fit.warnings.push_back(std::to_string(w.isolated().size()) +
                               " isolated countries (zero weight rows); their spatial lags are structurally zero");
    }

    const Eigen::VectorXd wy_raw = apply_w_per_period(w.standardized(), frame.y, n, frame.T_eff);
    const Eigen::MatrixXd xt = time_transform(x_full, n, frame.T_eff, options.orthonormal_transform);
    const Eigen::VectorXd yt = time_transform(frame.y, n, frame.T_eff, options.orthonormal_transform).col(0);
    const Eigen::VectorXd wyt = time_transform(wy_raw, n, frame.T_eff, options.orthonormal_transform).col(0);
    const int T = static_cast<int>(xt.rows()) / n;
    const Eigen::Index N = xt.rows();
    if (N <= k + n) fail(errc::dimension, "too few observations for the spatial fit");
    check_columns(xt, x_full, names);

    // concentrate beta and sigma^2 out: residuals of y and Wy on X give a
    // quadratic form for the error sum of squares at any rho
    const Ols on_y = ols(xt, yt);
    const Ols on_wy = ols(xt, wyt);
    const double e00 = on_y.rss;
    const double e0l = on_y.resid.dot(on_wy.resid);
    const double ell = on_wy.rss;

    const Eigen::VectorXd& eigs = w.eigenvalues();
    const auto [lo, hi] = w.admissible_interval();
    fit.admissible = {lo, hi};
    const double span = hi - lo;

    const auto log_det = [&eigs](double rho) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < eigs.size(); ++i) {
            const double term = 1.0 - rho * eigs(i);
            if (term <= 0.0) return -std::numeric_limits<double>::infinity();
            sum += std::log(term);
        }
        return sum;
    };
    const auto sse = [&](double rho) { return e00 - 2.0 * rho * e0l + rho * rho * ell; };
    const auto concentrated = [&](double rho) {
        const double det_part = log_det(rho);
        if (!std::isfinite(det_part)) return -std::numeric_limits<double>::infinity();
        return -0.5 * static_cast<double>(N) * std::log(sse(rho) / static_cast<double>(N)) +
               static_cast<double>(T) * det_part;
    };

    double rho_hat;
    if (options.fixed_spatial) {
        rho_hat = *options.fixed_spatial;
        if (!std::isfinite(log_det(rho_hat))) {
            fail(errc::domain, "requested spatial parameter is outside the admissible interval");
        }
    } else {
        const double margin = 1e-6 * span;
        rho_hat = maximize_1d(concentrated, lo + margin, hi - margin, options.grid_points, options.tol * span);
        if (rho_hat - lo < 1e-4 * span || hi - rho_hat < 1e-4 * span) {
            fail(errc::boundary, "spatial parameter pinned at the admissible boundary (" +
                                     std::to_string(rho_hat) + ")");
        }
    }
    if (!std::isfinite(concentrated(rho_hat))) fail(errc::numerical, "non-finite concentrated likelihood");

    const Eigen::VectorXd beta_full = on_y.beta - rho_hat * on_wy.beta;
    const double sigma2 = sse(rho_hat) / static_cast<double>(N);
    fit.loglik = -0.5 * static_cast<double>(N) * (kLogTwoPi + 1.0 + std::log(sigma2)) +
                 static_cast<double>(T) * log_det(rho_hat);

    // expected information over (beta, rho, sigma^2) with B = W (I - rho W)^-1
    const Eigen::MatrixXd& wm = w.standardized();
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - rho_hat * wm;
    const Eigen::MatrixXd a_inv = Eigen::PartialPivLU<Eigen::MatrixXd>(a).solve(Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd b = wm * a_inv;
    const double tr_b = b.trace();
    const double tr_bb = b.cwiseProduct(b.transpose()).sum();
    const double tr_btb = b.squaredNorm();

    const Eigen::VectorXd xb = xt * beta_full;
    Eigen::VectorXd s_xr = Eigen::VectorXd::Zero(k);
    double s_rr = 0.0;
    for (int t = 0; t < T; ++t) {
        const Eigen::VectorXd p = b * xb.segment(static_cast<Eigen::Index>(t) * n, n);
        s_xr += xt.middleRows(static_cast<Eigen::Index>(t) * n, n).transpose() * p;
        s_rr += p.squaredNorm();
    }

    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(k + 2, k + 2);
    info.topLeftCorner(k, k) = (xt.transpose() * xt) / sigma2;
    info.block(0, k, k, 1) = s_xr / sigma2;
    info.block(k, 0, 1, k) = s_xr.transpose() / sigma2;
    info(k, k) = static_cast<double>(T) * (tr_bb + tr_btb) + s_rr / sigma2;
    info(k, k + 1) = info(k + 1, k) = static_cast<double>(T) * tr_b / sigma2;
    info(k + 1, k + 1) = static_cast<double>(N) / (2.0 * sigma2 * sigma2);

    Eigen::MatrixXd vcov_full;
    if (options.numerical_hessian) {
        const auto full_loglik = [&](const Eigen::VectorXd& theta) {
            const Eigen::VectorXd bb = theta.head(k);
            const double rho = theta(k);
            const double s2 = theta(k + 1);
            if (s2 <= 0.0 || !std::isfinite(log_det(rho))) return -1e300;
            const Eigen::VectorXd resid = yt - rho * wyt - xt * bb;
            return -0.5 * static_cast<double>(N) * (kLogTwoPi + std::log(s2)) +
                   static_cast<double>(T) * log_det(rho) - 0.5 * resid.squaredNorm() / s2;
        };
        Eigen::VectorXd at(k + 2);
        at.head(k) = beta_full;
        at(k) = rho_hat;
        at(k + 1) = sigma2;
        vcov_full = invert_information(-numerical_hessian(full_loglik, at));
    } else {
        vcov_full = invert_information(info);
    }

    fit.regressor_names = frame.regressor_names;
    fit.beta = beta_full.head(k_base);
    if (kind == ModelKind::SDM) {
        fit.lagged_names.assign(names.begin() + k_base, names.end());
        fit.gamma = beta_full.tail(k - k_base);
    }
    fit.rho = rho_hat;
    fit.vcov = vcov_full.topLeftCorner(k + 1, k + 1);
    fit.vcov_names = names;
    fit.vcov_names.push_back("rho");
    Eigen::VectorXd se_all = vcov_full.diagonal().cwiseSqrt();
    check_se(se_all.head(k + 1), "coefficient");
    fit.beta_se = se_all.head(k_base);
    if (kind == ModelKind::SDM) fit.gamma_se = se_all.segment(k_base, k - k_base);
    fit.rho_se = se_all(k);
    fit.sigma2 = sigma2;
    fit.sigma2_se = se_all(k + 1);
    fit.n = n;
    fit.T_eff = frame.T_eff;
    fit.k = k;
    fit.pseudo_r2 = squared_correlation(yt, rho_hat * wyt + xt * beta_full);

    // fixed effects from the untransformed generalized residuals
    fit.fixed_effects = Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd raw_resid = frame.y - rho_hat * wy_raw - x_full * beta_full;
    for (int t = 0; t < frame.T_eff; ++t) fit.fixed_effects += raw_resid.segment(static_cast<Eigen::Index>(t) * n, n);
    fit.fixed_effects /= static_cast<double>(frame.T_eff);
    return fit;
}

}  // namespace

FitResult fit_sar(const RegressionFrame& frame, const WeightMatrix& w, const FitOptions& options) {
    return fit_spatial_lag(frame, w, {}, options, ModelKind::SAR);
}

FitResult fit_sdm(const RegressionFrame& frame, const WeightMatrix& w, std::span<const std::string> lagged,
                  const FitOptions& options) {
    return fit_spatial_lag(frame, w, lagged, options, ModelKind::SDM);
}

// ---------------------------------------------------------------------------
// spatial error model: concentrated likelihood over lambda
// ---------------------------------------------------------------------------

FitResult fit_sem(const RegressionFrame& frame, const WeightMatrix& w, const FitOptions& options) {
    check_alignment(frame, w);
    const int n = frame.n;
    const int k = static_cast<int>(frame.regressor_names.size());

    FitResult fit;
    fit.kind = ModelKind::SEM;
    if (!w.isolated().empty()) {
        fit.warnings.push_back(std::to_string(w.isolated().size()) +
                               " isolated countries (zero weight rows); their spatial lags are structurally zero");
    }

    const Eigen::VectorXd wy_raw = apply_w_per_period(w.standardized(), frame.y, n, frame.T_eff);
    const Eigen::MatrixXd wx_raw = apply_w_per_period(w.standardized(), frame.X, n, frame.T_eff);
    const Eigen::MatrixXd xt = time_transform(frame.X, n, frame.T_eff, options.orthonormal_transform);
    const Eigen::VectorXd yt = time_transform(frame.y, n, frame.T_eff, options.orthonormal_transform).col(0);
    const Eigen::MatrixXd wxt = time_transform(wx_raw, n, frame.T_eff, options.orthonormal_transform);
    const Eigen::VectorXd wyt = time_transform(wy_raw, n, frame.T_eff, options.orthonormal_transform).col(0);
    const int T = static_cast<int>(xt.rows()) / n;
    const Eigen::Index N = xt.rows();
    if (N <= k + n) fail(errc::dimension, "too few observations for the spatial fit");
    check_columns(xt, frame.X, frame.regressor_names);

    // cross products: every spatially filtered OLS is a k x k solve
    const Eigen::MatrixXd m00 = xt.transpose() * xt;
    const Eigen::MatrixXd m01 = xt.transpose() * wxt;
    const Eigen::MatrixXd m11 = wxt.transpose() * wxt;
    const Eigen::VectorXd v0 = xt.transpose() * yt;
    const Eigen::VectorXd v1 = xt.transpose() * wyt;
    const Eigen::VectorXd u0 = wxt.transpose() * yt;
    const Eigen::VectorXd u1 = wxt.transpose() * wyt;
    const double s00 = yt.squaredNorm();
    const double s01 = yt.dot(wyt);
    const double s11 = wyt.squaredNorm();

    const Eigen::VectorXd& eigs = w.eigenvalues();
    const auto [lo, hi] = w.admissible_interval();
    fit.admissible = {lo, hi};
    const double span = hi - lo;

    const auto log_det = [&eigs](double lambda) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < eigs.size(); ++i) {
            const double term = 1.0 - lambda * eigs(i);
            if (term <= 0.0) return -std::numeric_limits<double>::infinity();
            sum += std::log(term);
        }
        return sum;
    };
    const auto gls_parts = [&](double lam) {
        const Eigen::MatrixXd xsxs = m00 - lam * (m01 + m01.transpose()) + lam * lam * m11;
        const Eigen::VectorXd xsys = v0 - lam * (v1 + u0) + lam * lam * u1;
        const double ysys = s00 - 2.0 * lam * s01 + lam * lam * s11;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(xsxs);
        if (ldlt.info() != Eigen::Success) fail(errc::rank, "filtered normal equations not positive definite");
        const Eigen::VectorXd beta = ldlt.solve(xsys);
        const double rss = ysys - beta.dot(xsys);
        return std::tuple<Eigen::VectorXd, double, Eigen::MatrixXd>(beta, rss, xsxs);
    };
    const auto concentrated = [&](double lam) {
        const double det_part = log_det(lam);
        if (!std::isfinite(det_part)) return -std::numeric_limits<double>::infinity();
        const auto [beta, rss, xsxs] = gls_parts(lam);
        (void)beta;
        (void)xsxs;
        if (rss <= 0.0) return -std::numeric_limits<double>::infinity();
        return -0.5 * static_cast<double>(N) * std::log(rss / static_cast<double>(N)) +
               static_cast<double>(T) * det_part;
    };

    double lambda_hat;
    if (options.fixed_spatial) {
        lambda_hat = *options.fixed_spatial;
        if (!std::isfinite(log_det(lambda_hat))) {
            fail(errc::domain, "requested spatial parameter is outside the admissible interval");
        }
    } else {
        const double margin = 1e-6 * span;
        lambda_hat = maximize_1d(concentrated, lo + margin, hi - margin, options.grid_points, options.tol * span);
        if (lambda_hat - lo < 1e-4 * span || hi - lambda_hat < 1e-4 * span) {
            fail(errc::boundary, "spatial parameter pinned at the admissible boundary (" +
                                     std::to_string(lambda_hat) + ")");
        }
    }
    if (!std::isfinite(concentrated(lambda_hat))) fail(errc::numerical, "non-finite concentrated likelihood");

    const auto [beta_hat, rss, xsxs] = gls_parts(lambda_hat);
    const double sigma2 = rss / static_cast<double>(N);
    fit.loglik = -0.5 * static_cast<double>(N) * (kLogTwoPi + 1.0 + std::log(sigma2)) +
                 static_cast<double>(T) * log_det(lambda_hat);

    // information matrix: beta block is independent of (lambda, sigma^2)
    const Eigen::MatrixXd& wm = w.standardized();
    const Eigen::MatrixXd c = Eigen::MatrixXd::Identity(n, n) - lambda_hat * wm;
    const Eigen::MatrixXd c_inv = Eigen::PartialPivLU<Eigen::MatrixXd>(c).solve(Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd b = wm * c_inv;
    const double tr_b = b.trace();
    const double tr_bb = b.cwiseProduct(b.transpose()).sum();
    const double tr_btb = b.squaredNorm();

    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(k + 2, k + 2);
    info.topLeftCorner(k, k) = xsxs / sigma2;
    info(k, k) = static_cast<double>(T) * (tr_bb + tr_btb);
    info(k, k + 1) = info(k + 1, k) = static_cast<double>(T) * tr_b / sigma2;
    info(k + 1, k + 1) = static_cast<double>(N) / (2.0 * sigma2 * sigma2);

    Eigen::MatrixXd vcov_full;
    if (options.numerical_hessian) {
        const auto full_loglik = [&](const Eigen::VectorXd& theta) {
            const Eigen::VectorXd bb = theta.head(k);
            const double lam = theta(k);
            const double s2 = theta(k + 1);
            if (s2 <= 0.0 || !std::isfinite(log_det(lam))) return -1e300;
            const Eigen::VectorXd resid = (yt - lam * wyt) - (xt - lam * wxt) * bb;
            return -0.5 * static_cast<double>(N) * (kLogTwoPi + std::log(s2)) +
                   static_cast<double>(T) * log_det(lam) - 0.5 * resid.squaredNorm() / s2;
        };
        Eigen::VectorXd at(k + 2);
        at.head(k) = beta_hat;
        at(k) = lambda_hat;
        at(k + 1) = sigma2;
        vcov_full = invert_information(-numerical_hessian(full_loglik, at));
    } else {
        vcov_full = invert_information(info);
    }

    fit.regressor_names = frame.regressor_names;
    fit.beta = beta_hat;
    fit.lambda = lambda_hat;
    fit.vcov = vcov_full.topLeftCorner(k + 1, k + 1);
    fit.vcov_names = frame.regressor_names;
    fit.vcov_names.push_back("lambda");
    Eigen::VectorXd se_all = vcov_full.diagonal().cwiseSqrt();
    check_se(se_all.head(k + 1), "coefficient");
    fit.beta_se = se_all.head(k);
    fit.lambda_se = se_all(k);
    fit.sigma2 = sigma2;
    fit.sigma2_se = se_all(k + 1);
    fit.n = n;
    fit.T_eff = frame.T_eff;
    fit.k = k;
    fit.pseudo_r2 = squared_correlation(yt, xt * beta_hat);

    fit.fixed_effects = Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd raw_resid = frame.y - frame.X * beta_hat;
    for (int t = 0; t < frame.T_eff; ++t) fit.fixed_effects += raw_resid.segment(static_cast<Eigen::Index>(t) * n, n);
    fit.fixed_effects /= static_cast<double>(frame.T_eff);
    return fit;
}

FitResult fit_model(const ModelSpec& spec, const RegressionFrame& frame, const WeightMatrix* weights) {
    const bool spatial = spec.kind == ModelKind::SAR || spec.kind == ModelKind::SEM || spec.kind == ModelKind::SDM;
    if (spatial && weights == nullptr) {
        fail(errc::usage, std::string(model_name(spec.kind)) + " requires a weight matrix");
    }
    if (!spec.spatial_lag_regressors.empty() && spec.kind != ModelKind::SDM) {
        fail(errc::usage, "spatial_lag_regressors are only valid for the SDM");
    }
    switch (spec.kind) {
        case ModelKind::FE: return fit_fe(frame, spec.options);
        case ModelKind::RE: return fit_re(frame, spec.options);
        case ModelKind::SAR: return fit_sar(frame, *weights, spec.options);
        case ModelKind::SEM: return fit_sem(frame, *weights, spec.options);
        case ModelKind::SDM: return fit_sdm(frame, *weights, spec.spatial_lag_regressors, spec.options);
    }
    fail(errc::usage, "unhandled model kind");
}

// ---------------------------------------------------------------------------
// coefficient tests
// ---------------------------------------------------------------------------

TestResult wald_test(const FitResult& fit) {
    const Eigen::Index k_beta = fit.beta.size();
    const Eigen::Index k_gamma = fit.gamma.size();
    const Eigen::Index k = k_beta + k_gamma;
    Eigen::VectorXd b(k);
    b.head(k_beta) = fit.beta;
    if (k_gamma > 0) b.tail(k_gamma) = fit.gamma;
    const Eigen::MatrixXd v = fit.vcov.topLeftCorner(k, k);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(v);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        fail(errc::numerical, "coefficient covariance is singular");
    }
    TestResult result;
    result.name = "Wald";
    result.statistic = b.dot(ldlt.solve(b));
    result.df = static_cast<int>(k);
    result.expectation = static_cast<double>(result.df);
    result.sd = std::sqrt(2.0 * result.df);
    result.z = (result.statistic - result.expectation) / result.sd;
    result.p_value = stats::chisq_sf(result.statistic, result.df);
    result.tails = 1;
    return result;
}

TestResult hausman_test(const FitResult& fe, const FitResult& re) {
    if (fe.kind != ModelKind::FE || re.kind != ModelKind::RE) {
        fail(errc::usage, "hausman_test expects a FE fit and a RE fit");
    }
    if (fe.regressor_names != re.regressor_names || fe.n != re.n || fe.T_eff != re.T_eff) {
        fail(errc::usage, "hausman_test requires both fits on the same frame and regressors");
    }
    const Eigen::Index k = fe.beta.size();
    const Eigen::VectorXd diff = fe.beta - re.beta;
    const Eigen::MatrixXd v = fe.vcov.topLeftCorner(k, k) - re.vcov.topLeftCorner(k, k);

    TestResult result;
    result.name = "Hausman";
    result.df = static_cast<int>(k);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(v);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        result.statistic = diff.dot(ldlt.solve(diff));
    } else {
        // Moore-Penrose fallback for a non-positive-definite difference
        result.note = "covariance difference not positive definite; pseudo-inverse used";
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v);
        const double cutoff = 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
        Eigen::VectorXd inv_eigs = Eigen::VectorXd::Zero(k);
        for (Eigen::Index i = 0; i < k; ++i) {
            if (es.eigenvalues()(i) > cutoff) inv_eigs(i) = 1.0 / es.eigenvalues()(i);
        }
        const Eigen::VectorXd rotated = es.eigenvectors().transpose() * diff;
        result.statistic = rotated.dot(inv_eigs.asDiagonal() * rotated);
    }
    result.statistic = std::max(result.statistic, 0.0);
    result.expectation = static_cast<double>(result.df);
    result.sd = std::sqrt(2.0 * result.df);
    result.z = (result.statistic - result.expectation) / result.sd;
    result.p_value = stats::chisq_sf(result.statistic, result.df);
    result.tails = 1;
    return result;
}

namespace {

int parameter_count(const FitResult& fit) {
    const int spatial = fit.rho || fit.lambda ? 1 : 0;
    return static_cast<int>(fit.beta.size() + fit.gamma.size()) + spatial;
}

bool nested_kinds(ModelKind restricted, ModelKind unrestricted) {
    if (restricted == unrestricted) return true;
    switch (unrestricted) {
        case ModelKind::SDM:
            return restricted == ModelKind::FE || restricted == ModelKind::SAR || restricted == ModelKind::SEM;
        case ModelKind::SAR:
        case ModelKind::SEM: return restricted == ModelKind::FE;
        default: return false;
    }
}

}  // namespace

TestResult lr_test(const FitResult& restricted, const FitResult& unrestricted) {
    if (!nested_kinds(restricted.kind, unrestricted.kind)) {
        fail(errc::nesting, std::string(model_name(restricted.kind)) + " is not nested in " +
                                model_name(unrestricted.kind));
    }
    if (restricted.n != unrestricted.n || restricted.T_eff != unrestricted.T_eff ||
        restricted.regressor_names != unrestricted.regressor_names) {
        fail(errc::usage, "lr_test requires both fits on the same frame and regressors");
    }
    const double statistic = 2.0 * (unrestricted.loglik - restricted.loglik);
    if (statistic < -1e-6) {
        fail(errc::nesting, "likelihood ratio is negative (" + std::to_string(statistic) +
                                "); models are not nested or an optimum was missed");
    }
    TestResult result;
    result.name = std::string("LR ") + model_name(restricted.kind) + " vs " + model_name(unrestricted.kind);
    result.statistic = std::max(statistic, 0.0);
    result.df = std::max(parameter_count(unrestricted) - parameter_count(restricted), 0);
    result.tails = 1;
    if (result.df == 0) {
        result.p_value = 1.0;
        return result;
    }
    result.expectation = static_cast<double>(result.df);
    result.sd = std::sqrt(2.0 * result.df);
    result.z = (result.statistic - result.expectation) / result.sd;
    result.p_value = stats::chisq_sf(result.statistic, result.df);
    return result;
}

}  // namespace spanel
