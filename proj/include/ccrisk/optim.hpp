#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccrisk/dataset.hpp"
#include "ccrisk/errors.hpp"

// Logistic regression fitting: maximum likelihood via iteratively reweighted
// least squares with step halving, and L1-penalized fits via cyclic coordinate
// descent on the local quadratic approximation (intercept unpenalized).

namespace ccrisk {

inline double sigmoid(double eta) {
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

// log(1 + exp(eta)) without overflow.
inline double softplus(double eta) {
    if (eta > 0.0) return eta + std::log1p(std::exp(-eta));
    return std::log1p(std::exp(eta));
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

struct FitMeta {
    int iterations = 0;
    double gradient_norm = std::numeric_limits<double>::quiet_NaN();
    double kkt_residual = std::numeric_limits<double>::quiet_NaN();  // L1 fits only
    double lambda = 0.0;                                             // 0 for MLE
    bool ridge_fallback = false;
    std::vector<double> objective_trace;  // accepted-iteration objective values
    std::vector<std::string> warnings;
};

struct LogisticModel {
    double intercept = 0.0;
    Eigen::VectorXd coef;   // one per feature, in standardized-feature space
    ScalingParams scaling;  // applied to raw inputs before the linear predictor
    FitMeta meta;
};

namespace detail {

// Slope magnitude past which the logistic surface is numerically flat; larger
// fitted values indicate (quasi-)separation rather than signal.
constexpr double kSeparationBound = 30.0;

inline Eigen::VectorXd linear_predictor(double b0, const Eigen::VectorXd& b,
                                        const Eigen::MatrixXd& x) {
    if (x.cols() != b.size()) throw DataError("model has " + std::to_string(b.size()) +
                                              " coefficients but data has " +
                                              std::to_string(x.cols()) + " columns");
    return (x * b).array() + b0;
}

inline double loglik_at(const Eigen::VectorXd& eta, const Eigen::VectorXi& y) {
    double ll = 0.0;
    for (int i = 0; i < eta.size(); ++i) ll += y[i] * eta[i] - softplus(eta[i]);
    return ll;
}

struct RawFit {
    double b0 = 0.0;
    Eigen::VectorXd b;
    FitMeta meta;
};

// Newton/IRLS on the unpenalized log-likelihood. Step halving keeps the
// objective non-decreasing between accepted iterations.
inline RawFit irls(const Eigen::MatrixXd& x, const Eigen::VectorXi& y, double tol, int max_iter) {
    const int n = static_cast<int>(x.rows());
    const int p = static_cast<int>(x.cols());
    RawFit fit;
    fit.b = Eigen::VectorXd::Zero(p);
    if (n <= p)
        fit.meta.warnings.push_back("n <= p (" + std::to_string(n) + " rows, " +
                                    std::to_string(p) + " features); fit may be unstable");

    Eigen::VectorXd yd = y.cast<double>();
    Eigen::VectorXd eta = linear_predictor(fit.b0, fit.b, x);
    double ll = loglik_at(eta, y);
    fit.meta.objective_trace.push_back(ll);

    for (int it = 1; it <= max_iter; ++it) {
        Eigen::VectorXd mu(n), w(n);
        for (int i = 0; i < n; ++i) {
            mu[i] = sigmoid(eta[i]);
            w[i] = mu[i] * (1.0 - mu[i]);
        }
        Eigen::VectorXd resid = yd - mu;
        Eigen::VectorXd grad(p + 1);
        grad[0] = resid.sum();
        grad.tail(p) = x.transpose() * resid;
        fit.meta.gradient_norm = grad.cwiseAbs().maxCoeff();
        fit.meta.iterations = it - 1;
        if (fit.meta.gradient_norm < tol) return fit;

        Eigen::MatrixXd h(p + 1, p + 1);
        h(0, 0) = w.sum();
        h.block(0, 1, 1, p) = (w.transpose() * x);
        h.block(1, 0, p, 1) = h.block(0, 1, 1, p).transpose();
        h.block(1, 1, p, p) = x.transpose() * w.asDiagonal() * x;

        Eigen::VectorXd delta = h.ldlt().solve(grad);
        const double residual = (h * delta - grad).cwiseAbs().maxCoeff();
        if (!delta.allFinite() || residual > 1e-8 * (1.0 + grad.cwiseAbs().maxCoeff())) {
            const double jitter = 1e-8 * std::max(1.0, h.diagonal().maxCoeff());
            Eigen::MatrixXd hj = h + jitter * Eigen::MatrixXd::Identity(p + 1, p + 1);
            delta = hj.ldlt().solve(grad);
            fit.meta.ridge_fallback = true;
        }

        // Near the optimum the Newton improvement drops below the rounding
        // noise of a length-n log-likelihood sum; acceptance must tolerate
        // that noise or the line search stalls on spurious decreases.
        const double noise = 1e-12 * (1.0 + std::abs(ll));
        double step = 1.0;
        double b0_new;
        Eigen::VectorXd b_new;
        double ll_new;
        while (true) {
            b0_new = fit.b0 + step * delta[0];
            b_new = fit.b + step * delta.tail(p);
            eta = linear_predictor(b0_new, b_new, x);
            ll_new = loglik_at(eta, y);
            if (ll_new >= ll - noise) break;
            step *= 0.5;
            if (step < 1e-10)
                throw FitError(FitError::Kind::no_convergence,
                               "logistic fit: line search failed at iteration " + std::to_string(it));
        }
        fit.b0 = b0_new;
        fit.b = b_new;
        ll = ll_new;
        fit.meta.objective_trace.push_back(ll);
        if (p > 0 && fit.b.cwiseAbs().maxCoeff() > kSeparationBound)
            throw FitError(FitError::Kind::separation,
                           "logistic fit: coefficients diverged (quasi-separation)");
    }
    throw FitError(FitError::Kind::no_convergence,
                   "logistic fit: gradient max-norm " + format_double(fit.meta.gradient_norm) +
                       " still above tolerance after " + std::to_string(max_iter) + " iterations");
}

inline double soft_threshold(double u, double lambda) {
    if (u > lambda) return u - lambda;
    if (u < -lambda) return u + lambda;
    return 0.0;
}

// Violation of the stationarity conditions of max loglik - lambda*sum|b_j|.
inline double kkt_residual(const Eigen::MatrixXd& x, const Eigen::VectorXi& y, double b0,
                           const Eigen::VectorXd& b, double lambda) {
    const int n = static_cast<int>(x.rows());
    Eigen::VectorXd mu(n);
    Eigen::VectorXd eta = linear_predictor(b0, b, x);
    for (int i = 0; i < n; ++i) mu[i] = sigmoid(eta[i]);
    Eigen::VectorXd resid = y.cast<double>() - mu;
    double worst = std::abs(resid.sum());  // intercept is unpenalized
    Eigen::VectorXd g = x.transpose() * resid;
    for (int j = 0; j < b.size(); ++j) {
        double v = b[j] == 0.0 ? std::max(0.0, std::abs(g[j]) - lambda)
                               : std::abs(g[j] - lambda * (b[j] > 0 ? 1.0 : -1.0));
        worst = std::max(worst, v);
    }
    return worst;
}

// Coordinate descent on the weighted quadratic bound; the working response is
// refreshed each outer sweep. Warm-startable through the initial (b0, b).
inline RawFit cd_l1(const Eigen::MatrixXd& x, const Eigen::VectorXi& y, double lambda, double tol,
                    int max_iter, double b0_init, Eigen::VectorXd b_init) {
    if (lambda < 0.0) throw FitError(FitError::Kind::bad_input, "negative penalty lambda");
    const int n = static_cast<int>(x.rows());
    const int p = static_cast<int>(x.cols());
    RawFit fit;
    fit.b0 = b0_init;
    fit.b = std::move(b_init);
    fit.meta.lambda = lambda;

    Eigen::VectorXd yd = y.cast<double>();
    auto objective = [&](double b0, const Eigen::VectorXd& b) {
        return loglik_at(linear_predictor(b0, b, x), y) - lambda * b.cwiseAbs().sum();
    };
    double obj = objective(fit.b0, fit.b);
    fit.meta.objective_trace.push_back(obj);

    for (int outer = 1; outer <= max_iter; ++outer) {
        fit.meta.kkt_residual = kkt_residual(x, y, fit.b0, fit.b, lambda);
        fit.meta.iterations = outer - 1;
        if (fit.meta.kkt_residual < tol) return fit;

        Eigen::VectorXd eta = linear_predictor(fit.b0, fit.b, x);
        Eigen::VectorXd mu(n), w(n);
        for (int i = 0; i < n; ++i) {
            mu[i] = sigmoid(eta[i]);
            w[i] = std::max(mu[i] * (1.0 - mu[i]), 1e-5);  // curvature floor, gradient untouched
        }
        Eigen::VectorXd z = eta + (yd - mu).cwiseQuotient(w);
        Eigen::VectorXd col_wss(p);
        for (int j = 0; j < p; ++j) col_wss[j] = x.col(j).cwiseAbs2().dot(w);
        const double wsum = w.sum();

        double b0_new = fit.b0;
        Eigen::VectorXd b_new = fit.b;
        Eigen::VectorXd r = z - linear_predictor(b0_new, b_new, x);
        for (int sweep = 0; sweep < 2000; ++sweep) {
            double max_change = 0.0;
            double d0 = w.dot(r) / wsum;
            b0_new += d0;
            r.array() -= d0;
            max_change = std::abs(d0);
            for (int j = 0; j < p; ++j) {
                double u = w.cwiseProduct(x.col(j)).dot(r) + col_wss[j] * b_new[j];
                double bj = soft_threshold(u, lambda) / col_wss[j];
                double d = bj - b_new[j];
                if (d != 0.0) {
                    r -= d * x.col(j);
                    b_new[j] = bj;
                    max_change = std::max(max_change, std::abs(d));
                }
            }
            if (max_change < 1e-11) break;
        }

        // Keep the penalized objective non-decreasing; back off toward the
        // previous point if the quadratic step overshot.
        double obj_new = objective(b0_new, b_new);
        int halvings = 0;
        while (obj_new + 1e-12 < obj && halvings < 40) {
            b0_new = 0.5 * (b0_new + fit.b0);
            b_new = 0.5 * (b_new + fit.b);
            obj_new = objective(b0_new, b_new);
            ++halvings;
        }
        if (obj_new + 1e-12 < obj) break;  // no progress; final KKT check below decides
        fit.b0 = b0_new;
        fit.b = b_new;
        obj = obj_new;
        fit.meta.objective_trace.push_back(obj);
        if (p > 0 && fit.b.cwiseAbs().maxCoeff() > kSeparationBound)
            throw FitError(FitError::Kind::separation,
                           "L1 logistic fit: coefficients diverged (quasi-separation)");
    }
    fit.meta.kkt_residual = kkt_residual(x, y, fit.b0, fit.b, lambda);
    if (fit.meta.kkt_residual < tol) return fit;
    throw FitError(FitError::Kind::no_convergence,
                   "L1 logistic fit: KKT residual " + format_double(fit.meta.kkt_residual) +
                       " still above tolerance after " + std::to_string(max_iter) + " sweeps");
}

}  // namespace detail

// Bernoulli log-likelihood sum_i y_i*eta_i - log(1 + exp(eta_i)), evaluated on
// the model's standardized scale.
inline double log_likelihood(const LogisticModel& model, const Study& study) {
    Eigen::MatrixXd z = standardize_with(study.features, model.scaling);
    Eigen::VectorXd eta = detail::linear_predictor(model.intercept, model.coef, z);
    return detail::loglik_at(eta, study.labels);
}

// Gradient of the log-likelihood with respect to (intercept, coefficients).
inline Eigen::VectorXd log_likelihood_gradient(const LogisticModel& model, const Study& study) {
    Eigen::MatrixXd z = standardize_with(study.features, model.scaling);
    Eigen::VectorXd eta = detail::linear_predictor(model.intercept, model.coef, z);
    Eigen::VectorXd mu(eta.size());
    for (int i = 0; i < eta.size(); ++i) mu[i] = sigmoid(eta[i]);
    Eigen::VectorXd resid = study.labels.cast<double>() - mu;
    Eigen::VectorXd g(model.coef.size() + 1);
    g[0] = resid.sum();
    g.tail(model.coef.size()) = z.transpose() * resid;
    return g;
}

// Maximum-likelihood fit on a pre-standardized study. `scaling` is stamped
// into the model so predictions accept raw-scale inputs.
inline LogisticModel fit_logistic_mle(const Study& study, const ScalingParams& scaling,
                                      double tol = 1e-8, int max_iter = 100) {
    detail::RawFit f = detail::irls(study.features, study.labels, tol, max_iter);
    LogisticModel m;
    m.intercept = f.b0;
    m.coef = std::move(f.b);
    m.scaling = scaling;
    m.meta = std::move(f.meta);
    return m;
}

inline LogisticModel fit_logistic_mle(const Study& study, double tol = 1e-8, int max_iter = 100) {
    return fit_logistic_mle(study, ScalingParams::identity(study.p()), tol, max_iter);
}

// L1-penalized fit (penalty on slopes only) on a pre-standardized study;
// the penalty is not scale-invariant, so standardization is required.
inline LogisticModel fit_logistic_l1(const Study& study, double lambda,
                                     const ScalingParams& scaling, double tol = 1e-8,
                                     int max_iter = 200) {
    const double ybar = study.labels.cast<double>().mean();
    detail::RawFit f = detail::cd_l1(study.features, study.labels, lambda, tol, max_iter,
                                     logit(ybar), Eigen::VectorXd::Zero(study.p()));
    LogisticModel m;
    m.intercept = f.b0;
    m.coef = std::move(f.b);
    m.scaling = scaling;
    m.meta = std::move(f.meta);
    return m;
}

inline LogisticModel fit_logistic_l1(const Study& study, double lambda, double tol = 1e-8,
                                     int max_iter = 200) {
    return fit_logistic_l1(study, lambda, ScalingParams::identity(study.p()), tol, max_iter);
}

// Smallest penalty at which every slope is zero: the max absolute slope
// gradient at the intercept-only fit.
inline double lambda_max(const Study& study) {
    const double ybar = study.labels.cast<double>().mean();
    Eigen::VectorXd resid = study.labels.cast<double>().array() - ybar;
    return (study.features.transpose() * resid).cwiseAbs().maxCoeff();
}

// Log-spaced descending grid from lmax down the given number of decades.
inline std::vector<double> lambda_grid(double lmax, double decades = 4.0, int points = 50) {
    if (!(lmax > 0.0)) throw FitError(FitError::Kind::bad_input, "lambda_max must be positive");
    std::vector<double> grid(points);
    for (int k = 0; k < points; ++k)
        grid[k] = lmax * std::pow(10.0, -decades * k / std::max(1, points - 1));
    return grid;
}

// Warm-started fits along a descending lambda grid; returns one model per
// grid point, sharing the given scaling.
inline std::vector<LogisticModel> fit_l1_path(const Study& study, const std::vector<double>& grid,
                                              const ScalingParams& scaling, double tol = 1e-8,
                                              int max_iter = 200) {
    std::vector<LogisticModel> path;
    path.reserve(grid.size());
    double b0 = logit(study.labels.cast<double>().mean());
    Eigen::VectorXd b = Eigen::VectorXd::Zero(study.p());
    for (double lambda : grid) {
        detail::RawFit f =
            detail::cd_l1(study.features, study.labels, lambda, tol, max_iter, b0, b);
        b0 = f.b0;
        b = f.b;
        LogisticModel m;
        m.intercept = f.b0;
        m.coef = f.b;
        m.scaling = scaling;
        m.meta = std::move(f.meta);
        path.push_back(std::move(m));
    }
    return path;
}

// Sample-measure posteriors for raw-scale features; output clamped to the
// open interval (0,1).
inline Eigen::VectorXd predict_scores(const LogisticModel& model, const Eigen::MatrixXd& features) {
    if (!features.allFinite()) throw DataError("non-finite feature value in prediction input");
    Eigen::MatrixXd z = standardize_with(features, model.scaling);
    Eigen::VectorXd eta = detail::linear_predictor(model.intercept, model.coef, z);
    Eigen::VectorXd s(eta.size());
    const double hi = std::nextafter(1.0, 0.0);
    const double lo = std::numeric_limits<double>::denorm_min();
    for (int i = 0; i < eta.size(); ++i)
        s[i] = std::min(hi, std::max(lo, sigmoid(eta[i])));
    return s;
}

inline Eigen::VectorXd predict_scores(const LogisticModel& model, const Study& study) {
    return predict_scores(model, study.features);
}

// Standardized-space coefficients mapped back to the raw scale.
inline double raw_coefficient(const LogisticModel& m, int j) {
    return m.coef[j] / m.scaling.stddev[j];
}

inline double raw_intercept(const LogisticModel& m) {
    double b0 = m.intercept;
    for (int j = 0; j < m.coef.size(); ++j)
        b0 -= m.coef[j] * m.scaling.mean[j] / m.scaling.stddev[j];
    return b0;
}

inline nlohmann::json model_to_json(const LogisticModel& m,
                                    const std::vector<std::string>& feature_names) {
    nlohmann::json coeffs = nlohmann::json::array();
    for (int j = 0; j < m.coef.size(); ++j) {
        coeffs.push_back({{"feature", feature_names.at(j)},
                          {"standardized", m.coef[j]},
                          {"raw", raw_coefficient(m, j)}});
    }
    nlohmann::json scaling = {{"mean", std::vector<double>(m.scaling.mean.begin(), m.scaling.mean.end())},
                              {"stddev", std::vector<double>(m.scaling.stddev.begin(), m.scaling.stddev.end())}};
    nlohmann::json fit = {{"iterations", m.meta.iterations},
                          {"ridge_fallback", m.meta.ridge_fallback},
                          {"warnings", m.meta.warnings}};
    if (std::isfinite(m.meta.gradient_norm)) fit["gradient_norm"] = m.meta.gradient_norm;
    if (std::isfinite(m.meta.kkt_residual)) fit["kkt_residual"] = m.meta.kkt_residual;
    return {{"intercept", {{"standardized", m.intercept}, {"raw", raw_intercept(m)}}},
            {"coefficients", coeffs},
            {"scaling", scaling},
            {"lambda", m.meta.lambda},
            {"fit", fit}};
}

}  // namespace ccrisk
