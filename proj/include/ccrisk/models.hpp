#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "ccrisk/errors.hpp"
#include "ccrisk/optim.hpp"
#include "ccrisk/rng.hpp"

// Model building blocks on top of the logistic fitters: principal components,
// greedy stepwise selection, sparse-then-refit, 2-means clustering and the
// Brier score.

namespace ccrisk {

struct PcaBasis {
    Eigen::MatrixXd loadings;           // p x k, orthonormal columns
    Eigen::VectorXd explained_variance;  // non-increasing
    Eigen::VectorXd center;
};

// Top-k variance directions via thin SVD of the centered data. Column signs
// are normalized so the largest-magnitude loading entry is positive.
inline PcaBasis pca_fit(const Eigen::MatrixXd& x, int k) {
    const int n = static_cast<int>(x.rows());
    const int p = static_cast<int>(x.cols());
    if (k < 1 || k > std::min(n - 1, p))
        throw DataError("component count k=" + std::to_string(k) + " must satisfy 1 <= k <= min(n-1, p) = " +
                        std::to_string(std::min(n - 1, p)));
    PcaBasis basis;
    basis.center = x.colwise().mean();
    Eigen::MatrixXd centered = x.rowwise() - basis.center.transpose();
    if (centered.cwiseAbs().maxCoeff() == 0.0) throw DataError("zero-variance input to PCA");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    basis.loadings = svd.matrixV().leftCols(k);
    basis.explained_variance =
        svd.singularValues().head(k).array().square() / static_cast<double>(n - 1);
    for (int j = 0; j < k; ++j) {
        int imax;
        basis.loadings.col(j).cwiseAbs().maxCoeff(&imax);
        if (basis.loadings(imax, j) < 0.0) basis.loadings.col(j) = -basis.loadings.col(j);
    }
    return basis;
}

inline Eigen::MatrixXd pca_project(const PcaBasis& basis, const Eigen::MatrixXd& x) {
    return (x.rowwise() - basis.center.transpose()) * basis.loadings;
}

inline Eigen::MatrixXd pca_reconstruct(const PcaBasis& basis, const Eigen::MatrixXd& scores) {
    return (scores * basis.loadings.transpose()).rowwise() + basis.center.transpose();
}

enum class SelectionCriterion { aic, bic };

// AIC = -2*loglik + 2d, BIC = -2*loglik + log(N)*d, minimized; d counts the
// intercept plus selected coefficients.
inline double selection_score(double loglik, int d, int n, SelectionCriterion crit) {
    const double penalty = crit == SelectionCriterion::aic ? 2.0 : std::log(static_cast<double>(n));
    return -2.0 * loglik + penalty * d;
}

struct StepwiseResult {
    std::vector<int> selected;  // ascending feature indices
    LogisticModel model;        // full-width coefficients, zeros off the support
    double criterion = 0.0;
};

namespace detail {

inline Eigen::MatrixXd take_columns(const Eigen::MatrixXd& x, const std::vector<int>& cols) {
    Eigen::MatrixXd out(x.rows(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) out.col(j) = x.col(cols[j]);
    return out;
}

// MLE on a column subset, embedded back into full width.
inline LogisticModel fit_mle_subset(const Study& s, const std::vector<int>& cols,
                                    const ScalingParams& scaling, double tol, int max_iter) {
    RawFit f = irls(take_columns(s.features, cols), s.labels, tol, max_iter);
    LogisticModel m;
    m.intercept = f.b0;
    m.coef = Eigen::VectorXd::Zero(s.p());
    for (std::size_t j = 0; j < cols.size(); ++j) m.coef[cols[j]] = f.b[j];
    m.scaling = scaling;
    m.meta = std::move(f.meta);
    return m;
}

}  // namespace detail

// Greedy bidirectional stepwise search from the intercept-only model: at each
// step the single add-or-drop move with the lowest criterion is taken,
// stopping when no move improves it. Ties go to the move encountered first
// (adds in feature order, then drops).
inline StepwiseResult stepwise_select(const Study& study, SelectionCriterion crit,
                                      const ScalingParams& scaling, double tol = 1e-8,
                                      int max_iter = 100) {
    const int p = study.p();
    std::vector<int> current;
    LogisticModel best_model = detail::fit_mle_subset(study, current, scaling, tol, max_iter);
    // objective_trace ends at the log-likelihood of the returned fit, in the
    // fitting space; log_likelihood() would re-apply the raw-scale scaling.
    double best = selection_score(best_model.meta.objective_trace.back(), 1, study.n(), crit);

    while (true) {
        std::vector<int> move_set;
        LogisticModel move_model;
        double move_score = best;
        bool found = false;

        auto consider = [&](const std::vector<int>& candidate) {
            LogisticModel m = detail::fit_mle_subset(study, candidate, scaling, tol, max_iter);
            double sc = selection_score(m.meta.objective_trace.back(),
                                        static_cast<int>(candidate.size()) + 1, study.n(), crit);
            if (sc < move_score) {
                move_score = sc;
                move_set = candidate;
                move_model = std::move(m);
                found = true;
            }
        };

        for (int j = 0; j < p; ++j) {
            if (std::find(current.begin(), current.end(), j) != current.end()) continue;
            std::vector<int> candidate = current;
            candidate.insert(std::upper_bound(candidate.begin(), candidate.end(), j), j);
            consider(candidate);
        }
        for (int j : current) {
            std::vector<int> candidate;
            for (int c : current)
                if (c != j) candidate.push_back(c);
            consider(candidate);
        }
        if (!found) break;
        current = std::move(move_set);
        best_model = std::move(move_model);
        best = move_score;
    }
    return {std::move(current), std::move(best_model), best};
}

struct SparseRefitResult {
    std::vector<int> support;  // nonzero slopes of the L1 fit
    LogisticModel model;       // MLE restricted to the support, full width
    double lambda = 0.0;
};

// MLE refit on the support of an L1 fit; empty support falls back to the
// intercept-only model.
inline SparseRefitResult sparse_then_refit(const Study& study, double lambda,
                                           const ScalingParams& scaling, double tol = 1e-8,
                                           int max_iter = 200) {
    LogisticModel l1 = fit_logistic_l1(study, lambda, scaling, tol, max_iter);
    SparseRefitResult out;
    out.lambda = lambda;
    for (int j = 0; j < l1.coef.size(); ++j)
        if (l1.coef[j] != 0.0) out.support.push_back(j);
    out.model = detail::fit_mle_subset(study, out.support, scaling, tol, 100);
    out.model.meta.lambda = lambda;
    return out;
}

struct Kmeans2Result {
    Eigen::VectorXi assignment;
    double wcss = 0.0;
    int iterations = 0;
    bool empty_cluster = false;
};

// Lloyd's algorithm with furthest-point seeding, best of `restarts` runs by
// within-cluster sum of squares. Deterministic given the seed.
inline Kmeans2Result kmeans2(const Eigen::MatrixXd& x, std::uint64_t seed, int restarts = 10) {
    const int n = static_cast<int>(x.rows());
    if (n < 2) throw DataError("kmeans2 needs at least 2 observations");
    Kmeans2Result best;
    best.wcss = std::numeric_limits<double>::infinity();

    for (int r = 0; r < restarts; ++r) {
        SplitMix64 g(derive_seed(seed, "kmeans2", r));
        Eigen::VectorXd c0 = x.row(static_cast<int>(uniform_below(g, n)));
        int far = 0;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
            double d = (x.row(i).transpose() - c0).squaredNorm();
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        Eigen::VectorXd c1 = x.row(far);

        Eigen::VectorXi assign = Eigen::VectorXi::Zero(n);
        Kmeans2Result run;
        for (int it = 0; it < 200; ++it) {
            bool changed = false;
            for (int i = 0; i < n; ++i) {
                double d0 = (x.row(i).transpose() - c0).squaredNorm();
                double d1 = (x.row(i).transpose() - c1).squaredNorm();
                int a = d1 < d0 ? 1 : 0;
                if (a != assign[i]) {
                    assign[i] = a;
                    changed = true;
                }
            }
            run.iterations = it + 1;
            if (!changed && it > 0) break;
            Eigen::VectorXd m0 = Eigen::VectorXd::Zero(x.cols());
            Eigen::VectorXd m1 = Eigen::VectorXd::Zero(x.cols());
            int cnt0 = 0, cnt1 = 0;
            for (int i = 0; i < n; ++i) {
                if (assign[i] == 0) {
                    m0 += x.row(i);
                    ++cnt0;
                } else {
                    m1 += x.row(i);
                    ++cnt1;
                }
            }
            if (cnt0 == 0 || cnt1 == 0) {
                run.empty_cluster = true;
                break;
            }
            c0 = m0 / cnt0;
            c1 = m1 / cnt1;
        }
        run.assignment = assign;
        run.wcss = 0.0;
        for (int i = 0; i < n; ++i)
            run.wcss += (x.row(i).transpose() - (assign[i] == 0 ? c0 : c1)).squaredNorm();
        if (run.wcss < best.wcss) best = std::move(run);
    }
    return best;
}

// Flips cluster ids so cluster 1 has majority overlap with label 1.
inline Eigen::VectorXi align_clusters_to_labels(const Eigen::VectorXi& assignment,
                                                const Eigen::VectorXi& labels) {
    int agree = 0;
    for (int i = 0; i < assignment.size(); ++i) agree += assignment[i] == labels[i];
    if (2 * agree >= assignment.size()) return assignment;
    return Eigen::VectorXi::Ones(assignment.size()) - assignment;
}

struct BrierScore {
    double normalized = 0.0;  // mean squared difference
    double total = 0.0;       // unnormalized sum
};

inline BrierScore brier_score(const Eigen::VectorXi& labels, const Eigen::VectorXd& scores) {
    if (labels.size() != scores.size())
        throw DataError("brier_score: " + std::to_string(labels.size()) + " labels vs " +
                        std::to_string(scores.size()) + " scores");
    BrierScore b;
    for (int i = 0; i < labels.size(); ++i) {
        double d = labels[i] - scores[i];
        b.total += d * d;
    }
    b.normalized = b.total / labels.size();
    return b;
}

}  // namespace ccrisk
