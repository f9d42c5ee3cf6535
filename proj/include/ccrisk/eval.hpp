#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccrisk/cv.hpp"
#include "ccrisk/dataset.hpp"
#include "ccrisk/errors.hpp"
#include "ccrisk/rng.hpp"
#include "ccrisk/shift.hpp"

// Cross-validated risk estimation with a tunable cutoff, bootstrap intervals,
// ROC curves and the misclassification-overlap report. The classification
// rule is always "predict 1 iff score > cutoff": ties classify as 0.

namespace ccrisk {

struct CvScores {
    Eigen::VectorXd scores;  // out-of-fold sample-measure posteriors
    FoldAssignment folds;
    std::uint64_t seed = 0;
};

inline CvScores cross_validate(const Study& s, const FitterFn& fitter, int k, std::uint64_t seed,
                               bool stratified = false) {
    CvScores cv;
    cv.seed = seed;
    cv.folds = stratified ? make_stratified_folds(s.labels, k, seed) : make_folds(s.n(), k, seed);
    cv.scores = cross_fit_scores(s, fitter, cv.folds, seed);
    return cv;
}

inline Eigen::VectorXi predicted_labels(const Eigen::VectorXd& scores, double cutoff) {
    Eigen::VectorXi yhat(scores.size());
    for (int i = 0; i < scores.size(); ++i) yhat[i] = scores[i] > cutoff ? 1 : 0;
    return yhat;
}

// (c0, c1): fraction of class 0 predicted 1, fraction of class 1 predicted 0.
inline std::pair<double, double> conditional_errors(const Eigen::VectorXd& scores,
                                                    const Eigen::VectorXi& labels, double cutoff) {
    if (scores.size() != labels.size())
        throw DataError("conditional_errors: score/label length mismatch");
    int n0 = 0, n1 = 0, e0 = 0, e1 = 0;
    for (int i = 0; i < labels.size(); ++i) {
        const bool hat1 = scores[i] > cutoff;
        if (labels[i] == 0) {
            ++n0;
            e0 += hat1;
        } else {
            ++n1;
            e1 += !hat1;
        }
    }
    if (n0 == 0 || n1 == 0) throw DataError("conditional_errors: a class is absent from labels");
    return {static_cast<double>(e0) / n0, static_cast<double>(e1) / n1};
}

struct RiskEstimate {
    double risk = 0.0;      // l1*p1*c1 + l0*p0*c0
    double balanced = 0.0;  // (c0+c1)/2
};

inline RiskEstimate empirical_risk(double c0, double c1, const CostSpec& cost,
                                   const PriorSpec& prior) {
    RiskEstimate r;
    r.risk = cost.l1 * prior.p1 * c1 + cost.l0 * prior.p0() * c0;
    r.balanced = 0.5 * (c0 + c1);
    return r;
}

struct CutoffPoint {
    double cutoff = 0.0;
    double c0 = 0.0;
    double c1 = 0.0;
    double risk = 0.0;
    double balanced = 0.0;
};

struct CutoffScan {
    double best_cutoff = 0.0;
    CutoffPoint best;
    double bayes_reference = 0.0;  // cutoff implied by costs, priors and the sample rate
    std::vector<CutoffPoint> curve;
};

// Default grid: midpoints between consecutive sorted unique scores, plus 0 and
// 1, which realizes every achievable classification. Ties in risk break toward
// the cutoff closest to the Bayes reference, then the smallest.
inline CutoffScan tune_cutoff(const Eigen::VectorXd& scores, const Eigen::VectorXi& labels,
                              const CostSpec& cost, const PriorSpec& prior,
                              std::vector<double> grid = {}) {
    if (grid.empty()) {
        std::vector<double> uniq(scores.begin(), scores.end());
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        grid.push_back(0.0);
        for (std::size_t i = 0; i + 1 < uniq.size(); ++i)
            grid.push_back(0.5 * (uniq[i] + uniq[i + 1]));
        grid.push_back(1.0);
    }
    CutoffScan scan;
    double pi1 = labels.cast<double>().mean();
    scan.bayes_reference = bayes_cutoff(cost, shift_factor(pi1, prior));
    bool first = true;
    for (double t : grid) {
        auto [c0, c1] = conditional_errors(scores, labels, t);
        RiskEstimate r = empirical_risk(c0, c1, cost, prior);
        scan.curve.push_back({t, c0, c1, r.risk, r.balanced});
        const CutoffPoint& cur = scan.curve.back();
        bool better = first || cur.risk < scan.best.risk;
        if (!better && cur.risk == scan.best.risk) {
            double d_new = std::abs(t - scan.bayes_reference);
            double d_old = std::abs(scan.best_cutoff - scan.bayes_reference);
            better = d_new < d_old || (d_new == d_old && t < scan.best_cutoff);
        }
        if (better) {
            scan.best = cur;
            scan.best_cutoff = t;
            first = false;
        }
    }
    return scan;
}

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // staircase from (0,0) to (1,1)
    double auc = 0.0;
};

// Threshold sweep over tie groups; the trapezoid area is accumulated in
// integer counts so AUC*n0*n1 equals the midrank U statistic exactly.
inline RocCurve roc_curve(const Eigen::VectorXd& scores, const Eigen::VectorXi& labels) {
    const int n = static_cast<int>(scores.size());
    if (n != labels.size()) throw DataError("roc_curve: score/label length mismatch");
    int n0 = 0, n1 = 0;
    for (int i = 0; i < n; ++i) (labels[i] == 0 ? n0 : n1)++;
    if (n0 == 0 || n1 == 0) throw DataError("roc_curve: both classes must be present");

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return scores[a] > scores[b]; });

    RocCurve roc;
    roc.points.push_back({0.0, 0.0});
    long tp = 0, fp = 0;
    double area2 = 0.0;  // 2 * n0 * n1 * AUC, integer-valued
    int i = 0;
    while (i < n) {
        int j = i;
        long dtp = 0, dfp = 0;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] == 1 ? dtp : dfp)++;
            ++j;
        }
        area2 += static_cast<double>(dfp) * (2 * tp + dtp);
        tp += dtp;
        fp += dfp;
        roc.points.push_back({static_cast<double>(fp) / n0, static_cast<double>(tp) / n1});
        i = j;
    }
    roc.auc = area2 / (2.0 * n0 * n1);
    return roc;
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct BootstrapIntervals {
    Interval c0, c1, risk;
    int replicates = 0;
    double level = 0.0;
};

namespace detail {

inline double percentile(std::vector<double>& v, double q) {
    std::sort(v.begin(), v.end());
    const double h = q * (v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= v.size()) return v.back();
    const double frac = h - lo;
    return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

}  // namespace detail

// Percentile intervals from stratified resampling of the (label, prediction)
// pairs: class counts n0 and n1 are preserved in every replicate, matching the
// case-control design.
inline BootstrapIntervals bootstrap_ci(const Eigen::VectorXd& scores, const Eigen::VectorXi& labels,
                                       double cutoff, const CostSpec& cost, const PriorSpec& prior,
                                       int replicates, double level, std::uint64_t seed) {
    if (replicates < 1) throw DataError("bootstrap_ci: need at least 1 replicate");
    if (!(level >= 0.0 && level < 1.0)) throw DataError("bootstrap_ci: level must lie in [0,1)");
    std::vector<int> wrong0, wrong1;  // misclassification indicators per class
    for (int i = 0; i < labels.size(); ++i) {
        const bool hat1 = scores[i] > cutoff;
        if (labels[i] == 0)
            wrong0.push_back(hat1 ? 1 : 0);
        else
            wrong1.push_back(hat1 ? 0 : 1);
    }
    const std::size_t n0 = wrong0.size(), n1 = wrong1.size();
    if (n0 == 0 || n1 == 0) throw DataError("bootstrap_ci: a class is absent from labels");

    std::vector<double> c0s(replicates), c1s(replicates), risks(replicates);
    for (int b = 0; b < replicates; ++b) {
        SplitMix64 g(derive_seed(seed, "bootstrap", b));
        long e0 = 0, e1 = 0;
        for (std::size_t i = 0; i < n0; ++i) e0 += wrong0[uniform_below(g, n0)];
        for (std::size_t i = 0; i < n1; ++i) e1 += wrong1[uniform_below(g, n1)];
        c0s[b] = static_cast<double>(e0) / n0;
        c1s[b] = static_cast<double>(e1) / n1;
        risks[b] = empirical_risk(c0s[b], c1s[b], cost, prior).risk;
    }
    BootstrapIntervals ci;
    ci.replicates = replicates;
    ci.level = level;
    const double qlo = 0.5 * (1.0 - level), qhi = 1.0 - qlo;
    ci.c0 = {detail::percentile(c0s, qlo), detail::percentile(c0s, qhi)};
    ci.c1 = {detail::percentile(c1s, qlo), detail::percentile(c1s, qhi)};
    ci.risk = {detail::percentile(risks, qlo), detail::percentile(risks, qhi)};
    return ci;
}

struct OverlapReport {
    std::vector<int> order;         // observation indices, class 0 first, then class 1
    Eigen::MatrixXi misclassified;  // n x m indicators in display order
    Eigen::VectorXi intensity;      // per-observation misclassification count
};

// Per-observation misclassification indicators across models, observations
// ordered elective-first then emergent (stable within class).
inline OverlapReport misclassification_matrix(const std::vector<Eigen::VectorXi>& model_labels,
                                              const Eigen::VectorXi& labels) {
    const int n = static_cast<int>(labels.size());
    const int m = static_cast<int>(model_labels.size());
    for (int j = 0; j < m; ++j)
        if (model_labels[j].size() != n)
            throw DataError("misclassification_matrix: model " + std::to_string(j) + " has " +
                            std::to_string(model_labels[j].size()) + " labels, expected " +
                            std::to_string(n));
    OverlapReport rep;
    for (int cls = 0; cls <= 1; ++cls)
        for (int i = 0; i < n; ++i)
            if (labels[i] == cls) rep.order.push_back(i);
    rep.misclassified.resize(n, m);
    rep.intensity = Eigen::VectorXi::Zero(n);
    for (int r = 0; r < n; ++r) {
        const int i = rep.order[r];
        for (int j = 0; j < m; ++j) {
            const int wrong = model_labels[j][i] != labels[i] ? 1 : 0;
            rep.misclassified(r, j) = wrong;
            rep.intensity[r] += wrong;
        }
    }
    return rep;
}

struct EvalReport {
    std::string pipeline;
    CvScores cv;
    std::string cutoff_policy;  // tuned | bayes | nested
    double cutoff = 0.0;
    double bayes_reference = 0.0;
    double c0 = 0.0;
    double c1 = 0.0;
    RiskEstimate risk;
    std::vector<CutoffPoint> risk_curve;
    RocCurve roc;
    std::optional<BootstrapIntervals> ci;
};

inline nlohmann::json report_to_json(const EvalReport& r, const Eigen::VectorXi& labels) {
    nlohmann::json j;
    j["pipeline"] = r.pipeline;
    j["cutoff_policy"] = r.cutoff_policy;
    j["cutoff"] = r.cutoff;
    j["bayes_reference"] = r.bayes_reference;
    j["conditional_errors"] = {{"elective", r.c0}, {"emergent", r.c1}};
    j["risk"] = r.risk.risk;
    j["balanced_error"] = r.risk.balanced;
    j["cv"] = {{"seed", r.cv.seed},
               {"folds", r.cv.folds.fold_of},
               {"scores", std::vector<double>(r.cv.scores.begin(), r.cv.scores.end())}};
    Eigen::VectorXi yhat = predicted_labels(r.cv.scores, r.cutoff);
    j["cv"]["labels"] = std::vector<int>(yhat.begin(), yhat.end());
    j["cv"]["truth"] = std::vector<int>(labels.begin(), labels.end());
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& pt : r.risk_curve)
        curve.push_back({{"cutoff", pt.cutoff},
                         {"c0", pt.c0},
                         {"c1", pt.c1},
                         {"risk", pt.risk},
                         {"balanced_error", pt.balanced}});
    j["risk_curve"] = curve;
    nlohmann::json roc = nlohmann::json::array();
    for (const auto& pt : r.roc.points) roc.push_back({{"fpr", pt.fpr}, {"tpr", pt.tpr}});
    j["roc"] = {{"points", roc}, {"auc", r.roc.auc}};
    if (r.ci) {
        j["bootstrap"] = {{"replicates", r.ci->replicates},
                          {"level", r.ci->level},
                          {"c0", {r.ci->c0.lo, r.ci->c0.hi}},
                          {"c1", {r.ci->c1.lo, r.ci->c1.hi}},
                          {"risk", {r.ci->risk.lo, r.ci->risk.hi}}};
    }
    return j;
}

}  // namespace ccrisk
