#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "ccrisk/cv.hpp"
#include "ccrisk/dataset.hpp"
#include "ccrisk/errors.hpp"
#include "ccrisk/eval.hpp"
#include "ccrisk/models.hpp"
#include "ccrisk/optim.hpp"
#include "ccrisk/rng.hpp"

// The six fitting pipelines. Every pipeline standardizes features with the
// training split's own statistics; the PCA variants then rotate onto the top
// components before the logistic stage.

namespace ccrisk {

enum class PipelineKind { sparse, sparse_l, pc, aic, bic, aicpc };

inline std::string pipeline_name(PipelineKind k) {
    switch (k) {
        case PipelineKind::sparse: return "Sparse";
        case PipelineKind::sparse_l: return "SparseL";
        case PipelineKind::pc: return "PC";
        case PipelineKind::aic: return "AIC";
        case PipelineKind::bic: return "BIC";
        case PipelineKind::aicpc: return "AICPC";
    }
    throw DataError("unknown pipeline kind");
}

inline PipelineKind pipeline_from_name(std::string name) {
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (name == "sparse") return PipelineKind::sparse;
    if (name == "sparsel") return PipelineKind::sparse_l;
    if (name == "pc") return PipelineKind::pc;
    if (name == "aic") return PipelineKind::aic;
    if (name == "bic") return PipelineKind::bic;
    if (name == "aicpc") return PipelineKind::aicpc;
    throw DataError("unknown pipeline '" + name +
                    "' (expected one of Sparse, SparseL, PC, AIC, BIC, AICPC)");
}

inline std::vector<PipelineKind> all_pipelines() {
    return {PipelineKind::sparse, PipelineKind::sparse_l, PipelineKind::pc,
            PipelineKind::aic,    PipelineKind::bic,      PipelineKind::aicpc};
}

struct PipelineSpec {
    PipelineKind kind = PipelineKind::sparse;
    int pca_k = 5;             // components kept by the PCA variants
    double lambda_decades = 4.0;
    int lambda_points = 50;
    int lambda_folds = 10;     // inner folds for penalty selection
};

struct LambdaSelection {
    double lambda = 0.0;
    int index = 0;
    std::vector<double> grid;
    std::vector<double> risks;  // tuned-cutoff risk of the pooled inner-CV scores
};

// Penalty selection by inner cross-validation on the raw-scale training data.
// Each inner training split is re-standardized with its own statistics; the
// grid is shared across folds. Risk ties resolve to the larger penalty.
inline LambdaSelection select_lambda_cv(const Study& study, const PipelineSpec& spec,
                                        const CostSpec& cost, const PriorSpec& prior,
                                        std::uint64_t seed) {
    LambdaSelection sel;
    {
        auto [z, sc] = standardize(study);
        sel.grid = lambda_grid(lambda_max(z), spec.lambda_decades, spec.lambda_points);
    }
    const int nl = static_cast<int>(sel.grid.size());
    const int k = std::min(spec.lambda_folds, std::min(study.n0, study.n1));
    if (k < 2) throw DataError("penalty selection needs at least 2 observations per class");
    FoldAssignment folds = make_stratified_folds(study.labels, k, derive_seed(seed, "lambda-cv"));

    Eigen::MatrixXd oof(study.n(), nl);  // out-of-fold scores, one column per lambda
    for (int f = 0; f < k; ++f) {
        std::vector<int> train, valid;
        for (int i = 0; i < study.n(); ++i)
            (folds.fold_of[i] == f ? valid : train).push_back(i);
        Study tr = subset_rows(study, train);
        auto [ztr, sc] = standardize(tr);
        std::vector<LogisticModel> path = fit_l1_path(ztr, sel.grid, sc);
        Eigen::MatrixXd vx(valid.size(), study.p());
        for (std::size_t r = 0; r < valid.size(); ++r) vx.row(r) = study.features.row(valid[r]);
        for (int j = 0; j < nl; ++j) {
            Eigen::VectorXd s = predict_scores(path[j], vx);
            for (std::size_t r = 0; r < valid.size(); ++r) oof(valid[r], j) = s[r];
        }
    }

    sel.risks.resize(nl);
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < nl; ++j) {
        CutoffScan scan = tune_cutoff(oof.col(j), study.labels, cost, prior);
        sel.risks[j] = scan.best.risk;
        if (sel.risks[j] < best) {  // grid descends, so first winner is the largest lambda
            best = sel.risks[j];
            sel.index = j;
        }
    }
    sel.lambda = sel.grid[sel.index];
    return sel;
}

struct FittedPipeline {
    PipelineSpec spec;
    ScalingParams scaling;          // raw features -> standardized
    std::optional<PcaBasis> basis;  // standardized -> component scores
    LogisticModel model;            // expects raw features, or component scores if basis is set
    std::vector<std::string> model_feature_names;
    std::vector<int> selected;      // support in the model's feature space
    std::optional<LambdaSelection> lambda_cv;

    Eigen::VectorXd score(const Eigen::MatrixXd& raw_features) const {
        if (basis) {
            Eigen::MatrixXd pcs = pca_project(*basis, standardize_with(raw_features, scaling));
            return predict_scores(model, pcs);
        }
        return predict_scores(model, raw_features);
    }
};

namespace detail {

inline std::vector<int> nonzero_support(const Eigen::VectorXd& coef) {
    std::vector<int> s;
    for (int j = 0; j < coef.size(); ++j)
        if (coef[j] != 0.0) s.push_back(j);
    return s;
}

}  // namespace detail

inline FittedPipeline fit_pipeline(const Study& study, const PipelineSpec& spec,
                                   const CostSpec& cost, const PriorSpec& prior,
                                   std::uint64_t seed) {
    FittedPipeline fp;
    fp.spec = spec;
    auto [z, sc] = standardize(study);
    fp.scaling = sc;

    switch (spec.kind) {
        case PipelineKind::sparse:
        case PipelineKind::sparse_l: {
            fp.lambda_cv = select_lambda_cv(study, spec, cost, prior, seed);
            fp.model_feature_names = study.feature_names;
            if (spec.kind == PipelineKind::sparse) {
                SparseRefitResult r = sparse_then_refit(z, fp.lambda_cv->lambda, sc);
                fp.model = std::move(r.model);
                fp.selected = std::move(r.support);
            } else {
                fp.model = fit_logistic_l1(z, fp.lambda_cv->lambda, sc);
                fp.selected = detail::nonzero_support(fp.model.coef);
            }
            break;
        }
        case PipelineKind::aic:
        case PipelineKind::bic: {
            SelectionCriterion crit =
                spec.kind == PipelineKind::aic ? SelectionCriterion::aic : SelectionCriterion::bic;
            StepwiseResult r = stepwise_select(z, crit, sc);
            fp.model = std::move(r.model);
            fp.selected = std::move(r.selected);
            fp.model_feature_names = study.feature_names;
            break;
        }
        case PipelineKind::pc:
        case PipelineKind::aicpc: {
            const int k = std::min(spec.pca_k, std::min(study.n() - 1, study.p()));
            fp.basis = pca_fit(z.features, k);
            Eigen::MatrixXd pcs = pca_project(*fp.basis, z.features);
            for (int j = 0; j < k; ++j)
                fp.model_feature_names.push_back("PC" + std::to_string(j + 1));
            Study comp = make_study(pcs, study.labels, fp.model_feature_names);
            if (spec.kind == PipelineKind::pc) {
                fp.model = fit_logistic_mle(comp, ScalingParams::identity(k));
                fp.selected.resize(k);
                std::iota(fp.selected.begin(), fp.selected.end(), 0);
            } else {
                StepwiseResult r =
                    stepwise_select(comp, SelectionCriterion::aic, ScalingParams::identity(k));
                fp.model = std::move(r.model);
                fp.selected = std::move(r.selected);
            }
            break;
        }
    }
    return fp;
}

// Adapter for the generic cross-validation driver.
inline FitterFn make_fitter(const PipelineSpec& spec, const CostSpec& cost,
                             const PriorSpec& prior) {
    return [spec, cost, prior](const Study& train, std::uint64_t seed) -> ScorerFn {
        FittedPipeline fp = fit_pipeline(train, spec, cost, prior, seed);
        return [fp = std::move(fp)](const Eigen::MatrixXd& x) { return fp.score(x); };
    };
}

inline CvScores cv_pipeline_scores(const Study& study, const PipelineSpec& spec,
                                   const CostSpec& cost, const PriorSpec& prior, int k,
                                   std::uint64_t seed, bool stratified = false) {
    return cross_validate(study, make_fitter(spec, cost, prior), k, seed, stratified);
}

struct NestedCvResult {
    CvScores cv;
    Eigen::VectorXi labels;            // out-of-fold predictions at per-fold cutoffs
    std::vector<double> fold_cutoffs;  // one tuned cutoff per outer fold
};

// Nested cutoff selection: each outer fold is labeled with a cutoff tuned on
// an inner cross-validation of its own training split, so the reported errors
// never reuse the scores that chose the cutoff.
inline NestedCvResult nested_cutoff_cv(const Study& study, const PipelineSpec& spec,
                                       const CostSpec& cost, const PriorSpec& prior, int k,
                                       std::uint64_t seed, bool stratified = false) {
    NestedCvResult out;
    out.cv = cv_pipeline_scores(study, spec, cost, prior, k, seed, stratified);
    out.labels.resize(study.n());
    out.fold_cutoffs.resize(out.cv.folds.k);
    for (int f = 0; f < out.cv.folds.k; ++f) {
        std::vector<int> train;
        for (int i = 0; i < study.n(); ++i)
            if (out.cv.folds.fold_of[i] != f) train.push_back(i);
        Study tr = subset_rows(study, train);
        const int inner_k = std::min(spec.lambda_folds, std::min(tr.n0, tr.n1));
        if (inner_k < 2)
            throw DataError("nested cutoff selection: fold " + std::to_string(f) +
                            " leaves fewer than 2 observations of a class for inner CV");
        CvScores inner = cv_pipeline_scores(tr, spec, cost, prior, inner_k,
                                            derive_seed(seed, "nested-cutoff", f), true);
        out.fold_cutoffs[f] = tune_cutoff(inner.scores, tr.labels, cost, prior).best_cutoff;
    }
    for (int i = 0; i < study.n(); ++i)
        out.labels[i] = out.cv.scores[i] > out.fold_cutoffs[out.cv.folds.fold_of[i]] ? 1 : 0;
    return out;
}

// Full-refit bootstrap: every replicate resamples rows within each class,
// reruns the cross-validated pipeline, re-selects the cutoff under the given
// policy, and contributes one (c0, c1, risk) triple.
inline BootstrapIntervals bootstrap_ci_refit(const Study& study, const PipelineSpec& spec,
                                             const CostSpec& cost, const PriorSpec& prior, int k,
                                             const std::string& cutoff_policy, int replicates,
                                             double level, std::uint64_t seed,
                                             bool stratified = false) {
    if (replicates < 1) throw DataError("bootstrap_ci_refit: need at least 1 replicate");
    if (!(level >= 0.0 && level < 1.0))
        throw DataError("bootstrap_ci_refit: level must lie in [0,1)");
    if (cutoff_policy != "tuned" && cutoff_policy != "bayes")
        throw DataError("bootstrap_ci_refit: cutoff policy must be 'tuned' or 'bayes'");
    std::vector<int> idx0, idx1;
    for (int i = 0; i < study.n(); ++i) (study.labels[i] == 0 ? idx0 : idx1).push_back(i);

    std::vector<double> c0s(replicates), c1s(replicates), risks(replicates);
    for (int b = 0; b < replicates; ++b) {
        SplitMix64 g(derive_seed(seed, "bootstrap-refit", b));
        std::vector<int> rows;
        rows.reserve(study.n());
        for (std::size_t i = 0; i < idx0.size(); ++i) rows.push_back(idx0[uniform_below(g, idx0.size())]);
        for (std::size_t i = 0; i < idx1.size(); ++i) rows.push_back(idx1[uniform_below(g, idx1.size())]);
        Study rep = subset_rows(study, rows);
        CvScores cv = cv_pipeline_scores(rep, spec, cost, prior, k,
                                         derive_seed(seed, "bootstrap-refit-cv", b), stratified);
        double cutoff;
        if (cutoff_policy == "tuned") {
            cutoff = tune_cutoff(cv.scores, rep.labels, cost, prior).best_cutoff;
        } else {
            cutoff = bayes_cutoff(cost, shift_factor(rep.sample_prior1(), prior));
        }
        auto [c0, c1] = conditional_errors(cv.scores, rep.labels, cutoff);
        c0s[b] = c0;
        c1s[b] = c1;
        risks[b] = empirical_risk(c0, c1, cost, prior).risk;
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

}  // namespace ccrisk
