#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "ccrisk/dataset.hpp"
#include "ccrisk/errors.hpp"
#include "ccrisk/rng.hpp"

// Seeded fold partitions and a generic out-of-fold scoring driver. Fold sizes
// differ by at most one; folds are disjoint and cover every index.

namespace ccrisk {

struct FoldAssignment {
    std::vector<int> fold_of;  // fold index per observation
    int k = 0;

    std::vector<std::vector<int>> members() const {
        std::vector<std::vector<int>> m(k);
        for (std::size_t i = 0; i < fold_of.size(); ++i) m[fold_of[i]].push_back(static_cast<int>(i));
        return m;
    }
};

inline FoldAssignment make_folds(int n, int k, std::uint64_t seed) {
    if (k < 2 || k > n) throw DataError("fold count k=" + std::to_string(k) +
                                        " must satisfy 2 <= k <= n=" + std::to_string(n));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    SplitMix64 g(derive_seed(seed, "folds"));
    shuffle(order, g);
    FoldAssignment f;
    f.k = k;
    f.fold_of.assign(n, -1);
    for (int i = 0; i < n; ++i) f.fold_of[order[i]] = i % k;
    return f;
}

// Shuffles within each class and deals round-robin, so every fold carries a
// near-proportional share of each class.
inline FoldAssignment make_stratified_folds(const Eigen::VectorXi& labels, int k,
                                            std::uint64_t seed) {
    const int n = static_cast<int>(labels.size());
    if (k < 2 || k > n) throw DataError("fold count k=" + std::to_string(k) +
                                        " must satisfy 2 <= k <= n=" + std::to_string(n));
    FoldAssignment f;
    f.k = k;
    f.fold_of.assign(n, -1);
    SplitMix64 g(derive_seed(seed, "stratified-folds"));
    int next = 0;  // continue fold numbering across classes to keep sizes balanced
    for (int cls = 0; cls <= 1; ++cls) {
        std::vector<int> idx;
        for (int i = 0; i < n; ++i)
            if (labels[i] == cls) idx.push_back(i);
        shuffle(idx, g);
        for (int i = 0; i < static_cast<int>(idx.size()); ++i)
            f.fold_of[idx[i]] = (next + i) % k;
        next = (next + static_cast<int>(idx.size())) % k;
    }
    return f;
}

// A fitted scorer maps raw-scale features to sample-measure posteriors.
using ScorerFn = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

// A fitter trains on a study and a derived seed (for any internal selection
// randomness) and returns a scorer.
using FitterFn = std::function<ScorerFn(const Study&, std::uint64_t)>;

inline Study subset_rows(const Study& s, const std::vector<int>& rows) {
    Eigen::MatrixXd x(rows.size(), s.p());
    Eigen::VectorXi y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        x.row(i) = s.features.row(rows[i]);
        y[i] = s.labels[rows[i]];
    }
    return make_study(std::move(x), std::move(y), s.feature_names);
}

// Out-of-fold scores: each fold is scored by the fitter trained on the other
// folds. A single-class training split is an error naming the fold.
inline Eigen::VectorXd cross_fit_scores(const Study& s, const FitterFn& fitter,
                                        const FoldAssignment& folds, std::uint64_t seed) {
    const int n = s.n();
    if (static_cast<int>(folds.fold_of.size()) != n)
        throw DataError("fold assignment covers " + std::to_string(folds.fold_of.size()) +
                        " observations, study has " + std::to_string(n));
    Eigen::VectorXd scores(n);
    const auto members = folds.members();
    for (int f = 0; f < folds.k; ++f) {
        std::vector<int> train;
        train.reserve(n - members[f].size());
        for (int i = 0; i < n; ++i)
            if (folds.fold_of[i] != f) train.push_back(i);
        int pos = 0;
        for (int i : train) pos += s.labels[i];
        if (pos == 0 || pos == static_cast<int>(train.size()))
            throw DataError("training split for fold " + std::to_string(f) +
                            " contains a single class; use stratified folds or another seed");
        ScorerFn scorer = fitter(subset_rows(s, train), derive_seed(seed, "fold", f));
        Eigen::MatrixXd held(members[f].size(), s.p());
        for (std::size_t i = 0; i < members[f].size(); ++i)
            held.row(i) = s.features.row(members[f][i]);
        Eigen::VectorXd out = scorer(held);
        for (std::size_t i = 0; i < members[f].size(); ++i) scores[members[f][i]] = out[i];
    }
    return scores;
}

}  // namespace ccrisk
