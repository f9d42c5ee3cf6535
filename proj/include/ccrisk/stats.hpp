#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "ccrisk/dataset.hpp"
#include "ccrisk/errors.hpp"
#include "ccrisk/optim.hpp"

// Rank-based two-sample screening, kernel density summaries for violin plots,
// and coefficient-magnitude importance.

namespace ccrisk {

struct MwuResult {
    double u1 = 0.0;       // #{pairs class1 > class0} + half the ties (midrank U)
    double u_larger = 0.0; // max(U1, n0*n1 - U1), the statistic the p-value uses
    double z = std::numeric_limits<double>::quiet_NaN();  // approximate path only
    double p = 1.0;        // two-sided
    bool exact = false;
};

namespace detail {

// Midranks of the pooled sample plus the tie-group sizes.
inline std::vector<double> midranks(const std::vector<double>& pooled, std::vector<int>& ties) {
    const int n = static_cast<int>(pooled.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return pooled[a] < pooled[b]; });
    std::vector<double> rank(n);
    int i = 0;
    while (i < n) {
        int j = i;
        while (j < n && pooled[order[j]] == pooled[order[i]]) ++j;
        const double r = 0.5 * (i + 1 + j);  // average of ranks i+1 .. j
        for (int t = i; t < j; ++t) rank[order[t]] = r;
        ties.push_back(j - i);
        i = j;
    }
    return rank;
}

// P(rank-sum statistic >= threshold) numerator: the number of n1-subsets of
// the ranks 1..n whose U exceeds the threshold, via the classic rank-sum
// recursion. Only valid without ties.
inline double exact_tail_count(int n, int n1, double u_threshold) {
    const int smax = n * (n + 1) / 2;
    std::vector<std::vector<double>> f(n1 + 1, std::vector<double>(smax + 1, 0.0));
    f[0][0] = 1.0;
    for (int r = 1; r <= n; ++r)
        for (int j = std::min(n1, r); j >= 1; --j)
            for (int s = smax; s >= r; --s) f[j][s] += f[j - 1][s - r];
    const double shift = n1 * (n1 + 1) / 2.0;  // U = ranksum - shift
    double count = 0.0;
    for (int s = 0; s <= smax; ++s)
        if (s - shift >= u_threshold) count += f[n1][s];
    return count;
}

}  // namespace detail

// Two-sided Mann-Whitney test of class0 vs class1 values. Small untied
// samples (pooled size <= 12) get the exact permutation p-value; otherwise the
// normal approximation with tie and continuity corrections is used.
inline MwuResult mann_whitney(const std::vector<double>& x0, const std::vector<double>& x1) {
    const int n0 = static_cast<int>(x0.size()), n1 = static_cast<int>(x1.size());
    if (n0 == 0 || n1 == 0) throw DataError("mann_whitney: both samples must be non-empty");
    const int n = n0 + n1;
    std::vector<double> pooled = x0;
    pooled.insert(pooled.end(), x1.begin(), x1.end());
    for (double v : pooled)
        if (!std::isfinite(v)) throw DataError("mann_whitney: non-finite value");

    std::vector<int> ties;
    std::vector<double> rank = detail::midranks(pooled, ties);
    double r1 = 0.0;
    for (int i = n0; i < n; ++i) r1 += rank[i];

    MwuResult res;
    res.u1 = r1 - n1 * (n1 + 1) / 2.0;
    res.u_larger = std::max(res.u1, static_cast<double>(n0) * n1 - res.u1);

    const bool untied = ties.size() == static_cast<std::size_t>(n);
    if (n <= 12 && untied) {
        res.exact = true;
        const double count = detail::exact_tail_count(n, n1, res.u_larger);
        double total = 1.0;  // C(n, n1)
        for (int i = 0; i < n1; ++i) total = total * (n - i) / (i + 1);
        res.p = std::min(1.0, 2.0 * count / total);
        return res;
    }

    const double mu = 0.5 * n0 * n1;
    double tie_term = 0.0;
    for (int t : ties) tie_term += static_cast<double>(t) * t * t - t;
    const double var =
        n0 * n1 / 12.0 * ((n + 1) - tie_term / (static_cast<double>(n) * (n - 1)));
    if (var <= 0.0) {  // all pooled values identical
        res.z = 0.0;
        res.p = 1.0;
        return res;
    }
    res.z = (res.u_larger - mu - 0.5) / std::sqrt(var);
    res.p = std::min(1.0, std::erfc(res.z / std::sqrt(2.0)));  // 2 * standard normal tail
    return res;
}

struct ScreenRow {
    int index = 0;
    std::string name;
    MwuResult test;
    double median0 = 0.0;
    double median1 = 0.0;
};

// Interpolated quantile of a sorted sample (the convention where the k-th of n
// order statistics sits at probability (k-1)/(n-1)).
inline double quantile_sorted(const std::vector<double>& v, double q) {
    if (v.empty()) throw DataError("quantile of empty sample");
    const double h = q * (v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] + (h - lo) * (v[lo + 1] - v[lo]);
}

// Per-covariate rank tests, ordered by ascending p-value; equal p-values keep
// the original covariate order.
inline std::vector<ScreenRow> screen_features(const Study& s) {
    std::vector<ScreenRow> rows;
    for (int j = 0; j < s.p(); ++j) {
        std::vector<double> x0, x1;
        for (int i = 0; i < s.n(); ++i)
            (s.labels[i] == 0 ? x0 : x1).push_back(s.features(i, j));
        ScreenRow row;
        row.index = j;
        row.name = s.feature_names[j];
        row.test = mann_whitney(x0, x1);
        std::sort(x0.begin(), x0.end());
        std::sort(x1.begin(), x1.end());
        row.median0 = quantile_sorted(x0, 0.5);
        row.median1 = quantile_sorted(x1, 0.5);
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const ScreenRow& a, const ScreenRow& b) { return a.test.p < b.test.p; });
    return rows;
}

struct ViolinHalf {
    int n = 0;
    double bandwidth = 0.0;
    double q1 = 0.0, q2 = 0.0, q3 = 0.0;
    std::vector<double> grid;
    std::vector<double> density;
};

// Gaussian KDE with the usual rule-of-thumb bandwidth
// 0.9 * min(sd, IQR/1.34) * n^(-1/5), evaluated on [min-3h, max+3h].
inline ViolinHalf kde_summary(std::vector<double> x, int grid_points = 101) {
    if (x.empty()) throw DataError("kde_summary: empty sample");
    if (grid_points < 2) throw DataError("kde_summary: need at least 2 grid points");
    ViolinHalf v;
    v.n = static_cast<int>(x.size());
    std::sort(x.begin(), x.end());
    v.q1 = quantile_sorted(x, 0.25);
    v.q2 = quantile_sorted(x, 0.50);
    v.q3 = quantile_sorted(x, 0.75);

    double mean = 0.0;
    for (double t : x) mean += t;
    mean /= v.n;
    double ss = 0.0;
    for (double t : x) ss += (t - mean) * (t - mean);
    const double sd = v.n > 1 ? std::sqrt(ss / (v.n - 1)) : 0.0;
    const double iqr = v.q3 - v.q1;
    double spread = std::min(sd, iqr / 1.34);
    if (spread == 0.0) spread = std::max(sd, iqr / 1.34);
    if (spread == 0.0) spread = std::max(1.0, std::abs(x.front()));  // constant sample
    v.bandwidth = 0.9 * spread * std::pow(static_cast<double>(v.n), -0.2);

    const double lo = x.front() - 3.0 * v.bandwidth;
    const double hi = x.back() + 3.0 * v.bandwidth;
    const double norm = 1.0 / (v.n * v.bandwidth * std::sqrt(2.0 * std::numbers::pi));
    v.grid.resize(grid_points);
    v.density.resize(grid_points);
    for (int g = 0; g < grid_points; ++g) {
        const double t = lo + (hi - lo) * g / (grid_points - 1);
        v.grid[g] = t;
        double d = 0.0;
        for (double xi : x) {
            const double u = (t - xi) / v.bandwidth;
            d += std::exp(-0.5 * u * u);
        }
        v.density[g] = norm * d;
    }
    return v;
}

struct ViolinPair {
    std::string name;
    ViolinHalf elective;
    ViolinHalf emergent;
};

inline ViolinPair violin_data(const Study& s, int feature, int grid_points = 101) {
    if (feature < 0 || feature >= s.p()) throw DataError("violin_data: feature index out of range");
    std::vector<double> x0, x1;
    for (int i = 0; i < s.n(); ++i)
        (s.labels[i] == 0 ? x0 : x1).push_back(s.features(i, feature));
    return {s.feature_names[feature], kde_summary(x0, grid_points), kde_summary(x1, grid_points)};
}

struct ImportanceRow {
    int index = 0;  // position in the model's feature space
    std::string name;
    double standardized = 0.0;  // coefficient on the standardized scale
    double raw = 0.0;
};

// Nonzero coefficients ordered by |standardized| descending; ties keep the
// model's feature order.
inline std::vector<ImportanceRow> standardized_importance(
    const LogisticModel& m, const std::vector<std::string>& names) {
    std::vector<ImportanceRow> rows;
    for (int j = 0; j < m.coef.size(); ++j) {
        if (m.coef[j] == 0.0) continue;
        rows.push_back({j, names.at(j), m.coef[j], raw_coefficient(m, j)});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const ImportanceRow& a, const ImportanceRow& b) {
        return std::abs(a.standardized) > std::abs(b.standardized);
    });
    return rows;
}

}  // namespace ccrisk
