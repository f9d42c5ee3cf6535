#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ccrisk/csv.hpp"
#include "ccrisk/errors.hpp"

// Case-control study ingestion and standardization. Group 0 is elective,
// group 1 is emergent; both classes must be present.

namespace ccrisk {

struct Study {
    Eigen::MatrixXd features;  // n x p
    Eigen::VectorXi labels;    // 0/1
    std::vector<std::string> feature_names;
    int n0 = 0;
    int n1 = 0;

    int n() const { return static_cast<int>(features.rows()); }
    int p() const { return static_cast<int>(features.cols()); }
    double sample_prior1() const { return static_cast<double>(n1) / (n0 + n1); }
};

struct CostSpec {
    double l0 = 1.0;   // cost of classifying an elective patient as emergent
    double l1 = 7.72;  // cost of classifying an emergent patient as elective
};

struct PriorSpec {
    double p1 = 84.0 / 733.0;  // target-population probability of emergent
    double p0() const { return 1.0 - p1; }
};

inline void validate_cost(const CostSpec& c) {
    if (!(c.l0 > 0.0) || !(c.l1 > 0.0))
        throw DataError("losses must be positive (l0=" + format_double(c.l0) +
                        ", l1=" + format_double(c.l1) + ")");
}

inline void validate_prior(const PriorSpec& p) {
    if (!(p.p1 > 0.0) || !(p.p1 < 1.0))
        throw DataError("population prior p1 must lie strictly in (0,1), got " + format_double(p.p1));
}

// Per-feature mean and standard deviation of the training data; inverts the
// standardization exactly.
struct ScalingParams {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;

    static ScalingParams identity(int p) {
        ScalingParams s;
        s.mean = Eigen::VectorXd::Zero(p);
        s.stddev = Eigen::VectorXd::Ones(p);
        return s;
    }
};

inline Study make_study(Eigen::MatrixXd features, Eigen::VectorXi labels,
                        std::vector<std::string> names) {
    Study s;
    s.features = std::move(features);
    s.labels = std::move(labels);
    s.feature_names = std::move(names);
    if (s.features.rows() != s.labels.size())
        throw DataError("feature rows and label count differ");
    if (static_cast<std::size_t>(s.features.cols()) != s.feature_names.size())
        throw DataError("feature columns and name count differ");
    std::set<std::string> seen;
    for (const auto& nm : s.feature_names)
        if (!seen.insert(nm).second) throw DataError("duplicate feature name '" + nm + "'");
    for (int i = 0; i < s.labels.size(); ++i) {
        int y = s.labels[i];
        if (y != 0 && y != 1)
            throw DataError("label at row " + std::to_string(i + 1) + " is " + std::to_string(y) +
                            ", expected 0 or 1");
        (y == 0 ? s.n0 : s.n1)++;
    }
    if (s.n0 < 1 || s.n1 < 1) throw DataError("both classes must be present (n0=" +
                                              std::to_string(s.n0) + ", n1=" + std::to_string(s.n1) + ")");
    if (!s.features.allFinite()) {
        for (int i = 0; i < s.features.rows(); ++i)
            for (int j = 0; j < s.features.cols(); ++j)
                if (!std::isfinite(s.features(i, j)))
                    throw DataError("non-finite value in row " + std::to_string(i + 1) +
                                    ", column '" + s.feature_names[j] + "'");
    }
    return s;
}

inline int parse_label_token(std::string tok, const std::string& context) {
    std::transform(tok.begin(), tok.end(), tok.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (tok == "0" || tok == "elective") return 0;
    if (tok == "1" || tok == "emergent") return 1;
    throw DataError("unknown label token '" + tok + "' at " + context +
                    " (expected elective/emergent or 0/1)");
}

// Loads a comma-separated file with a header row. The label column is removed
// from the features; remaining columns keep file order. Constant columns and
// non-numeric or non-finite cells are rejected.
inline Study load_study(const std::string& path, const std::string& label_column = "group") {
    TextTable t = read_delimited(path);
    std::set<std::string> seen;
    for (const auto& c : t.columns) {
        if (c.empty()) throw DataError(path + ": empty column name in header");
        if (!seen.insert(c).second) throw DataError(path + ": duplicate column name '" + c + "'");
    }
    int label_idx = -1;
    for (std::size_t j = 0; j < t.columns.size(); ++j)
        if (t.columns[j] == label_column) label_idx = static_cast<int>(j);
    if (label_idx < 0) throw DataError(path + ": label column '" + label_column + "' not found");
    if (t.rows.empty()) throw DataError(path + ": no data rows");

    const int n = static_cast<int>(t.rows.size());
    const int p = static_cast<int>(t.columns.size()) - 1;
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXi y(n);
    std::vector<std::string> names;
    names.reserve(p);
    for (std::size_t j = 0; j < t.columns.size(); ++j)
        if (static_cast<int>(j) != label_idx) names.push_back(t.columns[j]);

    for (int i = 0; i < n; ++i) {
        int jj = 0;
        for (std::size_t j = 0; j < t.columns.size(); ++j) {
            const std::string context =
                path + ", row " + std::to_string(i + 2) + ", column '" + t.columns[j] + "'";
            if (static_cast<int>(j) == label_idx) {
                y[i] = parse_label_token(t.rows[i][j], context);
            } else {
                double v = parse_double(t.rows[i][j], context);
                if (!std::isfinite(v)) throw DataError("non-finite value at " + context);
                x(i, jj++) = v;
            }
        }
    }

    for (int j = 0; j < p; ++j) {
        if ((x.col(j).array() == x(0, j)).all())
            throw DataError(path + ": column '" + names[j] + "' is constant");
    }
    return make_study(std::move(x), std::move(y), std::move(names));
}

// Writes a study in the load_study format, label tokens "elective"/"emergent".
// Values use the shortest representation that round-trips through double.
inline void save_study(const Study& s, const std::string& path,
                       const std::string& label_column = "group") {
    std::vector<std::string> cols = s.feature_names;
    cols.push_back(label_column);
    std::vector<std::vector<std::string>> rows;
    rows.reserve(s.n());
    for (int i = 0; i < s.n(); ++i) {
        std::vector<std::string> r;
        r.reserve(s.p() + 1);
        for (int j = 0; j < s.p(); ++j) r.push_back(format_double(s.features(i, j)));
        r.push_back(s.labels[i] == 1 ? "emergent" : "elective");
        rows.push_back(std::move(r));
    }
    write_delimited(path, cols, rows);
}

enum class CovariateGroup { one_dimensional, two_dimensional, three_dimensional, wall_thickness };

struct CovariateInfo {
    std::string name;
    std::string description;
    CovariateGroup group;
};

// The 28 canonical geometric covariates: 12 one-dimensional, 6 two-dimensional,
// 6 three-dimensional and 4 wall-thickness summaries.
inline const std::vector<CovariateInfo>& feature_catalog() {
    static const std::vector<CovariateInfo> catalog = {
        {"Dmax", "Maximum diameter", CovariateGroup::one_dimensional},
        {"Dneckp", "Distal neck diameter", CovariateGroup::one_dimensional},
        {"Dneckd", "Proximal neck diameter", CovariateGroup::one_dimensional},
        {"H", "Height of AAA", CovariateGroup::one_dimensional},
        {"L", "Length of AAA centerline", CovariateGroup::one_dimensional},
        {"Hneck", "Height of neck", CovariateGroup::one_dimensional},
        {"Lneck", "Length of neck centerline", CovariateGroup::one_dimensional},
        {"Hb", "Bulge Height", CovariateGroup::one_dimensional},
        {"dc", "Centroid distance of Dmax", CovariateGroup::one_dimensional},
        {"maxCompact", "Maximum Compactness", CovariateGroup::one_dimensional},
        {"minCompact", "Minimum Compactness", CovariateGroup::one_dimensional},
        {"aveCompact", "Average Compactness", CovariateGroup::one_dimensional},
        {"DHr", "Diameter-Height ratio", CovariateGroup::two_dimensional},
        {"DDr", "Diameter-Diameter ratio", CovariateGroup::two_dimensional},
        {"Hr", "Height ratio", CovariateGroup::two_dimensional},
        {"BL", "Bulge location", CovariateGroup::two_dimensional},
        {"beta", "Asymmetry", CovariateGroup::two_dimensional},
        {"T", "Tortuosity", CovariateGroup::two_dimensional},
        {"Vcm3", "AAA Volume", CovariateGroup::three_dimensional},
        {"Scm2", "AAA Surface Area", CovariateGroup::three_dimensional},
        {"VILT", "Intraluminal thrombus volume", CovariateGroup::three_dimensional},
        {"gamma", "AAA sac to ILT volume ratio", CovariateGroup::three_dimensional},
        {"IPR", "Isoperimetric Ratio", CovariateGroup::three_dimensional},
        {"NFI", "Non-fusiform Index", CovariateGroup::three_dimensional},
        {"twmax", "Maximum wall thickness", CovariateGroup::wall_thickness},
        {"twmin", "Minimum wall thickness", CovariateGroup::wall_thickness},
        {"avetw", "Average wall thickness", CovariateGroup::wall_thickness},
        {"Dmaxtw", "Maximum wall thickness at Dmax", CovariateGroup::wall_thickness},
    };
    return catalog;
}

// Sample standard deviation, denominator n-1.
inline ScalingParams scaling_of(const Eigen::MatrixXd& x,
                                const std::vector<std::string>& names) {
    const int n = static_cast<int>(x.rows());
    if (n < 2) throw DataError("need at least 2 rows to standardize");
    ScalingParams s;
    s.mean = x.colwise().mean();
    s.stddev.resize(x.cols());
    for (int j = 0; j < x.cols(); ++j) {
        double ss = (x.col(j).array() - s.mean[j]).square().sum();
        double sd = std::sqrt(ss / (n - 1));
        if (!(sd > 0.0)) {
            const std::string nm = static_cast<std::size_t>(j) < names.size()
                                       ? names[j]
                                       : ("#" + std::to_string(j + 1));
            throw DataError("column '" + nm + "' is constant; cannot standardize");
        }
        s.stddev[j] = sd;
    }
    return s;
}

inline Eigen::MatrixXd standardize_with(const Eigen::MatrixXd& x, const ScalingParams& s) {
    return (x.rowwise() - s.mean.transpose()).array().rowwise() / s.stddev.transpose().array();
}

inline Eigen::MatrixXd unstandardize_with(const Eigen::MatrixXd& z, const ScalingParams& s) {
    return (z.array().rowwise() * s.stddev.transpose().array()).matrix().rowwise() +
           s.mean.transpose();
}

inline std::pair<Study, ScalingParams> standardize(const Study& s) {
    ScalingParams sc = scaling_of(s.features, s.feature_names);
    Study out = s;
    out.features = standardize_with(s.features, sc);
    return {std::move(out), std::move(sc)};
}

// Pooled prevalence from per-stratum (elective, emergent) count pairs.
inline PriorSpec estimate_priors(const std::vector<std::pair<long, long>>& counts) {
    long total = 0, emergent = 0;
    for (const auto& [c0, c1] : counts) {
        if (c0 < 0 || c1 < 0) throw DataError("negative stratum count");
        total += c0 + c1;
        emergent += c1;
    }
    if (total <= 0) throw DataError("all stratum counts are zero");
    PriorSpec p;
    p.p1 = static_cast<double>(emergent) / static_cast<double>(total);
    return p;
}

}  // namespace ccrisk
