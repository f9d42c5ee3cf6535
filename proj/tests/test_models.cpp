#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <vector>

#include "ccrisk/models.hpp"
#include "ccrisk/rng.hpp"
#include "support/util.hpp"

using namespace ccrisk;

namespace {

Eigen::MatrixXd random_matrix(int n, int p, std::uint64_t seed) {
    SplitMix64 g(seed);
    Eigen::MatrixXd x(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) x(i, j) = gaussian(g);
    return x;
}

// Max log-likelihood of the intercept-only logistic model, in closed form.
double null_loglik(const Eigen::VectorXi& y) {
    const double n = static_cast<double>(y.size());
    const double n1 = y.cast<double>().sum();
    const double n0 = n - n1;
    return n1 * std::log(n1 / n) + n0 * std::log(n0 / n);
}

double wcss_of_split(const Eigen::MatrixXd& x, const std::vector<int>& side) {
    Eigen::VectorXd m0 = Eigen::VectorXd::Zero(x.cols());
    Eigen::VectorXd m1 = Eigen::VectorXd::Zero(x.cols());
    int c0 = 0, c1 = 0;
    for (int i = 0; i < x.rows(); ++i) {
        if (side[i] == 0) {
            m0 += x.row(i);
            ++c0;
        } else {
            m1 += x.row(i);
            ++c1;
        }
    }
    m0 /= c0;
    m1 /= c1;
    double total = 0.0;
    for (int i = 0; i < x.rows(); ++i)
        total += (x.row(i).transpose() - (side[i] == 0 ? m0 : m1)).squaredNorm();
    return total;
}

}  // namespace

TEST_CASE("pca matches an eigendecomposition of the covariance") {
    const int n = 30, p = 5, k = 3;
    Eigen::MatrixXd x = random_matrix(n, p, 71);
    PcaBasis basis = pca_fit(x, k);

    Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    Eigen::MatrixXd cov = centered.transpose() * centered / (n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    // eigensolver returns ascending order; reverse for the top k
    for (int j = 0; j < k; ++j) {
        const double ev = es.eigenvalues()[p - 1 - j];
        REQUIRE(std::abs(basis.explained_variance[j] - ev) < 1e-9);
        Eigen::VectorXd v = es.eigenvectors().col(p - 1 - j);
        int imax;
        v.cwiseAbs().maxCoeff(&imax);
        if (v[imax] < 0.0) v = -v;
        REQUIRE((basis.loadings.col(j) - v).cwiseAbs().maxCoeff() < 1e-9);
    }
    for (int j = 1; j < k; ++j)
        REQUIRE(basis.explained_variance[j] <= basis.explained_variance[j - 1]);
}

TEST_CASE("pca loadings are orthonormal and projections are centered") {
    Eigen::MatrixXd x = random_matrix(25, 4, 5);
    PcaBasis basis = pca_fit(x, 3);
    Eigen::MatrixXd gram = basis.loadings.transpose() * basis.loadings;
    REQUIRE((gram - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::MatrixXd scores = pca_project(basis, x);
    REQUIRE(scores.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("full-rank pca reconstructs the data exactly") {
    Eigen::MatrixXd x = random_matrix(20, 4, 9);
    PcaBasis basis = pca_fit(x, 4);
    Eigen::MatrixXd back = pca_reconstruct(basis, pca_project(basis, x));
    REQUIRE((back - x).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("pca rejects out-of-range component counts and constant data") {
    Eigen::MatrixXd x = random_matrix(10, 3, 2);
    REQUIRE_THROWS_AS(pca_fit(x, 0), DataError);
    REQUIRE_THROWS_AS(pca_fit(x, 4), DataError);
    Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(10, 3, 2.5);
    REQUIRE_THROWS_AS(pca_fit(flat, 1), DataError);
}

TEST_CASE("selection score arithmetic") {
    REQUIRE(selection_score(-10.0, 3, 100, SelectionCriterion::aic) == 26.0);
    REQUIRE(std::abs(selection_score(-10.0, 3, 100, SelectionCriterion::bic) -
                     (20.0 + 3.0 * std::log(100.0))) < 1e-12);
}

TEST_CASE("stepwise matches exhaustive best-subset search on a clean instance") {
    Study s = testsupport::test_study(30, 30, 4, 21, 1.6);
    auto [z, sc] = standardize(s);

    for (SelectionCriterion crit : {SelectionCriterion::aic, SelectionCriterion::bic}) {
        StepwiseResult step = stepwise_select(z, crit, sc);

        double best_score = selection_score(null_loglik(z.labels), 1, z.n(), crit);
        std::vector<int> best_set;
        for (int mask = 1; mask < 16; ++mask) {
            std::vector<int> cols;
            for (int j = 0; j < 4; ++j)
                if (mask & (1 << j)) cols.push_back(j);
            Eigen::MatrixXd sub(z.n(), cols.size());
            std::vector<std::string> names;
            for (std::size_t j = 0; j < cols.size(); ++j) {
                sub.col(j) = z.features.col(cols[j]);
                names.push_back(z.feature_names[cols[j]]);
            }
            LogisticModel m = fit_logistic_mle(make_study(sub, z.labels, names));
            double score = selection_score(m.meta.objective_trace.back(),
                                           static_cast<int>(cols.size()) + 1, z.n(), crit);
            if (score < best_score) {
                best_score = score;
                best_set = cols;
            }
        }
        REQUIRE(step.selected == best_set);
        REQUIRE(std::abs(step.criterion - best_score) < 1e-8);
    }
}

TEST_CASE("stepwise on pure noise keeps the intercept-only model under bic") {
    SplitMix64 g(404);
    Eigen::MatrixXd x = random_matrix(80, 3, 77);
    Eigen::VectorXi y(80);
    for (int i = 0; i < 80; ++i) y[i] = i < 40 ? 0 : 1;  // independent of x
    Study s = make_study(x, y, {"a", "b", "c"});
    auto [z, sc] = standardize(s);
    StepwiseResult step = stepwise_select(z, SelectionCriterion::bic, sc);
    REQUIRE(step.selected.empty());
    REQUIRE(step.model.coef.cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(std::abs(step.criterion -
                     selection_score(null_loglik(y), 1, 80, SelectionCriterion::bic)) < 1e-6);
}

TEST_CASE("stepwise result embeds subset coefficients at full width") {
    Study s = testsupport::test_study(25, 25, 3, 45, 1.2);
    auto [z, sc] = standardize(s);
    StepwiseResult step = stepwise_select(z, SelectionCriterion::aic, sc);
    REQUIRE_FALSE(step.selected.empty());
    REQUIRE(step.model.coef.size() == 3);
    for (int j = 0; j < 3; ++j) {
        const bool in = std::find(step.selected.begin(), step.selected.end(), j) !=
                        step.selected.end();
        if (!in) REQUIRE(step.model.coef[j] == 0.0);
    }
}

TEST_CASE("sparse refit solves the mle restricted to the l1 support") {
    Study s = testsupport::test_study(40, 40, 4, 11, 1.2);
    auto [z, sc] = standardize(s);
    const double lambda = 0.3 * lambda_max(z);
    SparseRefitResult r = sparse_then_refit(z, lambda, sc);
    REQUIRE(r.lambda == lambda);
    REQUIRE(r.model.meta.lambda == lambda);

    LogisticModel l1 = fit_logistic_l1(z, lambda, sc);
    std::vector<int> support;
    for (int j = 0; j < 4; ++j)
        if (l1.coef[j] != 0.0) support.push_back(j);
    REQUIRE(r.support == support);
    REQUIRE_FALSE(support.empty());

    Eigen::MatrixXd sub(z.n(), support.size());
    std::vector<std::string> names;
    for (std::size_t j = 0; j < support.size(); ++j) {
        sub.col(j) = z.features.col(support[j]);
        names.push_back(z.feature_names[support[j]]);
    }
    LogisticModel direct = fit_logistic_mle(make_study(sub, z.labels, names));
    REQUIRE(std::abs(r.model.intercept - direct.intercept) < 1e-8);
    for (std::size_t j = 0; j < support.size(); ++j)
        REQUIRE(std::abs(r.model.coef[support[j]] - direct.coef[j]) < 1e-8);
    for (int j = 0; j < 4; ++j)
        if (std::find(support.begin(), support.end(), j) == support.end())
            REQUIRE(r.model.coef[j] == 0.0);
}

TEST_CASE("sparse refit with an empty support is the intercept-only model") {
    Study s = testsupport::test_study(30, 30, 3, 8);
    auto [z, sc] = standardize(s);
    SparseRefitResult r = sparse_then_refit(z, 2.0 * lambda_max(z), sc);
    REQUIRE(r.support.empty());
    REQUIRE(r.model.coef.cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(std::abs(r.model.intercept - logit(0.5)) < 1e-7);
}

TEST_CASE("kmeans2 finds the best of all bipartitions on a small instance") {
    SplitMix64 g(99);
    Eigen::MatrixXd x(12, 2);
    for (int i = 0; i < 12; ++i) {
        const double cx = i < 7 ? -2.0 : 2.0;
        x(i, 0) = cx + 0.5 * gaussian(g);
        x(i, 1) = 0.5 * gaussian(g);
    }
    Kmeans2Result km = kmeans2(x, 31);

    double best = std::numeric_limits<double>::infinity();
    std::vector<int> best_side;
    for (int mask = 1; mask < (1 << 12) - 1; ++mask) {
        std::vector<int> side(12);
        for (int i = 0; i < 12; ++i) side[i] = (mask >> i) & 1;
        const double w = wcss_of_split(x, side);
        if (w < best) {
            best = w;
            best_side = side;
        }
    }
    REQUIRE(std::abs(km.wcss - best) < 1e-9);
    // assignment equals the optimal split up to a label swap
    bool same = true, flipped = true;
    for (int i = 0; i < 12; ++i) {
        same = same && km.assignment[i] == best_side[i];
        flipped = flipped && km.assignment[i] == 1 - best_side[i];
    }
    REQUIRE((same || flipped));
}

TEST_CASE("kmeans2 is deterministic and validates input") {
    Eigen::MatrixXd x = random_matrix(20, 3, 55);
    Kmeans2Result a = kmeans2(x, 7);
    Kmeans2Result b = kmeans2(x, 7);
    REQUIRE(a.assignment == b.assignment);
    REQUIRE(a.wcss == b.wcss);
    Kmeans2Result c = kmeans2(x, 8);
    REQUIRE(c.wcss <= a.wcss * (1.0 + 1e-9) + 1e-9);  // both runs should reach a good optimum
    REQUIRE_THROWS_AS(kmeans2(Eigen::MatrixXd::Zero(1, 2), 1), DataError);
}

TEST_CASE("cluster alignment flips ids to match the labels") {
    Eigen::VectorXi labels(4), assign(4);
    labels << 0, 0, 1, 1;
    assign << 1, 1, 0, 1;  // mostly anti-aligned
    Eigen::VectorXi flipped = align_clusters_to_labels(assign, labels);
    REQUIRE(flipped[0] == 0);
    REQUIRE(flipped[1] == 0);
    REQUIRE(flipped[2] == 1);
    REQUIRE(flipped[3] == 0);
    // already aligned input is returned unchanged
    Eigen::VectorXi ok(4);
    ok << 0, 1, 1, 1;
    REQUIRE(align_clusters_to_labels(ok, labels) == ok);
}

TEST_CASE("brier score hand computation") {
    Eigen::VectorXi y(2);
    y << 1, 0;
    Eigen::VectorXd s(2);
    s << 0.8, 0.3;
    BrierScore b = brier_score(y, s);
    REQUIRE(std::abs(b.total - 0.13) < 1e-15);
    REQUIRE(std::abs(b.normalized - 0.065) < 1e-15);
    Eigen::VectorXd wrong(3);
    REQUIRE_THROWS_AS(brier_score(y, wrong), DataError);
}
