// Release acceptance gate. Each check prints exactly one PASS/FAIL line and
// the process exits nonzero if any check fails. Checks compare the library
// against frozen constants and small independent oracles (full enumeration,
// a derivative-free optimizer, closed-form arithmetic).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <iostream>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ccrisk/ccrisk.hpp"
#include "support/mwu_enum.hpp"
#include "support/mwu_fixtures.hpp"
#include "support/nelder_mead.hpp"
#include "support/util.hpp"

using namespace ccrisk;

namespace {

int failures = 0;

void check(const std::string& name, const std::function<bool()>& body) {
    bool ok = false;
    std::string note;
    try {
        ok = body();
    } catch (const std::exception& e) {
        note = std::string("  (exception: ") + e.what() + ")";
    }
    std::cout << (ok ? "PASS" : "FAIL") << "  " << name << note << std::endl;
    if (!ok) ++failures;
}

// Max log-likelihood of the intercept-only logistic model, in closed form.
double null_loglik(const Eigen::VectorXi& y) {
    const double n = static_cast<double>(y.size());
    const double n1 = y.cast<double>().sum();
    const double n0 = n - n1;
    return n1 * std::log(n1 / n) + n0 * std::log(n0 / n);
}

bool bayes_cutoff_constant() {
    // 44 emergent among 144 sampled, default losses and population prior.
    const ShiftContext ctx = make_shift_context(44.0 / 144.0, PriorSpec{}, CostSpec{});
    return std::abs(ctx.cutoff - 0.306) <= 5e-4 &&
           std::abs(ctx.cutoff - 0.3057256648537536) < 1e-12 &&  // frozen offline value
           std::abs(ctx.a - 0.2941588457767194) < 1e-12;
}

bool cutoff_identity() {
    // t = r/(1+r) with r = l0/(l1*a), across a parameter sweep.
    for (double l0 : {0.5, 1.0, 2.0})
        for (double l1 : {1.0, 7.72, 10.0})
            for (double pi1 : {0.1, 44.0 / 144.0, 0.5, 0.7})
                for (double p1 : {0.05, 84.0 / 733.0, 0.3}) {
                    const CostSpec cost{l0, l1};
                    const PriorSpec prior{p1};
                    const double a = shift_factor(pi1, prior);
                    const double t = bayes_cutoff(cost, a);
                    const double r = l0 / (l1 * a);
                    if (std::abs(t - r / (1.0 + r)) > 1e-9) return false;
                }
    // Decision agreement at the default constants: thresholding the raw
    // posterior and weighing the corrected posterior by the losses must be
    // the same rule on at least 99.9% of a fine grid.
    const CostSpec cost{};
    const PriorSpec prior{};
    const double a = shift_factor(44.0 / 144.0, prior);
    const double t = bayes_cutoff(cost, a);
    const int n = 100000;
    int mismatches = 0;
    for (int i = 1; i < n; ++i) {
        const double q = static_cast<double>(i) / n;
        const double qc = correct_posterior(q, a);
        const bool by_threshold = q > t;
        const bool by_costs = cost.l1 * qc > cost.l0 * (1.0 - qc);
        if (by_threshold != by_costs) ++mismatches;
    }
    return mismatches * 1000 <= n;
}

bool summary_table_arithmetic() {
    // Frozen cross-validated operating points for ten classifiers on a
    // 100-vs-44 cohort: elective error, emergent error, reported average.
    const double rows[][3] = {{0.070, 0.364, 0.217}, {0.110, 0.386, 0.248},
                              {0.200, 0.273, 0.236}, {0.200, 0.273, 0.236},
                              {0.180, 0.295, 0.238}, {0.130, 0.318, 0.224},
                              {0.060, 0.409, 0.235}, {0.220, 0.273, 0.246},
                              {0.180, 0.295, 0.238}, {0.090, 0.410, 0.250}};
    const int n0 = 100, n1 = 44;
    for (const auto& row : rows) {
        const double c0 = row[0], c1 = row[1], avg = row[2];
        if (std::abs(empirical_risk(c0, c1, CostSpec{}, PriorSpec{}).balanced - avg) > 0.0015)
            return false;
        // Realize the nearest integer error counts and push them through the
        // library's conditional-error computation.
        const long e0 = std::lround(c0 * n0);
        const long e1 = std::lround(c1 * n1);
        if (std::abs(e0 / static_cast<double>(n0) - c0) > 1e-3) return false;
        if (std::abs(e1 / static_cast<double>(n1) - c1) > 1e-3) return false;
        Eigen::VectorXd scores(n0 + n1);
        Eigen::VectorXi labels(n0 + n1);
        for (int i = 0; i < n0; ++i) {
            labels[i] = 0;
            scores[i] = i < e0 ? 0.9 : 0.1;  // wrong iff the score clears the cutoff
        }
        for (int i = 0; i < n1; ++i) {
            labels[n0 + i] = 1;
            scores[n0 + i] = i < e1 ? 0.1 : 0.9;
        }
        const auto [g0, g1] = conditional_errors(scores, labels, 0.5);
        if (g0 != e0 / static_cast<double>(n0)) return false;
        if (g1 != e1 / static_cast<double>(n1)) return false;
        if (std::abs(empirical_risk(g0, g1, CostSpec{}, PriorSpec{}).balanced - avg) > 0.0015)
            return false;
    }
    return true;
}

bool prevalence_arithmetic() {
    const PriorSpec pooled =
        estimate_priors({{131, 20}, {138, 15}, {141, 16}, {114, 18}, {125, 15}});
    return pooled.p1 == 84.0 / 733.0 && std::abs(pooled.p1 - 0.1146) <= 5e-4 &&
           std::abs(pooled.p1 - 0.1145975443383356) < 1e-12 &&
           std::abs(44.0 / 144.0 - 0.3056) <= 5e-4;
}

bool shift_correction_oracle() {
    // Known population at roughly 10% prevalence; a balanced case-control fit
    // must be badly biased upward, and the prior correction must repair it.
    PopulationSpec pop;
    pop.intercept = -2.651;
    pop.coef = Eigen::VectorXd(3);
    pop.coef << 0.8, -0.6, 0.4;
    int good = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        try {
            const double p1 = realized_p1(pop, 100000, derive_seed(seed, "population"));
            CaseControlDraw draw = draw_case_control(pop, 500, 500, derive_seed(seed, "sample"));
            auto [z, sc] = standardize(draw.study);
            LogisticModel model = fit_logistic_mle(z, sc);
            const PriorSpec prior{p1};
            const double a = shift_factor(draw.study.sample_prior1(), prior);
            Study eval = generate_population(pop, 2000, derive_seed(seed, "eval"));
            Eigen::VectorXd oracle = oracle_posteriors(pop, eval.features);
            Eigen::VectorXd raw = predict_scores(model, eval.features);
            double mae_corrected = 0.0, bias_raw = 0.0;
            for (int i = 0; i < eval.n(); ++i) {
                mae_corrected += std::abs(correct_posterior(raw[i], a) - oracle[i]);
                bias_raw += raw[i] - oracle[i];
            }
            mae_corrected /= eval.n();
            bias_raw /= eval.n();
            if (mae_corrected < 0.03 && bias_raw > 0.10) ++good;
        } catch (const std::exception&) {
            // a failed replicate counts against the tally
        }
    }
    return good >= 9;
}

bool optimizer_oracles() {
    // (a) The full-likelihood optimum agrees with a derivative-free
    // minimizer to 1e-4 per coordinate on twenty instances.
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Study s = testsupport::test_study(30, 30, 3, 500 + seed, 1.0);
        auto [z, sc] = standardize(s);
        LogisticModel m = fit_logistic_mle(z, sc);
        auto neg_ll = [&z](const Eigen::VectorXd& b) {
            double ll = 0.0;
            for (int i = 0; i < z.n(); ++i) {
                double eta = b[0];
                for (int j = 0; j < z.p(); ++j) eta += b[j + 1] * z.features(i, j);
                ll += z.labels[i] * eta - softplus(eta);
            }
            return -ll;
        };
        Eigen::VectorXd ref = testsupport::minimize(neg_ll, Eigen::VectorXd::Zero(z.p() + 1));
        if (std::abs(m.intercept - ref[0]) > 1e-4) return false;
        for (int j = 0; j < z.p(); ++j)
            if (std::abs(m.coef[j] - ref[j + 1]) > 1e-4) return false;
    }
    // (b) Every point of a 50-step penalty path satisfies its stationarity
    // conditions to 1e-6.
    {
        Study s = testsupport::test_study(40, 40, 4, 808, 1.2);
        auto [z, sc] = standardize(s);
        const std::vector<double> grid = lambda_grid(lambda_max(z), 4.0, 50);
        const std::vector<LogisticModel> path = fit_l1_path(z, grid, sc);
        if (path.size() != 50) return false;
        for (const LogisticModel& m : path)
            if (!(m.meta.kkt_residual < 1e-6)) return false;
    }
    // (c) The analytic gradient agrees with central differences to 1e-6
    // relative accuracy.
    {
        Study s = testsupport::test_study(25, 25, 4, 12321, 1.0);
        auto [z, sc] = standardize(s);
        LogisticModel m = fit_logistic_mle(z, sc);
        m.intercept += 0.3;
        m.coef[1] -= 0.4;
        const Eigen::VectorXd g = log_likelihood_gradient(m, s);
        const double h = 1e-6;
        for (int j = 0; j <= s.p(); ++j) {
            LogisticModel up = m, dn = m;
            if (j == 0) {
                up.intercept += h;
                dn.intercept -= h;
            } else {
                up.coef[j - 1] += h;
                dn.coef[j - 1] -= h;
            }
            const double fd = (log_likelihood(up, s) - log_likelihood(dn, s)) / (2 * h);
            if (std::abs(fd - g[j]) > 1e-6 * std::max(1.0, std::abs(g[j]))) return false;
        }
    }
    return true;
}

bool mann_whitney_exactness() {
    // Exact path vs full enumeration on every untied split of up to twelve
    // pooled observations.
    SplitMix64 g(424242);
    for (int n0 = 1; n0 <= 11; ++n0)
        for (int n1 = 1; n0 + n1 <= 12; ++n1)
            for (int rep = 0; rep < 2; ++rep) {
                const int n = n0 + n1;
                std::vector<double> pool(n);
                for (int i = 0; i < n; ++i) pool[i] = i + 1;
                shuffle(pool, g);
                const std::vector<double> x0(pool.begin(), pool.begin() + n0);
                const std::vector<double> x1(pool.begin() + n0, pool.end());
                MwuResult r = mann_whitney(x0, x1);
                if (!r.exact) return false;
                if (r.p != testsupport::mwu_enum_p(x0, x1)) return false;
            }
    // Normal approximation against frozen 20-vs-20 references.
    for (const testsupport::MwuFixture& f : testsupport::mwu_fixtures()) {
        MwuResult r = mann_whitney(f.x0, f.x1);
        if (r.exact) return false;
        if (r.u_larger != f.u_larger) return false;
        if (std::abs(r.p - f.p) > 0.01) return false;
    }
    return true;
}

bool roc_u_identity() {
    SplitMix64 g(313373);
    for (int rep = 0; rep < 100; ++rep) {
        const int n0 = 3 + static_cast<int>(uniform_below(g, 18));
        const int n1 = 3 + static_cast<int>(uniform_below(g, 18));
        const int n = n0 + n1;
        Eigen::VectorXd scores(n);
        Eigen::VectorXi labels(n);
        std::vector<double> x0, x1;
        const bool tied = rep % 2 == 0;
        for (int i = 0; i < n; ++i) {
            double v = uniform01(g);
            if (tied) v = (1.0 + std::floor(v * 8.0)) / 10.0;  // heavy ties, still in (0,1)
            labels[i] = i < n0 ? 0 : 1;
            scores[i] = v;
            (i < n0 ? x0 : x1).push_back(v);
        }
        RocCurve roc = roc_curve(scores, labels);
        MwuResult r = mann_whitney(x0, x1);
        if (std::abs(roc.auc * n0 * n1 - r.u1) > 1e-12) return false;
    }
    return true;
}

bool cv_structure() {
    // 144 observations fall into 12 folds of exactly 12.
    FoldAssignment folds = make_folds(144, 12, 99);
    std::vector<int> count(12, 0);
    for (int i = 0; i < 144; ++i) {
        const int f = folds.fold_of[i];
        if (f < 0 || f >= 12) return false;
        ++count[f];
    }
    for (int c : count)
        if (c != 12) return false;

    // Every score comes from a model that never saw its own row: feature 0 is
    // a unique id, and the scorer answers 1 iff the id was in its training
    // split.
    const int n = 24;
    Eigen::MatrixXd x(n, 1);
    Eigen::VectorXi y(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = i;
        y[i] = i % 2;
    }
    Study ids = make_study(x, y, {"id"});
    FitterFn fitter = [](const Study& train, std::uint64_t) -> ScorerFn {
        std::set<double> seen(train.features.col(0).begin(), train.features.col(0).end());
        return [seen](const Eigen::MatrixXd& q) {
            Eigen::VectorXd out(q.rows());
            for (int r = 0; r < q.rows(); ++r) out[r] = seen.count(q(r, 0)) ? 1.0 : 0.0;
            return out;
        };
    };
    for (int k : {4, 12}) {
        CvScores cv = cross_validate(ids, fitter, k, 77);
        if (cv.scores.cwiseAbs().maxCoeff() != 0.0) return false;
    }

    // Identical seeds give byte-identical serialized reports.
    Study s = testsupport::test_study(30, 18, 3, 6);
    const CostSpec cost{1.0, 7.72};
    const PriorSpec prior{84.0 / 733.0};
    FitterFn mle = [](const Study& train, std::uint64_t) -> ScorerFn {
        auto [z, sc] = standardize(train);
        LogisticModel m = fit_logistic_mle(z, sc);
        return [m](const Eigen::MatrixXd& q) { return predict_scores(m, q); };
    };
    auto build = [&]() {
        CvScores cv = cross_validate(s, mle, 6, 33);
        CutoffScan scan = tune_cutoff(cv.scores, s.labels, cost, prior);
        EvalReport r;
        r.pipeline = "demo";
        r.cv = cv;
        r.cutoff_policy = "tuned";
        r.cutoff = scan.best_cutoff;
        r.bayes_reference = scan.bayes_reference;
        r.c0 = scan.best.c0;
        r.c1 = scan.best.c1;
        r.risk = empirical_risk(scan.best.c0, scan.best.c1, cost, prior);
        r.risk_curve = scan.curve;
        r.roc = roc_curve(cv.scores, s.labels);
        r.ci = bootstrap_ci(cv.scores, s.labels, r.cutoff, cost, prior, 200, 0.9, 13);
        return report_to_json(r, s.labels).dump(2);
    };
    return build() == build();
}

bool small_instance_oracles() {
    // (a) The tuned cutoff realizes the global minimum over all achievable
    // rules, found here by trying a threshold at every score value.
    {
        SplitMix64 g(2718);
        const CostSpec cost{1.0, 7.72};
        const PriorSpec prior{84.0 / 733.0};
        for (int rep = 0; rep < 10; ++rep) {
            const int n0 = 10 + static_cast<int>(uniform_below(g, 8));
            const int n1 = 6 + static_cast<int>(uniform_below(g, 8));
            const int n = n0 + n1;
            Eigen::VectorXd scores(n);
            Eigen::VectorXi labels(n);
            for (int i = 0; i < n; ++i) {
                labels[i] = i < n0 ? 0 : 1;
                scores[i] = (1.0 + std::floor(uniform01(g) * 8.0)) / 10.0;  // ties, in (0,1)
            }
            CutoffScan scan = tune_cutoff(scores, labels, cost, prior);
            double best = std::numeric_limits<double>::infinity();
            std::vector<double> cands(scores.begin(), scores.end());
            cands.push_back(-0.5);  // the everything-positive rule
            for (double t : cands) {
                const auto [c0, c1] = conditional_errors(scores, labels, t);
                best = std::min(best, empirical_risk(c0, c1, cost, prior).risk);
            }
            if (scan.best.risk != best) return false;
        }
    }
    // (b) 2-means matches the best of all bipartitions of twelve points.
    {
        SplitMix64 g(99);
        Eigen::MatrixXd pts(12, 2);
        for (int i = 0; i < 12; ++i) {
            const double c = i < 6 ? -2.0 : 2.0;
            pts(i, 0) = c + 0.5 * gaussian(g);
            pts(i, 1) = c + 0.5 * gaussian(g);
        }
        Kmeans2Result km = kmeans2(pts, 7);
        auto wcss_of = [&](int mask) {
            Eigen::RowVector2d m0 = Eigen::RowVector2d::Zero(), m1 = m0;
            int c0 = 0, c1 = 0;
            for (int i = 0; i < 12; ++i) {
                if (mask & (1 << i)) {
                    m1 += pts.row(i);
                    ++c1;
                } else {
                    m0 += pts.row(i);
                    ++c0;
                }
            }
            m0 /= c0;
            m1 /= c1;
            double total = 0.0;
            for (int i = 0; i < 12; ++i)
                total += (pts.row(i) - ((mask & (1 << i)) ? m1 : m0)).squaredNorm();
            return total;
        };
        double best = std::numeric_limits<double>::infinity();
        for (int mask = 1; mask < (1 << 12) - 1; ++mask) best = std::min(best, wcss_of(mask));
        if (std::abs(km.wcss - best) > 1e-9) return false;
    }
    // (c) Greedy stepwise selection matches exhaustive best-subset search
    // over four features, under both information criteria.
    {
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
                Eigen::MatrixXd sub(z.n(), static_cast<int>(cols.size()));
                std::vector<std::string> names;
                for (std::size_t j = 0; j < cols.size(); ++j) {
                    sub.col(static_cast<int>(j)) = z.features.col(cols[j]);
                    names.push_back(z.feature_names[cols[j]]);
                }
                LogisticModel m = fit_logistic_mle(make_study(sub, z.labels, names));
                const double score = selection_score(m.meta.objective_trace.back(),
                                                     static_cast<int>(cols.size()) + 1, z.n(), crit);
                if (score < best_score) {
                    best_score = score;
                    best_set = cols;
                }
            }
            if (step.selected != best_set) return false;
            if (std::abs(step.criterion - best_score) > 1e-8) return false;
        }
    }
    return true;
}

}  // namespace

int main() {
    check("bayes-cutoff-constant", bayes_cutoff_constant);
    check("cutoff-identity", cutoff_identity);
    check("summary-table-arithmetic", summary_table_arithmetic);
    check("prevalence-arithmetic", prevalence_arithmetic);
    check("shift-correction-oracle", shift_correction_oracle);
    check("optimizer-oracles", optimizer_oracles);
    check("mann-whitney-exactness", mann_whitney_exactness);
    check("roc-u-identity", roc_u_identity);
    check("cv-structure", cv_structure);
    check("small-instance-oracles", small_instance_oracles);
    return failures == 0 ? 0 : 1;
}
