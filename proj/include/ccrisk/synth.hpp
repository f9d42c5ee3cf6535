#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ccrisk/dataset.hpp"
#include "ccrisk/errors.hpp"
#include "ccrisk/optim.hpp"
#include "ccrisk/rng.hpp"

// Synthetic populations with a known logistic law: standard-normal features
// and Bernoulli labels through sigmoid(b0 + b'x). Observation i is a pure
// function of (seed, i), so any subset of indices can be materialized without
// generating the rest.

namespace ccrisk {

struct PopulationSpec {
    double intercept = 0.0;
    Eigen::VectorXd coef;

    int p() const { return static_cast<int>(coef.size()); }
};

inline void validate_population(const PopulationSpec& spec) {
    if (spec.coef.size() == 0) throw DataError("population needs at least one feature");
    if (!std::isfinite(spec.intercept) || !spec.coef.allFinite())
        throw DataError("population parameters must be finite");
}

inline double oracle_posterior(const PopulationSpec& spec, const Eigen::VectorXd& x) {
    return sigmoid(spec.intercept + spec.coef.dot(x));
}

inline Eigen::VectorXd oracle_posteriors(const PopulationSpec& spec, const Eigen::MatrixXd& x) {
    Eigen::VectorXd eta = (x * spec.coef).array() + spec.intercept;
    for (int i = 0; i < eta.size(); ++i) eta[i] = sigmoid(eta[i]);
    return eta;
}

struct Observation {
    Eigen::VectorXd x;
    int y = 0;
    double posterior = 0.0;
};

inline Observation draw_observation(const PopulationSpec& spec, std::uint64_t seed,
                                    std::uint64_t index) {
    SplitMix64 g(derive_seed(seed, index));
    Observation obs;
    obs.x.resize(spec.p());
    for (int j = 0; j < spec.p(); ++j) obs.x[j] = gaussian(g);
    obs.posterior = oracle_posterior(spec, obs.x);
    obs.y = uniform01(g) < obs.posterior ? 1 : 0;
    return obs;
}

inline std::vector<std::string> synth_feature_names(int p) {
    std::vector<std::string> names;
    for (int j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
    return names;
}

// A prospective sample: indices 0..n-1 of the observation stream.
inline Study generate_population(const PopulationSpec& spec, int n, std::uint64_t seed) {
    validate_population(spec);
    if (n < 1) throw DataError("population sample size must be positive");
    Study s;
    s.features.resize(n, spec.p());
    s.labels.resize(n);
    s.feature_names = synth_feature_names(spec.p());
    for (int i = 0; i < n; ++i) {
        Observation obs = draw_observation(spec, seed, static_cast<std::uint64_t>(i));
        s.features.row(i) = obs.x;
        s.labels[i] = obs.y;
        (obs.y == 0 ? s.n0 : s.n1)++;
    }
    return s;
}

struct CaseControlDraw {
    Study study;        // the first n0 class-0 and n1 class-1 observations, stream order
    long draws = 0;     // stream positions consumed
};

// A case-control sample: scan the observation stream and keep observations
// until both class quotas are filled.
inline CaseControlDraw draw_case_control(const PopulationSpec& spec, int n0, int n1,
                                         std::uint64_t seed) {
    validate_population(spec);
    if (n0 < 1 || n1 < 1) throw DataError("case-control quotas must be positive");
    CaseControlDraw out;
    Study& s = out.study;
    s.features.resize(n0 + n1, spec.p());
    s.labels.resize(n0 + n1);
    s.feature_names = synth_feature_names(spec.p());
    const long cap = 10000L + 1000L * (n0 + n1);
    int row = 0;
    for (long i = 0; i < cap && (s.n0 < n0 || s.n1 < n1); ++i) {
        ++out.draws;
        Observation obs = draw_observation(spec, seed, static_cast<std::uint64_t>(i));
        if (obs.y == 0 ? s.n0 >= n0 : s.n1 >= n1) continue;
        s.features.row(row) = obs.x;
        s.labels[row] = obs.y;
        (obs.y == 0 ? s.n0 : s.n1)++;
        ++row;
    }
    if (s.n0 < n0 || s.n1 < n1)
        throw DataError("case-control draw: class quota not reached after " +
                        std::to_string(out.draws) + " draws; prevalence too extreme");
    return out;
}

// Monte Carlo prevalence: the mean oracle posterior over a prospective sample,
// which estimates P(Y=1) with less noise than the label frequency.
inline double realized_p1(const PopulationSpec& spec, int n, std::uint64_t seed) {
    validate_population(spec);
    if (n < 1) throw DataError("population sample size must be positive");
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
        acc += draw_observation(spec, seed, static_cast<std::uint64_t>(i)).posterior;
    return acc / n;
}

}  // namespace ccrisk
