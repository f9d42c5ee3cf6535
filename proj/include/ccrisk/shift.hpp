#pragma once

#include <cmath>

#include "ccrisk/dataset.hpp"
#include "ccrisk/errors.hpp"

// Bridge between sample-measure (case-control) and population-measure
// probabilities, and the Bayes-optimal decision cutoff under asymmetric
// losses. The working assumption is that class-conditional feature
// distributions agree between sample and population while the class priors
// differ (prior probability shift).

namespace ccrisk {

// a = (pi0 * p1) / (pi1 * p0): multiplying sample-measure posterior odds by a
// gives population-measure posterior odds.
inline double shift_factor(double pi1, const PriorSpec& prior) {
    if (!(pi1 > 0.0) || !(pi1 < 1.0))
        throw DataError("sample prior pi1 must lie strictly in (0,1), got " + format_double(pi1));
    validate_prior(prior);
    return ((1.0 - pi1) * prior.p1) / (pi1 * prior.p0());
}

// Threshold on the sample-measure posterior above which classifying as
// emergent minimizes expected loss: t = r/(1+r) with r = l0/(l1*a).
inline double bayes_cutoff(const CostSpec& cost, double a) {
    validate_cost(cost);
    if (!(a > 0.0)) throw DataError("shift factor must be positive, got " + format_double(a));
    const double r = cost.l0 / (cost.l1 * a);
    return r / (1.0 + r);
}

// Maps a sample-measure posterior q to the population measure:
// a*odds/(1+a*odds) with odds = q/(1-q), written as a*q/(a*q + (1-q)) so the
// endpoints 0 and 1 are exact and nothing overflows.
inline double correct_posterior(double q, double a) {
    if (!(a > 0.0)) throw DataError("shift factor must be positive, got " + format_double(a));
    if (!(q >= 0.0 && q <= 1.0))
        throw DataError("posterior must lie in [0,1], got " + format_double(q));
    if (q == 0.0) return 0.0;
    if (q == 1.0) return 1.0;
    return a * q / (a * q + (1.0 - q));
}

struct ShiftContext {
    double pi1 = 0.0;   // sample-measure prior of class 1
    double pi0 = 0.0;
    PriorSpec prior;
    CostSpec cost;
    double a = 0.0;     // shift factor
    double cutoff = 0.0;  // Bayes threshold on the sample-measure posterior
};

inline ShiftContext make_shift_context(double pi1, const PriorSpec& prior, const CostSpec& cost) {
    ShiftContext ctx;
    ctx.pi1 = pi1;
    ctx.pi0 = 1.0 - pi1;
    ctx.prior = prior;
    ctx.cost = cost;
    ctx.a = shift_factor(pi1, prior);
    ctx.cutoff = bayes_cutoff(cost, ctx.a);
    return ctx;
}

inline ShiftContext make_shift_context(const Study& s, const PriorSpec& prior, const CostSpec& cost) {
    return make_shift_context(s.sample_prior1(), prior, cost);
}

}  // namespace ccrisk
