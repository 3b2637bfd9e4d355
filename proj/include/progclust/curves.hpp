#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "progclust/cohort.hpp"

namespace progclust {

/// Four-parameter decreasing logistic: b / (1 + exp(m (x - a))) + c.
struct SigmoidFit {
    double b = 0.0;
    double m = 0.0;
    double a = 0.0;
    double c = 0.0;
    double rmse = 0.0;
    bool converged = false;
    int restart_index = 0;  // which initialization produced the fit
};

struct FitOptions {
    int restarts = 16;
    int max_iterations = 200;
    double relative_tolerance = 1e-10;
};

/// Score predicted by the curve at `day`.
double eval_sigmoid(const SigmoidFit& fit, double day);

/// Least-squares fit over (day, score) points with `restarts` initializations.
/// The first start is data-driven; the others multiply it by log-uniform noise
/// in [0.5, 2] drawn from `seed`. Points need not be sorted.
SigmoidFit fit_sigmoid(std::span<const double> days, std::span<const double> scores,
                       std::uint64_t seed, const FitOptions& opts = {});

/// Fits a patient's sequence; the RNG stream is keyed by (seed, patient_id).
SigmoidFit fit_sigmoid(const Sequence& seq, std::uint64_t seed, const FitOptions& opts = {});

/// Day at which the curve reaches `target`, clamped to [0, horizon_days].
/// Returns 0 when the curve starts at or below the target and horizon_days
/// when it never gets there.
double invert_for_score(const SigmoidFit& fit, double target = 24.0, double horizon_days = 3650.0);

/// Fits every sequence (in parallel when threads > 1); results do not depend
/// on the thread count.
std::vector<SigmoidFit> fit_cohort(const Cohort& cohort, std::uint64_t seed, const FitOptions& opts = {},
                                   unsigned threads = 1);

}  // namespace progclust
