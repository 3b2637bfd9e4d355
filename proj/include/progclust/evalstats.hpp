#pragma once

#include <span>
#include <vector>

#include "progclust/cluster.hpp"
#include "progclust/metrics.hpp"

namespace progclust {

struct SilhouetteResult {
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
    std::vector<double> values;
};

/// Silhouette of every point over the occupied clusters of `asg`; points in
/// singleton clusters score 0. Needs at least two occupied clusters.
SilhouetteResult silhouette(const DistanceMatrix& m, const Assignment& asg);
SilhouetteResult silhouette(const DistanceMatrix& m, std::span<const int> labels);

struct SurvivalKnot {
    double time;
    double survival;
    std::size_t at_risk;  // subjects at risk just before `time`
    std::size_t events;
};

/// Kaplan-Meier step function. The first knot is always (0, 1); each later
/// knot is a distinct event time, and the curve is right-continuous.
struct SurvivalCurve {
    std::vector<SurvivalKnot> knots;

    double at(double t) const;
};

SurvivalCurve kaplan_meier(std::span<const double> times, std::span<const int> events);

struct LogRankResult {
    double statistic = 0.0;  // LRS
    double p_value = 1.0;
    double observed = 0.0;   // events in group 1
    double expected = 0.0;   // expected events in group 1 under H0
    double variance = 0.0;
};

struct SurvivalGroup {
    std::vector<double> times;
    std::vector<int> events;
};

/// Two-sample log-rank test (hypergeometric variance, chi-square with 1 df).
LogRankResult logrank_pair(const SurvivalGroup& g1, const SurvivalGroup& g2);

struct SurvivalSeparation {
    double max_p = 1.0;
    double min_lrs = 0.0;
    std::size_t comparisons = 0;
};

/// Log-rank test over every pair of occupied clusters; reports the largest
/// p-value and the smallest statistic.
SurvivalSeparation survival_separation(std::span<const int> labels, std::span<const double> times,
                                       std::span<const int> events);

/// Adjusted Rand index between two partitions of the same points.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

}  // namespace progclust
