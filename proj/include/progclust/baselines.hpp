#pragma once

#include <span>
#include <vector>

#include "progclust/cluster.hpp"
#include "progclust/cohort.hpp"
#include "progclust/embedding.hpp"
#include "progclust/features.hpp"

namespace progclust {

inline constexpr double kDaysPerMonth = 30.4375;

/// Two strata on the six-month relative decline: 0 = slow (< threshold), 1 = fast.
Assignment gom_strata(const std::vector<FeatureVector>& features, double threshold = 0.186);

/// Threshold used by the percentile mode of gom_strata: the 90th percentile of
/// the six-month decline distribution.
double gom_percentile_threshold(const std::vector<FeatureVector>& features, double percentile = 0.9);

/// Four strata on the fitted one-year score: <= 10, (10, 20], (20, 30], > 30.
Assignment gro_strata(const std::vector<FeatureVector>& features);

/// Three strata on D50 in months: severe (< 20), intermediate [20, 40), mild (>= 40).
Assignment mey_strata(const std::vector<FeatureVector>& features);

/// Classic dynamic time warping with |a_i - b_j| local cost and no window.
double dtw(std::span<const double> a, std::span<const double> b);

/// Per-dimension series of a patient: series[d][t].
using MultiSeries = std::vector<std::vector<double>>;

/// Subscore series of the selected items (0-based item indices; all 12 when
/// empty). Throws ComputeError when a visit lacks subscores.
MultiSeries subscore_series(const Sequence& seq, std::span<const int> items = {});

/// Sum of per-dimension DTW costs.
double dtw_independent(const MultiSeries& p, const MultiSeries& q);

/// DTW_I distances between every pair of patients.
DistanceMatrix dtw_matrix(const Cohort& cohort, std::span<const int> items = {}, unsigned threads = 1);

/// Mean gap between consecutive visits (days).
double mean_visit_gap(const Sequence& seq);

struct HalOptions {
    std::vector<int> items;  // subscore items used; empty = all
    EmbeddingParams embedding;
    unsigned threads = 1;
};

/// DTW_I matrix, optional embedding, then complete-linkage clustering into k groups.
Assignment hal_workflow(const Cohort& cohort, int k, bool use_embedding, const HalOptions& opts = {});

}  // namespace progclust
