#pragma once

#include <array>
#include <string>
#include <vector>

#include "progclust/cohort.hpp"
#include "progclust/curves.hpp"

namespace progclust {

inline constexpr std::size_t kFeatureCount = 7;

/// Names of the pairwise descriptive variables, in their canonical order.
inline constexpr std::array<const char*, kFeatureCount> kVariableNames{
    "DURATION_DIFF",    "FIRST_SCORE_DIFF",   "SLOPE_DIFF", "HIGHEST_CONSECUTIVE_SLOPE_DIFF",
    "ALS_SCORE_M12_DIFF", "PC_CHANGE_M6_DIFF", "D50_DIFF"};

/// Names of the per-patient features, same order as kVariableNames.
inline constexpr std::array<const char*, kFeatureCount> kFeatureNames{
    "duration", "first_score", "overall_slope", "stiffest_slope", "score_m12", "pc_change_m6", "d50"};

struct FeatureVector {
    double duration = 0.0;        // days, t_n
    double first_score = 0.0;     // points
    double overall_slope = 0.0;   // points/day
    double stiffest_slope = 0.0;  // points/day, steepest decline between consecutive visits
    double score_m12 = 0.0;       // fitted score at day 365
    double pc_change_m6 = 0.0;    // fitted relative decline over the first 183 days
    double d50 = 0.0;             // days until the fitted curve reaches 24

    std::array<double, kFeatureCount> values() const {
        return {duration, first_score, overall_slope, stiffest_slope, score_m12, pc_change_m6, d50};
    }
};

struct FeatureOptions {
    double day_m6 = 183.0;
    double day_m12 = 365.0;
    double d50_target = 24.0;
    double horizon_days = 3650.0;
};

FeatureVector sequence_features(const Sequence& seq, const SigmoidFit& fit, const FeatureOptions& opts = {});

/// Dense row-major n x kFeatureCount matrix of per-patient features.
using FeatureMatrix = std::vector<std::array<double, kFeatureCount>>;

FeatureMatrix to_matrix(const std::vector<FeatureVector>& features);

struct ColumnScaling {
    std::array<double, kFeatureCount> min{};
    std::array<double, kFeatureCount> max{};
    std::array<bool, kFeatureCount> constant{};

    double normalize(std::size_t col, double v) const;
    double denormalize(std::size_t col, double v) const;
    /// 1 / (max - min), or 0 for constant columns.
    double inverse_range(std::size_t col) const;
};

/// All unordered patient pairs (i < j, or i <= j with self pairs) with
/// |x - y| per variable, stored column-major so that per-variable statistics
/// work on contiguous spans.
struct PairTable {
    std::size_t patients = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    std::array<std::vector<double>, kFeatureCount> columns;
    bool normalized = false;
    bool self_pairs = false;
    ColumnScaling scaling;  // set by minmax_normalize
    std::array<bool, kFeatureCount> retained{true, true, true, true, true, true, true};

    std::size_t rows() const { return pairs.size(); }
};

/// Index of pair (i, j), i < j (i <= j with self pairs), in a table built over n patients.
std::size_t pair_index(std::size_t i, std::size_t j, std::size_t n, bool self_pairs = false);

/// n(n-1)/2 rows, or n(n+1)/2 when each patient is also paired with itself.
PairTable pairwise_table(const FeatureMatrix& features, bool self_pairs = false);

/// Per-column min-max scaling of the table in place; returns the scaling used.
/// Constant columns become all-zero and are flagged.
ColumnScaling minmax_normalize(PairTable& table);

/// Per-column min-max scaling of a feature matrix (rows = patients).
ColumnScaling fit_scaling(const FeatureMatrix& features);
FeatureMatrix apply_scaling(const FeatureMatrix& features, const ColumnScaling& scaling);

/// Spearman correlation matrix between all columns.
std::array<std::array<double, kFeatureCount>, kFeatureCount> spearman_matrix(const PairTable& table);

/// Greedy filter over columns in canonical order: a column is dropped when its
/// |rho| with an earlier retained column exceeds `threshold`.
std::array<bool, kFeatureCount> spearman_filter(const PairTable& table, double threshold = 0.7);

}  // namespace progclust
