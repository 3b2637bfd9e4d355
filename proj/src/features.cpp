#include "progclust/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "progclust/error.hpp"
#include "progclust/numeric.hpp"

namespace progclust {

FeatureVector sequence_features(const Sequence& seq, const SigmoidFit& fit, const FeatureOptions& opts) {
    const auto& v = seq.visits;
    if (v.size() < 2 || v.back().day <= v.front().day)
        throw ComputeError("sequence_features: zero follow-up duration for patient " + seq.patient_id);

    FeatureVector f;
    f.duration = v.back().day - v.front().day;
    f.first_score = v.front().total_score;
    f.overall_slope = (v.back().total_score - v.front().total_score) / f.duration;
    f.stiffest_slope = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        const double slope = static_cast<double>(v[i + 1].total_score - v[i].total_score) / (v[i + 1].day - v[i].day);
        f.stiffest_slope = std::min(f.stiffest_slope, slope);
    }
    f.score_m12 = eval_sigmoid(fit, opts.day_m12);
    const double s0 = eval_sigmoid(fit, 0.0);
    const double s6 = eval_sigmoid(fit, opts.day_m6);
    f.pc_change_m6 = s0 != 0.0 ? (s0 - s6) / s0 : 0.0;
    f.d50 = invert_for_score(fit, opts.d50_target, opts.horizon_days);
    return f;
}

FeatureMatrix to_matrix(const std::vector<FeatureVector>& features) {
    FeatureMatrix m;
    m.reserve(features.size());
    for (const auto& f : features) m.push_back(f.values());
    return m;
}

double ColumnScaling::normalize(std::size_t col, double v) const {
    return constant[col] ? 0.0 : (v - min[col]) / (max[col] - min[col]);
}

double ColumnScaling::denormalize(std::size_t col, double v) const {
    return constant[col] ? min[col] : min[col] + v * (max[col] - min[col]);
}

double ColumnScaling::inverse_range(std::size_t col) const {
    return constant[col] ? 0.0 : 1.0 / (max[col] - min[col]);
}

std::size_t pair_index(std::size_t i, std::size_t j, std::size_t n, bool self_pairs) {
    if (self_pairs) return i * (2 * n - i + 1) / 2 + (j - i);
    // rows before row i: (n-1) + (n-2) + ... + (n-i)
    return i * (2 * n - i - 1) / 2 + (j - i - 1);
}

PairTable pairwise_table(const FeatureMatrix& features, bool self_pairs) {
    const std::size_t n = features.size();
    if (n < 2) throw InvalidArgument("pairwise_table: need at least 2 patients");
    PairTable t;
    t.patients = n;
    t.self_pairs = self_pairs;
    const std::size_t rows = self_pairs ? n * (n + 1) / 2 : n * (n - 1) / 2;
    t.pairs.reserve(rows);
    for (auto& c : t.columns) c.reserve(rows);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = self_pairs ? i : i + 1; j < n; ++j) {
            t.pairs.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
            for (std::size_t c = 0; c < kFeatureCount; ++c)
                t.columns[c].push_back(std::abs(features[i][c] - features[j][c]));
        }
    }
    return t;
}

namespace {

ColumnScaling scaling_of(const std::array<std::vector<double>, kFeatureCount>& cols) {
    ColumnScaling s;
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
        const auto [lo, hi] = std::minmax_element(cols[c].begin(), cols[c].end());
        s.min[c] = *lo;
        s.max[c] = *hi;
        s.constant[c] = !(*hi > *lo);
    }
    return s;
}

}  // namespace

ColumnScaling minmax_normalize(PairTable& table) {
    if (table.rows() == 0) throw InvalidArgument("minmax_normalize: empty table");
    const ColumnScaling s = scaling_of(table.columns);
    for (std::size_t c = 0; c < kFeatureCount; ++c)
        for (double& v : table.columns[c]) v = s.normalize(c, v);
    table.scaling = s;
    table.normalized = true;
    return s;
}

ColumnScaling fit_scaling(const FeatureMatrix& features) {
    if (features.empty()) throw InvalidArgument("fit_scaling: no patients");
    std::array<std::vector<double>, kFeatureCount> cols;
    for (const auto& row : features)
        for (std::size_t c = 0; c < kFeatureCount; ++c) cols[c].push_back(row[c]);
    return scaling_of(cols);
}

FeatureMatrix apply_scaling(const FeatureMatrix& features, const ColumnScaling& scaling) {
    FeatureMatrix out = features;
    for (auto& row : out)
        for (std::size_t c = 0; c < kFeatureCount; ++c) row[c] = scaling.normalize(c, row[c]);
    return out;
}

std::array<std::array<double, kFeatureCount>, kFeatureCount> spearman_matrix(const PairTable& table) {
    std::array<std::vector<double>, kFeatureCount> ranks;
    for (std::size_t c = 0; c < kFeatureCount; ++c) ranks[c] = numeric::average_ranks(table.columns[c]);
    std::array<std::array<double, kFeatureCount>, kFeatureCount> rho{};
    for (std::size_t a = 0; a < kFeatureCount; ++a) {
        rho[a][a] = 1.0;
        for (std::size_t b = a + 1; b < kFeatureCount; ++b) {
            rho[a][b] = rho[b][a] = numeric::pearson(ranks[a], ranks[b]);
        }
    }
    return rho;
}

std::array<bool, kFeatureCount> spearman_filter(const PairTable& table, double threshold) {
    const auto rho = spearman_matrix(table);
    std::array<bool, kFeatureCount> keep{};
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
        keep[c] = true;
        for (std::size_t p = 0; p < c; ++p) {
            if (keep[p] && std::abs(rho[p][c]) > threshold) {
                keep[c] = false;
                break;
            }
        }
    }
    return keep;
}

}  // namespace progclust
