#include "progclust/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "progclust/error.hpp"
#include "progclust/numeric.hpp"
#include "progclust/parallel.hpp"

namespace progclust {

namespace {

Assignment strata(std::vector<int> labels, int k) {
    Assignment a;
    a.labels = std::move(labels);
    a.k = k;
    a.method = ClusterMethod::kThreshold;
    a.degenerate = a.occupied() < static_cast<std::size_t>(k);
    return a;
}

}  // namespace

Assignment gom_strata(const std::vector<FeatureVector>& features, double threshold) {
    std::vector<int> labels;
    labels.reserve(features.size());
    for (const auto& f : features) labels.push_back(f.pc_change_m6 < threshold ? 0 : 1);
    return strata(std::move(labels), 2);
}

double gom_percentile_threshold(const std::vector<FeatureVector>& features, double percentile) {
    std::vector<double> v;
    for (const auto& f : features) v.push_back(f.pc_change_m6);
    return numeric::quantile(v, percentile);
}

Assignment gro_strata(const std::vector<FeatureVector>& features) {
    std::vector<int> labels;
    for (const auto& f : features) {
        const double s = f.score_m12;
        labels.push_back(s <= 10.0 ? 0 : s <= 20.0 ? 1 : s <= 30.0 ? 2 : 3);
    }
    return strata(std::move(labels), 4);
}

Assignment mey_strata(const std::vector<FeatureVector>& features) {
    std::vector<int> labels;
    for (const auto& f : features) {
        const double months = f.d50 / kDaysPerMonth;
        labels.push_back(months < 20.0 ? 0 : months < 40.0 ? 1 : 2);
    }
    return strata(std::move(labels), 3);
}

double dtw(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw InvalidArgument("dtw: empty series");
    const std::size_t m = b.size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
    prev[0] = 0.0;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = inf;
        for (std::size_t j = 1; j <= m; ++j) {
            const double cost = std::abs(a[i - 1] - b[j - 1]);
            cur[j] = cost + std::min({prev[j - 1], prev[j], cur[j - 1]});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

MultiSeries subscore_series(const Sequence& seq, std::span<const int> items) {
    std::vector<int> use(items.begin(), items.end());
    if (use.empty())
        for (int q = 0; q < kItemCount; ++q) use.push_back(q);
    MultiSeries s(use.size());
    for (const auto& v : seq.visits) {
        if (!v.subscores) throw ComputeError("patient " + seq.patient_id + " has visits without subscores");
        for (std::size_t d = 0; d < use.size(); ++d) {
            if (use[d] < 0 || use[d] >= kItemCount) throw InvalidArgument("subscore item index out of range");
            s[d].push_back((*v.subscores)[static_cast<std::size_t>(use[d])]);
        }
    }
    return s;
}

double dtw_independent(const MultiSeries& p, const MultiSeries& q) {
    if (p.size() != q.size()) throw InvalidArgument("dtw_independent: dimension mismatch");
    double total = 0.0;
    for (std::size_t d = 0; d < p.size(); ++d) total += dtw(p[d], q[d]);
    return total;
}

DistanceMatrix dtw_matrix(const Cohort& cohort, std::span<const int> items, unsigned threads) {
    const std::size_t n = cohort.size();
    std::vector<MultiSeries> series;
    std::vector<std::string> ids;
    for (const auto& s : cohort) {
        series.push_back(subscore_series(s, items));
        ids.push_back(s.patient_id);
    }
    DistanceMatrix m(n, Measure::kDtw, std::move(ids));
    parallel_for(n, threads, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = dtw_independent(series[i], series[j]);
            m.data()[i * n + j] = v;
            m.data()[j * n + i] = v;
        }
    });
    return m;
}

double mean_visit_gap(const Sequence& seq) {
    if (seq.visits.size() < 2) return 0.0;
    return static_cast<double>(seq.visits.back().day - seq.visits.front().day) /
           static_cast<double>(seq.visits.size() - 1);
}

Assignment hal_workflow(const Cohort& cohort, int k, bool use_embedding, const HalOptions& opts) {
    for (const auto& s : cohort)
        if (!s.has_subscores()) throw ComputeError("HAL needs subscores; patient " + s.patient_id + " has none");
    const DistanceMatrix m = dtw_matrix(cohort, opts.items, opts.threads);
    if (!use_embedding) return ahc_complete(m, k);
    const Embedding e = embed(m, opts.embedding);
    return ahc_complete(euclidean_matrix(e.points(), e.ids), k);
}

}  // namespace progclust
