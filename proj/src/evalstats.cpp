#include "progclust/evalstats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "progclust/error.hpp"
#include "progclust/numeric.hpp"

namespace progclust {

SilhouetteResult silhouette(const DistanceMatrix& m, const Assignment& asg) { return silhouette(m, asg.labels); }

SilhouetteResult silhouette(const DistanceMatrix& m, std::span<const int> labels) {
    const std::size_t n = m.size();
    if (labels.size() != n) throw InvalidArgument("silhouette: label count does not match matrix");
    int kmax = 0;
    for (int l : labels) {
        if (l < 0) throw InvalidArgument("silhouette: negative label");
        kmax = std::max(kmax, l + 1);
    }
    std::vector<std::size_t> size(static_cast<std::size_t>(kmax), 0);
    for (int l : labels) ++size[static_cast<std::size_t>(l)];
    const auto occupied = std::count_if(size.begin(), size.end(), [](std::size_t s) { return s > 0; });
    if (occupied < 2) throw InvalidArgument("silhouette: needs at least 2 occupied clusters");

    SilhouetteResult r;
    r.values.resize(n);
    std::vector<double> sums(size.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto own = static_cast<std::size_t>(labels[i]);
        if (size[own] == 1) {
            r.values[i] = 0.0;
            continue;
        }
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) sums[static_cast<std::size_t>(labels[j])] += m(i, j);
        const double a = sums[own] / static_cast<double>(size[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < size.size(); ++c)
            if (c != own && size[c] > 0) b = std::min(b, sums[c] / static_cast<double>(size[c]));
        const double denom = std::max(a, b);
        r.values[i] = denom > 0.0 ? (b - a) / denom : 0.0;
    }
    r.mean = numeric::pairwise_sum(r.values) / static_cast<double>(n);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = (r.values[i] - r.mean) * (r.values[i] - r.mean);
    r.std = std::sqrt(numeric::pairwise_sum(sq) / static_cast<double>(n));
    return r;
}

double SurvivalCurve::at(double t) const {
    double s = 1.0;
    for (const auto& k : knots) {
        if (k.time > t) break;
        s = k.survival;
    }
    return s;
}

SurvivalCurve kaplan_meier(std::span<const double> times, std::span<const int> events) {
    if (times.empty()) throw InvalidArgument("kaplan_meier: empty input");
    if (times.size() != events.size()) throw InvalidArgument("kaplan_meier: times/events length mismatch");
    for (double t : times)
        if (!(t >= 0.0)) throw InvalidArgument("kaplan_meier: times must be >= 0");

    std::vector<std::size_t> order(times.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });

    SurvivalCurve curve;
    curve.knots.push_back({0.0, 1.0, times.size(), 0});
    std::size_t at_risk = times.size();
    double s = 1.0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double t = times[order[i]];
        std::size_t d = 0, leaving = 0;
        while (i < order.size() && times[order[i]] == t) {
            d += events[order[i]] != 0;
            ++leaving;
            ++i;
        }
        if (d > 0) {
            s *= 1.0 - static_cast<double>(d) / static_cast<double>(at_risk);
            curve.knots.push_back({t, s, at_risk, d});
        }
        at_risk -= leaving;
    }
    return curve;
}

LogRankResult logrank_pair(const SurvivalGroup& g1, const SurvivalGroup& g2) {
    if (g1.times.empty() || g2.times.empty()) throw InvalidArgument("logrank_pair: both groups must be non-empty");
    if (g1.times.size() != g1.events.size() || g2.times.size() != g2.events.size())
        throw InvalidArgument("logrank_pair: times/events length mismatch");

    struct Obs {
        double t;
        int group;
        int event;
    };
    std::vector<Obs> all;
    for (std::size_t i = 0; i < g1.times.size(); ++i) all.push_back({g1.times[i], 0, g1.events[i] != 0});
    for (std::size_t i = 0; i < g2.times.size(); ++i) all.push_back({g2.times[i], 1, g2.events[i] != 0});
    std::sort(all.begin(), all.end(), [](const Obs& a, const Obs& b) { return a.t < b.t; });

    double n1 = static_cast<double>(g1.times.size());
    double n = static_cast<double>(all.size());
    std::vector<double> o_terms, e_terms, v_terms;
    std::size_t i = 0;
    while (i < all.size()) {
        const double t = all[i].t;
        double d = 0, d1 = 0, out1 = 0, out = 0;
        while (i < all.size() && all[i].t == t) {
            d += all[i].event;
            if (all[i].group == 0) {
                d1 += all[i].event;
                ++out1;
            }
            ++out;
            ++i;
        }
        if (d > 0) {
            o_terms.push_back(d1);
            e_terms.push_back(n1 * d / n);
            v_terms.push_back(n > 1.0 ? d * (n1 / n) * (1.0 - n1 / n) * (n - d) / (n - 1.0) : 0.0);
        }
        n1 -= out1;
        n -= out;
    }

    LogRankResult r;
    r.observed = numeric::pairwise_sum(o_terms);
    r.expected = numeric::pairwise_sum(e_terms);
    r.variance = numeric::pairwise_sum(v_terms);
    if (!(r.variance > 0.0)) {
        r.statistic = 0.0;
        r.p_value = 1.0;
        return r;
    }
    const double diff = r.observed - r.expected;
    r.statistic = diff * diff / r.variance;
    r.p_value = numeric::chi2_sf(r.statistic, 1.0);
    return r;
}

SurvivalSeparation survival_separation(std::span<const int> labels, std::span<const double> times,
                                       std::span<const int> events) {
    if (labels.size() != times.size() || times.size() != events.size())
        throw InvalidArgument("survival_separation: length mismatch");
    std::map<int, SurvivalGroup> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto& g = groups[labels[i]];
        g.times.push_back(times[i]);
        g.events.push_back(events[i]);
    }
    if (groups.size() < 2) throw InvalidArgument("survival_separation: needs at least 2 occupied clusters");

    SurvivalSeparation s;
    s.min_lrs = std::numeric_limits<double>::infinity();
    s.max_p = 0.0;
    for (auto a = groups.begin(); a != groups.end(); ++a) {
        for (auto b = std::next(a); b != groups.end(); ++b) {
            const auto r = logrank_pair(a->second, b->second);
            s.max_p = std::max(s.max_p, r.p_value);
            s.min_lrs = std::min(s.min_lrs, r.statistic);
            ++s.comparisons;
        }
    }
    return s;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw InvalidArgument("adjusted_rand_index: length mismatch");
    const double n = static_cast<double>(a.size());
    std::map<std::pair<int, int>, double> table;
    std::map<int, double> rows, cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        table[{a[i], b[i]}] += 1.0;
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
    }
    auto c2 = [](double x) { return x * (x - 1.0) / 2.0; };
    double index = 0.0, sa = 0.0, sb = 0.0;
    for (const auto& [k, v] : table) index += c2(v);
    for (const auto& [k, v] : rows) sa += c2(v);
    for (const auto& [k, v] : cols) sb += c2(v);
    const double expected = sa * sb / c2(n);
    const double max_index = 0.5 * (sa + sb);
    if (max_index == expected) return 1.0;  // both partitions trivial and identical in structure
    return (index - expected) / (max_index - expected);
}

}  // namespace progclust
