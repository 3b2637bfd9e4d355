#include "progclust/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "progclust/error.hpp"
#include "progclust/rng.hpp"

namespace progclust {

const char* method_tag(ClusterMethod m) {
    switch (m) {
        case ClusterMethod::kKMeans: return "KME";
        case ClusterMethod::kKMedoids: return "KMD";
        case ClusterMethod::kAgglomerative: return "AHC";
        case ClusterMethod::kThreshold: return "THR";
    }
    return "?";
}

std::vector<std::size_t> Assignment::sizes() const {
    std::vector<std::size_t> s(static_cast<std::size_t>(std::max(k, 0)), 0);
    for (int l : labels)
        if (l >= 0 && l < k) ++s[static_cast<std::size_t>(l)];
    return s;
}

std::size_t Assignment::occupied() const {
    const auto s = sizes();
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](std::size_t v) { return v > 0; }));
}

void canonicalize_labels(std::vector<int>& labels) {
    std::vector<int> map;
    for (int& l : labels) {
        if (l < 0) continue;
        if (static_cast<std::size_t>(l) >= map.size()) map.resize(static_cast<std::size_t>(l) + 1, -1);
        if (map[static_cast<std::size_t>(l)] < 0) {
            map[static_cast<std::size_t>(l)] =
                static_cast<int>(std::count_if(map.begin(), map.end(), [](int v) { return v >= 0; }));
        }
        l = map[static_cast<std::size_t>(l)];
    }
}

namespace {

void check_k(int k, std::size_t n, const char* who) {
    if (k < 1) throw InvalidArgument(std::string(who) + ": k must be >= 1");
    if (static_cast<std::size_t>(k) > n)
        throw InvalidArgument(std::string(who) + ": k = " + std::to_string(k) + " exceeds n = " + std::to_string(n));
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

struct LloydResult {
    std::vector<int> labels;
    double inertia;
};

LloydResult lloyd_once(const std::vector<std::vector<double>>& pts, int k, Rng& rng, const KMeansOptions& opts) {
    const std::size_t n = pts.size();
    const std::size_t dim = pts.front().size();
    const auto uk = static_cast<std::size_t>(k);

    // k-means++ seeding
    std::vector<std::vector<double>> centers;
    centers.push_back(pts[rng.index(n)]);
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(pts[i], centers[0]);
    while (centers.size() < uk) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick = 0;
        if (total > 0.0) {
            double u = rng.uniform() * total;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                u -= d2[i];
                if (u < 0.0 && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
            while (d2[pick] == 0.0 && pick > 0) --pick;
        } else {
            rng.uniform();  // keep the stream aligned
        }
        centers.push_back(pts[pick]);
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(pts[i], centers.back()));
    }

    std::vector<int> labels(n, 0);
    std::vector<double> best(n);
    auto assign = [&] {
        for (std::size_t i = 0; i < n; ++i) {
            double bd = std::numeric_limits<double>::infinity();
            int bl = 0;
            for (std::size_t c = 0; c < uk; ++c) {
                const double d = sq_dist(pts[i], centers[c]);
                if (d < bd) {
                    bd = d;
                    bl = static_cast<int>(c);
                }
            }
            labels[i] = bl;
            best[i] = bd;
        }
    };

    assign();
    for (int it = 0; it < opts.max_iterations; ++it) {
        // repair empty clusters with the point farthest from its centroid
        std::vector<std::size_t> counts(uk, 0);
        for (int l : labels) ++counts[static_cast<std::size_t>(l)];
        for (std::size_t c = 0; c < uk; ++c) {
            if (counts[c] > 0) continue;
            std::size_t far = 0;
            for (std::size_t i = 1; i < n; ++i)
                if (best[i] > best[far] && counts[static_cast<std::size_t>(labels[i])] > 1) far = i;
            --counts[static_cast<std::size_t>(labels[far])];
            labels[far] = static_cast<int>(c);
            best[far] = 0.0;
            counts[c] = 1;
        }

        std::vector<std::vector<double>> next(uk, std::vector<double>(dim, 0.0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t d = 0; d < dim; ++d) next[static_cast<std::size_t>(labels[i])][d] += pts[i][d];
        double move = 0.0;
        for (std::size_t c = 0; c < uk; ++c) {
            for (double& v : next[c]) v /= static_cast<double>(counts[c]);
            move = std::max(move, std::sqrt(sq_dist(next[c], centers[c])));
        }
        centers = std::move(next);
        assign();
        if (move < opts.tolerance) break;
    }

    // final repair so that every cluster is occupied
    std::vector<std::size_t> counts(uk, 0);
    for (int l : labels) ++counts[static_cast<std::size_t>(l)];
    for (std::size_t c = 0; c < uk; ++c) {
        if (counts[c] > 0) continue;
        std::size_t far = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (best[i] > best[far] && counts[static_cast<std::size_t>(labels[i])] > 1) far = i;
        --counts[static_cast<std::size_t>(labels[far])];
        labels[far] = static_cast<int>(c);
        counts[c] = 1;
    }

    std::vector<std::vector<double>> mean(uk, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d < dim; ++d) mean[static_cast<std::size_t>(labels[i])][d] += pts[i][d];
    for (std::size_t c = 0; c < uk; ++c)
        for (double& v : mean[c]) v /= static_cast<double>(counts[c]);
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) inertia += sq_dist(pts[i], mean[static_cast<std::size_t>(labels[i])]);
    return {std::move(labels), inertia};
}

}  // namespace

Assignment kmeans(const std::vector<std::vector<double>>& points, int k, std::uint64_t seed,
                  const KMeansOptions& opts) {
    check_k(k, points.size(), "kmeans");
    if (opts.restarts < 1) throw InvalidArgument("kmeans: restarts must be >= 1");
    Rng rng(mix_seed(seed, 0x6b6d));
    LloydResult best{{}, std::numeric_limits<double>::infinity()};
    for (int r = 0; r < opts.restarts; ++r) {
        auto res = lloyd_once(points, k, rng, opts);
        if (res.inertia < best.inertia) best = std::move(res);
    }
    Assignment a;
    a.labels = std::move(best.labels);
    canonicalize_labels(a.labels);
    a.k = k;
    a.method = ClusterMethod::kKMeans;
    a.objective = best.inertia;
    return a;
}

Assignment kmedoids(const DistanceMatrix& m, int k, std::vector<double>* cost_trace) {
    const std::size_t n = m.size();
    check_k(k, n, "kmedoids");
    const auto uk = static_cast<std::size_t>(k);

    std::vector<std::size_t> medoids;
    std::vector<char> is_medoid(n, 0);
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());

    // BUILD
    {
        std::size_t first = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += m(i, j);
            if (s < best) {
                best = s;
                first = i;
            }
        }
        medoids.push_back(first);
        is_medoid[first] = 1;
        for (std::size_t j = 0; j < n; ++j) nearest[j] = m(first, j);
    }
    while (medoids.size() < uk) {
        std::size_t pick = n;
        double best_gain = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (is_medoid[i]) continue;
            double gain = 0.0;
            for (std::size_t j = 0; j < n; ++j) gain += std::max(0.0, nearest[j] - m(i, j));
            if (gain > best_gain) {
                best_gain = gain;
                pick = i;
            }
        }
        medoids.push_back(pick);
        is_medoid[pick] = 1;
        for (std::size_t j = 0; j < n; ++j) nearest[j] = std::min(nearest[j], m(pick, j));
    }

    // nearest / second-nearest medoid distances, ties to the lowest patient index
    std::vector<std::size_t> owner(n);
    std::vector<double> second(n);
    auto refresh = [&] {
        std::sort(medoids.begin(), medoids.end());
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double d1 = std::numeric_limits<double>::infinity(), d2 = d1;
            std::size_t o = medoids.front();
            for (auto md : medoids) {
                const double d = m(md, j);
                if (d < d1) {
                    d2 = d1;
                    d1 = d;
                    o = md;
                } else if (d < d2) {
                    d2 = d;
                }
            }
            owner[j] = o;
            nearest[j] = d1;
            second[j] = d2;
            total += d1;
        }
        return total;
    };

    double cost = refresh();
    if (cost_trace) cost_trace->push_back(cost);

    // SWAP
    while (true) {
        double best_delta = 0.0;
        std::size_t best_out = n, best_in = n;
        for (auto md : medoids) {
            for (std::size_t h = 0; h < n; ++h) {
                if (is_medoid[h]) continue;
                double delta = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    const double dh = m(h, j);
                    const double now = nearest[j];
                    const double after = owner[j] == md ? std::min(dh, second[j]) : std::min(dh, now);
                    delta += after - now;
                }
                if (delta < best_delta) {
                    best_delta = delta;
                    best_out = md;
                    best_in = h;
                }
            }
        }
        if (best_out == n || best_delta >= -1e-12 * std::max(1.0, cost)) break;
        is_medoid[best_out] = 0;
        is_medoid[best_in] = 1;
        std::replace(medoids.begin(), medoids.end(), best_out, best_in);
        cost = refresh();
        if (cost_trace) cost_trace->push_back(cost);
    }

    Assignment a;
    a.labels.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        // medoids are sorted; owner ties went to the lowest index
        a.labels[j] = static_cast<int>(std::find(medoids.begin(), medoids.end(), owner[j]) - medoids.begin());
    }
    for (std::size_t i = 0; i < uk; ++i) a.labels[medoids[i]] = static_cast<int>(i);
    canonicalize_labels(a.labels);
    std::vector<std::size_t> ordered(uk);
    for (auto md : medoids) ordered[static_cast<std::size_t>(a.labels[md])] = md;
    medoids = std::move(ordered);
    a.k = k;
    a.method = ClusterMethod::kKMedoids;
    a.objective = cost;
    a.medoids = medoids;
    return a;
}

std::vector<Merge> complete_linkage(const DistanceMatrix& m) {
    const std::size_t n = m.size();
    std::vector<double> d = m.data();
    std::vector<char> active(n, 1);
    std::vector<std::size_t> size(n, 1);
    std::vector<Merge> merges;
    merges.reserve(n > 0 ? n - 1 : 0);
    for (std::size_t step = 1; step < n; ++step) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t ba = n, bb = n;
        for (std::size_t a = 0; a < n; ++a) {
            if (!active[a]) continue;
            for (std::size_t b = a + 1; b < n; ++b) {
                if (active[b] && d[a * n + b] < best) {
                    best = d[a * n + b];
                    ba = a;
                    bb = b;
                }
            }
        }
        if (ba == n) {
            // all remaining distances are infinite or NaN: merge lowest pair
            for (std::size_t a = 0; a < n && ba == n; ++a)
                for (std::size_t b = a + 1; b < n; ++b)
                    if (active[a] && active[b]) {
                        ba = a;
                        bb = b;
                        break;
                    }
            best = d[ba * n + bb];
        }
        // Lance-Williams for complete linkage: d(k, a u b) = max(d(k, a), d(k, b))
        for (std::size_t x = 0; x < n; ++x) {
            if (!active[x] || x == ba || x == bb) continue;
            const double v = std::max(d[ba * n + x], d[bb * n + x]);
            d[ba * n + x] = d[x * n + ba] = v;
        }
        active[bb] = 0;
        size[ba] += size[bb];
        merges.push_back({ba, bb, best, size[ba]});
    }
    return merges;
}

Assignment cut_dendrogram(const std::vector<Merge>& merges, std::size_t n, int k) {
    check_k(k, n, "cut_dendrogram");
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    Assignment a;
    const std::size_t applied = n - static_cast<std::size_t>(k);
    for (std::size_t s = 0; s < applied; ++s) {
        parent[find(merges[s].b)] = find(merges[s].a);
        a.objective = merges[s].height;
    }
    a.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) a.labels[i] = static_cast<int>(find(i));
    canonicalize_labels(a.labels);
    a.k = k;
    a.method = ClusterMethod::kAgglomerative;
    return a;
}

Assignment ahc_complete(const DistanceMatrix& m, int k) {
    check_k(k, m.size(), "ahc_complete");
    return cut_dendrogram(complete_linkage(m), m.size(), k);
}

}  // namespace progclust
