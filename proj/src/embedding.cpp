#include "progclust/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "progclust/error.hpp"
#include "progclust/numeric.hpp"
#include "progclust/rng.hpp"

namespace progclust {

std::vector<std::vector<double>> Embedding::points() const {
    std::vector<std::vector<double>> p;
    p.reserve(coords.size());
    for (const auto& c : coords) p.push_back({c[0], c[1]});
    return p;
}

std::pair<double, double> fit_layout_curve(double min_dist, double spread) {
    constexpr std::size_t kSamples = 300;
    std::vector<double> x(kSamples), y(kSamples);
    for (std::size_t i = 0; i < kSamples; ++i) {
        x[i] = 3.0 * spread * static_cast<double>(i) / (kSamples - 1);
        y[i] = x[i] < min_dist ? 1.0 : std::exp(-(x[i] - min_dist) / spread);
    }
    auto model = [&](const std::vector<double>& p, std::vector<double>& r, std::vector<double>& jac) {
        const double a = p[0], b = p[1];
        for (std::size_t i = 0; i < kSamples; ++i) {
            const double xp = x[i] > 0.0 ? std::pow(x[i], 2.0 * b) : 0.0;
            const double den = 1.0 + a * xp;
            r[i] = 1.0 / den - y[i];
            jac[2 * i] = -xp / (den * den);
            jac[2 * i + 1] = x[i] > 0.0 ? -a * xp * 2.0 * std::log(x[i]) / (den * den) : 0.0;
        }
    };
    numeric::LmOptions opts;
    opts.max_iterations = 500;
    opts.relative_tolerance = 1e-14;
    const auto res = numeric::levenberg_marquardt(model, {1.0, 1.0}, kSamples, opts);
    return {res.params[0], res.params[1]};
}

namespace {

// Re-indexes the matrix so that row r corresponds to original row order[r].
struct PermutedView {
    const DistanceMatrix& m;
    const std::vector<std::size_t>& order;
    double operator()(std::size_t i, std::size_t j) const { return m(order[i], order[j]); }
};

template <class Dist>
FuzzyGraph build_graph(const Dist& d, std::size_t n, std::size_t k) {
    FuzzyGraph g;
    g.n = n;
    g.rho.resize(n);
    g.sigma.resize(n);
    g.sigma_residual.resize(n);
    const double target = std::log2(static_cast<double>(k));

    std::map<std::pair<std::uint32_t, std::uint32_t>, std::pair<double, double>> directed;
    std::vector<std::size_t> cand(n);
    for (std::size_t i = 0; i < n; ++i) {
        cand.clear();
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) cand.push_back(j);
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(),
                          [&](std::size_t a, std::size_t b) { return d(i, a) < d(i, b) || (d(i, a) == d(i, b) && a < b); });
        cand.resize(k);
        const double rho = d(i, cand.front());
        g.rho[i] = rho;

        auto mass = [&](double sigma) {
            double s = 0.0;
            for (auto j : cand) s += std::exp(-std::max(0.0, d(i, j) - rho) / sigma);
            return s;
        };
        double lo = 0.0, hi = std::numeric_limits<double>::infinity(), mid = 1.0;
        for (int it = 0; it < 64; ++it) {
            if (mass(mid) > target) {
                hi = mid;
                mid = 0.5 * (lo + hi);
            } else {
                lo = mid;
                mid = std::isinf(hi) ? mid * 2.0 : 0.5 * (lo + hi);
            }
        }
        g.sigma[i] = mid;
        g.sigma_residual[i] = std::abs(mass(mid) - target);

        for (auto j : cand) {
            const double w = std::exp(-std::max(0.0, d(i, j) - rho) / mid);
            const auto a = static_cast<std::uint32_t>(std::min(i, j));
            const auto b = static_cast<std::uint32_t>(std::max(i, j));
            auto& slot = directed[{a, b}];
            (i == a ? slot.first : slot.second) = w;
        }
    }

    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& [key, w] : directed) {
        const double sym = w.first + w.second - w.first * w.second;
        if (sym <= 0.0) continue;
        g.edges.push_back({key.first, key.second, sym});
        parent[find(key.first)] = find(key.second);
    }
    for (std::size_t i = 0; i < n; ++i)
        if (find(i) != find(0)) g.connected = false;
    return g;
}

std::vector<std::size_t> canonical_order(const std::vector<std::string>& ids, std::size_t n) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    if (ids.size() == n) {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
    }
    return order;
}

double clip(double v) { return std::clamp(v, -4.0, 4.0); }

}  // namespace

FuzzyGraph fuzzy_graph(const DistanceMatrix& m, std::size_t n_neighbors) {
    if (n_neighbors < 2 || m.size() <= n_neighbors)
        throw InvalidArgument("fuzzy_graph: need 2 <= n_neighbors < n");
    return build_graph(m, m.size(), n_neighbors);
}

Embedding embed(const DistanceMatrix& m, const EmbeddingParams& params) {
    const std::size_t n = m.size();
    if (params.n_neighbors < 2 || n <= params.n_neighbors)
        throw InvalidArgument("embed: need 2 <= n_neighbors < n (n = " + std::to_string(n) + ")");
    if (!(params.min_dist > 0.0)) throw InvalidArgument("embed: min_dist must be > 0");

    std::vector<std::string> ids = m.ids();
    if (ids.size() != n) {
        ids.clear();
        for (std::size_t i = 0; i < n; ++i) ids.push_back(std::to_string(i));
    }
    const std::set<std::string> unique(ids.begin(), ids.end());
    const auto order = canonical_order(unique.size() == n ? ids : std::vector<std::string>{}, n);

    Embedding out;
    out.ids = m.ids().size() == n ? m.ids() : ids;
    out.params = params;
    const PermutedView view{m, order};
    const FuzzyGraph g = build_graph(view, n, params.n_neighbors);
    if (!g.connected) out.warnings.push_back("k-nearest-neighbor graph is disconnected");

    const auto [a, b] = fit_layout_curve(params.min_dist, params.spread);
    out.curve_a = a;
    out.curve_b = b;

    // per-point streams keyed by patient id
    std::vector<Rng> rngs;
    rngs.reserve(n);
    std::vector<std::array<double, 2>> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        rngs.emplace_back(stream_seed(params.seed, ids[order[i]]));
        y[i] = {rngs[i].uniform(-10.0, 10.0), rngs[i].uniform(-10.0, 10.0)};
    }

    struct Directed {
        std::uint32_t head, tail;
        double weight;
    };
    std::vector<Directed> edges;
    double max_w = 0.0;
    for (const auto& e : g.edges) max_w = std::max(max_w, e.weight);
    for (const auto& e : g.edges) {
        if (e.weight < max_w / params.n_epochs) continue;
        edges.push_back({e.i, e.j, e.weight});
        edges.push_back({e.j, e.i, e.weight});
    }
    std::sort(edges.begin(), edges.end(),
              [](const Directed& l, const Directed& r) { return l.head < r.head || (l.head == r.head && l.tail < r.tail); });

    const std::size_t ne = edges.size();
    std::vector<double> eps(ne), next_sample(ne), eps_neg(ne), next_neg(ne);
    for (std::size_t e = 0; e < ne; ++e) {
        eps[e] = max_w / edges[e].weight;
        next_sample[e] = eps[e];
        eps_neg[e] = params.negative_samples > 0 ? eps[e] / params.negative_samples : 0.0;
        next_neg[e] = eps_neg[e];
    }

    for (int epoch = 0; epoch < params.n_epochs; ++epoch) {
        const double alpha = 1.0 - static_cast<double>(epoch) / params.n_epochs;
        for (std::size_t e = 0; e < ne; ++e) {
            if (next_sample[e] > epoch) continue;
            const std::size_t j = edges[e].head, k = edges[e].tail;
            auto& yj = y[j];
            auto& yk = y[k];
            double dx = yj[0] - yk[0], dy = yj[1] - yk[1];
            double d2 = dx * dx + dy * dy;
            if (d2 > 0.0) {
                const double coeff = -2.0 * a * b * std::pow(d2, b - 1.0) / (a * std::pow(d2, b) + 1.0);
                const double gx = clip(coeff * dx) * alpha, gy = clip(coeff * dy) * alpha;
                yj[0] += gx;
                yj[1] += gy;
                yk[0] -= gx;
                yk[1] -= gy;
            }
            next_sample[e] += eps[e];

            if (params.negative_samples <= 0) continue;
            const int n_neg = std::max(0, static_cast<int>((epoch - next_neg[e]) / eps_neg[e]));
            for (int p = 0; p < n_neg; ++p) {
                const std::size_t r = rngs[j].index(n);
                if (r == j) continue;
                dx = yj[0] - y[r][0];
                dy = yj[1] - y[r][1];
                d2 = dx * dx + dy * dy;
                if (d2 <= 0.0) continue;
                const double coeff = 2.0 * b / ((0.001 + d2) * (a * std::pow(d2, b) + 1.0));
                yj[0] += clip(coeff * dx) * alpha;
                yj[1] += clip(coeff * dy) * alpha;
            }
            next_neg[e] += n_neg * eps_neg[e];
        }
    }

    out.coords.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.coords[order[i]] = y[i];
    return out;
}

}  // namespace progclust
