#pragma once

// Brute-force reference implementations used to check the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <vector>

#include "progclust/weaksup.hpp"

namespace oracle {

// ---- label model ----------------------------------------------------------

struct LabelInstance {
    progclust::LabelMatrix lm;
    std::vector<int> truth;  // 1 = together
};

inline LabelInstance simulate_votes(std::size_t rows, double prior, const std::vector<double>& propensity,
                                    const std::vector<double>& accuracy, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    LabelInstance inst;
    inst.lm.rows = rows;
    inst.lm.columns.assign(accuracy.size(), std::vector<progclust::Vote>(rows));
    for (std::size_t f = 0; f < accuracy.size(); ++f) inst.lm.variables.push_back(f);
    inst.lm.q1.assign(accuracy.size(), 0.0);
    inst.lm.q3.assign(accuracy.size(), 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const bool together = u(gen) < prior;
        inst.truth.push_back(together ? 1 : 0);
        for (std::size_t f = 0; f < accuracy.size(); ++f) {
            if (u(gen) >= propensity[f]) {
                inst.lm.columns[f][r] = progclust::Vote::kAbstain;
                continue;
            }
            const bool correct = u(gen) < accuracy[f];
            const bool says_together = correct ? together : !together;
            inst.lm.columns[f][r] = says_together ? progclust::Vote::kTogether : progclust::Vote::kSeparate;
        }
    }
    return inst;
}

// Observed-data log-likelihood, summed row by row.
inline double label_loglik(const progclust::LabelMatrix& lm, double prior, const std::vector<double>& propensity,
                           const std::vector<double>& accuracy) {
    double ll = 0.0;
    for (std::size_t r = 0; r < lm.rows; ++r) {
        double pt = prior, ps = 1.0 - prior, abst = 1.0;
        for (std::size_t f = 0; f < lm.functions(); ++f) {
            const auto v = lm.columns[f][r];
            if (v == progclust::Vote::kAbstain) {
                abst *= 1.0 - propensity[f];
                continue;
            }
            abst *= propensity[f];
            const bool t = v == progclust::Vote::kTogether;
            pt *= t ? accuracy[f] : 1.0 - accuracy[f];
            ps *= t ? 1.0 - accuracy[f] : accuracy[f];
        }
        ll += std::log(abst) + std::log(pt + ps);
    }
    return ll;
}

struct GridMax {
    double loglik = -std::numeric_limits<double>::infinity();
    double prior = 0.0;
    std::vector<double> accuracy;
};

// Maximum of the log-likelihood over a product grid: `prior_grid` for the
// prior and `acc_grids[f]` for each accuracy (each sorted ascending), with
// propensities at their closed-form optimum (empirical non-abstain rate). For
// fixed accuracies the log-likelihood is concave in the prior, so on a uniform
// prior grid the maximum is at a grid point adjacent to the continuous
// maximizer, found by bisection on the derivative.
inline GridMax label_grid_search(const progclust::LabelMatrix& lm, const std::vector<double>& prior_grid,
                                 const std::vector<std::vector<double>>& acc_grids) {
    const std::size_t nf = lm.functions();
    double abst_term = 0.0;
    for (std::size_t f = 0; f < nf; ++f) {
        double votes = 0.0;
        for (auto v : lm.columns[f]) votes += v != progclust::Vote::kAbstain;
        const double p = votes / static_cast<double>(lm.rows);
        if (votes > 0) abst_term += votes * std::log(p);
        if (votes < lm.rows) abst_term += (lm.rows - votes) * std::log(1.0 - p);
    }
    // vote patterns: per function 0 = together, 1 = separate, 2 = abstain
    std::map<std::vector<int>, double> patterns;
    for (std::size_t r = 0; r < lm.rows; ++r) {
        std::vector<int> key(nf);
        for (std::size_t f = 0; f < nf; ++f) key[f] = static_cast<int>(lm.columns[f][r]);
        patterns[key] += 1.0;
    }
    std::vector<const std::vector<int>*> keys;
    std::vector<double> counts;
    for (const auto& [k, c] : patterns) {
        keys.push_back(&k);
        counts.push_back(c);
    }
    const std::size_t np = keys.size();
    const int last = static_cast<int>(prior_grid.size()) - 1;
    const double g0 = prior_grid.front(), gspan = prior_grid.back() - prior_grid.front();
    std::vector<double> a(np), b(np);
    GridMax best;
    std::vector<std::size_t> idx(nf, 0);
    const auto eval = [&](double pi) {
        double s = 0.0;
        for (std::size_t k = 0; k < np; ++k) s += counts[k] * std::log(pi * a[k] + (1.0 - pi) * b[k]);
        return s;
    };
    const auto slope = [&](double pi) {
        double s = 0.0;
        for (std::size_t k = 0; k < np; ++k) s += counts[k] * (a[k] - b[k]) / (pi * a[k] + (1.0 - pi) * b[k]);
        return s;
    };
    while (true) {
        for (std::size_t k = 0; k < np; ++k) {
            double pt = 1.0, ps = 1.0;
            for (std::size_t f = 0; f < nf; ++f) {
                const int v = (*keys[k])[f];
                if (v == 2) continue;
                const double acc = acc_grids[f][idx[f]];
                pt *= v == 0 ? acc : 1.0 - acc;
                ps *= v == 0 ? 1.0 - acc : acc;
            }
            a[k] = pt;
            b[k] = ps;
        }
        double lo = std::max(g0, 1e-15), hi = std::min(prior_grid.back(), 1.0 - 1e-15);
        if (!(slope(lo) > 0.0)) {
            hi = lo;
        } else if (slope(hi) > 0.0) {
            lo = hi;
        } else {
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                (slope(mid) > 0.0 ? lo : hi) = mid;
            }
        }
        const int below = gspan > 0 ? std::clamp(static_cast<int>(std::floor((lo - g0) / gspan * last)), 0, last) : 0;
        for (int i : {below - 1, below, below + 1, below + 2}) {
            if (i < 0 || i > last) continue;
            const double ll = eval(prior_grid[i]);
            if (ll > best.loglik) {
                best.loglik = ll;
                best.prior = prior_grid[i];
                best.accuracy.resize(nf);
                for (std::size_t f = 0; f < nf; ++f) best.accuracy[f] = acc_grids[f][idx[f]];
            }
        }
        std::size_t f = 0;
        while (f < nf && ++idx[f] == acc_grids[f].size()) idx[f++] = 0;
        if (f == nf) break;
    }
    best.loglik += abst_term;
    return best;
}

inline std::vector<double> uniform_grid(double lo, double hi, double step) {
    std::vector<double> g;
    const int n = static_cast<int>(std::lround((hi - lo) / step));
    for (int i = 0; i <= n; ++i) g.push_back(lo + (hi - lo) * i / n);
    return g;
}

// Dense grid over [0, 1] at `step` for the prior and every accuracy.
inline GridMax label_grid_search(const progclust::LabelMatrix& lm, double step = 0.01) {
    const auto g = uniform_grid(0.0, 1.0, step);
    return label_grid_search(lm, g, std::vector<std::vector<double>>(lm.functions(), g));
}

// Finer grid (step `fine`) over a +/- `radius` box around a coarse optimum.
inline GridMax label_grid_refine(const progclust::LabelMatrix& lm, const GridMax& coarse, double radius = 0.01,
                                 double fine = 0.0005) {
    const auto box = [&](double c) {
        return uniform_grid(std::max(0.0, c - radius), std::min(1.0, c + radius), fine);
    };
    std::vector<std::vector<double>> acc;
    for (double c : coarse.accuracy) acc.push_back(box(c));
    return label_grid_search(lm, box(coarse.prior), acc);
}

// ---- survival --------------------------------------------------------------

struct LogRank {
    double statistic = 0.0;
    double p_value = 1.0;
};

// Log-rank statistic by direct summation over the distinct event times,
// counting the risk sets from scratch at each time.
inline LogRank logrank_direct(const std::vector<double>& t1, const std::vector<int>& e1, const std::vector<double>& t2,
                              const std::vector<int>& e2) {
    std::vector<double> times;
    for (std::size_t i = 0; i < t1.size(); ++i)
        if (e1[i]) times.push_back(t1[i]);
    for (std::size_t i = 0; i < t2.size(); ++i)
        if (e2[i]) times.push_back(t2[i]);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    long double o_minus_e = 0.0L, var = 0.0L;
    for (double t : times) {
        long double n1 = 0, n2 = 0, d1 = 0, d2 = 0;
        for (std::size_t i = 0; i < t1.size(); ++i) {
            n1 += t1[i] >= t;
            d1 += t1[i] == t && e1[i];
        }
        for (std::size_t i = 0; i < t2.size(); ++i) {
            n2 += t2[i] >= t;
            d2 += t2[i] == t && e2[i];
        }
        const long double n = n1 + n2, d = d1 + d2;
        o_minus_e += d1 - d * n1 / n;
        if (n > 1) var += d * (n1 / n) * (1 - n1 / n) * (n - d) / (n - 1);
    }
    LogRank r;
    if (var <= 0) return r;
    r.statistic = static_cast<double>(o_minus_e * o_minus_e / var);
    r.p_value = std::erfc(std::sqrt(r.statistic / 2.0));
    return r;
}

// ---- clustering ------------------------------------------------------------

// Optimal k-medoids cost by enumerating every k-subset of medoids.
inline double pam_exhaustive(const std::vector<std::vector<double>>& d, int k) {
    const int n = static_cast<int>(d.size());
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> pick(k);
    for (int i = 0; i < k; ++i) pick[i] = i;
    while (true) {
        double cost = 0.0;
        for (int p = 0; p < n; ++p) {
            double m = std::numeric_limits<double>::infinity();
            for (int c : pick) m = std::min(m, d[p][c]);
            cost += m;
        }
        best = std::min(best, cost);
        int i = k - 1;
        while (i >= 0 && pick[i] == n - k + i) --i;
        if (i < 0) break;
        ++pick[i];
        for (int j = i + 1; j < k; ++j) pick[j] = pick[j - 1] + 1;
    }
    return best;
}

// ---- linear classifier -----------------------------------------------------

struct PlantedRule {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
};

// Points in the unit cube labeled +1 iff coordinate `var` exceeds 0.5, with a
// margin band removed so the classes are linearly separable.
inline PlantedRule planted_rule(std::size_t rows, std::size_t dim, std::size_t var, double margin, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PlantedRule out;
    while (out.x.size() < rows) {
        std::vector<double> row(dim);
        for (auto& v : row) v = u(gen);
        if (std::abs(row[var] - 0.5) < margin) continue;
        out.y.push_back(row[var] > 0.5 ? 1 : -1);
        out.x.push_back(std::move(row));
    }
    return out;
}

// ---- synthetic point sets ----------------------------------------------------

struct Blobs {
    std::vector<std::vector<double>> points;
    std::vector<int> labels;
};

// Isotropic Gaussian blobs, `per` points around each center, interleaved so
// that cluster membership is not encoded in the row order.
inline Blobs make_blobs(const std::vector<std::vector<double>>& centers, std::size_t per, double sd,
                        std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> n(0.0, sd);
    Blobs out;
    for (std::size_t i = 0; i < per; ++i)
        for (std::size_t c = 0; c < centers.size(); ++c) {
            std::vector<double> p = centers[c];
            for (auto& v : p) v += n(gen);
            out.points.push_back(std::move(p));
            out.labels.push_back(static_cast<int>(c));
        }
    return out;
}

// Adjusted Rand index from explicit pair counting over all n(n-1)/2 pairs.
inline double adjusted_rand_pairs(const std::vector<int>& a, const std::vector<int>& b) {
    long double both = 0, in_a = 0, in_b = 0, total = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            const bool sa = a[i] == a[j], sb = b[i] == b[j];
            both += sa && sb;
            in_a += sa;
            in_b += sb;
            total += 1;
        }
    const long double expected = in_a * in_b / total;
    const long double max_index = (in_a + in_b) / 2;
    if (max_index == expected) return 1.0;
    return static_cast<double>((both - expected) / (max_index - expected));
}

}  // namespace oracle
