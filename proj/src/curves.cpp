#include "progclust/curves.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "progclust/error.hpp"
#include "progclust/numeric.hpp"
#include "progclust/parallel.hpp"
#include "progclust/rng.hpp"

namespace progclust {

double eval_sigmoid(const SigmoidFit& fit, double day) {
    return fit.b / (1.0 + std::exp(fit.m * (day - fit.a))) + fit.c;
}

namespace {

// 1 / (1 + e^u) without overflow.
double logistic_neg(double u) {
    if (u >= 0.0) {
        const double e = std::exp(-u);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(u));
}

struct SigmoidModel {
    std::span<const double> x;
    std::span<const double> y;

    // params: b, m, a, c
    void operator()(const std::vector<double>& p, std::vector<double>& r, std::vector<double>& jac) const {
        const double b = p[0], m = p[1], a = p[2], c = p[3];
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double u = m * (x[i] - a);
            const double s = logistic_neg(u);  // 1/(1+e^u)
            const double ds = s * (1.0 - s);   // e^u/(1+e^u)^2
            r[i] = b * s + c - y[i];
            double* row = &jac[i * 4];
            row[0] = s;
            row[1] = -b * (x[i] - a) * ds;
            row[2] = b * m * ds;
            row[3] = 1.0;
        }
    }
};

}  // namespace

SigmoidFit fit_sigmoid(std::span<const double> days, std::span<const double> scores, std::uint64_t seed,
                       const FitOptions& opts) {
    if (days.size() != scores.size()) throw InvalidArgument("fit_sigmoid: days/scores length mismatch");
    if (days.empty()) throw InvalidArgument("fit_sigmoid: no points");
    if (opts.restarts < 1) throw InvalidArgument("fit_sigmoid: restarts must be >= 1");

    std::vector<std::size_t> order(days.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return days[i] < days[j] || (days[i] == days[j] && scores[i] < scores[j]);
    });
    std::vector<double> x, y;
    for (auto i : order) {
        x.push_back(days[i]);
        y.push_back(scores[i]);
    }

    const std::size_t n = x.size();
    if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); })) {
        SigmoidFit flat;
        flat.c = y.front();
        flat.converged = true;
        return flat;
    }

    const std::vector<double> init{y.front() - y.back(), 0.01, 0.5 * (x.front() + x.back()), y.back()};
    numeric::LmOptions lm;
    lm.max_iterations = opts.max_iterations;
    lm.relative_tolerance = opts.relative_tolerance;
    const SigmoidModel model{x, y};

    Rng rng(seed);
    SigmoidFit best;
    best.rmse = std::numeric_limits<double>::infinity();
    for (int r = 0; r < opts.restarts; ++r) {
        std::vector<double> start = init;
        if (r > 0)
            for (double& v : start) v *= std::exp(rng.uniform(std::log(0.5), std::log(2.0)));
        const auto res = numeric::levenberg_marquardt(model, start, n, lm);
        const double rmse = std::sqrt(res.cost / static_cast<double>(n));
        if (std::isfinite(rmse) && rmse < best.rmse) {
            best.b = res.params[0];
            best.m = res.params[1];
            best.a = res.params[2];
            best.c = res.params[3];
            best.rmse = rmse;
            best.converged = res.converged;
            best.restart_index = r;
        }
    }
    if (!std::isfinite(best.rmse)) {
        // every start diverged; fall back to the initial guess
        best = SigmoidFit{init[0], init[1], init[2], init[3], 0.0, false, 0};
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) ss += std::pow(eval_sigmoid(best, x[i]) - y[i], 2);
        best.rmse = std::sqrt(ss / static_cast<double>(n));
    }
    return best;
}

SigmoidFit fit_sigmoid(const Sequence& seq, std::uint64_t seed, const FitOptions& opts) {
    std::vector<double> days, scores;
    for (const auto& v : seq.visits) {
        days.push_back(v.day);
        scores.push_back(v.total_score);
    }
    return fit_sigmoid(days, scores, stream_seed(seed, seq.patient_id), opts);
}

double invert_for_score(const SigmoidFit& fit, double target, double horizon_days) {
    if (eval_sigmoid(fit, 0.0) <= target) return 0.0;
    // Only a decreasing curve can come down to the target.
    if (fit.b == 0.0 || fit.m == 0.0 || (fit.b > 0.0) != (fit.m > 0.0)) return horizon_days;
    const double ratio = fit.b / (target - fit.c) - 1.0;
    if (!(ratio > 0.0) || !std::isfinite(ratio)) return horizon_days;
    const double day = fit.a + std::log(ratio) / fit.m;
    if (!std::isfinite(day) || day > horizon_days) return horizon_days;
    return std::max(day, 0.0);
}

std::vector<SigmoidFit> fit_cohort(const Cohort& cohort, std::uint64_t seed, const FitOptions& opts,
                                   unsigned threads) {
    std::vector<SigmoidFit> fits(cohort.size());
    parallel_for(cohort.size(), threads, [&](std::size_t i) { fits[i] = fit_sigmoid(cohort[i], seed, opts); });
    return fits;
}

}  // namespace progclust
