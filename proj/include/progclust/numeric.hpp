#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace progclust::numeric {

/// Solves the dense system A x = b in place (Gaussian elimination, partial
/// pivoting). A is n x n row-major. Returns false when A is singular.
bool solve_dense(std::vector<double> a, std::vector<double>& b);

/// Type-7 quantile (linear interpolation between order statistics).
/// `sorted` must be ascending and non-empty; q in [0, 1].
double quantile_sorted(std::span<const double> sorted, double q);

/// Type-7 quantile of unsorted data (copies and sorts).
double quantile(std::span<const double> values, double q);

/// 1-based ranks with ties replaced by their average rank.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation; 0 when either input has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// Spearman rank correlation (Pearson on average ranks).
double spearman(std::span<const double> x, std::span<const double> y);

/// Pairwise (cascade) summation; result independent of thread schedule.
double pairwise_sum(std::span<const double> values);

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed
/// directly (series for x < a + 1, continued fraction otherwise).
double gamma_q(double a, double x);

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
double chi2_sf(double x, double df);

struct LmOptions {
    int max_iterations = 200;
    double relative_tolerance = 1e-10;  // on the cost change of an accepted step
    double initial_damping = 1e-3;
    double damping_up = 10.0;
    double damping_down = 0.1;
};

struct LmResult {
    std::vector<double> params;
    double cost = 0.0;  // sum of squared residuals
    int iterations = 0;
    bool converged = false;
};

/// Damped Gauss-Newton (Levenberg-Marquardt with Marquardt diagonal scaling).
///
/// `model(params, residuals, jacobian)` fills `residuals` (size m) and the
/// row-major m x p `jacobian` of d residual_i / d param_j.
template <class Model>
LmResult levenberg_marquardt(Model&& model, std::vector<double> params, std::size_t m,
                             const LmOptions& opts = {}) {
    const std::size_t p = params.size();
    std::vector<double> r(m), jac(m * p), r_try(m), jac_try(m * p);

    auto sum_sq = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return s;
    };

    model(params, r, jac);
    double cost = sum_sq(r);
    double lambda = opts.initial_damping;

    LmResult out;
    if (!std::isfinite(cost)) {
        out.params = std::move(params);
        out.cost = cost;
        return out;
    }

    std::vector<double> jtj(p * p), jtr(p), trial(p);
    int it = 0;
    bool converged = cost == 0.0;
    while (!converged && it < opts.max_iterations) {
        ++it;
        std::fill(jtj.begin(), jtj.end(), 0.0);
        std::fill(jtr.begin(), jtr.end(), 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const double* row = &jac[i * p];
            for (std::size_t a = 0; a < p; ++a) {
                jtr[a] += row[a] * r[i];
                for (std::size_t b = a; b < p; ++b) jtj[a * p + b] += row[a] * row[b];
            }
        }
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < a; ++b) jtj[a * p + b] = jtj[b * p + a];

        bool accepted = false;
        while (!accepted) {
            std::vector<double> lhs = jtj;
            for (std::size_t a = 0; a < p; ++a) lhs[a * p + a] += lambda * std::max(jtj[a * p + a], 1e-12);
            std::vector<double> step(jtr.size());
            for (std::size_t a = 0; a < p; ++a) step[a] = -jtr[a];
            if (solve_dense(std::move(lhs), step)) {
                for (std::size_t a = 0; a < p; ++a) trial[a] = params[a] + step[a];
                model(trial, r_try, jac_try);
                const double c = sum_sq(r_try);
                if (std::isfinite(c) && c <= cost) {
                    const double rel = (cost - c) / std::max(cost, 1e-300);
                    params = trial;
                    r.swap(r_try);
                    jac.swap(jac_try);
                    cost = c;
                    lambda = std::max(lambda * opts.damping_down, 1e-15);
                    accepted = true;
                    if (rel < opts.relative_tolerance || cost == 0.0) converged = true;
                    break;
                }
            }
            lambda *= opts.damping_up;
            if (lambda > 1e16) {
                // no descent direction left: a stationary point
                converged = true;
                break;
            }
        }
    }

    out.params = std::move(params);
    out.cost = cost;
    out.iterations = it;
    out.converged = converged;
    return out;
}

}  // namespace progclust::numeric
