#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "progclust/numeric.hpp"

using namespace progclust::numeric;

TEST_CASE("dense solve") {
    std::vector<double> a{2, 1, -1, -3, -1, 2, -2, 1, 2};
    std::vector<double> b{8, -11, -3};
    REQUIRE(solve_dense(a, b));
    CHECK(b[0] == doctest::Approx(2.0));
    CHECK(b[1] == doctest::Approx(3.0));
    CHECK(b[2] == doctest::Approx(-1.0));
    std::vector<double> singular{1, 2, 2, 4};
    std::vector<double> rhs{1, 2};
    CHECK_FALSE(solve_dense(singular, rhs));
}

TEST_CASE("type-7 quantiles") {
    const std::vector<double> v{1, 2, 3, 4};
    CHECK(quantile(v, 0.0) == 1.0);
    CHECK(quantile(v, 1.0) == 4.0);
    CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
    CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
    CHECK(quantile(v, 0.75) == doctest::Approx(3.25));
    const std::vector<double> shuffled{30, 10, 20, 50, 40};
    CHECK(quantile(shuffled, 0.25) == 20.0);
    CHECK(quantile(shuffled, 0.9) == doctest::Approx(46.0));
    const std::vector<double> one{7};
    CHECK(quantile(one, 0.3) == 7.0);
}

TEST_CASE("average ranks and rank correlation") {
    const std::vector<double> v{10, 20, 20, 30, 5};
    const auto r = average_ranks(v);
    CHECK(r == std::vector<double>{2, 3.5, 3.5, 5, 1});
    const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 4, 8, 16, 32}, z{5, 4, 3, 2, 1}, c{1, 1, 1, 1, 1};
    CHECK(spearman(x, y) == doctest::Approx(1.0));
    CHECK(spearman(x, z) == doctest::Approx(-1.0));
    CHECK(pearson(x, c) == 0.0);
    CHECK(pearson(x, y) < 1.0);
}

TEST_CASE("pairwise summation accuracy") {
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    std::vector<double> v(100001);
    long double exact = 0.0L;
    for (auto& x : v) {
        x = u(gen);
        exact += x;
    }
    CHECK(std::abs(pairwise_sum(v) - static_cast<double>(exact)) < 1e-6);
    CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
}

TEST_CASE("incomplete gamma closed forms") {
    for (double x : {0.01, 0.5, 1.0, 2.0, 7.5, 30.0}) {
        CHECK(gamma_p(1.0, x) == doctest::Approx(1.0 - std::exp(-x)).epsilon(1e-12));
        CHECK(gamma_q(1.0, x) == doctest::Approx(std::exp(-x)).epsilon(1e-12));
        CHECK(gamma_p(0.5, x) == doctest::Approx(std::erf(std::sqrt(x))).epsilon(1e-12));
        CHECK(gamma_p(3.0, x) + gamma_q(3.0, x) == doctest::Approx(1.0).epsilon(1e-13));
    }
}

TEST_CASE("chi-square upper tail") {
    CHECK(chi2_sf(3.841458820694124, 1.0) == doctest::Approx(0.05).epsilon(1e-10));
    CHECK(chi2_sf(5.991464547107979, 2.0) == doctest::Approx(0.05).epsilon(1e-10));
    CHECK(chi2_sf(0.0, 1.0) == 1.0);
    for (double x : {0.1, 1.0, 4.0, 25.0, 60.0, 200.0}) {
        CHECK(chi2_sf(x, 1.0) == doctest::Approx(std::erfc(std::sqrt(x / 2.0))).epsilon(1e-10));
        CHECK(chi2_sf(x, 2.0) == doctest::Approx(std::exp(-x / 2.0)).epsilon(1e-10));
    }
    CHECK(chi2_sf(200.0, 1.0) > 0.0);
}

TEST_CASE("Levenberg-Marquardt recovers an exponential") {
    std::vector<double> t(20), y(20);
    for (int i = 0; i < 20; ++i) {
        t[i] = i * 0.25;
        y[i] = 3.0 * std::exp(-0.8 * t[i]);
    }
    auto model = [&](const std::vector<double>& p, std::vector<double>& r, std::vector<double>& j) {
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double e = std::exp(p[1] * t[i]);
            r[i] = p[0] * e - y[i];
            j[2 * i] = e;
            j[2 * i + 1] = p[0] * t[i] * e;
        }
    };
    const LmResult res = levenberg_marquardt(model, {1.0, 0.0}, t.size());
    CHECK(res.converged);
    CHECK(res.params[0] == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(res.params[1] == doctest::Approx(-0.8).epsilon(1e-6));
    CHECK(res.cost < 1e-12);
}

TEST_CASE("Levenberg-Marquardt never increases the cost") {
    auto rosen = [](const std::vector<double>& p, std::vector<double>& r, std::vector<double>& j) {
        r[0] = 10.0 * (p[1] - p[0] * p[0]);
        r[1] = 1.0 - p[0];
        j = {-20.0 * p[0], 10.0, -1.0, 0.0};
    };
    std::vector<double> r0(2), j0(4);
    rosen({-1.2, 1.0}, r0, j0);
    const double start = r0[0] * r0[0] + r0[1] * r0[1];
    LmOptions opts;
    opts.max_iterations = 1000;
    const LmResult res = levenberg_marquardt(rosen, {-1.2, 1.0}, 2, opts);
    CHECK(res.cost <= start);
    CHECK(res.params[0] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(res.params[1] == doctest::Approx(1.0).epsilon(1e-5));
}
