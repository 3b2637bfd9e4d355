#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "progclust/error.hpp"
#include "progclust/evalstats.hpp"
#include "progclust/numeric.hpp"

using namespace progclust;

namespace {

SurvivalGroup random_group(std::mt19937_64& gen, std::size_t n, double scale) {
    std::uniform_int_distribution<int> day(1, 40);  // coarse grid forces ties
    std::bernoulli_distribution event(0.7);
    SurvivalGroup g;
    for (std::size_t i = 0; i < n; ++i) {
        g.times.push_back(std::round(day(gen) * scale));
        g.events.push_back(event(gen) ? 1 : 0);
    }
    return g;
}

double silhouette_direct(const DistanceMatrix& m, const std::vector<int>& labels, std::size_t i) {
    std::map<int, std::pair<double, int>> acc;
    for (std::size_t j = 0; j < m.size(); ++j) {
        if (j == i) continue;
        acc[labels[j]].first += m(i, j);
        acc[labels[j]].second += 1;
    }
    if (acc.find(labels[i]) == acc.end()) return 0.0;
    const double a = acc[labels[i]].first / acc[labels[i]].second;
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [l, v] : acc)
        if (l != labels[i]) b = std::min(b, v.first / v.second);
    return (b - a) / std::max(a, b);
}

}  // namespace

TEST_CASE("log-rank agrees with direct risk-set summation") {
    std::mt19937_64 gen(2024);
    std::uniform_int_distribution<int> size(3, 60);
    std::uniform_real_distribution<double> scale(0.8, 1.5);
    for (int inst = 0; inst < 100; ++inst) {
        const auto g1 = random_group(gen, size(gen), 1.0);
        const auto g2 = random_group(gen, size(gen), scale(gen));
        const auto fast = logrank_pair(g1, g2);
        const auto slow = oracle::logrank_direct(g1.times, g1.events, g2.times, g2.events);
        CHECK(std::abs(fast.statistic - slow.statistic) <= 1e-10 * std::max(1.0, slow.statistic));
        CHECK(std::abs(fast.p_value - slow.p_value) <= 1e-10);
    }
}

TEST_CASE("identical groups are not separated") {
    const SurvivalGroup g{{5, 8, 8, 12, 20, 31}, {1, 1, 0, 1, 0, 1}};
    const auto r = logrank_pair(g, g);
    CHECK(r.statistic == 0.0);
    CHECK(r.p_value == 1.0);
    const SurvivalGroup censored{{3, 4}, {0, 0}};
    CHECK(logrank_pair(censored, censored).p_value == 1.0);
}

TEST_CASE("log-rank on a small hand example") {
    // group 1 dies at 1 and 2, group 2 at 3 and 4: O1 = 2, E1 = 1/2 + 1/3
    const SurvivalGroup a{{1, 2}, {1, 1}}, b{{3, 4}, {1, 1}};
    const auto r = logrank_pair(a, b);
    CHECK(r.observed == 2.0);
    CHECK(r.expected == doctest::Approx(0.5 + 1.0 / 3.0));
    CHECK(r.variance == doctest::Approx(0.25 + 2.0 / 9.0));
    const double expect = std::pow(2.0 - (0.5 + 1.0 / 3.0), 2) / (0.25 + 2.0 / 9.0);
    CHECK(r.statistic == doctest::Approx(expect));
    CHECK_THROWS_AS(logrank_pair(a, SurvivalGroup{}), InvalidArgument);
}

TEST_CASE("chi-square critical value") {
    CHECK(std::abs(numeric::chi2_sf(3.841, 1.0) - 0.05) <= 5e-4);
}

TEST_CASE("survival separation reports the weakest pair") {
    const std::vector<int> labels{0, 0, 0, 1, 1, 1, 2, 2, 2};
    const std::vector<double> times{1, 2, 3, 10, 11, 12, 11, 12, 13};
    const std::vector<int> events(9, 1);
    const auto s = survival_separation(labels, times, events);
    CHECK(s.comparisons == 3);
    SurvivalGroup g1{{10, 11, 12}, {1, 1, 1}}, g2{{11, 12, 13}, {1, 1, 1}};
    const auto weakest = logrank_pair(g1, g2);
    CHECK(s.max_p == doctest::Approx(weakest.p_value));
    CHECK(s.min_lrs == doctest::Approx(weakest.statistic));
    CHECK_THROWS_AS(survival_separation(std::vector<int>{0, 0}, std::vector<double>{1, 2}, std::vector<int>{1, 1}),
                    InvalidArgument);
}

TEST_CASE("Kaplan-Meier hand example") {
    const std::vector<double> t{1, 2, 2, 3, 4};
    const std::vector<int> e{1, 1, 0, 1, 0};
    const auto c = kaplan_meier(t, e);
    REQUIRE(c.knots.size() == 4);
    CHECK(c.knots[0].time == 0.0);
    CHECK(c.knots[0].survival == 1.0);
    CHECK(c.knots[1].survival == doctest::Approx(0.8));
    CHECK(c.knots[2].survival == doctest::Approx(0.6));
    CHECK(c.knots[2].at_risk == 4);
    CHECK(c.knots[3].survival == doctest::Approx(0.3));
    CHECK(c.knots[3].at_risk == 2);
    CHECK(c.at(0.5) == 1.0);
    CHECK(c.at(1.0) == doctest::Approx(0.8));
    CHECK(c.at(3.5) == doctest::Approx(0.3));
    CHECK(c.at(100.0) == doctest::Approx(0.3));
}

TEST_CASE("Kaplan-Meier is non-increasing and within [0, 1]") {
    std::mt19937_64 gen(3);
    const auto g = random_group(gen, 200, 1.0);
    const auto c = kaplan_meier(g.times, g.events);
    for (std::size_t i = 1; i < c.knots.size(); ++i) {
        CHECK(c.knots[i].survival <= c.knots[i - 1].survival);
        CHECK(c.knots[i].survival >= 0.0);
        CHECK(c.knots[i].time > c.knots[i - 1].time);
    }
}

TEST_CASE("silhouette matches the direct definition") {
    const auto blobs = oracle::make_blobs({{0, 0}, {4, 0}, {0, 4}}, 20, 1.2, 5);
    const auto m = distance_matrix(blobs.points, Measure::kEuclidean);
    const auto s = silhouette(m, blobs.labels);
    double mean = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double expect = silhouette_direct(m, blobs.labels, i);
        CHECK(s.values[i] == doctest::Approx(expect).epsilon(1e-12));
        mean += expect;
    }
    mean /= m.size();
    double var = 0.0;
    for (double v : s.values) var += (v - mean) * (v - mean);
    CHECK(s.mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(s.std == doctest::Approx(std::sqrt(var / m.size())).epsilon(1e-10));
}

TEST_CASE("silhouette edge cases") {
    std::vector<std::vector<double>> pts{{0}, {1}, {10}, {11}, {30}};
    const auto m = distance_matrix(pts, Measure::kManhattan);
    const auto s = silhouette(m, std::vector<int>{0, 0, 1, 1, 2});
    CHECK(s.values[4] == 0.0);
    CHECK(s.values[0] == doctest::Approx(1.0 - 1.0 / 10.5));
    CHECK_THROWS_AS(silhouette(m, std::vector<int>{0, 0, 0, 0, 0}), InvalidArgument);
    CHECK_THROWS_AS(silhouette(m, std::vector<int>{0, 1}), InvalidArgument);
}

TEST_CASE("adjusted Rand index matches pair counting") {
    std::mt19937_64 gen(8);
    std::uniform_int_distribution<int> lab(0, 3);
    for (int t = 0; t < 50; ++t) {
        std::vector<int> a(40), b(40);
        for (auto& x : a) x = lab(gen);
        for (std::size_t i = 0; i < b.size(); ++i) b[i] = (t % 2 == 0) ? lab(gen) : (a[i] + 1) % 4;
        CHECK(adjusted_rand_index(a, b) == doctest::Approx(oracle::adjusted_rand_pairs(a, b)).epsilon(1e-12));
    }
    const std::vector<int> x{0, 0, 1, 1, 2}, y{5, 5, 3, 3, 9};
    CHECK(adjusted_rand_index(x, y) == 1.0);
}
