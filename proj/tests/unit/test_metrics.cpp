#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "progclust/error.hpp"
#include "progclust/metrics.hpp"
#include "test_util.hpp"

using namespace progclust;

namespace {

std::vector<std::vector<double>> random_points(std::size_t n, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
    for (auto& p : pts)
        for (auto& v : p) v = u(gen);
    return pts;
}

}  // namespace

TEST_CASE("hand-computed distances") {
    const std::vector<double> o{0, 0, 0}, one{1, 1, 1};
    CHECK(pair_distance(o, one, Measure::kManhattan).value == 3.0);
    CHECK(pair_distance(o, one, Measure::kEuclidean).value == doctest::Approx(std::sqrt(3.0)));
    const std::vector<double> v{0.3, 0.9, 0.1};
    CHECK(pair_distance(v, v, Measure::kCosine).value == doctest::Approx(0.0).epsilon(1e-15));
    const std::vector<double> e1{1, 0}, e2{0, 1}, d{2, 0};
    CHECK(pair_distance(e1, e2, Measure::kCosine).value == 1.0);
    CHECK(pair_distance(e1, d, Measure::kCosine).value == 0.0);
    const std::vector<double> w{0.5, 2.0, 1.0};
    CHECK(pair_distance(v, v, Measure::kWsd, w).value == 0.0);
    CHECK(pair_distance(o, v, Measure::kWsd, w).value == doctest::Approx(0.5 * 0.3 + 2.0 * 0.9 + 0.1));
}

TEST_CASE("cosine with zero-norm vectors is flagged") {
    const std::vector<double> z{0, 0}, x{1, 2};
    const auto both = pair_distance(z, z, Measure::kCosine);
    CHECK(both.flagged);
    CHECK(both.value == 0.0);
    const auto one = pair_distance(z, x, Measure::kCosine);
    CHECK(one.flagged);
    CHECK(one.value == 1.0);
    const auto m = distance_matrix({z, x, {3, 1}}, Measure::kCosine);
    CHECK(m.flagged == 2);
}

TEST_CASE("argument errors") {
    const std::vector<double> a{1, 2}, b{1, 2, 3};
    CHECK_THROWS_AS(pair_distance(a, b, Measure::kManhattan), InvalidArgument);
    CHECK_THROWS_AS(pair_distance(a, a, Measure::kWsd), InvalidArgument);
    CHECK_THROWS_AS(distance_matrix({a}, Measure::kManhattan), InvalidArgument);
}

TEST_CASE("matrix shape, symmetry and duplicated patients") {
    auto pts = random_points(25, 4, 3);
    pts.push_back(pts[7]);
    const auto m = distance_matrix(pts, Measure::kEuclidean);
    REQUIRE(m.size() == 26);
    CHECK(m(7, 25) == 0.0);
    for (std::size_t i = 0; i < m.size(); ++i) {
        CHECK(m(i, i) == 0.0);
        for (std::size_t j = 0; j < m.size(); ++j) CHECK(m(i, j) == m(j, i));
    }
}

TEST_CASE("matrix fill does not depend on the thread count") {
    const auto pts = random_points(80, 5, 8);
    const auto a = distance_matrix(pts, Measure::kCosine, {}, {}, 1);
    const auto b = distance_matrix(pts, Measure::kCosine, {}, {}, 4);
    CHECK(a.data() == b.data());
}

TEST_CASE("Manhattan equals Euclidean exactly when pairs differ in one variable") {
    std::mt19937_64 gen(21);
    std::uniform_int_distribution<int> level(0, 2);
    for (int t = 0; t < 5000; ++t) {
        std::vector<double> x(4), y(4);
        for (auto& v : x) v = level(gen) * 0.5;
        for (auto& v : y) v = level(gen) * 0.5;
        int differing = 0;
        for (std::size_t i = 0; i < 4; ++i) differing += x[i] != y[i];
        const double man = pair_distance(x, y, Measure::kManhattan).value;
        const double euc = pair_distance(x, y, Measure::kEuclidean).value;
        CHECK((differing <= 1) == (man == euc));
    }
}

TEST_CASE("Minkowski matrices are exhaustive metrics") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto pts = random_points(50, 7, seed);
        for (Measure ms : {Measure::kManhattan, Measure::kEuclidean}) {
            const auto m = distance_matrix(pts, ms);
            const MetricAudit a = audit_metric(m);
            CHECK(a.exhaustive);
            CHECK(a.triples == 50ull * 49 * 48);
            CHECK(a.triangle_pct == 100.0);
            CHECK(a.positivity_pct == 100.0);
            CHECK(a.symmetry_pct == 100.0);
            CHECK(a.identity_pct == 100.0);
            CHECK(a.max_violation == 0.0);
        }
    }
}

TEST_CASE("crafted triangle violation") {
    DistanceMatrix m(3, Measure::kWsd);
    m.set(0, 2, 10.0);
    m.set(0, 1, 1.0);
    m.set(1, 2, 1.0);
    const MetricAudit a = audit_metric(m);
    CHECK(a.exhaustive);
    CHECK(a.triples == 6);
    CHECK(a.violations == 2);
    CHECK(a.triangle_pct < 100.0);
    CHECK(a.triangle_pct == doctest::Approx(100.0 * 4 / 6));
    CHECK(a.max_violation == 8.0);
    CHECK(a.violation_bands[2] == 2);
}

TEST_CASE("sampled audit draws the requested number of triples") {
    const auto m = distance_matrix(random_points(120, 3, 5), Measure::kManhattan);
    const MetricAudit a = audit_metric(m, 20000, 9);
    CHECK_FALSE(a.exhaustive);
    CHECK(a.triples == 20000);
    CHECK(a.triangle_pct == 100.0);
    const MetricAudit b = audit_metric(m, 20000, 9);
    CHECK(a.to_json() == b.to_json());
}

TEST_CASE("nonnegative weighted distance is a weighted Manhattan metric") {
    const auto pts = random_points(40, 4, 17);
    const std::vector<double> w{0.4, 0.0, 2.5, 1.1};
    const auto m = distance_matrix(pts, Measure::kWsd, w);
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = 0; j < pts.size(); ++j) {
            double expect = 0.0;
            for (std::size_t c = 0; c < 4; ++c) expect += w[c] * std::abs(pts[i][c] - pts[j][c]);
            CHECK(m(i, j) == doctest::Approx(expect).epsilon(1e-14));
        }
    const MetricAudit a = audit_metric(m);
    CHECK(a.triangle_pct == 100.0);
    CHECK(a.positivity_pct == 100.0);
}

TEST_CASE("audit percentages stay in range with negative weights") {
    const auto pts = random_points(30, 3, 2);
    const std::vector<double> w{1.0, -0.8, 0.5};
    const MetricAudit a = audit_metric(distance_matrix(pts, Measure::kWsd, w));
    for (double p : {a.positivity_pct, a.symmetry_pct, a.identity_pct, a.triangle_pct}) {
        CHECK(p >= 0.0);
        CHECK(p <= 100.0);
    }
    CHECK(a.violations == a.violation_bands[0] + a.violation_bands[1] + a.violation_bands[2]);
}

TEST_CASE("binary and CSV persistence") {
    testutil::TempDir dir("metrics");
    std::vector<std::string> ids;
    for (int i = 0; i < 12; ++i) ids.push_back("P" + std::to_string(i));
    const auto m = distance_matrix(random_points(12, 3, 4), Measure::kEuclidean, {}, ids);
    write_matrix_binary(m, dir / "m.bin");
    const std::string raw = testutil::read_file(dir / "m.bin");
    CHECK(raw.substr(0, 4) == "PCDM");
    CHECK(raw.size() == 4 + 8 + 4 + 12 * 12 * 8);
    const auto back = read_matrix_binary(dir / "m.bin");
    CHECK(back.size() == 12);
    CHECK(back.measure() == Measure::kEuclidean);
    CHECK(back.data() == m.data());
    write_matrix_csv(m, dir / "m.csv");
    const std::string text = testutil::read_file(dir / "m.csv");
    CHECK(text.find("P11") != std::string::npos);
    testutil::write_file(dir / "bad.bin", "PCDM\x03");
    CHECK_THROWS(read_matrix_binary(dir / "bad.bin"));
}

TEST_CASE("measure tags round trip") {
    for (Measure m : {Measure::kManhattan, Measure::kEuclidean, Measure::kCosine, Measure::kWsd, Measure::kDtw,
                      Measure::kEmbedded})
        CHECK(parse_measure(measure_tag(m)) == m);
    CHECK_FALSE(parse_measure("XYZ").has_value());
}
