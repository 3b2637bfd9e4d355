#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "progclust/csv.hpp"
#include "progclust/parallel.hpp"
#include "progclust/rng.hpp"
#include "test_util.hpp"

using namespace progclust;

TEST_CASE("split keeps empty fields") {
    CHECK(csv::split("a,b,c") == std::vector<std::string>{"a", "b", "c"});
    CHECK(csv::split("a,,c,") == std::vector<std::string>{"a", "", "c", ""});
    CHECK(csv::split("") == std::vector<std::string>{""});
}

TEST_CASE("reader skips blanks and strips BOM and CR") {
    testutil::TempDir dir("csv");
    testutil::write_file(dir / "x.csv", "\xEF\xBB\xBFh1,h2\r\n\r\n1,2\r\n\n3,4");
    csv::Reader r(dir / "x.csv");
    std::vector<std::string> f;
    REQUIRE(r.next(f));
    CHECK(f == std::vector<std::string>{"h1", "h2"});
    CHECK(r.line() == 1);
    REQUIRE(r.next(f));
    CHECK(f == std::vector<std::string>{"1", "2"});
    CHECK(r.line() == 3);
    REQUIRE(r.next(f));
    CHECK(f == std::vector<std::string>{"3", "4"});
    CHECK(r.line() == 5);
    CHECK_FALSE(r.next(f));
}

TEST_CASE("numeric field parsing") {
    int i = 0;
    CHECK(csv::parse_int("42", i));
    CHECK(i == 42);
    CHECK(csv::parse_int("-7", i));
    CHECK(i == -7);
    CHECK_FALSE(csv::parse_int("4.5", i));
    CHECK_FALSE(csv::parse_int("", i));
    CHECK_FALSE(csv::parse_int("12x", i));
    double d = 0;
    CHECK(csv::parse_double("2.5e-3", d));
    CHECK(d == 0.0025);
    CHECK_FALSE(csv::parse_double("abc", d));
    CHECK_FALSE(csv::parse_double("1.0 ", d));
}

TEST_CASE("shortest round-trip formatting") {
    CHECK(csv::format_double(0.1) == "0.1");
    CHECK(csv::format_double(3.0) == "3");
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int k = 0; k < 1000; ++k) {
        const double v = u(gen);
        double back = 0;
        REQUIRE(csv::parse_double(csv::format_double(v), back));
        CHECK(back == v);
    }
}

TEST_CASE("rng streams are reproducible and distinct") {
    Rng a(5), b(5), c(6);
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next();
        CHECK(x == b.next());
    }
    CHECK(Rng(5).next() != c.next());
    CHECK(stream_seed(1, "P001") == stream_seed(1, "P001"));
    CHECK(stream_seed(1, "P001") != stream_seed(1, "P002"));
    CHECK(stream_seed(1, "P001") != stream_seed(2, "P001"));
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("rng distributions") {
    Rng r(11);
    double sum = 0, sq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sq / n - 1.0) < 0.02);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) ++counts[r.index(7)];
    for (int c : counts) CHECK(std::abs(c - 10000) < 400);
}

TEST_CASE("parallel_for visits every index once and rethrows") {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(10, 3,
                                 [](std::size_t i) {
                                     if (i == 5) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
}
