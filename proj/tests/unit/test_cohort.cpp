#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "progclust/cohort.hpp"
#include "progclust/error.hpp"
#include "test_util.hpp"

using namespace progclust;
using testutil::TempDir;
using testutil::write_file;

namespace {

Sequence make_sequence(const std::string& id, const std::vector<std::pair<int, int>>& visits,
                       std::optional<int> contact = std::nullopt) {
    Sequence s;
    s.patient_id = id;
    for (auto [day, score] : visits) s.visits.push_back({id, day, score, std::nullopt});
    s.outcome = {id, 400, true, contact};
    return s;
}

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const ParseError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("two visit rows form one sequence") {
    TempDir dir("cohort");
    write_file(dir / "v.csv", "patient_id,day,total\nP1,0,48\nP1,90,40\n");
    write_file(dir / "o.csv", "patient_id,survival_days,event,first_contact_day\nP1,500,1,\n");
    const Cohort c = parse_cohort(dir / "v.csv", dir / "o.csv");
    REQUIRE(c.size() == 1);
    CHECK(c[0].patient_id == "P1");
    REQUIRE(c[0].visits.size() == 2);
    CHECK(c[0].visits[1].day == 90);
    CHECK(c[0].visits[1].total_score == 40);
    CHECK(c[0].outcome.event_observed);
    CHECK_FALSE(c[0].outcome.first_contact_day.has_value());
    CHECK_FALSE(c[0].has_subscores());
}

TEST_CASE("score above 48 is rejected with field and line") {
    TempDir dir("cohort");
    write_file(dir / "v.csv", "patient_id,day,total\nP1,0,48\nP1,90,49\n");
    write_file(dir / "o.csv", "patient_id,survival_days,event\nP1,500,1\n");
    const std::string msg = message_of([&] { parse_cohort(dir / "v.csv", dir / "o.csv"); });
    CHECK(msg.find(":3:") != std::string::npos);
    CHECK(msg.find("total") != std::string::npos);
}

TEST_CASE("subscore sum mismatch is rejected") {
    TempDir dir("cohort");
    write_file(dir / "v.csv",
               "patient_id,day,total,q1,q2,q3,q4,q5,q6,q7,q8,q9,q10,q11,q12\n"
               "P1,0,40,4,4,4,4,4,4,4,4,4,3,0,0\n");
    write_file(dir / "o.csv", "patient_id,survival_days,event\nP1,500,1\n");
    const std::string msg = message_of([&] { parse_cohort(dir / "v.csv", dir / "o.csv"); });
    CHECK(msg.find(":2:") != std::string::npos);
    CHECK(msg.find("39") != std::string::npos);
}

TEST_CASE("duplicate visit day and malformed rows are rejected") {
    TempDir dir("cohort");
    write_file(dir / "o.csv", "patient_id,survival_days,event\nP1,500,1\n");
    write_file(dir / "v.csv", "patient_id,day,total\nP1,0,48\nP1,0,47\n");
    CHECK(message_of([&] { parse_cohort(dir / "v.csv", dir / "o.csv"); }).find("duplicate") != std::string::npos);
    write_file(dir / "v.csv", "patient_id,day,total\nP1,0,48\nP1,x,47\n");
    CHECK(message_of([&] { parse_cohort(dir / "v.csv", dir / "o.csv"); }).find(":3:") != std::string::npos);
    write_file(dir / "v.csv", "patient_id,day,total\nP1,0,48,3\n");
    CHECK_FALSE(message_of([&] { parse_cohort(dir / "v.csv", dir / "o.csv"); }).empty());
    write_file(dir / "v.csv", "patient_id,day,total\nP2,0,48\n");
    CHECK_THROWS_AS(parse_cohort(dir / "v.csv", dir / "o.csv"), ParseError);
}

TEST_CASE("days are re-based and patients ordered by id") {
    TempDir dir("cohort");
    write_file(dir / "v.csv", "patient_id,day,total\nB,30,44\nB,10,46\nA,5,40\n");
    write_file(dir / "o.csv", "patient_id,survival_days,event\nB,500,0\nA,300,true\n");
    const Cohort c = parse_cohort(dir / "v.csv", dir / "o.csv");
    REQUIRE(c.size() == 2);
    CHECK(c[0].patient_id == "A");
    CHECK(c[0].visits[0].day == 0);
    CHECK(c[1].visits[0].day == 0);
    CHECK(c[1].visits[1].day == 20);
    CHECK(c[1].visits[0].total_score == 46);
    CHECK(c[0].outcome.event_observed);
    CHECK_FALSE(c[1].outcome.event_observed);
}

TEST_CASE("four visits are excluded under rule 1") {
    const Cohort c{make_sequence("P", {{0, 40}, {90, 38}, {180, 36}, {270, 34}})};
    auto [kept, report] = apply_exclusions(c);
    CHECK(kept.empty());
    REQUIRE(report.excluded.size() == 1);
    CHECK(report.excluded[0].second == ExclusionRule::kTooFewVisits);
    CHECK(report.excluded_per_rule[0] == 1);
}

TEST_CASE("a rise of three points excludes, a rise of two is allowed") {
    const Cohort c{make_sequence("rise3", {{0, 40}, {90, 30}, {180, 33}, {270, 30}, {360, 28}}),
                   make_sequence("rise2", {{0, 40}, {90, 30}, {180, 32}, {270, 30}, {360, 28}})};
    auto [kept, report] = apply_exclusions(c);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].patient_id == "rise2");
    REQUIRE(report.excluded.size() == 1);
    CHECK(report.excluded[0] == std::pair<std::string, ExclusionRule>{"rise3", ExclusionRule::kScoreIncrease});
}

TEST_CASE("late first score excludes only when first contact is known") {
    const std::vector<std::pair<int, int>> v{{0, 40}, {90, 38}, {180, 36}, {270, 34}, {360, 32}};
    const Cohort c{make_sequence("late", v, -31), make_sequence("edge", v, -30), make_sequence("none", v)};
    auto [kept, report] = apply_exclusions(c);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].patient_id == "edge");
    CHECK(kept[1].patient_id == "none");
    CHECK(report.excluded_per_rule[2] == 1);
}

TEST_CASE("each excluded patient is tagged with the first rule it violates") {
    // violates rules 1 and 2
    const Cohort c{make_sequence("both", {{0, 30}, {90, 35}}, -100)};
    auto [kept, report] = apply_exclusions(c);
    REQUIRE(report.excluded.size() == 1);
    CHECK(report.excluded[0].second == ExclusionRule::kTooFewVisits);
    const auto j = report.to_json();
    CHECK(j["excluded"][0]["rule"] == 1);
    CHECK(j["input_count"] == 1);
}

TEST_CASE("exclusion properties: idempotence, tags and counts") {
    Cohort c;
    std::uint64_t state = 12345;
    auto next = [&] {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return static_cast<int>(state >> 33);
    };
    for (int p = 0; p < 200; ++p) {
        const int visits = 2 + next() % 7;
        std::vector<std::pair<int, int>> v;
        int score = 30 + next() % 18, day = 0;
        for (int i = 0; i < visits; ++i) {
            v.emplace_back(day, score);
            day += 30 + next() % 90;
            score = std::clamp(score - 3 + next() % 6, 0, 48);
        }
        std::optional<int> contact;
        if (next() % 2) contact = -(next() % 60);
        c.push_back(make_sequence("P" + std::to_string(1000 + p), v, contact));
    }
    auto [kept, report] = apply_exclusions(c);
    CHECK(report.input_count == c.size());
    CHECK(report.retained_count + report.excluded.size() == report.input_count);
    CHECK(report.excluded_per_rule[0] + report.excluded_per_rule[1] + report.excluded_per_rule[2] ==
          report.excluded.size());
    for (const auto& s : kept)
        for (auto rule : {ExclusionRule::kTooFewVisits, ExclusionRule::kScoreIncrease, ExclusionRule::kLateFirstScore})
            CHECK_FALSE(violates(s, rule));
    for (const auto& [id, rule] : report.excluded) {
        auto it = std::find_if(c.begin(), c.end(), [&](const Sequence& s) { return s.patient_id == id; });
        REQUIRE(it != c.end());
        CHECK(violates(*it, rule));
    }
    auto [again, report2] = apply_exclusions(kept);
    CHECK(again == kept);
    CHECK(report2.excluded.empty());
}

TEST_CASE("parse, write and parse again yields the same cohort") {
    TempDir dir("cohort");
    write_file(dir / "v.csv",
               "\xEF\xBB\xBFpatient_id,day,total,q1,q2,q3,q4,q5,q6,q7,q8,q9,q10,q11,q12\r\n"
               "P1,0,40,4,4,4,4,4,4,4,4,4,4,0,0\r\n"
               "P1,100,38,4,4,4,4,4,4,4,4,4,2,0,0\r\n"
               "\r\n"
               "P2,0,30,3,3,3,3,3,3,3,3,3,3,0,0\r\n");
    write_file(dir / "o.csv", "patient_id,survival_days,event,first_contact_day\nP1,700,1,-12\nP2,200,0,\n");
    const Cohort a = parse_cohort(dir / "v.csv", dir / "o.csv");
    CHECK(a[0].has_subscores());
    write_cohort(a, dir / "v2.csv", dir / "o2.csv");
    const Cohort b = parse_cohort(dir / "v2.csv", dir / "o2.csv");
    CHECK(a == b);
    CHECK(b[0].outcome.first_contact_day == -12);
}
