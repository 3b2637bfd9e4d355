#include "progclust/cohort.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "progclust/csv.hpp"
#include "progclust/error.hpp"

namespace progclust {

bool Sequence::has_subscores() const {
    return !visits.empty() && std::all_of(visits.begin(), visits.end(),
                                          [](const VisitRecord& v) { return v.subscores.has_value(); });
}

const char* to_string(ExclusionRule rule) {
    switch (rule) {
        case ExclusionRule::kTooFewVisits: return "too_few_visits";
        case ExclusionRule::kScoreIncrease: return "score_increase";
        case ExclusionRule::kLateFirstScore: return "late_first_score";
    }
    return "unknown";
}

nlohmann::json ExclusionReport::to_json() const {
    nlohmann::json j;
    j["input_count"] = input_count;
    j["retained_count"] = retained_count;
    j["excluded_per_rule"] = {{to_string(ExclusionRule::kTooFewVisits), excluded_per_rule[0]},
                              {to_string(ExclusionRule::kScoreIncrease), excluded_per_rule[1]},
                              {to_string(ExclusionRule::kLateFirstScore), excluded_per_rule[2]}};
    auto tags = nlohmann::json::array();
    for (const auto& [id, rule] : excluded)
        tags.push_back({{"patient_id", id}, {"rule", static_cast<int>(rule)}, {"reason", to_string(rule)}});
    j["excluded"] = std::move(tags);
    return j;
}

namespace {

std::vector<VisitRecord> read_visits(const std::filesystem::path& path) {
    csv::Reader reader(path);
    std::vector<std::string> f;
    if (!reader.next(f)) throw ParseError(reader.file(), reader.line(), "missing header");
    if (f.size() < 3 || f[0] != "patient_id" || f[1] != "day" || f[2] != "total")
        throw ParseError(reader.file(), reader.line(), "expected header patient_id,day,total[,q1..q12]");
    bool with_items = false;
    if (f.size() == 3 + kItemCount) {
        for (int q = 0; q < kItemCount; ++q)
            if (f[3 + q] != "q" + std::to_string(q + 1))
                throw ParseError(reader.file(), reader.line(), "expected subscore column q" + std::to_string(q + 1));
        with_items = true;
    } else if (f.size() != 3) {
        throw ParseError(reader.file(), reader.line(), "subscore columns must be the full q1..q12 block");
    }

    std::vector<VisitRecord> rows;
    std::set<std::pair<std::string, int>> seen;
    while (reader.next(f)) {
        const auto line = reader.line();
        auto fail = [&](const std::string& what) { throw ParseError(reader.file(), line, what); };
        if (f.size() != (with_items ? 3 + kItemCount : 3u)) fail("wrong number of fields");
        VisitRecord v;
        v.patient_id = f[0];
        if (v.patient_id.empty()) fail("empty patient_id");
        if (!csv::parse_int(f[1], v.day)) fail("field 'day' is not an integer");
        if (v.day < 0) fail("field 'day' must be >= 0");
        if (!csv::parse_int(f[2], v.total_score)) fail("field 'total' is not an integer");
        if (v.total_score < 0 || v.total_score > kMaxTotalScore)
            fail("field 'total' outside [0,48]: " + f[2]);
        if (with_items) {
            const bool all_blank = std::all_of(f.begin() + 3, f.end(), [](const std::string& s) { return s.empty(); });
            if (!all_blank) {
                Subscores items{};
                for (int q = 0; q < kItemCount; ++q) {
                    const std::string name = "q" + std::to_string(q + 1);
                    if (!csv::parse_int(f[3 + q], items[q])) fail("field '" + name + "' is not an integer");
                    if (items[q] < 0 || items[q] > kMaxItemScore) fail("field '" + name + "' outside [0,4]");
                }
                const int sum = std::accumulate(items.begin(), items.end(), 0);
                if (sum != v.total_score)
                    fail("subscores sum to " + std::to_string(sum) + " but total is " + std::to_string(v.total_score));
                v.subscores = items;
            }
        }
        if (!seen.emplace(v.patient_id, v.day).second)
            fail("duplicate visit for patient " + v.patient_id + " on day " + std::to_string(v.day));
        rows.push_back(std::move(v));
    }
    return rows;
}

std::map<std::string, PatientOutcome> read_outcomes(const std::filesystem::path& path) {
    csv::Reader reader(path);
    std::vector<std::string> f;
    if (!reader.next(f)) throw ParseError(reader.file(), reader.line(), "missing header");
    const bool has_contact = f.size() == 4;
    if (f.size() < 3 || f.size() > 4 || f[0] != "patient_id" || f[1] != "survival_days" || f[2] != "event" ||
        (has_contact && f[3] != "first_contact_day"))
        throw ParseError(reader.file(), reader.line(),
                         "expected header patient_id,survival_days,event[,first_contact_day]");

    std::map<std::string, PatientOutcome> out;
    while (reader.next(f)) {
        const auto line = reader.line();
        auto fail = [&](const std::string& what) { throw ParseError(reader.file(), line, what); };
        // a trailing empty first_contact_day may be dropped entirely
        if (f.size() == 3 && has_contact) f.emplace_back();
        if (f.size() != (has_contact ? 4u : 3u)) fail("wrong number of fields");
        PatientOutcome o;
        o.patient_id = f[0];
        if (o.patient_id.empty()) fail("empty patient_id");
        if (!csv::parse_int(f[1], o.survival_days)) fail("field 'survival_days' is not an integer");
        if (o.survival_days < 0) fail("field 'survival_days' must be >= 0");
        int ev = 0;
        if (f[2] == "true") ev = 1;
        else if (f[2] == "false") ev = 0;
        else if (!csv::parse_int(f[2], ev) || (ev != 0 && ev != 1)) fail("field 'event' must be 0 or 1");
        o.event_observed = ev == 1;
        if (has_contact && !f[3].empty()) {
            int d = 0;
            if (!csv::parse_int(f[3], d)) fail("field 'first_contact_day' is not an integer");
            if (d > 0) fail("field 'first_contact_day' must be <= 0");
            o.first_contact_day = d;
        }
        const std::string id = o.patient_id;
        if (!out.emplace(id, std::move(o)).second) fail("duplicate outcome for patient " + id);
    }
    return out;
}

}  // namespace

Cohort parse_cohort(const std::filesystem::path& visits_path, const std::filesystem::path& outcomes_path) {
    auto visits = read_visits(visits_path);
    auto outcomes = read_outcomes(outcomes_path);

    std::map<std::string, std::vector<VisitRecord>> by_patient;
    for (auto& v : visits) by_patient[v.patient_id].push_back(std::move(v));

    Cohort cohort;
    cohort.reserve(by_patient.size());
    for (auto& [id, rows] : by_patient) {
        auto it = outcomes.find(id);
        if (it == outcomes.end()) throw ParseError(outcomes_path.string(), 0, "no outcome row for patient " + id);
        std::sort(rows.begin(), rows.end(), [](const VisitRecord& a, const VisitRecord& b) { return a.day < b.day; });
        const int base = rows.front().day;
        for (auto& r : rows) r.day -= base;
        Sequence s;
        s.patient_id = id;
        s.visits = std::move(rows);
        s.outcome = std::move(it->second);
        outcomes.erase(it);
        cohort.push_back(std::move(s));
    }
    if (!outcomes.empty())
        throw ParseError(outcomes_path.string(), 0, "outcome for patient without visits: " + outcomes.begin()->first);
    return cohort;
}

void write_cohort(const Cohort& cohort, const std::filesystem::path& visits_path,
                  const std::filesystem::path& outcomes_path) {
    const bool items = !cohort.empty() &&
                       std::all_of(cohort.begin(), cohort.end(), [](const Sequence& s) { return s.has_subscores(); });
    auto vout = csv::open_out(visits_path);
    vout << "patient_id,day,total";
    if (items)
        for (int q = 1; q <= kItemCount; ++q) vout << ",q" << q;
    vout << '\n';
    for (const auto& s : cohort) {
        for (const auto& v : s.visits) {
            vout << s.patient_id << ',' << v.day << ',' << v.total_score;
            if (items)
                for (int x : *v.subscores) vout << ',' << x;
            vout << '\n';
        }
    }

    auto oout = csv::open_out(outcomes_path);
    oout << "patient_id,survival_days,event,first_contact_day\n";
    for (const auto& s : cohort) {
        oout << s.patient_id << ',' << s.outcome.survival_days << ',' << (s.outcome.event_observed ? 1 : 0) << ',';
        if (s.outcome.first_contact_day) oout << *s.outcome.first_contact_day;
        oout << '\n';
    }
}

bool violates(const Sequence& seq, ExclusionRule rule, const ExclusionOptions& opts) {
    switch (rule) {
        case ExclusionRule::kTooFewVisits:
            return seq.visits.size() < opts.min_visits;
        case ExclusionRule::kScoreIncrease:
            for (std::size_t i = 0; i + 1 < seq.visits.size(); ++i)
                if (seq.visits[i + 1].total_score - seq.visits[i].total_score > opts.max_rise) return true;
            return false;
        case ExclusionRule::kLateFirstScore:
            return seq.outcome.first_contact_day.has_value() && -*seq.outcome.first_contact_day > opts.max_contact_gap;
    }
    return false;
}

std::pair<Cohort, ExclusionReport> apply_exclusions(const Cohort& cohort, const ExclusionOptions& opts) {
    constexpr std::array rules{ExclusionRule::kTooFewVisits, ExclusionRule::kScoreIncrease,
                               ExclusionRule::kLateFirstScore};
    Cohort kept;
    ExclusionReport report;
    report.input_count = cohort.size();
    for (const auto& s : cohort) {
        bool dropped = false;
        for (auto rule : rules) {
            if (violates(s, rule, opts)) {
                report.excluded.emplace_back(s.patient_id, rule);
                ++report.excluded_per_rule[static_cast<int>(rule) - 1];
                dropped = true;
                break;
            }
        }
        if (!dropped) kept.push_back(s);
    }
    report.retained_count = kept.size();
    return {std::move(kept), std::move(report)};
}

}  // namespace progclust
