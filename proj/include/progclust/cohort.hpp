#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace progclust {

inline constexpr int kMaxTotalScore = 48;
inline constexpr int kItemCount = 12;
inline constexpr int kMaxItemScore = 4;

using Subscores = std::array<int, kItemCount>;

/// One scored visit. `day` is relative to the patient's first scored visit.
struct VisitRecord {
    std::string patient_id;
    int day = 0;
    int total_score = 0;
    std::optional<Subscores> subscores;

    bool operator==(const VisitRecord&) const = default;
};

struct PatientOutcome {
    std::string patient_id;
    int survival_days = 0;
    bool event_observed = false;
    /// Day of first clinical contact relative to the first scored visit (<= 0).
    std::optional<int> first_contact_day;

    bool operator==(const PatientOutcome&) const = default;
};

/// A patient's visits ordered by strictly increasing day, starting at day 0.
struct Sequence {
    std::string patient_id;
    std::vector<VisitRecord> visits;
    PatientOutcome outcome;

    bool has_subscores() const;
    int duration() const { return visits.empty() ? 0 : visits.back().day; }

    bool operator==(const Sequence&) const = default;
};

using Cohort = std::vector<Sequence>;

enum class ExclusionRule : int {
    kTooFewVisits = 1,
    kScoreIncrease = 2,
    kLateFirstScore = 3,
};

const char* to_string(ExclusionRule rule);

struct ExclusionReport {
    std::size_t input_count = 0;
    std::size_t retained_count = 0;
    std::array<std::size_t, 3> excluded_per_rule{};  // indexed by rule - 1
    std::vector<std::pair<std::string, ExclusionRule>> excluded;  // in input order

    nlohmann::json to_json() const;
};

struct ExclusionOptions {
    std::size_t min_visits = 5;
    int max_rise = 2;         // a rise strictly greater than this excludes
    int max_contact_gap = 30; // days between first contact and first score
};

/// Reads the visits and outcomes CSV files into one Sequence per patient,
/// ordered by patient id. Days are re-based so that each first visit is 0.
Cohort parse_cohort(const std::filesystem::path& visits_path,
                    const std::filesystem::path& outcomes_path);

/// Writes a cohort in the format accepted by parse_cohort. Subscore columns are
/// emitted only when every visit carries them.
void write_cohort(const Cohort& cohort, const std::filesystem::path& visits_path,
                  const std::filesystem::path& outcomes_path);

/// Checks a single exclusion rule; true when the sequence violates it.
bool violates(const Sequence& seq, ExclusionRule rule, const ExclusionOptions& opts = {});

/// Applies the three exclusion rules in order; each excluded patient is tagged
/// with the first rule it violates.
std::pair<Cohort, ExclusionReport> apply_exclusions(const Cohort& cohort,
                                                   const ExclusionOptions& opts = {});

}  // namespace progclust
