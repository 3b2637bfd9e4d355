#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "progclust/cohort.hpp"

namespace progclust {

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

/// Distribution of trajectories and outcomes for one planted cluster.
struct ClusterArchetype {
    std::string label;
    Range b{40.0, 46.0};
    Range m{0.01, 0.02};  // > 0: declining
    Range a{200.0, 400.0};
    Range c{0.0, 2.0};
    double visit_interval_mean = 90.0;  // days
    double visit_interval_jitter = 15.0;  // uniform +/- days
    Range followup{540.0, 900.0};         // days
    double death_offset_mean = 0.0;       // days after D50
    double death_offset_sd = 60.0;
    double censor_probability = 0.1;
};

struct SynthSpec {
    std::vector<ClusterArchetype> archetypes;
    std::vector<double> weights;  // sums to 1
    std::size_t patients = 150;
    double noise_sd = 1.0;        // score points
    std::uint64_t seed = 0;
    std::size_t min_visits = 5;
    int max_rise = 2;
};

struct SynthCohort {
    Cohort cohort;
    std::vector<int> labels;  // planted archetype index per patient (cohort order)
};

/// Three well separated archetypes (slow, medium and fast decline) used by the
/// end-to-end benchmark.
SynthSpec three_archetype_spec(std::size_t patients = 150, double noise_sd = 1.0, std::uint64_t seed = 0);

/// Four archetypes (adds a late-onset fast decliner), for baseline characterization.
SynthSpec four_archetype_spec(std::size_t patients = 200, double noise_sd = 1.0, std::uint64_t seed = 0);

SynthCohort generate_cohort(const SynthSpec& spec);

/// Splits `total` into 12 items capped at 4 by largest-remainder allocation of
/// quotas proportional to `weights` (equal weights when empty). Exact sum.
Subscores allocate_subscores(int total, std::span<const double> weights = {});

/// Writes visits.csv, outcomes.csv and planted_labels.csv into `dir`.
void write_synth(const SynthCohort& synth, const SynthSpec& spec, const std::filesystem::path& dir);

}  // namespace progclust
