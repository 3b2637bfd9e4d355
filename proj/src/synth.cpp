#include "progclust/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "progclust/csv.hpp"
#include "progclust/curves.hpp"
#include "progclust/error.hpp"
#include "progclust/rng.hpp"

namespace progclust {

SynthSpec three_archetype_spec(std::size_t patients, double noise_sd, std::uint64_t seed) {
    ClusterArchetype slow;
    slow.label = "slow";
    slow.b = {42.0, 46.0};
    slow.m = {0.0045, 0.0055};
    slow.a = {500.0, 700.0};
    slow.c = {0.0, 2.0};
    slow.visit_interval_mean = 90.0;
    slow.visit_interval_jitter = 15.0;
    slow.followup = {600.0, 900.0};
    slow.death_offset_mean = 240.0;
    slow.death_offset_sd = 45.0;

    ClusterArchetype medium = slow;
    medium.label = "medium";
    medium.m = {0.0135, 0.0165};
    medium.a = {250.0, 350.0};
    medium.followup = {450.0, 700.0};

    ClusterArchetype fast = slow;
    fast.label = "fast";
    fast.m = {0.036, 0.044};
    fast.a = {120.0, 180.0};
    fast.visit_interval_mean = 60.0;
    fast.visit_interval_jitter = 10.0;
    fast.followup = {300.0, 450.0};

    SynthSpec spec;
    spec.archetypes = {slow, medium, fast};
    spec.weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    spec.patients = patients;
    spec.noise_sd = noise_sd;
    spec.seed = seed;
    return spec;
}

SynthSpec four_archetype_spec(std::size_t patients, double noise_sd, std::uint64_t seed) {
    SynthSpec spec = three_archetype_spec(patients, noise_sd, seed);
    ClusterArchetype late = spec.archetypes[2];
    late.label = "late_fast";
    late.m = {0.03, 0.04};
    late.a = {380.0, 460.0};
    late.visit_interval_mean = 75.0;
    late.followup = {480.0, 640.0};
    spec.archetypes.push_back(late);
    spec.weights = {0.25, 0.25, 0.25, 0.25};
    return spec;
}

Subscores allocate_subscores(int total, std::span<const double> weights) {
    if (total < 0 || total > kMaxTotalScore) throw InvalidArgument("allocate_subscores: total outside [0,48]");
    std::array<double, kItemCount> w{};
    for (int q = 0; q < kItemCount; ++q) w[q] = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(q)];

    // water-filling: items whose proportional quota exceeds the cap are pinned at 4
    std::array<double, kItemCount> quota{};
    std::array<bool, kItemCount> pinned{};
    double remaining = total;
    while (true) {
        double wsum = 0.0;
        for (int q = 0; q < kItemCount; ++q)
            if (!pinned[q]) wsum += w[q];
        bool changed = false;
        for (int q = 0; q < kItemCount; ++q) {
            if (pinned[q]) continue;
            quota[q] = wsum > 0.0 ? remaining * w[q] / wsum : 0.0;
            if (quota[q] > kMaxItemScore) {
                pinned[q] = true;
                quota[q] = kMaxItemScore;
                remaining -= kMaxItemScore;
                changed = true;
            }
        }
        if (!changed) break;
    }

    Subscores out{};
    int assigned = 0;
    for (int q = 0; q < kItemCount; ++q) {
        out[q] = static_cast<int>(std::floor(quota[q] + 1e-9));
        assigned += out[q];
    }
    std::array<int, kItemCount> order{};
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int x, int y) { return quota[x] - out[x] > quota[y] - out[y]; });
    for (int left = total - assigned, idx = 0; left > 0; idx = (idx + 1) % kItemCount) {
        const int q = order[idx];
        if (out[q] < kMaxItemScore) {
            ++out[q];
            --left;
        }
    }
    return out;
}

SynthCohort generate_cohort(const SynthSpec& spec) {
    if (spec.archetypes.empty()) throw InvalidArgument("generate_cohort: no archetypes");
    if (spec.weights.size() != spec.archetypes.size()) throw InvalidArgument("generate_cohort: one weight per archetype");
    if (spec.patients < 1) throw InvalidArgument("generate_cohort: patient count must be >= 1");
    const double wsum = std::accumulate(spec.weights.begin(), spec.weights.end(), 0.0);
    if (std::abs(wsum - 1.0) > 1e-9 || std::any_of(spec.weights.begin(), spec.weights.end(), [](double w) { return w < 0; }))
        throw InvalidArgument("generate_cohort: weights must be non-negative and sum to 1");
    for (const auto& a : spec.archetypes)
        if (!(a.m.lo > 0.0) || a.m.hi < a.m.lo || a.visit_interval_mean <= 0.0)
            throw InvalidArgument("generate_cohort: archetype " + a.label + " must decline (m > 0) with positive visit interval");

    Rng rng(spec.seed);
    SynthCohort out;
    const int width = std::max<int>(4, static_cast<int>(std::to_string(spec.patients).size()));
    for (std::size_t p = 0; p < spec.patients; ++p) {
        double u = rng.uniform();
        std::size_t arch = spec.archetypes.size() - 1;
        for (std::size_t k = 0; k < spec.weights.size(); ++k) {
            if (u < spec.weights[k]) {
                arch = k;
                break;
            }
            u -= spec.weights[k];
        }
        const auto& at = spec.archetypes[arch];

        SigmoidFit curve;
        curve.b = rng.uniform(at.b.lo, at.b.hi);
        curve.m = rng.uniform(at.m.lo, at.m.hi);
        curve.a = rng.uniform(at.a.lo, at.a.hi);
        curve.c = rng.uniform(at.c.lo, at.c.hi);
        const double followup = rng.uniform(at.followup.lo, at.followup.hi);
        const double d50 = invert_for_score(curve, 24.0, 3650.0);
        const double death = std::max(1.0, d50 + rng.normal(at.death_offset_mean, at.death_offset_sd));
        const double horizon = std::min(followup, death);

        std::array<double, kItemCount> item_w{};
        for (double& w : item_w) w = rng.uniform(0.5, 1.5);

        char id[32];
        std::snprintf(id, sizeof(id), "P%0*zu", width, p + 1);
        Sequence seq;
        seq.patient_id = id;
        int day = 0;
        int prev = -1;
        while (true) {
            const double noise = spec.noise_sd * rng.normal();
            int score = static_cast<int>(std::lround(eval_sigmoid(curve, day) + noise));
            score = std::clamp(score, 0, kMaxTotalScore);
            if (prev >= 0) score = std::min(score, prev + spec.max_rise);
            VisitRecord v;
            v.patient_id = seq.patient_id;
            v.day = day;
            v.total_score = score;
            v.subscores = allocate_subscores(score, item_w);
            seq.visits.push_back(std::move(v));
            prev = score;
            const double step = at.visit_interval_mean + rng.uniform(-at.visit_interval_jitter, at.visit_interval_jitter);
            const int next = day + std::max(1, static_cast<int>(std::lround(step)));
            if (next > horizon && seq.visits.size() >= spec.min_visits) break;
            day = next;
        }

        const int last = seq.visits.back().day;
        const double death_day = std::max<double>(death, last);
        seq.outcome.patient_id = seq.patient_id;
        if (rng.uniform() < at.censor_probability) {
            seq.outcome.event_observed = false;
            seq.outcome.survival_days = static_cast<int>(std::lround(rng.uniform(last, death_day)));
        } else {
            seq.outcome.event_observed = true;
            seq.outcome.survival_days = static_cast<int>(std::lround(death_day));
        }
        seq.outcome.first_contact_day = -static_cast<int>(rng.index(31));
        out.cohort.push_back(std::move(seq));
        out.labels.push_back(static_cast<int>(arch));
    }
    return out;
}

void write_synth(const SynthCohort& synth, const SynthSpec& spec, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_cohort(synth.cohort, dir / "visits.csv", dir / "outcomes.csv");
    auto out = csv::open_out(dir / "planted_labels.csv");
    out << "patient_id,label\n";
    for (std::size_t i = 0; i < synth.cohort.size(); ++i)
        out << synth.cohort[i].patient_id << ',' << spec.archetypes[static_cast<std::size_t>(synth.labels[i])].label << '\n';
}

}  // namespace progclust
