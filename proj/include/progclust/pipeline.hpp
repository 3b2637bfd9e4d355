#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "progclust/baselines.hpp"
#include "progclust/cluster.hpp"
#include "progclust/cohort.hpp"
#include "progclust/curves.hpp"
#include "progclust/embedding.hpp"
#include "progclust/evalstats.hpp"
#include "progclust/features.hpp"
#include "progclust/metrics.hpp"
#include "progclust/weaksup.hpp"

namespace progclust {

enum class SilhouetteSpace { kClustered, kOriginal };

/// Run configuration. Every field maps to a key of the plain-text config file
/// (see README); unspecified keys keep these defaults.
struct PipelineConfig {
    std::uint64_t seed = 42;
    std::vector<Measure> measures{Measure::kManhattan, Measure::kEuclidean, Measure::kCosine, Measure::kWsd};
    std::vector<ClusterMethod> methods{ClusterMethod::kKMeans, ClusterMethod::kKMedoids, ClusterMethod::kAgglomerative};
    int k_min = 2;
    int k_max = 6;
    bool with_plain = true;     // workflows on the precomputed matrix
    bool with_embedding = true; // workflows on the 2-D embedding
    bool with_baselines = true;

    ExclusionOptions exclusions;
    FitOptions fit;
    double horizon_days = 3650.0;
    double spearman_threshold = 0.7;
    bool self_pairs = false;  // also pair each patient with itself in the pair table
    bool cosine_on_raw = false;  // cosine on raw rather than min-max scaled features
    SvmOptions svm;
    LabelModelOptions label_model;
    EmbeddingParams embedding;  // seed is derived from `seed`
    int kmeans_restarts = 10;
    SilhouetteSpace silhouette_space = SilhouetteSpace::kClustered;

    double gom_threshold = 0.186;
    bool gom_percentile = false;
    std::vector<int> hal_items;  // 0-based subscore items; empty = all

    double sil_min = 0.5;
    double p_max = 0.05;
    std::uint64_t audit_triples = 1'000'000;
    unsigned threads = 1;

    /// Parses `key = value` lines ('#' starts a comment). Unknown keys throw.
    static PipelineConfig parse(const std::string& text, const std::string& source = "config");
    static PipelineConfig load(const std::filesystem::path& path);
    /// Canonical text form; parse(to_text()) reproduces the config.
    std::string to_text() const;
    nlohmann::json to_json() const;
    void set(const std::string& key, const std::string& value);
};

struct WorkflowSpec {
    std::string baseline;  // "GOM", "GRO", "MEY", "HAL" or empty for proposed workflows
    Measure measure = Measure::kManhattan;
    bool embed = false;
    ClusterMethod method = ClusterMethod::kAgglomerative;
    int k = 2;
    std::uint64_t seed = 0;  // derived from the global seed and the name

    /// measure_[UMAP_]method_k for proposed workflows; GOM_2, GRO_4, MEY_3,
    /// HAL_[UMAP_]AHC_k for baselines.
    std::string name() const;
    bool is_baseline() const { return !baseline.empty(); }
};

/// Parses a workflow name; the seed is left at 0.
std::optional<WorkflowSpec> parse_workflow_name(const std::string& name);

/// Per-workflow seed derived from the global seed and the workflow name.
std::uint64_t workflow_seed(std::uint64_t global_seed, const std::string& name);

struct Grid {
    std::vector<WorkflowSpec> proposed;
    std::vector<WorkflowSpec> baselines;
    std::vector<std::string> warnings;

    std::vector<WorkflowSpec> all() const;
};

/// Proposed grid: measures x ({KMD, AHC} on the matrix + {KME, KMD, AHC} on
/// the embedding) x k range; KME only on embeddings. Baselines: GOM_2,
/// GRO_4, MEY_3, HAL_AHC_{4,5,6}, HAL_UMAP_AHC_{4,5,6} (HAL skipped without
/// subscores).
Grid enumerate_grid(const PipelineConfig& cfg, bool has_subscores = true);

/// Shared, lazily computed artifacts of one cohort: fits, features, pair
/// table, label model, WSD weights, matrices and embeddings. Each artifact is
/// computed once; accessors are not thread-safe until prepare() has run.
class Workspace {
  public:
    Workspace(Cohort cohort, PipelineConfig cfg);

    const Cohort& cohort() const { return cohort_; }
    const PipelineConfig& config() const { return cfg_; }
    std::vector<std::string> ids() const;

    const std::vector<SigmoidFit>& fits();
    const std::vector<FeatureVector>& features();
    const FeatureMatrix& feature_matrix();
    const ColumnScaling& patient_scaling();
    const PairTable& pair_table();  // normalized, with the Spearman mask applied
    const std::array<std::array<double, kFeatureCount>, kFeatureCount>& spearman();
    const LabelMatrix& label_matrix();
    const LabelModel& label_model();
    const PairLabels& pair_labels();
    const WsdWeights& wsd();

    /// Per-patient vectors fed to a measure (retained variables only).
    std::vector<std::vector<double>> measure_input(Measure m);
    const DistanceMatrix& matrix(Measure m);
    const Embedding& embedding(Measure m);
    const DistanceMatrix& embedded_matrix(Measure m);
    /// 1-D distance on the feature a threshold baseline stratifies on.
    const DistanceMatrix& baseline_matrix(const std::string& baseline);
    const MetricAudit& audit(Measure m);

    std::vector<double> survival_times() const;
    std::vector<int> survival_events() const;

    /// Computes everything the given workflows need.
    void prepare(const std::vector<WorkflowSpec>& workflows);

  private:
    Cohort cohort_;
    PipelineConfig cfg_;
    std::optional<std::vector<SigmoidFit>> fits_;
    std::optional<std::vector<FeatureVector>> features_;
    std::optional<FeatureMatrix> feature_matrix_;
    std::optional<ColumnScaling> patient_scaling_;
    std::optional<PairTable> table_;
    std::optional<std::array<std::array<double, kFeatureCount>, kFeatureCount>> spearman_;
    std::optional<LabelMatrix> lm_;
    std::optional<LabelModel> model_;
    std::optional<PairLabels> labels_;
    std::optional<WsdWeights> wsd_;
    std::map<Measure, DistanceMatrix> matrices_;
    std::map<Measure, Embedding> embeddings_;
    std::map<Measure, DistanceMatrix> embedded_;
    std::map<std::string, DistanceMatrix> baseline_matrices_;
    std::map<Measure, MetricAudit> audits_;
};

struct WorkflowResult {
    std::string name;
    WorkflowSpec spec;
    bool ok = false;
    std::string error;
    Assignment assignment;
    std::vector<std::size_t> sizes;
    double silhouette_mean = 0.0;
    double silhouette_std = 0.0;
    double p_max = 1.0;
    double lrs_min = 0.0;
    std::optional<double> ari;  // against planted labels, when known
};

/// Clusters one workflow on the shared artifacts (no evaluation).
Assignment cluster_workflow(Workspace& ws, const WorkflowSpec& spec);

/// Silhouette on the clustered (or, by config, original) matrix and pairwise
/// log-rank separation of a given assignment. Throws when fewer than two
/// clusters are occupied.
WorkflowResult evaluate_workflow(Workspace& ws, const WorkflowSpec& spec, const Assignment& asg);

/// Clusters and evaluates a single workflow. Failures are captured in the
/// result (ok = false) rather than thrown.
WorkflowResult run_workflow(Workspace& ws, const WorkflowSpec& spec);

/// Runs every workflow (in parallel over cfg.threads); failures are recorded
/// per workflow. Output order follows `workflows`.
std::vector<WorkflowResult> run_all(Workspace& ws, const std::vector<WorkflowSpec>& workflows);

/// Adds ARI against planted labels (cohort order) to each successful result.
void score_against_planted(std::vector<WorkflowResult>& results, const std::vector<int>& planted);

struct RankedTable {
    std::vector<std::size_t> ranked;  // indices into the results, LRS descending
    struct Drop {
        std::size_t index;
        int stage;  // 0 = failed, 1 = silhouette, 2 = p-value
        std::string reason;
    };
    std::vector<Drop> dropped;
};

/// Keeps workflows with silhouette >= sil_min, then p < p_max; sorts the
/// survivors by decreasing LRS with ties broken by name.
RankedTable filter_and_rank(const std::vector<WorkflowResult>& results, double sil_min = 0.5, double p_max = 0.05);

/// Inputs recorded in the manifest so that a run can be replayed.
struct RunInputs {
    std::filesystem::path visits;
    std::filesystem::path outcomes;
    std::filesystem::path planted;  // optional
};

/// Writes results.csv, results.json, ranked.csv, dropped.csv,
/// assignments.csv, km_curves.csv, embedding CSVs, the intermediate tables
/// and SVG plots under `outdir`.
void render_reports(Workspace& ws, const std::vector<WorkflowResult>& results, const ExclusionReport& exclusions,
                    const RunInputs& inputs, const std::filesystem::path& outdir);

/// Header of results.csv.
inline constexpr const char* kResultsHeader =
    "workflow,k,cluster_sizes,silhouette_mean,silhouette_std,logrank_p_max,lrs_min";

std::string results_csv_row(const WorkflowResult& r);

void write_results_csv(const std::vector<WorkflowResult>& results, const std::filesystem::path& path);
void write_ranked_csv(const std::vector<WorkflowResult>& results, const RankedTable& table,
                      const std::filesystem::path& ranked_path, const std::filesystem::path& dropped_path);
void write_assignments_csv(const std::vector<WorkflowResult>& results, const std::vector<std::string>& ids,
                           const std::filesystem::path& path);
/// workflow_id -> labels in cohort order.
std::vector<std::pair<std::string, std::vector<int>>> read_assignments_csv(const std::filesystem::path& path,
                                                                           const std::vector<std::string>& ids);
void write_km_curves_csv(const std::vector<WorkflowResult>& results, const std::vector<double>& times,
                         const std::vector<int>& events, const std::filesystem::path& path);
void write_fits_csv(const Cohort& cohort, const std::vector<SigmoidFit>& fits, const std::filesystem::path& path);
void write_features_csv(const Cohort& cohort, const std::vector<FeatureVector>& features,
                        const std::filesystem::path& path);
void write_pairs_csv(const std::vector<std::string>& ids, const PairTable& table, const std::filesystem::path& path);
void write_labels_csv(const std::vector<std::string>& ids, const PairTable& table, const PairLabels& labels,
                      const std::filesystem::path& path);
nlohmann::json wsd_to_json(const WsdWeights& w);
nlohmann::json label_model_to_json(const LabelModel& model, const LabelMatrix& lm);
void write_embedding_csv(const Embedding& e, const std::filesystem::path& path);
Embedding read_embedding_csv(const std::filesystem::path& path);
void write_json(const nlohmann::json& j, const std::filesystem::path& path);

/// Kaplan-Meier step plot, one line per cluster.
std::string survival_svg(const std::string& title, const std::vector<SurvivalCurve>& curves);
/// Scatter of 2-D coordinates colored by cluster label.
std::string scatter_svg(const std::string& title, const std::vector<std::array<double, 2>>& coords,
                        const std::vector<int>& labels);

}  // namespace progclust
