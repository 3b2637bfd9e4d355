#include "progclust/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "progclust/csv.hpp"
#include "progclust/error.hpp"
#include "progclust/parallel.hpp"
#include "progclust/rng.hpp"

namespace progclust {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    for (const auto& f : csv::split(v)) {
        auto t = trim(f);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    double d = 0.0;
    if (!csv::parse_double(v, d) || !std::isfinite(d))
        throw InvalidArgument("config: '" + key + "' expects a number, got '" + v + "'");
    return d;
}

long long to_integer(const std::string& key, const std::string& v, long long lo, long long hi) {
    long long x = 0;
    const char* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, x);
    if (ec != std::errc{} || p != end || x < lo || x > hi)
        throw InvalidArgument("config: '" + key + "' expects an integer in [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "], got '" + v + "'");
    return x;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw InvalidArgument("config: '" + key + "' expects a boolean, got '" + v + "'");
}

std::optional<ClusterMethod> parse_method(std::string_view tag) {
    if (tag == "KME") return ClusterMethod::kKMeans;
    if (tag == "KMD") return ClusterMethod::kKMedoids;
    if (tag == "AHC") return ClusterMethod::kAgglomerative;
    return std::nullopt;
}

std::string join(const std::vector<std::string>& parts, char sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

bool is_proposed_measure(Measure m) {
    return m == Measure::kManhattan || m == Measure::kEuclidean || m == Measure::kCosine || m == Measure::kWsd;
}

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value) {
    const std::string& v = value;
    if (key == "seed") {
        seed = static_cast<std::uint64_t>(to_integer(key, v, 0, std::numeric_limits<long long>::max()));
    } else if (key == "measures") {
        measures.clear();
        for (const auto& t : split_list(v)) {
            auto m = parse_measure(t);
            if (!m || !is_proposed_measure(*m)) throw InvalidArgument("config: unknown measure '" + t + "'");
            if (std::find(measures.begin(), measures.end(), *m) == measures.end()) measures.push_back(*m);
        }
        if (measures.empty()) throw InvalidArgument("config: 'measures' is empty");
    } else if (key == "methods") {
        methods.clear();
        for (const auto& t : split_list(v)) {
            auto m = parse_method(t);
            if (!m) throw InvalidArgument("config: unknown method '" + t + "'");
            if (std::find(methods.begin(), methods.end(), *m) == methods.end()) methods.push_back(*m);
        }
        if (methods.empty()) throw InvalidArgument("config: 'methods' is empty");
    } else if (key == "k_min") {
        k_min = static_cast<int>(to_integer(key, v, 2, 1000));
    } else if (key == "k_max") {
        k_max = static_cast<int>(to_integer(key, v, 2, 1000));
    } else if (key == "plain") {
        with_plain = to_bool(key, v);
    } else if (key == "embed") {
        with_embedding = to_bool(key, v);
    } else if (key == "baselines") {
        with_baselines = to_bool(key, v);
    } else if (key == "min_visits") {
        exclusions.min_visits = static_cast<std::size_t>(to_integer(key, v, 1, 100000));
    } else if (key == "max_rise") {
        exclusions.max_rise = static_cast<int>(to_integer(key, v, 0, 48));
    } else if (key == "max_contact_gap") {
        exclusions.max_contact_gap = static_cast<int>(to_integer(key, v, 0, 100000));
    } else if (key == "sigmoid_restarts") {
        fit.restarts = static_cast<int>(to_integer(key, v, 1, 10000));
    } else if (key == "sigmoid_max_iterations") {
        fit.max_iterations = static_cast<int>(to_integer(key, v, 1, 1000000));
    } else if (key == "sigmoid_tolerance") {
        fit.relative_tolerance = to_double(key, v);
    } else if (key == "horizon_days") {
        horizon_days = to_double(key, v);
    } else if (key == "spearman_threshold") {
        spearman_threshold = to_double(key, v);
    } else if (key == "self_pairs") {
        self_pairs = to_bool(key, v);
    } else if (key == "cosine_input") {
        if (v == "scaled") cosine_on_raw = false;
        else if (v == "raw") cosine_on_raw = true;
        else throw InvalidArgument("config: 'cosine_input' expects scaled or raw");
    } else if (key == "svm_c") {
        svm.c = to_double(key, v);
        if (svm.c <= 0.0) throw InvalidArgument("config: 'svm_c' must be positive");
    } else if (key == "svm_gap_tolerance") {
        svm.gap_tolerance = to_double(key, v);
    } else if (key == "svm_max_passes") {
        svm.max_passes = static_cast<int>(to_integer(key, v, 1, 100000000));
    } else if (key == "label_max_iterations") {
        label_model.max_iterations = static_cast<int>(to_integer(key, v, 1, 1000000));
    } else if (key == "label_tolerance") {
        label_model.tolerance = to_double(key, v);
    } else if (key == "label_initial_accuracy") {
        label_model.initial_accuracy = to_double(key, v);
    } else if (key == "umap_neighbors") {
        embedding.n_neighbors = static_cast<std::size_t>(to_integer(key, v, 2, 100000));
    } else if (key == "umap_min_dist") {
        embedding.min_dist = to_double(key, v);
    } else if (key == "umap_spread") {
        embedding.spread = to_double(key, v);
    } else if (key == "umap_epochs") {
        embedding.n_epochs = static_cast<int>(to_integer(key, v, 1, 100000));
    } else if (key == "umap_negative_samples") {
        embedding.negative_samples = static_cast<int>(to_integer(key, v, 0, 1000));
    } else if (key == "kmeans_restarts") {
        kmeans_restarts = static_cast<int>(to_integer(key, v, 1, 10000));
    } else if (key == "silhouette_space") {
        if (v == "clustered") silhouette_space = SilhouetteSpace::kClustered;
        else if (v == "original") silhouette_space = SilhouetteSpace::kOriginal;
        else throw InvalidArgument("config: 'silhouette_space' expects clustered or original");
    } else if (key == "gom_mode") {
        if (v == "fixed") gom_percentile = false;
        else if (v == "percentile") gom_percentile = true;
        else throw InvalidArgument("config: 'gom_mode' expects fixed or percentile");
    } else if (key == "gom_threshold") {
        gom_threshold = to_double(key, v);
    } else if (key == "hal_items") {
        hal_items.clear();
        for (const auto& t : split_list(v))
            hal_items.push_back(static_cast<int>(to_integer(key, t, 1, kItemCount)) - 1);
    } else if (key == "sil_min") {
        sil_min = to_double(key, v);
    } else if (key == "p_max") {
        p_max = to_double(key, v);
    } else if (key == "audit_triples") {
        audit_triples = static_cast<std::uint64_t>(to_integer(key, v, 1, std::numeric_limits<long long>::max()));
    } else if (key == "threads") {
        threads = static_cast<unsigned>(to_integer(key, v, 0, 4096));
        if (threads == 0) threads = default_threads();
    } else {
        throw InvalidArgument("config: unknown key '" + key + "'");
    }
}

PipelineConfig PipelineConfig::parse(const std::string& text, const std::string& source) {
    PipelineConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError(source, lineno, "expected key = value");
        try {
            cfg.set(trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
        } catch (const InvalidArgument& e) {
            throw ParseError(source, lineno, e.what());
        }
    }
    if (cfg.k_max < cfg.k_min) throw InvalidArgument("config: k_max < k_min");
    return cfg;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

std::string PipelineConfig::to_text() const {
    std::vector<std::string> ms, meth, items;
    for (auto m : measures) ms.emplace_back(measure_tag(m));
    for (auto m : methods) meth.emplace_back(method_tag(m));
    for (int i : hal_items) items.push_back(std::to_string(i + 1));
    const auto b = [](bool x) { return std::string(x ? "true" : "false"); };
    const auto d = [](double x) { return csv::format_double(x); };
    std::ostringstream o;
    o << "seed = " << seed << '\n'
      << "measures = " << join(ms, ',') << '\n'
      << "methods = " << join(meth, ',') << '\n'
      << "k_min = " << k_min << '\n'
      << "k_max = " << k_max << '\n'
      << "plain = " << b(with_plain) << '\n'
      << "embed = " << b(with_embedding) << '\n'
      << "baselines = " << b(with_baselines) << '\n'
      << "min_visits = " << exclusions.min_visits << '\n'
      << "max_rise = " << exclusions.max_rise << '\n'
      << "max_contact_gap = " << exclusions.max_contact_gap << '\n'
      << "sigmoid_restarts = " << fit.restarts << '\n'
      << "sigmoid_max_iterations = " << fit.max_iterations << '\n'
      << "sigmoid_tolerance = " << d(fit.relative_tolerance) << '\n'
      << "horizon_days = " << d(horizon_days) << '\n'
      << "spearman_threshold = " << d(spearman_threshold) << '\n'
      << "self_pairs = " << b(self_pairs) << '\n'
      << "cosine_input = " << (cosine_on_raw ? "raw" : "scaled") << '\n'
      << "svm_c = " << d(svm.c) << '\n'
      << "svm_gap_tolerance = " << d(svm.gap_tolerance) << '\n'
      << "svm_max_passes = " << svm.max_passes << '\n'
      << "label_max_iterations = " << label_model.max_iterations << '\n'
      << "label_tolerance = " << d(label_model.tolerance) << '\n'
      << "label_initial_accuracy = " << d(label_model.initial_accuracy) << '\n'
      << "umap_neighbors = " << embedding.n_neighbors << '\n'
      << "umap_min_dist = " << d(embedding.min_dist) << '\n'
      << "umap_spread = " << d(embedding.spread) << '\n'
      << "umap_epochs = " << embedding.n_epochs << '\n'
      << "umap_negative_samples = " << embedding.negative_samples << '\n'
      << "kmeans_restarts = " << kmeans_restarts << '\n'
      << "silhouette_space = " << (silhouette_space == SilhouetteSpace::kClustered ? "clustered" : "original")
      << '\n'
      << "gom_mode = " << (gom_percentile ? "percentile" : "fixed") << '\n'
      << "gom_threshold = " << d(gom_threshold) << '\n'
      << "hal_items = " << join(items, ',') << '\n'
      << "sil_min = " << d(sil_min) << '\n'
      << "p_max = " << d(p_max) << '\n'
      << "audit_triples = " << audit_triples << '\n'
      << "threads = " << threads << '\n';
    return o.str();
}

nlohmann::json PipelineConfig::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    std::istringstream in(to_text());
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        j[trim(std::string_view(line).substr(0, eq))] = trim(std::string_view(line).substr(eq + 1));
    }
    return j;
}

std::string WorkflowSpec::name() const {
    if (baseline == "GOM" || baseline == "GRO" || baseline == "MEY") return baseline + "_" + std::to_string(k);
    std::string out = baseline.empty() ? measure_tag(measure) : baseline;
    if (embed) out += "_UMAP";
    out += "_";
    out += method_tag(method);
    out += "_" + std::to_string(k);
    return out;
}

std::uint64_t workflow_seed(std::uint64_t global_seed, const std::string& name) {
    return stream_seed(global_seed, name);
}

std::optional<WorkflowSpec> parse_workflow_name(const std::string& name) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto p = name.find('_', start);
        parts.push_back(name.substr(start, p == std::string::npos ? std::string::npos : p - start));
        if (p == std::string::npos) break;
        start = p + 1;
    }
    int k = 0;
    if (parts.size() < 2 || !csv::parse_int(parts.back(), k) || k < 1) return std::nullopt;
    WorkflowSpec spec;
    spec.k = k;
    const std::string& head = parts.front();
    if (head == "GOM" || head == "GRO" || head == "MEY") {
        const int fixed_k = head == "GOM" ? 2 : head == "GRO" ? 4 : 3;
        if (parts.size() != 2 || k != fixed_k) return std::nullopt;
        spec.baseline = head;
        spec.method = ClusterMethod::kThreshold;
        return spec;
    }
    if (parts.size() != 3 && parts.size() != 4) return std::nullopt;
    if (parts.size() == 4) {
        if (parts[1] != "UMAP") return std::nullopt;
        spec.embed = true;
    }
    auto method = parse_method(parts[parts.size() - 2]);
    if (!method) return std::nullopt;
    spec.method = *method;
    if (head == "HAL") {
        if (spec.method != ClusterMethod::kAgglomerative) return std::nullopt;
        spec.baseline = "HAL";
        spec.measure = Measure::kDtw;
        return spec;
    }
    auto m = parse_measure(head);
    if (!m || !is_proposed_measure(*m)) return std::nullopt;
    if (spec.method == ClusterMethod::kKMeans && !spec.embed) return std::nullopt;
    spec.measure = *m;
    return spec;
}

std::vector<WorkflowSpec> Grid::all() const {
    std::vector<WorkflowSpec> out = proposed;
    out.insert(out.end(), baselines.begin(), baselines.end());
    return out;
}

Grid enumerate_grid(const PipelineConfig& cfg, bool has_subscores) {
    Grid grid;
    const auto finish = [&](WorkflowSpec s, std::vector<WorkflowSpec>& into) {
        s.seed = workflow_seed(cfg.seed, s.name());
        into.push_back(std::move(s));
    };
    for (Measure m : cfg.measures) {
        for (bool embed : {false, true}) {
            if (embed ? !cfg.with_embedding : !cfg.with_plain) continue;
            for (ClusterMethod method : cfg.methods) {
                if (method == ClusterMethod::kKMeans && !embed) continue;
                for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
                    WorkflowSpec s;
                    s.measure = m;
                    s.embed = embed;
                    s.method = method;
                    s.k = k;
                    finish(s, grid.proposed);
                }
            }
        }
    }
    if (!cfg.with_baselines) return grid;
    for (auto [id, k] : {std::pair{"GOM", 2}, std::pair{"GRO", 4}, std::pair{"MEY", 3}}) {
        WorkflowSpec s;
        s.baseline = id;
        s.method = ClusterMethod::kThreshold;
        s.k = k;
        finish(s, grid.baselines);
    }
    if (!has_subscores) {
        grid.warnings.push_back("HAL workflows skipped: the cohort has no item subscores");
        return grid;
    }
    for (bool embed : {false, true}) {
        for (int k = 4; k <= 6; ++k) {
            WorkflowSpec s;
            s.baseline = "HAL";
            s.measure = Measure::kDtw;
            s.embed = embed;
            s.method = ClusterMethod::kAgglomerative;
            s.k = k;
            finish(s, grid.baselines);
        }
    }
    return grid;
}

Workspace::Workspace(Cohort cohort, PipelineConfig cfg) : cohort_(std::move(cohort)), cfg_(std::move(cfg)) {
    if (cohort_.size() < 2) throw InvalidArgument("workspace needs at least two patients");
}

std::vector<std::string> Workspace::ids() const {
    std::vector<std::string> out;
    out.reserve(cohort_.size());
    for (const auto& s : cohort_) out.push_back(s.patient_id);
    return out;
}

const std::vector<SigmoidFit>& Workspace::fits() {
    if (!fits_) fits_ = fit_cohort(cohort_, cfg_.seed, cfg_.fit, cfg_.threads);
    return *fits_;
}

const std::vector<FeatureVector>& Workspace::features() {
    if (!features_) {
        const auto& f = fits();
        FeatureOptions opts;
        opts.horizon_days = cfg_.horizon_days;
        std::vector<FeatureVector> out(cohort_.size());
        for (std::size_t i = 0; i < cohort_.size(); ++i) out[i] = sequence_features(cohort_[i], f[i], opts);
        features_ = std::move(out);
    }
    return *features_;
}

const FeatureMatrix& Workspace::feature_matrix() {
    if (!feature_matrix_) feature_matrix_ = to_matrix(features());
    return *feature_matrix_;
}

const ColumnScaling& Workspace::patient_scaling() {
    if (!patient_scaling_) patient_scaling_ = fit_scaling(feature_matrix());
    return *patient_scaling_;
}

const PairTable& Workspace::pair_table() {
    if (!table_) {
        PairTable t = pairwise_table(feature_matrix(), cfg_.self_pairs);
        minmax_normalize(t);
        spearman_ = spearman_matrix(t);
        t.retained = spearman_filter(t, cfg_.spearman_threshold);
        table_ = std::move(t);
    }
    return *table_;
}

const std::array<std::array<double, kFeatureCount>, kFeatureCount>& Workspace::spearman() {
    pair_table();
    return *spearman_;
}

const LabelMatrix& Workspace::label_matrix() {
    if (!lm_) lm_ = apply_labeling_functions(pair_table());
    return *lm_;
}

const LabelModel& Workspace::label_model() {
    if (!model_) model_ = fit_label_model(label_matrix(), cfg_.label_model);
    return *model_;
}

const PairLabels& Workspace::pair_labels() {
    if (!labels_) labels_ = infer_labels(label_model(), label_matrix());
    return *labels_;
}

const WsdWeights& Workspace::wsd() {
    if (!wsd_) wsd_ = train_wsd(pair_table(), pair_labels(), cfg_.svm);
    return *wsd_;
}

std::vector<std::vector<double>> Workspace::measure_input(Measure m) {
    const FeatureMatrix& raw = feature_matrix();
    const PairTable& table = pair_table();
    std::vector<std::size_t> cols;
    if (m == Measure::kWsd) {
        cols = wsd().variables;
    } else {
        for (std::size_t c = 0; c < kFeatureCount; ++c)
            if (table.retained[c]) cols.push_back(c);
    }
    std::vector<std::vector<double>> out(raw.size(), std::vector<double>(cols.size()));
    const ColumnScaling& ps = patient_scaling();
    for (std::size_t i = 0; i < raw.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const std::size_t c = cols[j];
            double v = raw[i][c];
            switch (m) {
                case Measure::kWsd: v *= table.scaling.inverse_range(c); break;
                case Measure::kCosine:
                    if (!cfg_.cosine_on_raw) v = ps.normalize(c, v);
                    break;
                case Measure::kManhattan:
                case Measure::kEuclidean: v = ps.normalize(c, v); break;
                default: throw InvalidArgument(std::string("no feature input for measure ") + measure_tag(m));
            }
            out[i][j] = v;
        }
    }
    return out;
}

const DistanceMatrix& Workspace::matrix(Measure m) {
    auto it = matrices_.find(m);
    if (it != matrices_.end()) return it->second;
    DistanceMatrix d;
    if (m == Measure::kDtw) {
        d = dtw_matrix(cohort_, cfg_.hal_items, cfg_.threads);
    } else {
        const auto input = measure_input(m);
        std::vector<double> w;
        if (m == Measure::kWsd) w = wsd().weights;
        d = distance_matrix(input, m, w, ids(), cfg_.threads);
    }
    return matrices_.emplace(m, std::move(d)).first->second;
}

namespace {

EmbeddingParams embedding_params(const PipelineConfig& cfg, Measure m) {
    EmbeddingParams p = cfg.embedding;
    p.seed = stream_seed(cfg.seed, std::string("UMAP_") + measure_tag(m));
    return p;
}

}  // namespace

const Embedding& Workspace::embedding(Measure m) {
    auto it = embeddings_.find(m);
    if (it != embeddings_.end()) return it->second;
    Embedding e = embed(matrix(m), embedding_params(cfg_, m));
    return embeddings_.emplace(m, std::move(e)).first->second;
}

const DistanceMatrix& Workspace::embedded_matrix(Measure m) {
    auto it = embedded_.find(m);
    if (it != embedded_.end()) return it->second;
    DistanceMatrix d = euclidean_matrix(embedding(m).points(), ids());
    return embedded_.emplace(m, std::move(d)).first->second;
}

const DistanceMatrix& Workspace::baseline_matrix(const std::string& baseline) {
    auto it = baseline_matrices_.find(baseline);
    if (it != baseline_matrices_.end()) return it->second;
    const auto& f = features();
    std::vector<std::vector<double>> x(f.size(), std::vector<double>(1));
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (baseline == "GOM") x[i][0] = f[i].pc_change_m6;
        else if (baseline == "GRO") x[i][0] = f[i].score_m12;
        else if (baseline == "MEY") x[i][0] = f[i].d50;
        else throw InvalidArgument("no stratifying feature for baseline " + baseline);
    }
    DistanceMatrix d = distance_matrix(x, Measure::kManhattan, {}, ids());
    return baseline_matrices_.emplace(baseline, std::move(d)).first->second;
}

const MetricAudit& Workspace::audit(Measure m) {
    auto it = audits_.find(m);
    if (it != audits_.end()) return it->second;
    MetricAudit a = audit_metric(matrix(m), cfg_.audit_triples, stream_seed(cfg_.seed, std::string("audit_") + measure_tag(m)));
    return audits_.emplace(m, a).first->second;
}

std::vector<double> Workspace::survival_times() const {
    std::vector<double> t;
    t.reserve(cohort_.size());
    for (const auto& s : cohort_) t.push_back(static_cast<double>(s.outcome.survival_days));
    return t;
}

std::vector<int> Workspace::survival_events() const {
    std::vector<int> e;
    e.reserve(cohort_.size());
    for (const auto& s : cohort_) e.push_back(s.outcome.event_observed ? 1 : 0);
    return e;
}

void Workspace::prepare(const std::vector<WorkflowSpec>& workflows) {
    std::vector<Measure> plain, embedded;
    bool thresholds = false;
    for (const auto& w : workflows) {
        if (w.baseline == "GOM" || w.baseline == "GRO" || w.baseline == "MEY") {
            thresholds = true;
            continue;
        }
        const Measure m = w.measure;
        if (std::find(plain.begin(), plain.end(), m) == plain.end()) plain.push_back(m);
        if (w.embed && std::find(embedded.begin(), embedded.end(), m) == embedded.end()) embedded.push_back(m);
    }
    if (thresholds) {
        for (const char* b : {"GOM", "GRO", "MEY"}) baseline_matrix(b);
    }
    for (Measure m : plain) matrix(m);

    std::vector<Measure> todo;
    for (Measure m : embedded)
        if (!embeddings_.count(m)) todo.push_back(m);
    std::vector<Embedding> done(todo.size());
    parallel_for(todo.size(), cfg_.threads, [&](std::size_t i) {
        done[i] = embed(matrices_.at(todo[i]), embedding_params(cfg_, todo[i]));
    });
    for (std::size_t i = 0; i < todo.size(); ++i) embeddings_.emplace(todo[i], std::move(done[i]));
    for (Measure m : embedded) embedded_matrix(m);
}

Assignment cluster_workflow(Workspace& ws, const WorkflowSpec& spec) {
    const std::string name = spec.name();
    if (spec.baseline == "GOM") {
        const auto& f = ws.features();
        const double threshold = ws.config().gom_percentile ? gom_percentile_threshold(f) : ws.config().gom_threshold;
        return gom_strata(f, threshold);
    }
    if (spec.baseline == "GRO") return gro_strata(ws.features());
    if (spec.baseline == "MEY") return mey_strata(ws.features());
    if (!spec.baseline.empty() && spec.baseline != "HAL") throw InvalidArgument("unknown baseline " + spec.baseline);
    if (spec.k < 2) throw InvalidArgument("workflow " + name + ": k must be at least 2");

    const DistanceMatrix& m = spec.embed ? ws.embedded_matrix(spec.measure) : ws.matrix(spec.measure);
    switch (spec.method) {
        case ClusterMethod::kKMeans: {
            if (!spec.embed) throw InvalidArgument("workflow " + name + ": k-means needs embedded coordinates");
            KMeansOptions opts;
            opts.restarts = ws.config().kmeans_restarts;
            const std::uint64_t seed = spec.seed ? spec.seed : workflow_seed(ws.config().seed, name);
            return kmeans(ws.embedding(spec.measure).points(), spec.k, seed, opts);
        }
        case ClusterMethod::kKMedoids: return kmedoids(m, spec.k);
        case ClusterMethod::kAgglomerative: return ahc_complete(m, spec.k);
        default: throw InvalidArgument("workflow " + name + ": unsupported method");
    }
}

WorkflowResult evaluate_workflow(Workspace& ws, const WorkflowSpec& spec, const Assignment& asg) {
    WorkflowResult r;
    r.spec = spec;
    r.name = spec.name();
    r.assignment = asg;
    r.sizes = asg.sizes();
    if (asg.labels.size() != ws.cohort().size())
        throw InvalidArgument("workflow " + r.name + ": assignment size does not match the cohort");
    if (asg.occupied() < 2)
        throw ComputeError("workflow " + r.name + ": fewer than two occupied clusters");

    const DistanceMatrix* m = nullptr;
    if (spec.baseline == "GOM" || spec.baseline == "GRO" || spec.baseline == "MEY") {
        m = &ws.baseline_matrix(spec.baseline);
    } else if (spec.embed && ws.config().silhouette_space == SilhouetteSpace::kClustered) {
        m = &ws.embedded_matrix(spec.measure);
    } else {
        m = &ws.matrix(spec.measure);
    }
    const SilhouetteResult sil = silhouette(*m, asg);
    r.silhouette_mean = sil.mean;
    r.silhouette_std = sil.std;

    const auto times = ws.survival_times();
    const auto events = ws.survival_events();
    const SurvivalSeparation sep = survival_separation(asg.labels, times, events);
    r.p_max = sep.max_p;
    r.lrs_min = sep.min_lrs;
    r.ok = true;
    return r;
}

WorkflowResult run_workflow(Workspace& ws, const WorkflowSpec& spec) {
    try {
        return evaluate_workflow(ws, spec, cluster_workflow(ws, spec));
    } catch (const std::exception& e) {
        WorkflowResult r;
        r.spec = spec;
        r.name = spec.name();
        r.ok = false;
        r.error = e.what();
        return r;
    }
}

std::vector<WorkflowResult> run_all(Workspace& ws, const std::vector<WorkflowSpec>& workflows) {
    ws.prepare(workflows);
    std::vector<WorkflowResult> out(workflows.size());
    parallel_for(workflows.size(), ws.config().threads,
                 [&](std::size_t i) { out[i] = run_workflow(ws, workflows[i]); });
    return out;
}

void score_against_planted(std::vector<WorkflowResult>& results, const std::vector<int>& planted) {
    for (auto& r : results) {
        if (!r.ok || r.assignment.labels.size() != planted.size()) continue;
        r.ari = adjusted_rand_index(r.assignment.labels, planted);
    }
}

RankedTable filter_and_rank(const std::vector<WorkflowResult>& results, double sil_min, double p_max) {
    RankedTable t;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        if (!r.ok) {
            t.dropped.push_back({i, 0, "failed: " + r.error});
        } else if (!(r.silhouette_mean >= sil_min)) {
            t.dropped.push_back({i, 1, "silhouette " + csv::format_double(r.silhouette_mean) + " < " +
                                           csv::format_double(sil_min)});
        } else if (!(r.p_max < p_max)) {
            t.dropped.push_back({i, 2, "max log-rank p " + csv::format_double(r.p_max) + " >= " +
                                           csv::format_double(p_max)});
        } else {
            t.ranked.push_back(i);
        }
    }
    std::stable_sort(t.ranked.begin(), t.ranked.end(), [&](std::size_t a, std::size_t b) {
        if (results[a].lrs_min != results[b].lrs_min) return results[a].lrs_min > results[b].lrs_min;
        return results[a].name < results[b].name;
    });
    return t;
}

}  // namespace progclust
