#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "progclust/csv.hpp"
#include "progclust/error.hpp"
#include "progclust/parallel.hpp"
#include "progclust/pipeline.hpp"
#include "progclust/synth.hpp"

namespace fs = std::filesystem;
using namespace progclust;

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    std::string out = "run";
    std::string config;
    std::optional<unsigned> threads;
};

struct CohortArgs {
    std::string visits;
    std::string outcomes;
};

PipelineConfig load_config(const Globals& g) {
    PipelineConfig cfg = g.config.empty() ? PipelineConfig{} : PipelineConfig::load(g.config);
    if (g.seed) cfg.seed = *g.seed;
    if (g.threads) cfg.threads = *g.threads == 0 ? default_threads() : *g.threads;
    return cfg;
}

void add_cohort_options(CLI::App* cmd, CohortArgs& args) {
    cmd->add_option("--visits", args.visits, "Visits CSV (default: <out>/cohort/visits.csv)");
    cmd->add_option("--outcomes", args.outcomes, "Outcomes CSV (default: <out>/cohort/outcomes.csv)");
}

std::pair<fs::path, fs::path> cohort_paths(const Globals& g, const CohortArgs& args) {
    const fs::path out(g.out);
    fs::path v = args.visits.empty() ? out / "cohort" / "visits.csv" : fs::path(args.visits);
    fs::path o = args.outcomes.empty() ? out / "cohort" / "outcomes.csv" : fs::path(args.outcomes);
    return {v, o};
}

std::pair<Cohort, ExclusionReport> load_cohort(const Globals& g, const CohortArgs& args, const PipelineConfig& cfg) {
    auto [v, o] = cohort_paths(g, args);
    return apply_exclusions(parse_cohort(v, o), cfg.exclusions);
}

void ensure_dir(const fs::path& p) {
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw InvalidArgument("cannot create directory " + p.string() + ": " + ec.message());
}

std::vector<Measure> parse_measures(const std::vector<std::string>& tags, const PipelineConfig& cfg) {
    std::vector<Measure> out;
    if (tags.empty()) return cfg.measures;
    for (const auto& t : tags) {
        auto m = parse_measure(t);
        if (!m || *m == Measure::kEmbedded) throw InvalidArgument("unknown measure " + t);
        out.push_back(*m);
    }
    return out;
}

std::vector<int> read_planted(const fs::path& path, const std::vector<std::string>& ids) {
    csv::Reader reader(path);
    std::vector<std::string> f;
    if (!reader.next(f) || f.size() != 2 || f[0] != "patient_id")
        throw ParseError(reader.file(), reader.line(), "expected header patient_id,label");
    std::map<std::string, std::string> by_id;
    while (reader.next(f)) {
        if (f.size() != 2) throw ParseError(reader.file(), reader.line(), "expected 2 fields");
        by_id[f[0]] = f[1];
    }
    std::map<std::string, int> codes;
    std::vector<int> out;
    for (const auto& id : ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw InvalidArgument("planted labels lack patient " + id);
        out.push_back(codes.emplace(it->second, static_cast<int>(codes.size())).first->second);
    }
    return out;
}

std::vector<WorkflowSpec> select_workflows(const std::vector<std::string>& names, const PipelineConfig& cfg,
                                           const Cohort& cohort) {
    bool subscores = !cohort.empty();
    for (const auto& s : cohort) subscores = subscores && s.has_subscores();
    if (names.empty()) {
        Grid grid = enumerate_grid(cfg, subscores);
        for (const auto& w : grid.warnings) std::cerr << "warning: " << w << '\n';
        return grid.all();
    }
    std::vector<WorkflowSpec> out;
    for (const auto& n : names) {
        auto spec = parse_workflow_name(n);
        if (!spec) throw InvalidArgument("invalid workflow name " + n);
        spec->seed = workflow_seed(cfg.seed, spec->name());
        out.push_back(*spec);
    }
    return out;
}

std::size_t count_failed(const std::vector<WorkflowResult>& results) {
    std::size_t n = 0;
    for (const auto& r : results)
        if (!r.ok) {
            ++n;
            std::cerr << "workflow " << r.name << " failed: " << r.error << '\n';
        }
    return n;
}

std::vector<WorkflowResult> read_results_csv(const fs::path& path) {
    csv::Reader reader(path);
    std::vector<std::string> f;
    if (!reader.next(f)) throw ParseError(reader.file(), reader.line(), "empty results file");
    std::vector<WorkflowResult> out;
    while (reader.next(f)) {
        if (f.size() != 7) throw ParseError(reader.file(), reader.line(), "expected 7 fields");
        auto spec = parse_workflow_name(f[0]);
        if (!spec) throw ParseError(reader.file(), reader.line(), "invalid workflow name " + f[0]);
        WorkflowResult r;
        r.name = f[0];
        r.spec = *spec;
        r.ok = f[3] != "NA";
        if (r.ok) {
            if (!csv::parse_double(f[3], r.silhouette_mean) || !csv::parse_double(f[4], r.silhouette_std) ||
                !csv::parse_double(f[5], r.p_max) || !csv::parse_double(f[6], r.lrs_min))
                throw ParseError(reader.file(), reader.line(), "malformed numeric field");
        } else {
            r.error = "failed in the original run";
        }
        out.push_back(std::move(r));
    }
    return out;
}

int run_grid(Globals& g, const CohortArgs& args, const std::string& planted_arg, const std::string& replay) {
    CohortArgs in = args;
    std::string planted = planted_arg;
    PipelineConfig cfg;
    if (!replay.empty()) {
        std::ifstream f(replay);
        if (!f) throw InvalidArgument("cannot open manifest " + replay);
        const auto manifest = nlohmann::json::parse(f);
        cfg = PipelineConfig::parse(manifest.at("config_text").get<std::string>());
        if (g.threads) cfg.threads = *g.threads == 0 ? default_threads() : *g.threads;
        const auto& inputs = manifest.at("inputs");
        if (in.visits.empty()) in.visits = inputs.at("visits").get<std::string>();
        if (in.outcomes.empty()) in.outcomes = inputs.at("outcomes").get<std::string>();
        if (planted.empty()) planted = inputs.value("planted", std::string());
    } else {
        cfg = load_config(g);
    }
    const auto started = std::chrono::steady_clock::now();
    auto [vpath, opath] = cohort_paths(g, in);
    auto [cohort, report] = apply_exclusions(parse_cohort(vpath, opath), cfg.exclusions);
    std::cerr << "cohort: " << report.input_count << " patients, " << report.retained_count << " retained\n";

    const auto workflows = select_workflows({}, cfg, cohort);
    Workspace ws(std::move(cohort), cfg);
    auto results = run_all(ws, workflows);
    if (!planted.empty()) score_against_planted(results, read_planted(planted, ws.ids()));
    const fs::path out(g.out);
    ensure_dir(out);
    render_reports(ws, results, report, {vpath, opath, planted.empty() ? fs::path() : fs::path(planted)}, out);

    const RankedTable ranked = filter_and_rank(results, cfg.sil_min, cfg.p_max);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::cout << results.size() << " workflows, " << ranked.ranked.size() << " selected, "
              << csv::format_double(std::round(secs * 100.0) / 100.0) << " s\n";
    for (std::size_t i = 0; i < ranked.ranked.size() && i < 10; ++i) {
        const auto& r = results[ranked.ranked[i]];
        std::cout << "  " << (i + 1) << ". " << results_csv_row(r);
        if (r.ari) std::cout << "  ARI " << csv::format_double(*r.ari);
        std::cout << '\n';
    }
    return count_failed(results) == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Progression clustering of ALSFRS-R trajectories"};
    app.require_subcommand(1);
    Globals g;
    std::uint64_t seed_value = 0;
    unsigned threads_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "Global seed")->group("Global");
    app.add_option("--out", g.out, "Run directory")->group("Global");
    app.add_option("--config", g.config, "Key-value configuration file")->check(CLI::ExistingFile)->group("Global");
    auto* threads_opt = app.add_option("--threads", threads_value, "Worker threads (0 = all cores)")->group("Global");
    app.fallthrough();

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort with planted archetypes");
    std::size_t patients = 150;
    double noise = 1.0;
    int archetypes = 3;
    synth->add_option("--patients", patients, "Number of patients")->check(CLI::Range(2, 1000000));
    synth->add_option("--noise", noise, "Score noise standard deviation")->check(CLI::NonNegativeNumber);
    synth->add_option("--archetypes", archetypes, "3 or 4 planted archetypes")->check(CLI::IsMember({3, 4}));

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Parse, validate and apply exclusion rules");
    CohortArgs ingest_args;
    ingest->add_option("--visits", ingest_args.visits, "Visits CSV")->required();
    ingest->add_option("--outcomes", ingest_args.outcomes, "Outcomes CSV")->required();

    CohortArgs args;
    auto* fit = app.add_subcommand("fit", "Fit sigmoid curves per patient");
    add_cohort_options(fit, args);
    auto* features = app.add_subcommand("features", "Per-patient features and the pairwise variable table");
    add_cohort_options(features, args);
    auto* label = app.add_subcommand("label", "Labeling functions and the generative label model");
    add_cohort_options(label, args);
    auto* train = app.add_subcommand("train-wsd", "Train the weak-supervised distance weights");
    add_cohort_options(train, args);

    std::vector<std::string> measure_tags;
    bool csv_matrix = false;
    auto* dist = app.add_subcommand("dist", "Distance matrices and metric audits");
    add_cohort_options(dist, args);
    dist->add_option("--measure", measure_tags, "MAN, EUC, COS, WSD or DTW (repeatable)");
    dist->add_flag("--csv", csv_matrix, "Also write matrices as CSV");

    auto* emb = app.add_subcommand("embed", "2-D embeddings of the distance matrices");
    add_cohort_options(emb, args);
    emb->add_option("--measure", measure_tags, "MAN, EUC, COS, WSD or DTW (repeatable)");

    std::vector<std::string> workflow_names;
    auto* clus = app.add_subcommand("cluster", "Cluster workflows and write assignments.csv");
    add_cohort_options(clus, args);
    clus->add_option("--workflow", workflow_names, "Workflow name such as WSD_UMAP_AHC_3 (default: full grid)");

    auto* eval = app.add_subcommand("eval", "Evaluate assignments.csv (silhouette, log-rank)");
    add_cohort_options(eval, args);

    std::string planted, replay;
    auto* grid = app.add_subcommand("grid", "Run the full workflow grid and write all reports");
    add_cohort_options(grid, args);
    grid->add_option("--planted", planted, "Planted labels CSV for ARI scoring");
    grid->add_option("--replay", replay, "Re-run from a results.json manifest");

    auto* rep = app.add_subcommand("report", "Ranked table, survival curves and plots from a run directory");
    add_cohort_options(rep, args);

    CLI11_PARSE(app, argc, argv);
    if (*seed_opt) g.seed = seed_value;
    if (*threads_opt) g.threads = threads_value;
    const fs::path out(g.out);

    try {
        if (*synth) {
            const PipelineConfig cfg = load_config(g);
            SynthSpec spec = archetypes == 4 ? four_archetype_spec(patients, noise, cfg.seed)
                                             : three_archetype_spec(patients, noise, cfg.seed);
            ensure_dir(out);
            const SynthCohort sc = generate_cohort(spec);
            write_synth(sc, spec, out);
            std::cout << "wrote " << sc.cohort.size() << " patients to " << out.string() << '\n';
            return 0;
        }
        if (*grid) return run_grid(g, args, planted, replay);

        const PipelineConfig cfg = load_config(g);
        if (*ingest) {
            auto [cohort, report] = apply_exclusions(parse_cohort(ingest_args.visits, ingest_args.outcomes), cfg.exclusions);
            ensure_dir(out / "cohort");
            write_cohort(cohort, out / "cohort" / "visits.csv", out / "cohort" / "outcomes.csv");
            write_json(report.to_json(), out / "exclusions.json");
            std::cout << report.input_count << " patients read, " << report.retained_count << " retained\n";
            for (int rule = 1; rule <= 3; ++rule)
                std::cout << "  rule " << rule << " (" << to_string(static_cast<ExclusionRule>(rule))
                          << "): " << report.excluded_per_rule[rule - 1] << " excluded\n";
            return 0;
        }

        auto [cohort, report] = load_cohort(g, args, cfg);
        ensure_dir(out);
        Workspace ws(cohort, cfg);

        if (*fit) {
            write_fits_csv(ws.cohort(), ws.fits(), out / "fits.csv");
            std::size_t converged = 0;
            for (const auto& f : ws.fits()) converged += f.converged ? 1 : 0;
            std::cout << ws.fits().size() << " fits, " << converged << " converged\n";
            return 0;
        }
        if (*features) {
            write_features_csv(ws.cohort(), ws.features(), out / "features.csv");
            write_pairs_csv(ws.ids(), ws.pair_table(), out / "pairs.csv");
            nlohmann::json j;
            nlohmann::json retained = nlohmann::json::array();
            for (std::size_t c = 0; c < kFeatureCount; ++c)
                if (ws.pair_table().retained[c]) retained.push_back(kVariableNames[c]);
            j["retained_variables"] = retained;
            nlohmann::json rho = nlohmann::json::array();
            for (const auto& row : ws.spearman()) rho.push_back(row);
            j["spearman"] = rho;
            j["variables"] = kVariableNames;
            write_json(j, out / "variables.json");
            std::cout << ws.pair_table().rows() << " pairs, retained: " << retained.dump() << '\n';
            return 0;
        }
        if (*label) {
            write_labels_csv(ws.ids(), ws.pair_table(), ws.pair_labels(), out / "labels.csv");
            write_json(label_model_to_json(ws.label_model(), ws.label_matrix()), out / "label_model.json");
            std::size_t counts[3] = {0, 0, 0};
            for (Vote v : ws.pair_labels().label) ++counts[static_cast<int>(v)];
            std::cout << "T " << counts[0] << ", S " << counts[1] << ", U " << counts[2] << '\n';
            return 0;
        }
        if (*train) {
            write_json(wsd_to_json(ws.wsd()), out / "wsd_weights.json");
            if (!ws.wsd().converged)
                std::cerr << "warning: SVM stopped with duality gap " << ws.wsd().duality_gap << '\n';
            std::cout << wsd_to_json(ws.wsd())["weights"].dump() << '\n';
            return 0;
        }
        if (*dist) {
            for (Measure m : parse_measures(measure_tags, cfg)) {
                const std::string tag = measure_tag(m);
                write_matrix_binary(ws.matrix(m), out / ("dist_" + tag + ".bin"));
                if (csv_matrix) write_matrix_csv(ws.matrix(m), out / ("dist_" + tag + ".csv"));
                write_json(ws.audit(m).to_json(), out / ("audit_" + tag + ".json"));
                std::cout << tag << ": triangle " << csv::format_double(ws.audit(m).triangle_pct) << "% of "
                          << ws.audit(m).triples << " triples\n";
            }
            return 0;
        }
        if (*emb) {
            for (Measure m : parse_measures(measure_tags, cfg)) {
                const Embedding& e = ws.embedding(m);
                write_embedding_csv(e, out / (std::string("embedding_") + measure_tag(m) + ".csv"));
                if (m == Measure::kWsd) write_embedding_csv(e, out / "embedding.csv");
                for (const auto& w : e.warnings) std::cerr << "warning: " << w << '\n';
            }
            return 0;
        }
        if (*clus) {
            const auto workflows = select_workflows(workflow_names, cfg, ws.cohort());
            ws.prepare(workflows);
            std::vector<WorkflowResult> results(workflows.size());
            for (std::size_t i = 0; i < workflows.size(); ++i) {
                results[i].spec = workflows[i];
                results[i].name = workflows[i].name();
                try {
                    results[i].assignment = cluster_workflow(ws, workflows[i]);
                    results[i].ok = true;
                } catch (const std::exception& e) {
                    results[i].error = e.what();
                }
            }
            write_assignments_csv(results, ws.ids(), out / "assignments.csv");
            return count_failed(results) == 0 ? 0 : 2;
        }
        if (*eval) {
            const auto assigned = read_assignments_csv(out / "assignments.csv", ws.ids());
            std::vector<WorkflowSpec> specs;
            for (const auto& [name, labels] : assigned) specs.push_back(select_workflows({name}, cfg, ws.cohort())[0]);
            ws.prepare(specs);
            std::vector<WorkflowResult> results;
            for (std::size_t i = 0; i < assigned.size(); ++i) {
                Assignment asg;
                asg.labels = assigned[i].second;
                asg.k = specs[i].k;
                asg.method = specs[i].method;
                for (int l : asg.labels) asg.k = std::max(asg.k, l + 1);
                try {
                    results.push_back(evaluate_workflow(ws, specs[i], asg));
                } catch (const std::exception& e) {
                    WorkflowResult r;
                    r.spec = specs[i];
                    r.name = specs[i].name();
                    r.error = e.what();
                    results.push_back(r);
                }
            }
            write_results_csv(results, out / "results.csv");
            const RankedTable ranked = filter_and_rank(results, cfg.sil_min, cfg.p_max);
            write_ranked_csv(results, ranked, out / "ranked.csv", out / "dropped.csv");
            std::cout << results.size() << " workflows evaluated, " << ranked.ranked.size() << " selected\n";
            return count_failed(results) == 0 ? 0 : 2;
        }
        if (*rep) {
            auto results = read_results_csv(out / "results.csv");
            const auto assigned = read_assignments_csv(out / "assignments.csv", ws.ids());
            std::map<std::string, const std::vector<int>*> by_name;
            for (const auto& [name, labels] : assigned) by_name[name] = &labels;
            for (auto& r : results) {
                auto it = by_name.find(r.name);
                if (!r.ok || it == by_name.end()) continue;
                r.assignment.labels = *it->second;
                r.assignment.k = r.spec.k;
                for (int l : r.assignment.labels) r.assignment.k = std::max(r.assignment.k, l + 1);
                r.sizes = r.assignment.sizes();
            }
            const RankedTable ranked = filter_and_rank(results, cfg.sil_min, cfg.p_max);
            write_ranked_csv(results, ranked, out / "ranked.csv", out / "dropped.csv");
            const auto times = ws.survival_times();
            const auto events = ws.survival_events();
            std::vector<WorkflowResult> with_labels;
            for (const auto& r : results)
                if (r.ok && !r.assignment.labels.empty()) with_labels.push_back(r);
            write_km_curves_csv(with_labels, times, events, out / "km_curves.csv");
            ensure_dir(out / "plots");
            std::map<std::string, Embedding> embeddings;
            for (const auto& r : with_labels) {
                std::vector<SurvivalCurve> curves;
                for (int c = 0; c < r.assignment.k; ++c) {
                    std::vector<double> t;
                    std::vector<int> e;
                    for (std::size_t i = 0; i < times.size(); ++i)
                        if (r.assignment.labels[i] == c) {
                            t.push_back(times[i]);
                            e.push_back(events[i]);
                        }
                    curves.push_back(t.empty() ? SurvivalCurve{} : kaplan_meier(t, e));
                }
                auto svg = csv::open_out(out / "plots" / ("km_" + r.name + ".svg"));
                svg << survival_svg(r.name, curves);
                if (!r.spec.embed) continue;
                const std::string tag = measure_tag(r.spec.measure);
                const fs::path epath = out / ("embedding_" + tag + ".csv");
                if (!fs::exists(epath)) continue;
                if (!embeddings.count(tag)) embeddings[tag] = read_embedding_csv(epath);
                auto sc = csv::open_out(out / "plots" / ("embedding_" + r.name + ".svg"));
                sc << scatter_svg(r.name, embeddings[tag].coords, r.assignment.labels);
            }
            std::cout << ranked.ranked.size() << " of " << results.size() << " workflows selected\n";
            for (std::size_t i = 0; i < ranked.ranked.size(); ++i)
                std::cout << "  " << (i + 1) << ". " << results_csv_row(results[ranked.ranked[i]]) << '\n';
            return 0;
        }
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
