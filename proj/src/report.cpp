#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "progclust/csv.hpp"
#include "progclust/error.hpp"
#include "progclust/pipeline.hpp"
#include "progclust/rng.hpp"

namespace progclust {

namespace {

namespace fs = std::filesystem;
using csv::format_double;

constexpr std::array<const char*, 10> kPalette{"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e",
                                               "#e6ab02", "#a6761d", "#666666", "#1f78b4", "#b2df8a"};

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fixed(double v, int digits) {
    std::ostringstream o;
    o.setf(std::ios::fixed);
    o.precision(digits);
    o << v;
    return o.str();
}

std::string sizes_field(const std::vector<std::size_t>& sizes) {
    std::string out;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (i) out += ';';
        out += std::to_string(sizes[i]);
    }
    return out;
}

nlohmann::json scaling_to_json(const ColumnScaling& s, const std::array<const char*, kFeatureCount>& names) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t c = 0; c < kFeatureCount; ++c)
        j[names[c]] = {{"min", s.min[c]}, {"max", s.max[c]}, {"constant", s.constant[c]}};
    return j;
}

nlohmann::json result_to_json(const WorkflowResult& r) {
    nlohmann::json j{{"workflow", r.name}, {"seed", r.spec.seed}, {"ok", r.ok}};
    if (!r.ok) {
        j["error"] = r.error;
        return j;
    }
    j["k"] = r.spec.k;
    j["cluster_sizes"] = r.sizes;
    j["occupied"] = r.assignment.occupied();
    j["degenerate"] = r.assignment.degenerate;
    j["objective"] = r.assignment.objective;
    j["silhouette_mean"] = r.silhouette_mean;
    j["silhouette_std"] = r.silhouette_std;
    j["logrank_p_max"] = r.p_max;
    j["lrs_min"] = r.lrs_min;
    if (r.ari) j["ari"] = *r.ari;
    return j;
}

std::string plot_name(const std::string& workflow) {
    std::string out;
    for (char c : workflow) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '_') ? c : '-';
    return out;
}

void write_text(const std::string& text, const fs::path& path) {
    auto out = csv::open_out(path);
    out << text;
}

}  // namespace

std::string results_csv_row(const WorkflowResult& r) {
    std::ostringstream o;
    o << r.name << ',' << r.spec.k << ',';
    if (!r.ok) {
        o << ",NA,NA,NA,NA";
        return o.str();
    }
    o << sizes_field(r.sizes) << ',' << format_double(r.silhouette_mean) << ',' << format_double(r.silhouette_std)
      << ',' << format_double(r.p_max) << ',' << format_double(r.lrs_min);
    return o.str();
}

void write_results_csv(const std::vector<WorkflowResult>& results, const fs::path& path) {
    auto out = csv::open_out(path);
    out << kResultsHeader << '\n';
    for (const auto& r : results) out << results_csv_row(r) << '\n';
}

void write_ranked_csv(const std::vector<WorkflowResult>& results, const RankedTable& table, const fs::path& ranked_path,
                      const fs::path& dropped_path) {
    {
        auto out = csv::open_out(ranked_path);
        out << "rank," << kResultsHeader << '\n';
        for (std::size_t i = 0; i < table.ranked.size(); ++i)
            out << (i + 1) << ',' << results_csv_row(results[table.ranked[i]]) << '\n';
    }
    auto out = csv::open_out(dropped_path);
    out << "workflow,stage,reason\n";
    for (const auto& d : table.dropped) {
        std::string reason = d.reason;
        std::replace(reason.begin(), reason.end(), ',', ';');
        std::replace(reason.begin(), reason.end(), '\n', ' ');
        out << results[d.index].name << ',' << d.stage << ',' << reason << '\n';
    }
}

void write_assignments_csv(const std::vector<WorkflowResult>& results, const std::vector<std::string>& ids,
                           const fs::path& path) {
    auto out = csv::open_out(path);
    out << "workflow_id,patient_id,cluster\n";
    for (const auto& r : results) {
        if (!r.ok) continue;
        for (std::size_t i = 0; i < ids.size(); ++i) out << r.name << ',' << ids[i] << ',' << r.assignment.labels[i] << '\n';
    }
}

std::vector<std::pair<std::string, std::vector<int>>> read_assignments_csv(const fs::path& path,
                                                                           const std::vector<std::string>& ids) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = i;
    csv::Reader reader(path);
    std::vector<std::string> f;
    if (!reader.next(f) || f.size() != 3 || f[0] != "workflow_id" || f[1] != "patient_id" || f[2] != "cluster")
        throw ParseError(reader.file(), reader.line(), "expected header workflow_id,patient_id,cluster");
    std::vector<std::pair<std::string, std::vector<int>>> out;
    std::map<std::string, std::size_t> slot;
    while (reader.next(f)) {
        if (f.size() != 3) throw ParseError(reader.file(), reader.line(), "expected 3 fields");
        int cluster = 0;
        if (!csv::parse_int(f[2], cluster) || cluster < 0)
            throw ParseError(reader.file(), reader.line(), "cluster must be a non-negative integer");
        auto p = index.find(f[1]);
        if (p == index.end()) throw ParseError(reader.file(), reader.line(), "unknown patient " + f[1]);
        auto [it, fresh] = slot.emplace(f[0], out.size());
        if (fresh) out.emplace_back(f[0], std::vector<int>(ids.size(), -1));
        auto& labels = out[it->second].second;
        if (labels[p->second] != -1)
            throw ParseError(reader.file(), reader.line(), "duplicate assignment for " + f[1]);
        labels[p->second] = cluster;
    }
    for (const auto& [name, labels] : out)
        if (std::count(labels.begin(), labels.end(), -1))
            throw ParseError(path.string(), 0, "workflow " + name + " does not assign every patient");
    return out;
}

void write_km_curves_csv(const std::vector<WorkflowResult>& results, const std::vector<double>& times,
                         const std::vector<int>& events, const fs::path& path) {
    auto out = csv::open_out(path);
    out << "workflow_id,cluster,time,survival,at_risk\n";
    for (const auto& r : results) {
        if (!r.ok) continue;
        for (int c = 0; c < r.assignment.k; ++c) {
            std::vector<double> t;
            std::vector<int> e;
            for (std::size_t i = 0; i < times.size(); ++i) {
                if (r.assignment.labels[i] != c) continue;
                t.push_back(times[i]);
                e.push_back(events[i]);
            }
            if (t.empty()) continue;
            for (const auto& knot : kaplan_meier(t, e).knots)
                out << r.name << ',' << c << ',' << format_double(knot.time) << ',' << format_double(knot.survival)
                    << ',' << knot.at_risk << '\n';
        }
    }
}

void write_fits_csv(const Cohort& cohort, const std::vector<SigmoidFit>& fits, const fs::path& path) {
    auto out = csv::open_out(path);
    out << "patient_id,b,m,a,c,rmse,converged,restart,visits,mean_visit_gap\n";
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        const auto& f = fits[i];
        out << cohort[i].patient_id << ',' << format_double(f.b) << ',' << format_double(f.m) << ','
            << format_double(f.a) << ',' << format_double(f.c) << ',' << format_double(f.rmse) << ','
            << (f.converged ? 1 : 0) << ',' << f.restart_index << ',' << cohort[i].visits.size() << ','
            << format_double(mean_visit_gap(cohort[i])) << '\n';
    }
}

void write_features_csv(const Cohort& cohort, const std::vector<FeatureVector>& features, const fs::path& path) {
    auto out = csv::open_out(path);
    out << "patient_id";
    for (const char* n : kFeatureNames) out << ',' << n;
    out << '\n';
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        out << cohort[i].patient_id;
        for (double v : features[i].values()) out << ',' << format_double(v);
        out << '\n';
    }
}

void write_pairs_csv(const std::vector<std::string>& ids, const PairTable& table, const fs::path& path) {
    auto out = csv::open_out(path);
    out << "patient_a,patient_b";
    for (const char* n : kVariableNames) out << ',' << n;
    out << '\n';
    for (std::size_t r = 0; r < table.rows(); ++r) {
        out << ids[table.pairs[r].first] << ',' << ids[table.pairs[r].second];
        for (std::size_t c = 0; c < kFeatureCount; ++c) out << ',' << format_double(table.columns[c][r]);
        out << '\n';
    }
}

void write_labels_csv(const std::vector<std::string>& ids, const PairTable& table, const PairLabels& labels,
                      const fs::path& path) {
    auto out = csv::open_out(path);
    out << "pair,label,posterior\n";
    for (std::size_t r = 0; r < table.rows(); ++r)
        out << ids[table.pairs[r].first] << '|' << ids[table.pairs[r].second] << ',' << vote_symbol(labels.label[r])
            << ',' << format_double(labels.posterior[r]) << '\n';
}

nlohmann::json wsd_to_json(const WsdWeights& w) {
    nlohmann::json weights = nlohmann::json::object();
    for (std::size_t i = 0; i < w.variables.size(); ++i) weights[kVariableNames[w.variables[i]]] = w.weights[i];
    return {{"weights", weights},
            {"intercept", w.intercept},
            {"c", w.c},
            {"passes", w.passes},
            {"duality_gap", w.duality_gap},
            {"primal_objective", w.primal_objective},
            {"converged", w.converged},
            {"training_accuracy", w.training_accuracy},
            {"training_pairs", w.training_pairs}};
}

nlohmann::json label_model_to_json(const LabelModel& model, const LabelMatrix& lm) {
    nlohmann::json fns = nlohmann::json::array();
    for (std::size_t f = 0; f < lm.functions(); ++f)
        fns.push_back({{"variable", kVariableNames[lm.variables[f]]},
                       {"q1", lm.q1[f]},
                       {"q3", lm.q3[f]},
                       {"propensity", model.propensity[f]},
                       {"accuracy", model.accuracy[f]}});
    return {{"prior_together", model.prior},
            {"functions", fns},
            {"iterations", model.iterations},
            {"converged", model.converged},
            {"flipped", model.flipped},
            {"log_likelihood", model.log_likelihood.empty() ? 0.0 : model.log_likelihood.back()},
            {"warnings", lm.warnings}};
}

void write_embedding_csv(const Embedding& e, const fs::path& path) {
    auto out = csv::open_out(path);
    out << "patient_id,x,y\n";
    for (std::size_t i = 0; i < e.ids.size(); ++i)
        out << e.ids[i] << ',' << format_double(e.coords[i][0]) << ',' << format_double(e.coords[i][1]) << '\n';
}

Embedding read_embedding_csv(const fs::path& path) {
    csv::Reader reader(path);
    std::vector<std::string> f;
    if (!reader.next(f) || f.size() != 3 || f[0] != "patient_id")
        throw ParseError(reader.file(), reader.line(), "expected header patient_id,x,y");
    Embedding e;
    while (reader.next(f)) {
        double x = 0.0, y = 0.0;
        if (f.size() != 3 || !csv::parse_double(f[1], x) || !csv::parse_double(f[2], y))
            throw ParseError(reader.file(), reader.line(), "expected patient_id,x,y");
        e.ids.push_back(f[0]);
        e.coords.push_back({x, y});
    }
    return e;
}

void write_json(const nlohmann::json& j, const fs::path& path) {
    auto out = csv::open_out(path);
    out << j.dump(2) << '\n';
}

std::string survival_svg(const std::string& title, const std::vector<SurvivalCurve>& curves) {
    constexpr double W = 640, H = 420, L = 70, R = 150, T = 40, B = 60;
    const double pw = W - L - R, ph = H - T - B;
    double tmax = 1.0;
    for (const auto& c : curves)
        for (const auto& k : c.knots) tmax = std::max(tmax, k.time);
    const auto sx = [&](double t) { return L + pw * t / tmax; };
    const auto sy = [&](double s) { return T + ph * (1.0 - s); };

    std::ostringstream o;
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
      << xml_escape(title) << "</text>\n"
      << "<g stroke=\"black\" stroke-width=\"1\">\n"
      << "<line x1=\"" << L << "\" y1=\"" << T + ph << "\" x2=\"" << L + pw << "\" y2=\"" << T + ph << "\"/>\n"
      << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << T + ph << "\"/>\n"
      << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (int i = 0; i <= 5; ++i) {
        const double t = tmax * i / 5.0, s = i / 5.0;
        o << "<text x=\"" << fixed(sx(t), 1) << "\" y=\"" << T + ph + 16 << "\" text-anchor=\"middle\">"
          << fixed(t, 0) << "</text>\n"
          << "<text x=\"" << L - 6 << "\" y=\"" << fixed(sy(s) + 4, 1) << "\" text-anchor=\"end\">" << fixed(s, 1)
          << "</text>\n";
    }
    o << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 15
      << "\" text-anchor=\"middle\">Days since first visit</text>\n"
      << "<text x=\"18\" y=\"" << T + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << T + ph / 2
      << ")\">Survival probability</text>\n</g>\n";
    for (std::size_t c = 0; c < curves.size(); ++c) {
        const auto& knots = curves[c].knots;
        if (knots.empty()) continue;
        const char* color = kPalette[c % kPalette.size()];
        std::ostringstream pts;
        double prev = knots.front().survival;
        pts << fixed(sx(knots.front().time), 2) << ',' << fixed(sy(prev), 2);
        for (std::size_t i = 1; i < knots.size(); ++i) {
            const double x = sx(knots[i].time);
            pts << ' ' << fixed(x, 2) << ',' << fixed(sy(prev), 2) << ' ' << fixed(x, 2) << ','
                << fixed(sy(knots[i].survival), 2);
            prev = knots[i].survival;
        }
        pts << ' ' << fixed(sx(tmax), 2) << ',' << fixed(sy(prev), 2);
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"" << pts.str() << "\"/>\n";
        const double ly = T + 10 + 20.0 * static_cast<double>(c);
        o << "<line x1=\"" << L + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << L + pw + 40 << "\" y2=\"" << ly
          << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
          << "<text x=\"" << L + pw + 46 << "\" y=\"" << ly + 4 << "\" font-family=\"sans-serif\" font-size=\"12\">"
          << "Cluster " << c << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

std::string scatter_svg(const std::string& title, const std::vector<std::array<double, 2>>& coords,
                        const std::vector<int>& labels) {
    constexpr double W = 520, H = 520, M = 40;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (!coords.empty()) {
        x0 = x1 = coords[0][0];
        y0 = y1 = coords[0][1];
        for (const auto& p : coords) {
            x0 = std::min(x0, p[0]);
            x1 = std::max(x1, p[0]);
            y0 = std::min(y0, p[1]);
            y1 = std::max(y1, p[1]);
        }
    }
    const double dx = x1 > x0 ? x1 - x0 : 1.0, dy = y1 > y0 ? y1 - y0 : 1.0;
    std::ostringstream o;
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
      << xml_escape(title) << "</text>\n<g stroke=\"none\" fill-opacity=\"0.8\">\n";
    for (std::size_t i = 0; i < coords.size(); ++i) {
        const int lab = i < labels.size() ? labels[i] : 0;
        const double x = M + (W - 2 * M) * (coords[i][0] - x0) / dx;
        const double y = H - M - (H - 2 * M) * (coords[i][1] - y0) / dy;
        o << "<circle cx=\"" << fixed(x, 2) << "\" cy=\"" << fixed(y, 2) << "\" r=\"3.5\" fill=\""
          << kPalette[static_cast<std::size_t>(std::max(lab, 0)) % kPalette.size()] << "\"/>\n";
    }
    o << "</g>\n</svg>\n";
    return o.str();
}

void render_reports(Workspace& ws, const std::vector<WorkflowResult>& results, const ExclusionReport& exclusions,
                    const RunInputs& inputs, const fs::path& outdir) {
    std::error_code ec;
    fs::create_directories(outdir / "plots", ec);
    if (ec) throw InvalidArgument("cannot create output directory " + outdir.string() + ": " + ec.message());
    const PipelineConfig& cfg = ws.config();
    const auto ids = ws.ids();
    const auto times = ws.survival_times();
    const auto events = ws.survival_events();

    write_results_csv(results, outdir / "results.csv");
    const RankedTable ranked = filter_and_rank(results, cfg.sil_min, cfg.p_max);
    write_ranked_csv(results, ranked, outdir / "ranked.csv", outdir / "dropped.csv");
    write_assignments_csv(results, ids, outdir / "assignments.csv");
    write_km_curves_csv(results, times, events, outdir / "km_curves.csv");
    write_fits_csv(ws.cohort(), ws.fits(), outdir / "fits.csv");
    write_features_csv(ws.cohort(), ws.features(), outdir / "features.csv");
    write_pairs_csv(ids, ws.pair_table(), outdir / "pairs.csv");
    write_labels_csv(ids, ws.pair_table(), ws.pair_labels(), outdir / "labels.csv");
    write_json(wsd_to_json(ws.wsd()), outdir / "wsd_weights.json");
    write_json(exclusions.to_json(), outdir / "exclusions.json");

    std::vector<Measure> embedded;
    for (const auto& r : results)
        if (r.spec.embed && std::find(embedded.begin(), embedded.end(), r.spec.measure) == embedded.end())
            embedded.push_back(r.spec.measure);
    for (Measure m : embedded) {
        const Embedding& e = ws.embedding(m);
        write_embedding_csv(e, outdir / (std::string("embedding_") + measure_tag(m) + ".csv"));
        if (m == Measure::kWsd) write_embedding_csv(e, outdir / "embedding.csv");
    }

    for (const auto& r : results) {
        if (!r.ok) continue;
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
        write_text(survival_svg(r.name, curves), outdir / "plots" / ("km_" + plot_name(r.name) + ".svg"));
        if (r.spec.embed)
            write_text(scatter_svg(r.name, ws.embedding(r.spec.measure).coords, r.assignment.labels),
                       outdir / "plots" / ("embedding_" + plot_name(r.name) + ".svg"));
    }
    // Top-ranked embedded workflow (or the first embedded one) for the summary scatter.
    const WorkflowResult* best = nullptr;
    for (std::size_t i : ranked.ranked)
        if (results[i].spec.embed) {
            best = &results[i];
            break;
        }
    if (!best)
        for (const auto& r : results)
            if (r.ok && r.spec.embed) {
                best = &r;
                break;
            }
    if (best)
        write_text(scatter_svg(best->name, ws.embedding(best->spec.measure).coords, best->assignment.labels),
                   outdir / "embedding.svg");

    nlohmann::json manifest;
    manifest["tool"] = "progclust";
    manifest["config"] = cfg.to_json();
    manifest["config_text"] = cfg.to_text();
    manifest["inputs"] = {{"visits", inputs.visits.empty() ? "" : fs::absolute(inputs.visits).string()},
                          {"outcomes", inputs.outcomes.empty() ? "" : fs::absolute(inputs.outcomes).string()},
                          {"planted", inputs.planted.empty() ? "" : fs::absolute(inputs.planted).string()}};
    nlohmann::json seeds{{"global", cfg.seed}};
    for (Measure m : embedded)
        seeds[std::string("embedding_") + measure_tag(m)] = ws.embedding(m).params.seed;
    manifest["seeds"] = seeds;
    manifest["patients"] = ids.size();
    manifest["exclusions"] = exclusions.to_json();
    manifest["normalization"] = {{"patient_features", scaling_to_json(ws.patient_scaling(), kFeatureNames)},
                                 {"pair_variables", scaling_to_json(ws.pair_table().scaling, kVariableNames)}};
    nlohmann::json retained = nlohmann::json::array();
    for (std::size_t c = 0; c < kFeatureCount; ++c)
        if (ws.pair_table().retained[c]) retained.push_back(kVariableNames[c]);
    manifest["retained_variables"] = retained;
    nlohmann::json rho = nlohmann::json::array();
    for (const auto& row : ws.spearman()) rho.push_back(row);
    manifest["spearman"] = rho;
    manifest["label_model"] = label_model_to_json(ws.label_model(), ws.label_matrix());
    manifest["wsd_weights"] = wsd_to_json(ws.wsd());
    manifest["silhouette"] = {
        {"space", cfg.silhouette_space == SilhouetteSpace::kClustered ? "clustered" : "original"},
        {"std", "population"}};
    nlohmann::json audits = nlohmann::json::object();
    for (const auto& r : results)
        if (!r.spec.baseline.empty() && r.spec.baseline != "HAL") continue;
        else if (!audits.contains(measure_tag(r.spec.measure)))
            audits[measure_tag(r.spec.measure)] = ws.audit(r.spec.measure).to_json();
    manifest["metric_audit"] = audits;
    nlohmann::json wf = nlohmann::json::array();
    for (const auto& r : results) wf.push_back(result_to_json(r));
    manifest["workflows"] = wf;
    nlohmann::json rk = nlohmann::json::array();
    for (std::size_t i : ranked.ranked) rk.push_back(results[i].name);
    manifest["ranked"] = rk;
    nlohmann::json dropped = nlohmann::json::array();
    for (const auto& d : ranked.dropped)
        dropped.push_back({{"workflow", results[d.index].name}, {"stage", d.stage}, {"reason", d.reason}});
    manifest["dropped"] = dropped;
    std::size_t failed = 0;
    for (const auto& r : results) failed += r.ok ? 0 : 1;
    manifest["failed_workflows"] = failed;
    write_json(manifest, outdir / "results.json");
}

}  // namespace progclust
