#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "progclust/cluster.hpp"
#include "progclust/cohort.hpp"
#include "progclust/curves.hpp"
#include "progclust/embedding.hpp"
#include "progclust/error.hpp"
#include "progclust/evalstats.hpp"
#include "progclust/metrics.hpp"
#include "progclust/pipeline.hpp"
#include "progclust/synth.hpp"

#include <map>

namespace py = pybind11;
using namespace progclust;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<int, py::array::c_style | py::array::forcecast>;

std::vector<std::vector<double>> rows_of(const Array& a) {
    if (a.ndim() != 2) throw InvalidArgument("expected a 2-D array");
    const auto r = a.unchecked<2>();
    std::vector<std::vector<double>> out(r.shape(0), std::vector<double>(r.shape(1)));
    for (py::ssize_t i = 0; i < r.shape(0); ++i)
        for (py::ssize_t j = 0; j < r.shape(1); ++j) out[i][j] = r(i, j);
    return out;
}

DistanceMatrix matrix_of(const Array& a) {
    if (a.ndim() != 2 || a.shape(0) != a.shape(1)) throw InvalidArgument("expected a square matrix");
    DistanceMatrix m(static_cast<std::size_t>(a.shape(0)), Measure::kEmbedded);
    std::copy(a.data(), a.data() + a.size(), m.data().begin());
    return m;
}

Array to_array(const DistanceMatrix& m) {
    Array out({m.size(), m.size()});
    std::copy(m.data().begin(), m.data().end(), out.mutable_data());
    return out;
}

std::vector<double> vec_of(const Array& a) { return {a.data(), a.data() + a.size()}; }
std::vector<int> ivec_of(const IntArray& a) { return {a.data(), a.data() + a.size()}; }

IntArray labels_array(const std::vector<int>& v) {
    IntArray out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

Measure measure_of(const std::string& tag) {
    auto m = parse_measure(tag);
    if (!m) throw InvalidArgument("unknown measure '" + tag + "'");
    return *m;
}

py::dict fit_dict(const SigmoidFit& f) {
    py::dict d;
    d["b"] = f.b;
    d["m"] = f.m;
    d["a"] = f.a;
    d["c"] = f.c;
    d["rmse"] = f.rmse;
    d["converged"] = f.converged;
    return d;
}

py::dict result_dict(const WorkflowResult& r) {
    py::dict d;
    d["workflow"] = r.name;
    d["k"] = r.spec.k;
    d["ok"] = r.ok;
    d["error"] = r.error;
    d["sizes"] = r.sizes;
    d["silhouette_mean"] = r.silhouette_mean;
    d["silhouette_std"] = r.silhouette_std;
    d["logrank_p_max"] = r.p_max;
    d["lrs_min"] = r.lrs_min;
    d["ari"] = r.ari ? py::cast(*r.ari) : py::none();
    d["labels"] = labels_array(r.assignment.labels);
    return d;
}

struct PyCohort {
    Cohort cohort;
    ExclusionReport report;
    std::vector<int> planted;
};

}  // namespace

PYBIND11_MODULE(_progclust, mod) {
    mod.doc() = "Clustering of ALSFRS-R progression trajectories";

    py::register_exception<ParseError>(mod, "ParseError", PyExc_ValueError);
    py::register_exception<InvalidArgument>(mod, "InvalidArgument", PyExc_ValueError);
    py::register_exception<ComputeError>(mod, "ComputeError", PyExc_RuntimeError);

    py::class_<PipelineConfig>(mod, "Config")
        .def(py::init([](const std::string& text) { return PipelineConfig::parse(text); }), py::arg("text") = "")
        .def_static("load", &PipelineConfig::load, py::arg("path"))
        .def("set", &PipelineConfig::set, py::arg("key"), py::arg("value"))
        .def_property_readonly("text", &PipelineConfig::to_text)
        .def("to_dict", [](const PipelineConfig& c) {
            py::dict d;
            for (const auto& [k, v] : c.to_json().items()) d[py::str(k)] = v.is_string() ? v.get<std::string>() : v.dump();
            return d;
        })
        .def_readwrite("seed", &PipelineConfig::seed)
        .def_readwrite("threads", &PipelineConfig::threads);

    py::class_<PyCohort>(mod, "Cohort")
        .def_property_readonly("ids", [](const PyCohort& c) {
            std::vector<std::string> ids;
            for (const auto& s : c.cohort) ids.push_back(s.patient_id);
            return ids;
        })
        .def_property_readonly("planted", [](const PyCohort& c) { return c.planted; })
        .def_property_readonly("exclusions", [](const PyCohort& c) { return c.report.to_json().dump(); })
        .def("__len__", [](const PyCohort& c) { return c.cohort.size(); });

    mod.def(
        "load_cohort",
        [](const std::filesystem::path& visits, const std::filesystem::path& outcomes, const PipelineConfig& cfg) {
            auto [cohort, report] = apply_exclusions(parse_cohort(visits, outcomes), cfg.exclusions);
            return PyCohort{std::move(cohort), std::move(report), {}};
        },
        py::arg("visits"), py::arg("outcomes"), py::arg("config") = PipelineConfig{},
        "Parse visits/outcomes CSVs and apply the exclusion rules.");

    mod.def(
        "synth_cohort",
        [](std::size_t patients, double noise, int archetypes, std::uint64_t seed, std::optional<std::filesystem::path> out) {
            if (archetypes != 3 && archetypes != 4) throw InvalidArgument("archetypes must be 3 or 4");
            const SynthSpec spec = archetypes == 4 ? four_archetype_spec(patients, noise, seed)
                                                   : three_archetype_spec(patients, noise, seed);
            SynthCohort sc = generate_cohort(spec);
            if (out) {
                std::filesystem::create_directories(*out);
                write_synth(sc, spec, *out);
            }
            std::map<std::string, int> label_of;
            for (std::size_t i = 0; i < sc.cohort.size(); ++i) label_of[sc.cohort[i].patient_id] = sc.labels[i];
            auto [cohort, report] = apply_exclusions(sc.cohort, PipelineConfig{}.exclusions);
            PyCohort c{std::move(cohort), std::move(report), {}};
            for (const auto& s : c.cohort) c.planted.push_back(label_of.at(s.patient_id));
            return c;
        },
        py::arg("patients") = 150, py::arg("noise") = 1.0, py::arg("archetypes") = 3, py::arg("seed") = 0,
        py::arg("out_dir") = py::none(), "Generate a synthetic cohort with planted archetypes.");

    mod.def(
        "workflow_names",
        [](const PipelineConfig& cfg, bool has_subscores) {
            std::vector<std::string> names;
            for (const auto& w : enumerate_grid(cfg, has_subscores).all()) names.push_back(w.name());
            return names;
        },
        py::arg("config") = PipelineConfig{}, py::arg("has_subscores") = true);

    mod.def(
        "run_grid",
        [](const PyCohort& c, const PipelineConfig& cfg, std::optional<std::filesystem::path> out,
           std::optional<std::vector<std::string>> names) {
            std::vector<WorkflowSpec> workflows;
            if (names) {
                for (const auto& n : *names) {
                    auto spec = parse_workflow_name(n);
                    if (!spec) throw InvalidArgument("unknown workflow '" + n + "'");
                    spec->seed = workflow_seed(cfg.seed, spec->name());
                    workflows.push_back(*spec);
                }
            } else {
                bool subs = true;
                for (const auto& s : c.cohort) subs = subs && s.has_subscores();
                workflows = enumerate_grid(cfg, subs).all();
            }
            std::vector<WorkflowResult> results;
            RankedTable table;
            {
                py::gil_scoped_release release;
                Workspace ws(c.cohort, cfg);
                results = run_all(ws, workflows);
                if (!c.planted.empty()) score_against_planted(results, c.planted);
                table = filter_and_rank(results, cfg.sil_min, cfg.p_max);
                if (out) {
                    std::filesystem::create_directories(*out);
                    render_reports(ws, results, c.report, RunInputs{}, *out);
                }
            }
            py::list rows;
            for (const auto& r : results) rows.append(result_dict(r));
            std::vector<std::string> ranked;
            for (auto i : table.ranked) ranked.push_back(results[i].name);
            py::dict d;
            d["results"] = rows;
            d["ranked"] = ranked;
            return d;
        },
        py::arg("cohort"), py::arg("config") = PipelineConfig{}, py::arg("out_dir") = py::none(),
        py::arg("workflows") = py::none(),
        "Run workflows (default: the full grid); returns per-workflow metrics and the ranked selection.");

    mod.def(
        "fit_sigmoid",
        [](const Array& days, const Array& scores, std::uint64_t seed) {
            const auto d = vec_of(days), s = vec_of(scores);
            return fit_dict(fit_sigmoid(d, s, seed));
        },
        py::arg("days"), py::arg("scores"), py::arg("seed") = 0);
    mod.def(
        "eval_sigmoid",
        [](double b, double m, double a, double c, double day) { return eval_sigmoid(SigmoidFit{b, m, a, c}, day); },
        py::arg("b"), py::arg("m"), py::arg("a"), py::arg("c"), py::arg("day"));
    mod.def(
        "invert_for_score",
        [](double b, double m, double a, double c, double target, double horizon) {
            return invert_for_score(SigmoidFit{b, m, a, c}, target, horizon);
        },
        py::arg("b"), py::arg("m"), py::arg("a"), py::arg("c"), py::arg("target") = 24.0,
        py::arg("horizon_days") = 3650.0);

    mod.def(
        "distance_matrix",
        [](const Array& points, const std::string& measure, std::optional<Array> weights) {
            const std::vector<double> w = weights ? vec_of(*weights) : std::vector<double>{};
            return to_array(distance_matrix(rows_of(points), measure_of(measure), w));
        },
        py::arg("points"), py::arg("measure"), py::arg("weights") = py::none());
    mod.def(
        "audit_metric",
        [](const Array& m, std::uint64_t triples, std::uint64_t seed) {
            return audit_metric(matrix_of(m), triples, seed).to_json().dump();
        },
        py::arg("matrix"), py::arg("triples") = 1'000'000, py::arg("seed") = 0,
        "Metric-property audit of a distance matrix, as a JSON string.");
    mod.def(
        "embed",
        [](const Array& m, std::size_t n_neighbors, double min_dist, int n_epochs, std::uint64_t seed) {
            EmbeddingParams p;
            p.n_neighbors = n_neighbors;
            p.min_dist = min_dist;
            p.n_epochs = n_epochs;
            p.seed = seed;
            const Embedding e = embed(matrix_of(m), p);
            Array out({e.coords.size(), std::size_t{2}});
            auto w = out.mutable_unchecked<2>();
            for (std::size_t i = 0; i < e.coords.size(); ++i) {
                w(i, 0) = e.coords[i][0];
                w(i, 1) = e.coords[i][1];
            }
            return out;
        },
        py::arg("matrix"), py::arg("n_neighbors") = 15, py::arg("min_dist") = 0.1, py::arg("n_epochs") = 500,
        py::arg("seed") = 0);

    mod.def(
        "kmeans", [](const Array& points, int k, std::uint64_t seed) { return labels_array(kmeans(rows_of(points), k, seed).labels); },
        py::arg("points"), py::arg("k"), py::arg("seed") = 0);
    mod.def(
        "kmedoids",
        [](const Array& m, int k) {
            const Assignment a = kmedoids(matrix_of(m), k);
            return py::make_tuple(labels_array(a.labels), a.medoids, a.objective);
        },
        py::arg("matrix"), py::arg("k"), "PAM; returns (labels, medoid indices, total cost).");
    mod.def(
        "ahc_complete", [](const Array& m, int k) { return labels_array(ahc_complete(matrix_of(m), k).labels); },
        py::arg("matrix"), py::arg("k"));

    mod.def(
        "silhouette",
        [](const Array& m, const IntArray& labels) {
            const auto s = silhouette(matrix_of(m), ivec_of(labels));
            return py::make_tuple(s.mean, s.std, s.values);
        },
        py::arg("matrix"), py::arg("labels"), "Returns (mean, population std, per-point values).");
    mod.def(
        "logrank",
        [](const Array& t1, const IntArray& e1, const Array& t2, const IntArray& e2) {
            const auto r = logrank_pair({vec_of(t1), ivec_of(e1)}, {vec_of(t2), ivec_of(e2)});
            return py::make_tuple(r.statistic, r.p_value);
        },
        py::arg("times1"), py::arg("events1"), py::arg("times2"), py::arg("events2"),
        "Two-sample log-rank test; returns (statistic, p-value).");
    mod.def(
        "adjusted_rand_index",
        [](const IntArray& a, const IntArray& b) { return adjusted_rand_index(ivec_of(a), ivec_of(b)); },
        py::arg("a"), py::arg("b"));
}
