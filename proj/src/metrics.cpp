#include "progclust/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "progclust/csv.hpp"
#include "progclust/error.hpp"
#include "progclust/parallel.hpp"
#include "progclust/rng.hpp"

namespace progclust {

const char* measure_tag(Measure m) {
    switch (m) {
        case Measure::kManhattan: return "MAN";
        case Measure::kEuclidean: return "EUC";
        case Measure::kCosine: return "COS";
        case Measure::kWsd: return "WSD";
        case Measure::kDtw: return "DTW";
        case Measure::kEmbedded: return "UMAP";
    }
    return "?";
}

std::optional<Measure> parse_measure(std::string_view tag) {
    for (Measure m : {Measure::kManhattan, Measure::kEuclidean, Measure::kCosine, Measure::kWsd, Measure::kDtw,
                      Measure::kEmbedded})
        if (tag == measure_tag(m)) return m;
    return std::nullopt;
}

DistanceMatrix::DistanceMatrix(std::size_t n, Measure measure, std::vector<std::string> ids)
    : n_(n), measure_(measure), ids_(std::move(ids)), data_(n * n, 0.0) {
    if (!ids_.empty() && ids_.size() != n) throw InvalidArgument("DistanceMatrix: id count does not match n");
}

PairDistance pair_distance(std::span<const double> x, std::span<const double> y, Measure measure,
                           std::span<const double> weights) {
    if (x.size() != y.size()) throw InvalidArgument("pair_distance: dimension mismatch");
    PairDistance out;
    switch (measure) {
        case Measure::kManhattan:
            for (std::size_t i = 0; i < x.size(); ++i) out.value += std::abs(x[i] - y[i]);
            break;
        case Measure::kEuclidean:
        case Measure::kEmbedded: {
            double s = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
            out.value = std::sqrt(s);
            break;
        }
        case Measure::kCosine: {
            double dot = 0.0, nx = 0.0, ny = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                dot += x[i] * y[i];
                nx += x[i] * x[i];
                ny += y[i] * y[i];
            }
            if (nx == 0.0 || ny == 0.0) {
                out.flagged = true;
                out.value = (nx == 0.0 && ny == 0.0) ? 0.0 : 1.0;
            } else {
                out.value = 1.0 - std::clamp(dot / (std::sqrt(nx) * std::sqrt(ny)), -1.0, 1.0);
            }
            break;
        }
        case Measure::kWsd:
            if (weights.size() != x.size()) throw InvalidArgument("pair_distance: WSD needs one weight per variable");
            for (std::size_t i = 0; i < x.size(); ++i) out.value += weights[i] * std::abs(x[i] - y[i]);
            break;
        case Measure::kDtw:
            throw InvalidArgument("pair_distance: DTW is computed on sequences, not feature vectors");
    }
    return out;
}

DistanceMatrix distance_matrix(const std::vector<std::vector<double>>& points, Measure measure,
                               std::span<const double> weights, std::vector<std::string> ids, unsigned threads) {
    const std::size_t n = points.size();
    if (n < 2) throw InvalidArgument("distance_matrix: need at least 2 points");
    DistanceMatrix m(n, measure, std::move(ids));
    std::vector<std::size_t> flagged(n, 0);
    parallel_for(n, threads, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto d = pair_distance(points[i], points[j], measure, weights);
            // each (i, j) cell is written by exactly one row task
            m.data()[i * n + j] = d.value;
            m.data()[j * n + i] = d.value;
            flagged[i] += d.flagged;
        }
    });
    for (auto f : flagged) m.flagged += f;
    return m;
}

DistanceMatrix euclidean_matrix(const std::vector<std::vector<double>>& coords, std::vector<std::string> ids,
                                Measure tag) {
    const std::size_t n = coords.size();
    DistanceMatrix m(n, tag, std::move(ids));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) m.set(i, j, pair_distance(coords[i], coords[j], Measure::kEuclidean).value);
    return m;
}

nlohmann::json MetricAudit::to_json() const {
    return {{"positivity_pct", positivity_pct},
            {"symmetry_pct", symmetry_pct},
            {"identity_pct", identity_pct},
            {"triangle_pct", triangle_pct},
            {"max_violation", max_violation},
            {"triples", triples},
            {"violations", violations},
            {"exhaustive", exhaustive},
            {"violation_bands",
             {{"below_1e-6", violation_bands[0]}, {"1e-6_to_1e-2", violation_bands[1]}, {"above_1e-2", violation_bands[2]}}}};
}

MetricAudit audit_metric(const DistanceMatrix& m, std::uint64_t triples, std::uint64_t seed) {
    const std::size_t n = m.size();
    MetricAudit a;
    if (n == 0) return a;

    std::uint64_t offdiag = 0, positive = 0, symmetric = 0, pairs = 0, identity = 0;
    for (std::size_t i = 0; i < n; ++i) {
        identity += m(i, i) == 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            ++offdiag;
            positive += m(i, j) >= 0.0;
            if (j > i) {
                ++pairs;
                symmetric += std::abs(m(i, j) - m(j, i)) <= 1e-12 * std::max(1.0, std::abs(m(i, j)));
            }
        }
    }
    a.positivity_pct = offdiag ? 100.0 * positive / offdiag : 100.0;
    a.symmetry_pct = pairs ? 100.0 * symmetric / pairs : 100.0;
    a.identity_pct = 100.0 * identity / n;

    auto check = [&](std::size_t x, std::size_t y, std::size_t z) {
        const double lhs = m(x, z), rhs = m(x, y) + m(y, z);
        ++a.triples;
        // rounding slack for sums that are equal in exact arithmetic
        const double slack = 1e-12 * std::max(1.0, std::abs(rhs));
        if (lhs > rhs + slack) {
            const double v = lhs - rhs;
            ++a.violations;
            a.max_violation = std::max(a.max_violation, v);
            ++a.violation_bands[v < 1e-6 ? 0 : v < 1e-2 ? 1 : 2];
        }
    };

    if (n >= 3) {
        const double total = static_cast<double>(n) * (n - 1) * (n - 2);
        if (total <= static_cast<double>(triples)) {
            a.exhaustive = true;
            for (std::size_t x = 0; x < n; ++x)
                for (std::size_t y = 0; y < n; ++y)
                    for (std::size_t z = 0; z < n; ++z)
                        if (x != y && y != z && x != z) check(x, y, z);
        } else {
            Rng rng(mix_seed(seed, 0x7121));
            for (std::uint64_t t = 0; t < triples; ++t) {
                std::size_t x = rng.index(n), y, z;
                do y = rng.index(n); while (y == x);
                do z = rng.index(n); while (z == x || z == y);
                check(x, y, z);
            }
        }
    }
    a.triangle_pct = a.triples ? 100.0 * (a.triples - a.violations) / a.triples : 100.0;
    return a;
}

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) out.put(static_cast<char>((v >> (8 * b)) & 0xff));
}

std::uint64_t get_u64(std::istream& in) {
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) {
        const int ch = in.get();
        if (ch == EOF) throw ComputeError("truncated matrix file");
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(ch)) << (8 * b);
    }
    return v;
}

}  // namespace

void write_matrix_binary(const DistanceMatrix& m, const std::filesystem::path& path) {
    auto out = csv::open_out(path);
    out.write("PCDM", 4);
    put_u64(out, m.size());
    char tag[4] = {0, 0, 0, 0};
    const std::string t = measure_tag(m.measure());
    std::memcpy(tag, t.data(), std::min<std::size_t>(4, t.size()));
    out.write(tag, 4);
    for (double v : m.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

DistanceMatrix read_matrix_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ComputeError("cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "PCDM", 4) != 0) throw ComputeError(path.string() + ": not a distance matrix file");
    const std::uint64_t n = get_u64(in);
    char tag[5] = {0, 0, 0, 0, 0};
    in.read(tag, 4);
    const auto measure = parse_measure(tag);
    if (!measure) throw ComputeError(path.string() + ": unknown measure tag");
    DistanceMatrix m(n, *measure);
    for (double& v : m.data()) v = std::bit_cast<double>(get_u64(in));
    return m;
}

void write_matrix_csv(const DistanceMatrix& m, const std::filesystem::path& path) {
    auto out = csv::open_out(path);
    out << "patient_id";
    for (std::size_t j = 0; j < m.size(); ++j) out << ',' << (m.ids().empty() ? std::to_string(j) : m.ids()[j]);
    out << '\n';
    for (std::size_t i = 0; i < m.size(); ++i) {
        out << (m.ids().empty() ? std::to_string(i) : m.ids()[i]);
        for (std::size_t j = 0; j < m.size(); ++j) out << ',' << csv::format_double(m(i, j));
        out << '\n';
    }
}

}  // namespace progclust
