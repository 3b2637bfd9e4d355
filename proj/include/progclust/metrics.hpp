#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace progclust {

enum class Measure { kManhattan, kEuclidean, kCosine, kWsd, kDtw, kEmbedded };

/// Short tag used in workflow names and files: MAN, EUC, COS, WSD, DTW, UMAP.
const char* measure_tag(Measure m);
std::optional<Measure> parse_measure(std::string_view tag);

/// Dense symmetric n x n matrix of pairwise distances with a zero diagonal.
class DistanceMatrix {
  public:
    DistanceMatrix() = default;
    DistanceMatrix(std::size_t n, Measure measure, std::vector<std::string> ids = {});

    std::size_t size() const { return n_; }
    Measure measure() const { return measure_; }
    const std::vector<std::string>& ids() const { return ids_; }

    double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
    /// Sets both (i, j) and (j, i).
    void set(std::size_t i, std::size_t j, double v) {
        data_[i * n_ + j] = v;
        data_[j * n_ + i] = v;
    }
    /// Raw row-major storage (for crafted test matrices and persistence).
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }

    /// Number of pair distances that hit a special case (zero-norm cosine).
    std::size_t flagged = 0;

  private:
    std::size_t n_ = 0;
    Measure measure_ = Measure::kManhattan;
    std::vector<std::string> ids_;
    std::vector<double> data_;
};

struct PairDistance {
    double value = 0.0;
    bool flagged = false;  // cosine with a zero-norm vector
};

/// Distance between two equally sized vectors. `weights` is required for
/// WSD and ignored otherwise.
PairDistance pair_distance(std::span<const double> x, std::span<const double> y, Measure measure,
                           std::span<const double> weights = {});

/// Distances between all rows of `points` (row-major n x dim).
DistanceMatrix distance_matrix(const std::vector<std::vector<double>>& points, Measure measure,
                               std::span<const double> weights = {}, std::vector<std::string> ids = {},
                               unsigned threads = 1);

/// Euclidean distances between the rows of a 2-D (or any-D) coordinate set.
DistanceMatrix euclidean_matrix(const std::vector<std::vector<double>>& coords, std::vector<std::string> ids = {},
                                Measure tag = Measure::kEmbedded);

struct MetricAudit {
    double positivity_pct = 0.0;
    double symmetry_pct = 0.0;
    double identity_pct = 0.0;
    double triangle_pct = 0.0;
    double max_violation = 0.0;
    std::uint64_t triples = 0;
    std::uint64_t violations = 0;
    bool exhaustive = false;
    /// violation magnitudes: (0, 1e-6), [1e-6, 1e-2), [1e-2, inf)
    std::array<std::uint64_t, 3> violation_bands{};

    nlohmann::json to_json() const;
};

/// Checks positivity, symmetry and identity exhaustively and the triangle
/// inequality over ordered triples of distinct points: all of them when there
/// are at most `triples`, otherwise `triples` seeded uniform samples.
MetricAudit audit_metric(const DistanceMatrix& m, std::uint64_t triples = 1'000'000, std::uint64_t seed = 0);

/// Binary layout: "PCDM" magic, uint64 n, 4-byte measure tag (NUL padded),
/// then n*n little-endian IEEE-754 doubles in row-major order.
void write_matrix_binary(const DistanceMatrix& m, const std::filesystem::path& path);
DistanceMatrix read_matrix_binary(const std::filesystem::path& path);
void write_matrix_csv(const DistanceMatrix& m, const std::filesystem::path& path);

}  // namespace progclust
