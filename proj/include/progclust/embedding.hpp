#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "progclust/metrics.hpp"

namespace progclust {

struct EmbeddingParams {
    std::size_t n_neighbors = 15;
    double min_dist = 0.1;
    double spread = 1.0;
    int n_epochs = 500;
    int negative_samples = 5;
    std::uint64_t seed = 0;
};

/// Sparse symmetric fuzzy graph as (i, j, weight) with i < j.
struct FuzzyGraph {
    struct Edge {
        std::uint32_t i, j;
        double weight;
    };
    std::size_t n = 0;
    std::vector<Edge> edges;
    std::vector<double> rho, sigma;
    std::vector<double> sigma_residual;  // |sum_j w_ij - log2(k)| per point
    bool connected = true;
};

struct Embedding {
    std::vector<std::string> ids;
    std::vector<std::array<double, 2>> coords;
    EmbeddingParams params;
    double curve_a = 0.0;
    double curve_b = 0.0;
    std::vector<std::string> warnings;

    std::vector<std::vector<double>> points() const;
};

/// Fits (a, b) of 1 / (1 + a r^(2b)) to the offset-exponential target curve
/// defined by min_dist and spread.
std::pair<double, double> fit_layout_curve(double min_dist, double spread = 1.0);

/// k-nearest-neighbor fuzzy simplicial set of a precomputed distance matrix.
FuzzyGraph fuzzy_graph(const DistanceMatrix& m, std::size_t n_neighbors);

/// 2-D manifold layout of a distance matrix (fuzzy graph + stochastic
/// cross-entropy layout). Deterministic given params.seed; the result does not
/// depend on the row order of the matrix when ids are unique.
Embedding embed(const DistanceMatrix& m, const EmbeddingParams& params = {});

}  // namespace progclust
