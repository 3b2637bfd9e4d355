#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "progclust/metrics.hpp"

namespace progclust {

enum class ClusterMethod { kKMeans, kKMedoids, kAgglomerative, kThreshold };

/// KME, KMD, AHC or THR.
const char* method_tag(ClusterMethod m);

struct Assignment {
    std::vector<int> labels;  // cluster id per patient, in [0, k)
    int k = 0;
    ClusterMethod method = ClusterMethod::kKMeans;
    /// inertia (KME), total medoid cost (KMD), height of the last merge (AHC)
    double objective = 0.0;
    std::vector<std::size_t> medoids;  // KMD only
    bool degenerate = false;           // fewer than k clusters occupied (threshold rules)

    std::vector<std::size_t> sizes() const;
    std::size_t occupied() const;
};

/// Relabels clusters densely in order of first appearance.
void canonicalize_labels(std::vector<int>& labels);

struct KMeansOptions {
    int restarts = 10;
    int max_iterations = 300;
    double tolerance = 1e-4;  // max centroid movement
};

/// Lloyd's algorithm with k-means++ seeding; keeps the restart with the lowest
/// inertia. Rows of `points` are coordinates.
Assignment kmeans(const std::vector<std::vector<double>>& points, int k, std::uint64_t seed,
                  const KMeansOptions& opts = {});

/// PAM k-medoids (BUILD then best-improvement SWAP). `cost_trace`, when given,
/// receives the total cost after BUILD and after each accepted swap.
Assignment kmedoids(const DistanceMatrix& m, int k, std::vector<double>* cost_trace = nullptr);

struct Merge {
    std::size_t a, b;  // smallest original index in each merged cluster, a < b
    double height;
    std::size_t size;
};

/// Full complete-linkage dendrogram (n - 1 merges, non-decreasing heights).
/// Ties are broken by the smallest (a, b) representative pair.
std::vector<Merge> complete_linkage(const DistanceMatrix& m);

/// Complete-linkage agglomerative clustering cut at k clusters.
Assignment ahc_complete(const DistanceMatrix& m, int k);

/// Cuts a dendrogram produced by complete_linkage at k clusters.
Assignment cut_dendrogram(const std::vector<Merge>& merges, std::size_t n, int k);

}  // namespace progclust
