#pragma once

#include <cstdint>
#include <vector>

#include "ivprop/dataset.hpp"

// Interval dataset construction from pointwise data: grid-cell grouping and
// k-means clustering, component-wise envelopes per group, concatenated
// across resolutions / cluster counts.

namespace ivp::aug {

struct GridAugConfig {
    std::vector<double> resolutions;   // non-empty, strictly positive
    std::size_t min_group_size = 1;    // groups below this are dropped
};

data::IntervalDataset grid_intervals(const data::PointDataset& d, const GridAugConfig& cfg);

struct ClusterAugConfig {
    std::vector<std::size_t> cluster_counts;  // each in [1, N]
    std::size_t max_iters = 100;
    double tol = 1e-8;
    std::uint64_t seed = 0;
    std::size_t min_group_size = 1;
};

struct KmeansResult {
    std::vector<std::size_t> labels;
    Tensor centroids;  // (k x d)
    std::size_t iterations = 0;
};

// Lloyd iterations with k-means++ seeding; empty clusters are refilled with
// the farthest point of the largest cluster. Deterministic per seed.
KmeansResult kmeans(const Tensor& points, std::size_t k, const ClusterAugConfig& cfg);

data::IntervalDataset cluster_intervals(const data::PointDataset& d, const ClusterAugConfig& cfg);

// "cluster sizes s" -> cluster counts round(N/s), clamped to [1, N].
std::vector<std::size_t> cluster_counts_from_sizes(std::size_t n,
                                                   const std::vector<std::size_t>& sizes);

}  // namespace ivp::aug
