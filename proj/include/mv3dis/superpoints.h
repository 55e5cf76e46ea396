#pragma once

#include <vector>

#include "mv3dis/scene.h"

namespace mv3dis {

struct PointEdge {
  std::uint32_t a = 0, b = 0;  // a < b
  double weight = 0;           // geometric dissimilarity
};

struct Superpoint {
  int superpoint_id = 0;
  std::vector<std::uint32_t> point_indices;  // sorted ascending
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();

  std::size_t point_count() const { return point_indices.size(); }
};

struct SuperpointAdjacency {
  // neighbors[i] is sorted ascending; relation is symmetric, no self edges.
  std::vector<std::vector<int>> neighbors;

  bool adjacent(int a, int b) const {
    const auto& n = neighbors[a];
    return std::binary_search(n.begin(), n.end(), b);
  }
};

// k nearest Euclidean neighbors per point, symmetric closure, deduplicated.
// Edge weight is the distance, scaled by (1.5 - 0.5 * <n_i, n_j>) when
// normals are present so coplanar neighbors merge preferentially.
// Throws std::invalid_argument for clouds with < 2 points or k out of range.
std::vector<PointEdge> build_knn_graph(const PointCloud& cloud, int k);

// Felzenszwalb-style graph segmentation: ascending edge pass with union-find,
// merge when weight <= min(internal + scale/|component|) on both sides, then
// absorb components smaller than min_size into their lowest-weight neighbor.
// Deterministic under the documented edge ordering (weight, min id, max id).
std::vector<Superpoint> felzenszwalb_segment(const PointCloud& cloud,
                                             const std::vector<PointEdge>& edges,
                                             double weight_scale, int min_size);

// Superpoint pairs connected by at least one point edge across their boundary.
SuperpointAdjacency compute_adjacency(const std::vector<Superpoint>& superpoints,
                                      const std::vector<PointEdge>& point_edges,
                                      std::size_t point_count);

// point index -> superpoint id lookup.
std::vector<int> superpoint_of_points(const std::vector<Superpoint>& superpoints,
                                      std::size_t point_count);

}  // namespace mv3dis
