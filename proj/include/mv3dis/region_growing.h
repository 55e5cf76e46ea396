#pragma once

#include <optional>
#include <vector>

#include "mv3dis/affinity.h"

namespace mv3dis {

// Assignment of superpoints to regions. Region ids are dense from 0.
struct SegmentationState {
  std::vector<int> assignment;           // superpoint id -> region id (-1 = unassigned)
  std::vector<std::vector<int>> regions; // region id -> sorted member superpoint ids

  int region_count() const { return static_cast<int>(regions.size()); }

  // Rebuilds `regions` from `assignment`, compacting region ids.
  void rebuild_regions();

  // Per-point region labels for a full state.
  std::vector<int> point_labels(const std::vector<Superpoint>& superpoints,
                                std::size_t point_count) const;
};

// Distance- and size-weighted mean affinity of `candidate` to the region
// members adjacent to it: sum_k w_k A(candidate, n_k) / sum_k w_k with
// w_k = point_count(n_k) / (1e-6 + ||centroid(candidate) - centroid(n_k)||).
// Absent graph edges count as affinity 0. Undefined (nullopt) when no
// adjacent member has a graph edge to the candidate.
std::optional<double> neighbor_weighted_affinity(int candidate, const std::vector<int>& region_members,
                                                 const AffinityGraph& graph,
                                                 const SuperpointAdjacency& adjacency,
                                                 const std::vector<Superpoint>& superpoints);

// Threshold-gated region growing. Seeds in descending point-count order (ties
// by ascending id); BFS frontier joins an unassigned neighbor iff its
// neighbor-weighted affinity strictly exceeds tau_merge. Every superpoint
// ends up assigned; rejected ones seed their own regions later.
SegmentationState grow(const std::vector<Superpoint>& superpoints,
                       const SuperpointAdjacency& adjacency, const AffinityGraph& graph,
                       double tau_merge);

}  // namespace mv3dis
