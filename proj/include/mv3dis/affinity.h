#pragma once

#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "mv3dis/mask_store.h"
#include "mv3dis/projection.h"
#include "mv3dis/superpoints.h"

namespace mv3dis {

// Sparse histogram over 2D mask labels of one superpoint in one frame.
// Counts visible projected points landing on non-background labels.
using LabelHistogram = std::map<std::int32_t, std::uint32_t>;

LabelHistogram histogram_vector(const Superpoint& superpoint, const FrameProjection& projection,
                                const SegmentationMap2D& seg_map);

// Cosine similarity of two same-frame histograms. Undefined (nullopt) when
// either is empty; such frames are excluded from the affinity aggregation.
std::optional<double> frame_affinity(const LabelHistogram& a, const LabelHistogram& b);

// Mean per-point depth weight over the superpoint's visible points (undefined
// without visible points).
std::optional<double> superpoint_depth_weight(const Superpoint& superpoint,
                                              const FrameProjection& projection);

// Fraction of the superpoint's points visible in the frame.
double superpoint_visibility_weight(const Superpoint& superpoint,
                                    const FrameProjection& projection);

// Frame reliability: product of both depth weights and both visibility ratios.
double edge_frame_weight(double depth_i, double depth_j, double vis_i, double vis_j);

// Weighted mean of per-frame affinities; nullopt when no frame qualifies.
struct FrameContribution {
  double affinity = 0;
  double weight = 0;
};
std::optional<double> aggregate_affinity(const std::vector<FrameContribution>& contributions);

struct AffinityGraph {
  struct Edge {
    int i = 0, j = 0;  // i < j
    double affinity = 0;
  };
  std::vector<Edge> edges;  // sorted by (i, j)
  std::unordered_map<std::uint64_t, double> lookup;

  static std::uint64_t key(int a, int b) {
    const std::uint64_t lo = static_cast<std::uint32_t>(std::min(a, b));
    const std::uint64_t hi = static_cast<std::uint32_t>(std::max(a, b));
    return (hi << 32) | lo;
  }

  // Affinity if the edge exists; consumers treat absent edges as 0.
  std::optional<double> affinity(int a, int b) const {
    const auto it = lookup.find(key(a, b));
    if (it == lookup.end()) return std::nullopt;
    return it->second;
  }

  double affinity_or_zero(int a, int b) const { return affinity(a, b).value_or(0.0); }
};

// Builds the superpoint scene graph restricted to adjacency pairs. seg_maps
// must be aligned with projection.frames and all of one kind. Frames where
// either histogram is empty are excluded from both Eq.-9 sums; edges with no
// valid frame are absent from the graph.
AffinityGraph build_graph(const std::vector<Superpoint>& superpoints,
                          const SuperpointAdjacency& adjacency, const ProjectionTable& projection,
                          const std::vector<SegmentationMap2D>& seg_maps);

}  // namespace mv3dis
