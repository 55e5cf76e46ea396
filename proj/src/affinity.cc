#include "mv3dis/affinity.h"

#include <cmath>

#include "mv3dis/parallel.h"

namespace mv3dis {

LabelHistogram histogram_vector(const Superpoint& superpoint, const FrameProjection& projection,
                                const SegmentationMap2D& seg_map) {
  LabelHistogram hist;
  for (std::uint32_t p : superpoint.point_indices) {
    if (!projection.visible[p]) continue;
    const std::int32_t label = seg_map.label_at(projection.px[p], projection.py[p]);
    if (label < 0) continue;  // background carries no instance evidence
    ++hist[label];
  }
  return hist;
}

std::optional<double> frame_affinity(const LabelHistogram& a, const LabelHistogram& b) {
  if (a.empty() || b.empty()) return std::nullopt;
  double dot = 0;
  for (const auto& [label, count] : a) {
    const auto it = b.find(label);
    if (it != b.end()) dot += static_cast<double>(count) * static_cast<double>(it->second);
  }
  double na = 0, nb = 0;
  for (const auto& [label, count] : a) na += static_cast<double>(count) * count;
  for (const auto& [label, count] : b) nb += static_cast<double>(count) * count;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::optional<double> superpoint_depth_weight(const Superpoint& superpoint,
                                              const FrameProjection& projection) {
  double sum = 0;
  std::size_t count = 0;
  for (std::uint32_t p : superpoint.point_indices) {
    if (!projection.visible[p]) continue;
    sum += projection.weight[p];
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

double superpoint_visibility_weight(const Superpoint& superpoint,
                                    const FrameProjection& projection) {
  std::size_t visible = 0;
  for (std::uint32_t p : superpoint.point_indices)
    if (projection.visible[p]) ++visible;
  return static_cast<double>(visible) / static_cast<double>(superpoint.point_count());
}

double edge_frame_weight(double depth_i, double depth_j, double vis_i, double vis_j) {
  return depth_i * depth_j * vis_i * vis_j;
}

std::optional<double> aggregate_affinity(const std::vector<FrameContribution>& contributions) {
  double num = 0, den = 0;
  for (const FrameContribution& c : contributions) {
    num += c.weight * c.affinity;
    den += c.weight;
  }
  if (den <= 0) return std::nullopt;
  return num / den;
}

AffinityGraph build_graph(const std::vector<Superpoint>& superpoints,
                          const SuperpointAdjacency& adjacency, const ProjectionTable& projection,
                          const std::vector<SegmentationMap2D>& seg_maps) {
  const std::size_t num_frames = projection.frames.size();
  const std::size_t num_superpoints = superpoints.size();

  // Per-frame per-superpoint statistics, computed in parallel over frames.
  struct SpFrameStats {
    LabelHistogram histogram;
    double depth_weight = 0;
    double visibility = 0;
  };
  std::vector<std::vector<SpFrameStats>> stats(num_frames);
  parallel_for(num_frames, [&](std::size_t t) {
    stats[t].resize(num_superpoints);
    for (std::size_t s = 0; s < num_superpoints; ++s) {
      SpFrameStats& st = stats[t][s];
      st.histogram = histogram_vector(superpoints[s], projection.frames[t], seg_maps[t]);
      st.depth_weight = superpoint_depth_weight(superpoints[s], projection.frames[t]).value_or(0.0);
      st.visibility = superpoint_visibility_weight(superpoints[s], projection.frames[t]);
    }
  });

  // Unique adjacency pairs (i < j) in deterministic order.
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t i = 0; i < adjacency.neighbors.size(); ++i)
    for (int j : adjacency.neighbors[i])
      if (static_cast<int>(i) < j) pairs.emplace_back(static_cast<int>(i), j);

  std::vector<std::optional<double>> affinities(pairs.size());
  // Parallel over edges; each edge accumulates frames in fixed frame order so
  // sums are bit-reproducible at any thread count.
  parallel_for(pairs.size(), [&](std::size_t e) {
    const auto [i, j] = pairs[e];
    double num = 0, den = 0;
    for (std::size_t t = 0; t < num_frames; ++t) {
      const SpFrameStats& si = stats[t][i];
      const SpFrameStats& sj = stats[t][j];
      const auto a_t = frame_affinity(si.histogram, sj.histogram);
      if (!a_t) continue;
      const double phi =
          edge_frame_weight(si.depth_weight, sj.depth_weight, si.visibility, sj.visibility);
      num += phi * *a_t;
      den += phi;
    }
    if (den > 0) affinities[e] = num / den;
  });

  AffinityGraph graph;
  for (std::size_t e = 0; e < pairs.size(); ++e) {
    if (!affinities[e]) continue;
    graph.edges.push_back({pairs[e].first, pairs[e].second, *affinities[e]});
    graph.lookup.emplace(AffinityGraph::key(pairs[e].first, pairs[e].second), *affinities[e]);
  }
  return graph;
}

}  // namespace mv3dis
