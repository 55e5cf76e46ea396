#include "mv3dis/region_growing.h"

#include <algorithm>
#include <deque>
#include <numeric>
#include <stdexcept>

namespace mv3dis {

void SegmentationState::rebuild_regions() {
  int max_region = -1;
  for (int r : assignment) max_region = std::max(max_region, r);
  std::vector<std::vector<int>> grouped(max_region + 1);
  for (std::size_t s = 0; s < assignment.size(); ++s)
    if (assignment[s] >= 0) grouped[assignment[s]].push_back(static_cast<int>(s));

  regions.clear();
  std::vector<int> remap(max_region + 1, -1);
  for (int r = 0; r <= max_region; ++r) {
    if (grouped[r].empty()) continue;
    remap[r] = static_cast<int>(regions.size());
    regions.push_back(std::move(grouped[r]));
  }
  for (int& r : assignment)
    if (r >= 0) r = remap[r];
}

std::vector<int> SegmentationState::point_labels(const std::vector<Superpoint>& superpoints,
                                                 std::size_t point_count) const {
  std::vector<int> labels(point_count, -1);
  for (const Superpoint& sp : superpoints) {
    const int region = assignment[sp.superpoint_id];
    for (std::uint32_t p : sp.point_indices) labels[p] = region;
  }
  return labels;
}

std::optional<double> neighbor_weighted_affinity(int candidate, const std::vector<int>& region_members,
                                                 const AffinityGraph& graph,
                                                 const SuperpointAdjacency& adjacency,
                                                 const std::vector<Superpoint>& superpoints) {
  constexpr double kEps = 1e-6;  // meters
  double num = 0, den = 0;
  std::size_t contributing = 0;
  double sole_affinity = 0;
  bool any_edge = false;
  for (int member : region_members) {
    if (member == candidate || !adjacency.adjacent(candidate, member)) continue;
    const double dist =
        (superpoints[candidate].centroid - superpoints[member].centroid).norm();
    const double w = static_cast<double>(superpoints[member].point_count()) / (kEps + dist);
    const auto affinity = graph.affinity(candidate, member);
    if (affinity) any_edge = true;
    num += w * affinity.value_or(0.0);
    den += w;
    ++contributing;
    sole_affinity = affinity.value_or(0.0);
  }
  if (!any_edge || den <= 0) return std::nullopt;
  // One neighbor: the weights cancel algebraically; return the affinity
  // itself so threshold comparisons see the exact stored value.
  if (contributing == 1) return sole_affinity;
  return num / den;
}

SegmentationState grow(const std::vector<Superpoint>& superpoints,
                       const SuperpointAdjacency& adjacency, const AffinityGraph& graph,
                       double tau_merge) {
  if (!(tau_merge > 0.0 && tau_merge < 1.0))
    throw std::invalid_argument("grow: tau_merge must lie in (0,1)");

  const std::size_t n = superpoints.size();
  SegmentationState state;
  state.assignment.assign(n, -1);

  std::vector<int> seed_order(n);
  std::iota(seed_order.begin(), seed_order.end(), 0);
  std::sort(seed_order.begin(), seed_order.end(), [&](int a, int b) {
    if (superpoints[a].point_count() != superpoints[b].point_count())
      return superpoints[a].point_count() > superpoints[b].point_count();
    return a < b;
  });

  for (int seed : seed_order) {
    if (state.assignment[seed] >= 0) continue;
    const int region = static_cast<int>(state.regions.size());
    state.regions.push_back({seed});
    state.assignment[seed] = region;
    std::vector<int>& members = state.regions.back();

    std::deque<int> frontier{seed};
    while (!frontier.empty()) {
      const int current = frontier.front();
      frontier.pop_front();
      for (int neighbor : adjacency.neighbors[current]) {
        if (state.assignment[neighbor] >= 0) continue;
        const auto score =
            neighbor_weighted_affinity(neighbor, members, graph, adjacency, superpoints);
        if (score && *score > tau_merge) {
          state.assignment[neighbor] = region;
          members.push_back(neighbor);
          frontier.push_back(neighbor);
        }
      }
    }
    std::sort(members.begin(), members.end());
  }
  return state;
}

}  // namespace mv3dis
