#include "mv3dis/refinement.h"

#include <algorithm>
#include <stdexcept>

namespace mv3dis {

std::set<int> boundary_superpoints(const SegmentationState& state,
                                   const SuperpointAdjacency& adjacency) {
  std::set<int> boundary;
  for (std::size_t s = 0; s < state.assignment.size(); ++s) {
    const int region = state.assignment[s];
    for (int neighbor : adjacency.neighbors[s]) {
      if (state.assignment[neighbor] != region) {
        boundary.insert(static_cast<int>(s));
        break;
      }
    }
  }
  return boundary;
}

namespace {

// Removes `sp` from its region's member list and appends it to the target's.
void move_superpoint(SegmentationState& state, int sp, int from, int to) {
  auto& members = state.regions[from];
  members.erase(std::find(members.begin(), members.end(), sp));
  auto& target = state.regions[to];
  target.insert(std::upper_bound(target.begin(), target.end(), sp), sp);
  state.assignment[sp] = to;
}

}  // namespace

std::pair<SegmentationState, RefinementTrace> refine(const SegmentationState& state,
                                                     const AffinityGraph& graph,
                                                     const SuperpointAdjacency& adjacency,
                                                     const std::vector<Superpoint>& superpoints,
                                                     int max_iters) {
  if (max_iters < 1) throw std::invalid_argument("refine: max_iters must be >= 1");

  SegmentationState current = state;
  RefinementTrace trace;

  for (int iter = 0; iter < max_iters; ++iter) {
    RefinementTrace::Iteration record;
    const std::set<int> boundary = boundary_superpoints(current, adjacency);

    for (int sp : boundary) {  // std::set iterates in ascending id order
      const int own_region = current.assignment[sp];

      // Adjacent regions, ascending region id for deterministic tie-breaks.
      std::set<int> adjacent_regions;
      for (int neighbor : adjacency.neighbors[sp]) {
        const int r = current.assignment[neighbor];
        if (r >= 0 && r != own_region) adjacent_regions.insert(r);
      }
      if (adjacent_regions.empty()) continue;

      const auto own_score =
          neighbor_weighted_affinity(sp, current.regions[own_region], graph, adjacency, superpoints);

      int best_region = -1;
      double best_score = 0;
      for (int r : adjacent_regions) {
        const auto score =
            neighbor_weighted_affinity(sp, current.regions[r], graph, adjacency, superpoints);
        if (!score) continue;
        if (best_region < 0 || *score > best_score) {
          best_region = r;
          best_score = *score;
        }
      }
      if (best_region < 0) continue;
      if (own_score && !(best_score > *own_score)) continue;

      move_superpoint(current, sp, own_region, best_region);
      record.details.push_back({sp, own_region, best_region});
    }

    record.moves = static_cast<int>(record.details.size());
    trace.iterations.push_back(std::move(record));
    if (trace.iterations.back().moves == 0) {
      trace.converged = true;
      break;
    }
  }

  current.rebuild_regions();
  return {std::move(current), std::move(trace)};
}

}  // namespace mv3dis
