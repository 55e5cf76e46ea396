#pragma once

#include <set>
#include <vector>

#include "mv3dis/region_growing.h"

namespace mv3dis {

struct RefinementMove {
  int superpoint = 0;
  int from_region = 0;
  int to_region = 0;
};

struct RefinementTrace {
  struct Iteration {
    int moves = 0;
    std::vector<RefinementMove> details;
  };
  std::vector<Iteration> iterations;
  bool converged = false;  // an iteration completed with zero moves
};

// Superpoints with at least one adjacency edge into a different region.
std::set<int> boundary_superpoints(const SegmentationState& state,
                                   const SuperpointAdjacency& adjacency);

// Iteratively reassigns boundary superpoints to their highest-scoring
// adjacent region (neighbor-weighted affinity on `graph`), Gauss-Seidel
// style: each move is visible to later evaluations within the iteration.
// A move happens only when the best adjacent region's score strictly
// exceeds the current region's score (an undefined current score loses to
// any defined one). Stops at zero moves or after max_iters; emptied regions
// are deleted and ids recompacted at the end.
std::pair<SegmentationState, RefinementTrace> refine(const SegmentationState& state,
                                                     const AffinityGraph& graph,
                                                     const SuperpointAdjacency& adjacency,
                                                     const std::vector<Superpoint>& superpoints,
                                                     int max_iters);

}  // namespace mv3dis
