#pragma once

#include <map>
#include <string>

#include "mv3dis/mask_matching.h"
#include "mv3dis/refinement.h"
#include "mv3dis/scene.h"

namespace mv3dis {

// Raised when a stage fails; carries the stage name for CLI diagnostics.
struct PipelineError : std::runtime_error {
  PipelineError(const std::string& stage, const std::string& cause)
      : std::runtime_error("stage '" + stage + "': " + cause), stage(stage) {}
  std::string stage;
};

struct PipelineResult {
  std::vector<Superpoint> superpoints;
  SuperpointAdjacency adjacency;
  ProjectionTable projection;
  std::vector<std::vector<Mask2D>> survivors;          // per frame, NMS survivors
  std::vector<std::vector<Bitmap>> survivor_bitmaps;
  std::vector<SegmentationMap2D> coarse_maps;
  AffinityGraph coarse_graph;
  SegmentationState coarse_state;
  std::vector<int> coarse_labels;                      // per point
  MatchingResult matching;                             // populated when use_matching
  AffinityGraph refined_graph;                         // graph driving refinement
  SegmentationState final_state;
  std::vector<int> final_labels;                       // per point
  RefinementTrace trace;
  std::map<std::string, double> stage_ms;
};

// Runs the full coarse-to-fine pipeline. Validates the bundle first; any
// stage failure surfaces as PipelineError naming the stage. When
// `precomputed_superpoints` is non-null the over-segmentation stage is
// bypassed (the k-NN graph is still built for adjacency).
PipelineResult run_pipeline(const SceneBundle& bundle,
                            const std::vector<Superpoint>* precomputed_superpoints = nullptr);

}  // namespace mv3dis
