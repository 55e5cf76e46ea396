#pragma once

#include <map>
#include <optional>
#include <vector>

#include "mv3dis/mask_store.h"
#include "mv3dis/projection.h"
#include "mv3dis/region_growing.h"

namespace mv3dis {

// A coarse 3D segment viewed as a flat point list (region members merged).
struct SegmentPoints {
  int region_id = 0;
  std::vector<std::uint32_t> point_indices;
};

std::vector<SegmentPoints> collect_segment_points(const SegmentationState& state,
                                                  const std::vector<Superpoint>& superpoints);

// Fraction of the segment's points visible in the frame (V^f).
double frame_visibility(const SegmentPoints& segment, const FrameProjection& projection);

// Fraction of the segment's visible points whose pixel lies inside the mask
// (V^m). Undefined without visible points.
std::optional<double> mask_visibility(const SegmentPoints& segment,
                                      const FrameProjection& projection, const Bitmap& mask);

// Mean depth weight over the segment's visible points inside the mask.
// Undefined when no visible point falls inside the mask.
std::optional<double> segment_mask_depth_weight(const SegmentPoints& segment,
                                                const FrameProjection& projection,
                                                const Bitmap& mask);

// Sparse coverage vector of one mask over all segments: entry k is
// w_d(k, mask) * V^m(k, mask), present only for segments with visible points
// inside the mask.
using CoverageVector = std::map<int, double>;
CoverageVector coverage_vector(const std::vector<SegmentPoints>& segments,
                               const FrameProjection& projection, const Bitmap& mask);

double coverage_cosine(const CoverageVector& a, const CoverageVector& b);

// Per-segment candidate mask set (Eq. 3): members satisfy V^f > tau_f and
// V^m > tau_m, listed as indices into the per-frame survivor arrays.
struct CandidateRef {
  int frame_pos = 0;  // position in the frame array
  int mask_pos = 0;   // position in that frame's survivor list
  auto operator<=>(const CandidateRef&) const = default;
};
using CandidateSet = std::vector<CandidateRef>;

// Mean cosine similarity of each member's coverage vector to the other
// members'. Singleton sets score 1.0 by convention.
std::vector<double> consistency_scores(const CandidateSet& set,
                                       const std::vector<std::vector<CoverageVector>>& coverage);

struct MatchingResult {
  std::vector<CandidateSet> candidate_sets;                 // per segment
  std::vector<std::vector<CoverageVector>> coverage;        // [frame_pos][mask_pos]
  // Final per-mask consistency score (mean over segments matching the mask);
  // masks matched by no segment are absent.
  std::map<MaskId, double> final_scores;
  std::vector<SegmentationMap2D> refined_maps;              // aligned with frames
};

// Full 3D-guided matching stage over the per-frame NMS survivors:
// candidate sets, coverage vectors, consistency scoring, per-frame
// consistency NMS, and refined map construction.
MatchingResult match_masks(const std::vector<SegmentPoints>& segments,
                           const std::vector<Frame>& frames,
                           const std::vector<std::vector<Mask2D>>& survivors,
                           const std::vector<std::vector<Bitmap>>& survivor_bitmaps,
                           const ProjectionTable& projection, double tau_f, double tau_m,
                           double consistency_nms_iou);

}  // namespace mv3dis
