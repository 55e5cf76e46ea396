#pragma once

#include <vector>

#include "mv3dis/scene.h"

namespace mv3dis {

enum class MapKind { kCoarse, kRefined };

// Per-frame pixel -> mask-label image. Label -1 is background; non-background
// labels index into `masks` (the surviving masks that built this map).
struct SegmentationMap2D {
  int frame_id = 0;
  int width = 0, height = 0;
  MapKind kind = MapKind::kCoarse;
  std::vector<std::int32_t> labels;  // row-major
  std::vector<MaskId> masks;         // label l -> masks[l]

  std::int32_t label_at(int x, int y) const {
    return labels[static_cast<std::size_t>(y) * width + x];
  }
};

// |a AND b| / |a OR b| on decoded bitmaps. Throws on dimension mismatch.
double mask_iou(const Bitmap& a, const Bitmap& b);

// Greedy score NMS: sort by score descending (ties by ascending mask index),
// keep a mask iff its IoU with every already-kept mask is <= iou_threshold.
// Returns indices into `masks` in kept order.
std::vector<std::size_t> nms_by_score(const std::vector<Mask2D>& masks,
                                      const std::vector<Bitmap>& bitmaps, double iou_threshold);

// Flattens masks into a label map: each covered pixel takes the label of the
// highest-priority covering mask (priority descending, ties by ascending mask
// index). Used with segmenter scores for coarse maps and consistency scores
// for refined maps.
SegmentationMap2D flatten_masks(int frame_id, int width, int height, MapKind kind,
                                const std::vector<const Mask2D*>& masks,
                                const std::vector<const Bitmap*>& bitmaps,
                                const std::vector<double>& priorities);

// Convenience wrappers matching the two pipeline stages.
SegmentationMap2D build_coarse_map(const Frame& frame, const std::vector<Mask2D>& survivors,
                                   const std::vector<Bitmap>& bitmaps);
SegmentationMap2D build_refined_map(const Frame& frame, const std::vector<Mask2D>& masks,
                                    const std::vector<Bitmap>& bitmaps,
                                    const std::vector<double>& consistency_scores);

}  // namespace mv3dis
