#include "mv3dis/mask_store.h"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace mv3dis {

double mask_iou(const Bitmap& a, const Bitmap& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("mask_iou: dimension mismatch");
  const std::size_t uni = Bitmap::union_count(a, b);
  if (uni == 0) return 0.0;
  return static_cast<double>(Bitmap::intersection_count(a, b)) / static_cast<double>(uni);
}

std::vector<std::size_t> nms_by_score(const std::vector<Mask2D>& masks,
                                      const std::vector<Bitmap>& bitmaps, double iou_threshold) {
  std::vector<std::size_t> order(masks.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (masks[a].score != masks[b].score) return masks[a].score > masks[b].score;
    return masks[a].id.index < masks[b].id.index;
  });

  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    bool keep = true;
    for (std::size_t j : kept) {
      if (mask_iou(bitmaps[i], bitmaps[j]) > iou_threshold) {
        keep = false;
        break;
      }
    }
    if (keep) kept.push_back(i);
  }
  return kept;
}

SegmentationMap2D flatten_masks(int frame_id, int width, int height, MapKind kind,
                                const std::vector<const Mask2D*>& masks,
                                const std::vector<const Bitmap*>& bitmaps,
                                const std::vector<double>& priorities) {
  SegmentationMap2D map;
  map.frame_id = frame_id;
  map.width = width;
  map.height = height;
  map.kind = kind;
  map.labels.assign(static_cast<std::size_t>(width) * height, -1);

  std::vector<std::size_t> order(masks.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (priorities[a] != priorities[b]) return priorities[a] > priorities[b];
    return masks[a]->id.index < masks[b]->id.index;
  });

  map.masks.reserve(order.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank)
    map.masks.push_back(masks[order[rank]]->id);

  // Paint lowest priority first so the highest-priority mask wins overlaps.
  for (std::size_t rank = order.size(); rank-- > 0;) {
    const Bitmap& bm = *bitmaps[order[rank]];
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        if (bm.get(x, y)) map.labels[static_cast<std::size_t>(y) * width + x] = static_cast<std::int32_t>(rank);
  }
  return map;
}

SegmentationMap2D build_coarse_map(const Frame& frame, const std::vector<Mask2D>& survivors,
                                   const std::vector<Bitmap>& bitmaps) {
  std::vector<const Mask2D*> ptrs;
  std::vector<const Bitmap*> bptrs;
  std::vector<double> scores;
  for (std::size_t i = 0; i < survivors.size(); ++i) {
    ptrs.push_back(&survivors[i]);
    bptrs.push_back(&bitmaps[i]);
    scores.push_back(survivors[i].score);
  }
  return flatten_masks(frame.frame_id, frame.intrinsics.width, frame.intrinsics.height,
                       MapKind::kCoarse, ptrs, bptrs, scores);
}

SegmentationMap2D build_refined_map(const Frame& frame, const std::vector<Mask2D>& masks,
                                    const std::vector<Bitmap>& bitmaps,
                                    const std::vector<double>& consistency_scores) {
  std::vector<const Mask2D*> ptrs;
  std::vector<const Bitmap*> bptrs;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    ptrs.push_back(&masks[i]);
    bptrs.push_back(&bitmaps[i]);
  }
  return flatten_masks(frame.frame_id, frame.intrinsics.width, frame.intrinsics.height,
                       MapKind::kRefined, ptrs, bptrs, consistency_scores);
}

}  // namespace mv3dis
