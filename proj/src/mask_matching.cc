#include "mv3dis/mask_matching.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mv3dis/parallel.h"

namespace mv3dis {

std::vector<SegmentPoints> collect_segment_points(const SegmentationState& state,
                                                  const std::vector<Superpoint>& superpoints) {
  std::vector<SegmentPoints> segments(state.regions.size());
  for (std::size_t r = 0; r < state.regions.size(); ++r) {
    segments[r].region_id = static_cast<int>(r);
    for (int sp : state.regions[r])
      segments[r].point_indices.insert(segments[r].point_indices.end(),
                                       superpoints[sp].point_indices.begin(),
                                       superpoints[sp].point_indices.end());
    std::sort(segments[r].point_indices.begin(), segments[r].point_indices.end());
  }
  return segments;
}

double frame_visibility(const SegmentPoints& segment, const FrameProjection& projection) {
  if (segment.point_indices.empty()) return 0.0;
  std::size_t visible = 0;
  for (std::uint32_t p : segment.point_indices)
    if (projection.visible[p]) ++visible;
  return static_cast<double>(visible) / static_cast<double>(segment.point_indices.size());
}

std::optional<double> mask_visibility(const SegmentPoints& segment,
                                      const FrameProjection& projection, const Bitmap& mask) {
  std::size_t visible = 0, inside = 0;
  for (std::uint32_t p : segment.point_indices) {
    if (!projection.visible[p]) continue;
    ++visible;
    if (mask.get(projection.px[p], projection.py[p])) ++inside;
  }
  if (visible == 0) return std::nullopt;
  return static_cast<double>(inside) / static_cast<double>(visible);
}

std::optional<double> segment_mask_depth_weight(const SegmentPoints& segment,
                                                const FrameProjection& projection,
                                                const Bitmap& mask) {
  double sum = 0;
  std::size_t count = 0;
  for (std::uint32_t p : segment.point_indices) {
    if (!projection.visible[p]) continue;
    if (!mask.get(projection.px[p], projection.py[p])) continue;
    sum += projection.weight[p];
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

CoverageVector coverage_vector(const std::vector<SegmentPoints>& segments,
                               const FrameProjection& projection, const Bitmap& mask) {
  CoverageVector v;
  for (const SegmentPoints& segment : segments) {
    const auto vm = mask_visibility(segment, projection, mask);
    if (!vm || *vm <= 0.0) continue;
    const auto wd = segment_mask_depth_weight(segment, projection, mask);
    if (!wd) continue;
    v[segment.region_id] = *wd * *vm;
  }
  return v;
}

double coverage_cosine(const CoverageVector& a, const CoverageVector& b) {
  double dot = 0;
  for (const auto& [k, va] : a) {
    const auto it = b.find(k);
    if (it != b.end()) dot += va * it->second;
  }
  double na = 0, nb = 0;
  for (const auto& [k, v] : a) na += v * v;
  for (const auto& [k, v] : b) nb += v * v;
  if (na <= 0 || nb <= 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<double> consistency_scores(const CandidateSet& set,
                                       const std::vector<std::vector<CoverageVector>>& coverage) {
  std::vector<double> scores(set.size(), 0.0);
  if (set.size() == 1) {
    scores[0] = 1.0;  // a lone match has no contradicting evidence
    return scores;
  }
  for (std::size_t m = 0; m < set.size(); ++m) {
    const CoverageVector& vm = coverage[set[m].frame_pos][set[m].mask_pos];
    double sum = 0;
    for (std::size_t o = 0; o < set.size(); ++o) {
      if (o == m) continue;
      sum += coverage_cosine(vm, coverage[set[o].frame_pos][set[o].mask_pos]);
    }
    scores[m] = sum / static_cast<double>(set.size() - 1);
  }
  return scores;
}

MatchingResult match_masks(const std::vector<SegmentPoints>& segments,
                           const std::vector<Frame>& frames,
                           const std::vector<std::vector<Mask2D>>& survivors,
                           const std::vector<std::vector<Bitmap>>& survivor_bitmaps,
                           const ProjectionTable& projection, double tau_f, double tau_m,
                           double consistency_nms_iou) {
  MatchingResult result;
  const std::size_t num_frames = frames.size();
  const std::size_t num_segments = segments.size();

  // Coverage vectors for every survivor mask, parallel over frames.
  result.coverage.resize(num_frames);
  parallel_for(num_frames, [&](std::size_t t) {
    result.coverage[t].resize(survivors[t].size());
    for (std::size_t j = 0; j < survivors[t].size(); ++j)
      result.coverage[t][j] = coverage_vector(segments, projection.frames[t], survivor_bitmaps[t][j]);
  });

  // Candidate sets (Eq. 3), parallel over segments.
  result.candidate_sets.resize(num_segments);
  parallel_for(num_segments, [&](std::size_t s) {
    CandidateSet& set = result.candidate_sets[s];
    for (std::size_t t = 0; t < num_frames; ++t) {
      if (!(frame_visibility(segments[s], projection.frames[t]) > tau_f)) continue;
      for (std::size_t j = 0; j < survivors[t].size(); ++j) {
        const auto vm = mask_visibility(segments[s], projection.frames[t], survivor_bitmaps[t][j]);
        if (vm && *vm > tau_m)
          set.push_back({static_cast<int>(t), static_cast<int>(j)});
      }
    }
  });

  // Consistency scores per set, then the mean across sets per mask.
  std::map<MaskId, std::pair<double, int>> accum;  // sum, count
  for (std::size_t s = 0; s < num_segments; ++s) {
    const CandidateSet& set = result.candidate_sets[s];
    if (set.empty()) continue;
    const std::vector<double> scores = consistency_scores(set, result.coverage);
    for (std::size_t m = 0; m < set.size(); ++m) {
      const MaskId id = survivors[set[m].frame_pos][set[m].mask_pos].id;
      auto& [sum, count] = accum[id];
      sum += scores[m];
      ++count;
    }
  }
  for (const auto& [id, sc] : accum)
    result.final_scores[id] = sc.first / static_cast<double>(sc.second);

  // Per-frame consistency NMS over scored masks, then refined maps.
  result.refined_maps.resize(num_frames);
  for (std::size_t t = 0; t < num_frames; ++t) {
    std::vector<std::size_t> scored;
    for (std::size_t j = 0; j < survivors[t].size(); ++j)
      if (result.final_scores.count(survivors[t][j].id)) scored.push_back(j);

    std::sort(scored.begin(), scored.end(), [&](std::size_t a, std::size_t b) {
      const double sa = result.final_scores.at(survivors[t][a].id);
      const double sb = result.final_scores.at(survivors[t][b].id);
      if (sa != sb) return sa > sb;
      return survivors[t][a].id.index < survivors[t][b].id.index;
    });

    std::vector<std::size_t> kept;
    for (std::size_t j : scored) {
      bool keep = true;
      for (std::size_t k : kept) {
        if (mask_iou(survivor_bitmaps[t][j], survivor_bitmaps[t][k]) > consistency_nms_iou) {
          keep = false;
          break;
        }
      }
      if (keep) kept.push_back(j);
    }

    std::vector<Mask2D> kept_masks;
    std::vector<Bitmap> kept_bitmaps;
    std::vector<double> kept_scores;
    for (std::size_t j : kept) {
      kept_masks.push_back(survivors[t][j]);
      kept_bitmaps.push_back(survivor_bitmaps[t][j]);
      kept_scores.push_back(result.final_scores.at(survivors[t][j].id));
    }
    result.refined_maps[t] = build_refined_map(frames[t], kept_masks, kept_bitmaps, kept_scores);
  }
  return result;
}

}  // namespace mv3dis
