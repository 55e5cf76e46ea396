#include "mv3dis/pipeline.h"

#include <chrono>

#include "mv3dis/parallel.h"

namespace mv3dis {

namespace {

class StageTimer {
 public:
  explicit StageTimer(std::map<std::string, double>& sink) : sink_(sink) {}

  template <typename F>
  auto time(const std::string& stage, F&& fn) -> decltype(fn()) {
    const auto start = std::chrono::steady_clock::now();
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        record(stage, start);
      } else {
        auto result = fn();
        record(stage, start);
        return result;
      }
    } catch (const PipelineError&) {
      throw;
    } catch (const std::exception& e) {
      throw PipelineError(stage, e.what());
    }
  }

 private:
  void record(const std::string& stage,
              const std::chrono::steady_clock::time_point& start) {
    sink_[stage] = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  }

  std::map<std::string, double>& sink_;
};

}  // namespace

PipelineResult run_pipeline(const SceneBundle& bundle,
                            const std::vector<Superpoint>* precomputed_superpoints) {
  PipelineResult result;
  StageTimer timer(result.stage_ms);
  const PipelineConfig& cfg = bundle.config;
  set_worker_threads(cfg.threads);

  timer.time("scene-model", [&] { require_valid(bundle); });

  timer.time("superpoints", [&] {
    const auto edges = build_knn_graph(bundle.cloud, cfg.k_graph);
    result.superpoints = precomputed_superpoints
                             ? *precomputed_superpoints
                             : felzenszwalb_segment(bundle.cloud, edges, cfg.weight_scale,
                                                    cfg.min_size);
    result.adjacency = compute_adjacency(result.superpoints, edges, bundle.cloud.size());
  });

  timer.time("projection", [&] {
    result.projection = build_projection_table(bundle, cfg.use_depth_weights);
  });

  timer.time("coarse-maps", [&] {
    const std::size_t num_frames = bundle.frames.size();
    result.survivors.resize(num_frames);
    result.survivor_bitmaps.resize(num_frames);
    result.coarse_maps.resize(num_frames);
    parallel_for(num_frames, [&](std::size_t t) {
      const Frame& frame = bundle.frames[t];
      std::vector<Bitmap> bitmaps;
      bitmaps.reserve(frame.masks.size());
      for (const Mask2D& mask : frame.masks) bitmaps.push_back(mask.bitmap());
      for (std::size_t j : nms_by_score(frame.masks, bitmaps, cfg.nms_iou)) {
        result.survivors[t].push_back(frame.masks[j]);
        result.survivor_bitmaps[t].push_back(std::move(bitmaps[j]));
      }
      result.coarse_maps[t] = build_coarse_map(frame, result.survivors[t], result.survivor_bitmaps[t]);
    });
  });

  timer.time("coarse-graph", [&] {
    result.coarse_graph =
        build_graph(result.superpoints, result.adjacency, result.projection, result.coarse_maps);
  });

  timer.time("region-growing", [&] {
    result.coarse_state = grow(result.superpoints, result.adjacency, result.coarse_graph, cfg.tau_merge);
    result.coarse_labels = result.coarse_state.point_labels(result.superpoints, bundle.cloud.size());
  });

  if (cfg.use_matching) {
    timer.time("mask-matching", [&] {
      const auto segments = collect_segment_points(result.coarse_state, result.superpoints);
      result.matching =
          match_masks(segments, bundle.frames, result.survivors, result.survivor_bitmaps,
                      result.projection, cfg.tau_f, cfg.tau_m, cfg.consistency_nms_iou);
    });
    timer.time("refined-graph", [&] {
      result.refined_graph = build_graph(result.superpoints, result.adjacency, result.projection,
                                         result.matching.refined_maps);
    });
  } else {
    result.refined_graph = result.coarse_graph;
  }

  if (cfg.use_refinement) {
    timer.time("region-refinement", [&] {
      auto [state, trace] = refine(result.coarse_state, result.refined_graph, result.adjacency,
                                   result.superpoints, cfg.refine_max_iters);
      result.final_state = std::move(state);
      result.trace = std::move(trace);
    });
  } else {
    result.final_state = result.coarse_state;
  }

  result.final_labels = result.final_state.point_labels(result.superpoints, bundle.cloud.size());
  return result;
}

}  // namespace mv3dis
