#pragma once

#include <vector>

namespace mv3dis {

struct InstancePrediction {
  std::vector<int> point_indices;  // sorted ascending
  double confidence = 1.0;
};

// Ground truth as per-point instance ids; -1 marks unannotated points, which
// are excluded from every IoU computation.
struct GroundTruthInstances {
  std::vector<int> point_ids;

  std::vector<std::vector<int>> instances() const;  // sorted per-instance point lists
};

// |pred n gt| / |pred u gt| restricted to annotated points. Throws when both
// sets are empty after the restriction.
double instance_iou(const std::vector<int>& pred, const std::vector<int>& gt,
                    const std::vector<int>& gt_point_ids);

struct PrCurvePoint {
  double recall = 0;
  double precision = 0;
};

struct ApResult {
  double ap = 0;
  std::vector<PrCurvePoint> curve;
  std::vector<std::pair<int, int>> matches;  // (prediction index, gt index)
};

// Greedy matching in descending confidence (ties by descending best IoU,
// then ascending prediction index); each GT matched at most once; a
// prediction is a true positive when it claims an unmatched GT with
// IoU >= threshold. AP is 101-point interpolated area under the PR curve.
// Throws std::invalid_argument when there is no ground truth.
ApResult average_precision(const std::vector<InstancePrediction>& preds,
                           const GroundTruthInstances& gt, double iou_threshold);

struct EvaluationReport {
  double map = 0;   // mean AP over IoU 0.50:0.05:0.95
  double ap50 = 0;
  double ap25 = 0;
  std::vector<std::pair<double, double>> per_threshold;  // (threshold, AP)
};

// min_gt_points filters tiny GT instances before evaluation (1 = disabled).
EvaluationReport evaluate(const std::vector<InstancePrediction>& preds,
                          const GroundTruthInstances& gt, int min_gt_points = 1);

// Convenience: turns per-point region labels into predictions (label -1 skipped),
// all confidences 1.0.
std::vector<InstancePrediction> predictions_from_labels(const std::vector<int>& labels);

}  // namespace mv3dis
