#include "mv3dis/evaluation.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

namespace mv3dis {

std::vector<std::vector<int>> GroundTruthInstances::instances() const {
  std::map<int, std::vector<int>> grouped;
  for (std::size_t p = 0; p < point_ids.size(); ++p)
    if (point_ids[p] >= 0) grouped[point_ids[p]].push_back(static_cast<int>(p));
  std::vector<std::vector<int>> out;
  out.reserve(grouped.size());
  for (auto& [id, points] : grouped) out.push_back(std::move(points));
  return out;
}

double instance_iou(const std::vector<int>& pred, const std::vector<int>& gt,
                    const std::vector<int>& gt_point_ids) {
  // Restrict the prediction to annotated points.
  std::size_t pred_size = 0, inter = 0;
  auto it = gt.begin();
  for (int p : pred) {
    if (static_cast<std::size_t>(p) < gt_point_ids.size() && gt_point_ids[p] < 0) continue;
    ++pred_size;
    while (it != gt.end() && *it < p) ++it;
    if (it != gt.end() && *it == p) ++inter;
  }
  const std::size_t uni = pred_size + gt.size() - inter;
  if (uni == 0) throw std::invalid_argument("instance_iou: both sets empty");
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

double interpolated_ap(const std::vector<PrCurvePoint>& curve) {
  // 101-point interpolation: mean over r in {0, 0.01, ..., 1} of the maximum
  // precision at recall >= r.
  double total = 0;
  for (int i = 0; i <= 100; ++i) {
    const double r = static_cast<double>(i) / 100.0;
    double best = 0;
    for (const PrCurvePoint& pt : curve)
      if (pt.recall >= r - 1e-12) best = std::max(best, pt.precision);
    total += best;
  }
  return total / 101.0;
}

}  // namespace

ApResult average_precision(const std::vector<InstancePrediction>& preds,
                           const GroundTruthInstances& gt, double iou_threshold) {
  const std::vector<std::vector<int>> gts = gt.instances();
  if (gts.empty()) throw std::invalid_argument("average_precision: no ground truth");

  // IoU of every prediction against every GT instance.
  std::vector<std::vector<double>> iou(preds.size(), std::vector<double>(gts.size(), 0.0));
  std::vector<double> best_iou(preds.size(), 0.0);
  for (std::size_t p = 0; p < preds.size(); ++p) {
    for (std::size_t g = 0; g < gts.size(); ++g) {
      iou[p][g] = instance_iou(preds[p].point_indices, gts[g], gt.point_ids);
      best_iou[p] = std::max(best_iou[p], iou[p][g]);
    }
  }

  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (preds[a].confidence != preds[b].confidence)
      return preds[a].confidence > preds[b].confidence;
    if (best_iou[a] != best_iou[b]) return best_iou[a] > best_iou[b];
    return a < b;
  });

  ApResult result;
  std::vector<bool> gt_taken(gts.size(), false);
  std::vector<bool> is_tp(preds.size(), false);
  for (std::size_t p : order) {
    int best_gt = -1;
    double best = 0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_taken[g]) continue;
      if (iou[p][g] >= iou_threshold && iou[p][g] > best) {
        best = iou[p][g];
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0) {
      gt_taken[best_gt] = true;
      is_tp[p] = true;
      result.matches.emplace_back(static_cast<int>(p), best_gt);
    }
  }

  std::size_t tp = 0, fp = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (is_tp[order[rank]]) ++tp;
    else ++fp;
    result.curve.push_back({static_cast<double>(tp) / static_cast<double>(gts.size()),
                            static_cast<double>(tp) / static_cast<double>(tp + fp)});
  }
  result.ap = interpolated_ap(result.curve);
  return result;
}

EvaluationReport evaluate(const std::vector<InstancePrediction>& preds,
                          const GroundTruthInstances& gt, int min_gt_points) {
  GroundTruthInstances filtered = gt;
  if (min_gt_points > 1) {
    std::map<int, int> counts;
    for (int id : gt.point_ids)
      if (id >= 0) ++counts[id];
    for (int& id : filtered.point_ids)
      if (id >= 0 && counts[id] < min_gt_points) id = -1;
  }

  EvaluationReport report;
  for (int i = 0; i < 10; ++i) {
    const double threshold = 0.50 + 0.05 * i;
    const double ap = average_precision(preds, filtered, threshold).ap;
    report.per_threshold.emplace_back(threshold, ap);
    report.map += ap;
  }
  report.map /= 10.0;
  report.ap50 = report.per_threshold.front().second;
  report.ap25 = average_precision(preds, filtered, 0.25).ap;
  return report;
}

std::vector<InstancePrediction> predictions_from_labels(const std::vector<int>& labels) {
  std::map<int, InstancePrediction> grouped;
  for (std::size_t p = 0; p < labels.size(); ++p)
    if (labels[p] >= 0) grouped[labels[p]].point_indices.push_back(static_cast<int>(p));
  std::vector<InstancePrediction> preds;
  preds.reserve(grouped.size());
  for (auto& [label, pred] : grouped) preds.push_back(std::move(pred));
  return preds;
}

}  // namespace mv3dis
