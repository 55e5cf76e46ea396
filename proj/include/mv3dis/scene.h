#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mv3dis/bitmap.h"

namespace mv3dis {

struct PointCloud {
  std::vector<Eigen::Vector3d> positions;
  std::vector<Eigen::Matrix<std::uint8_t, 3, 1>> colors;  // empty or size == positions
  std::vector<Eigen::Vector3d> normals;                   // empty or size == positions

  std::size_t size() const { return positions.size(); }
  bool has_colors() const { return !colors.empty(); }
  bool has_normals() const { return !normals.empty(); }
};

struct CameraIntrinsics {
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;
  int width = 0, height = 0;
};

// world -> camera rigid transform.
struct CameraPose {
  Eigen::Matrix4d world_to_camera = Eigen::Matrix4d::Identity();

  Eigen::Matrix3d rotation() const { return world_to_camera.topLeftCorner<3, 3>(); }
  Eigen::Vector3d translation() const { return world_to_camera.topRightCorner<3, 1>(); }
  Eigen::Matrix4d camera_to_world() const;
};

struct MaskId {
  int frame_id = 0;
  int index = 0;

  auto operator<=>(const MaskId&) const = default;
};

struct Mask2D {
  MaskId id;
  Rle rle;
  double score = 0;  // segmenter-reported prediction quality, clamped to [0,1] on load

  // Decoded lazily by callers; kept here when the pipeline materializes it.
  Bitmap bitmap() const { return rle_decode(rle); }
};

struct Frame {
  int frame_id = 0;
  CameraIntrinsics intrinsics;
  CameraPose pose;
  std::vector<double> depth;  // row-major, meters, 0 = no measurement
  std::vector<Mask2D> masks;

  double depth_at(int x, int y) const {
    return depth[static_cast<std::size_t>(y) * intrinsics.width + x];
  }
};

struct PipelineConfig {
  double alpha = 0.05;               // relative depth tolerance
  double tau_f = 0.3;                // frame-visibility threshold
  double tau_m = 0.9;                // mask-visibility threshold
  double tau_merge = 0.5;            // region-growing merge threshold
  double nms_iou = 0.5;              // coarse-map NMS IoU threshold
  double consistency_nms_iou = 0.5;  // consistency NMS IoU threshold
  int refine_max_iters = 10;
  int k_graph = 12;
  double weight_scale = 0.05;
  int min_size = 20;
  std::uint64_t seed = 0;
  bool use_depth_weights = true;
  bool use_matching = true;
  bool use_refinement = true;
  int threads = 0;  // 0 = auto
};

struct SceneBundle {
  PointCloud cloud;
  std::vector<Frame> frames;
  PipelineConfig config;
};

struct Violation {
  std::string path;
  std::string message;
};

// Collects every invariant violation; empty result means the bundle is valid.
// Pure: same input always yields the same report.
std::vector<Violation> validate_scene(const SceneBundle& bundle);

// Throws std::invalid_argument listing the violations when the bundle is invalid.
void require_valid(const SceneBundle& bundle);

}  // namespace mv3dis
