#pragma once

#include <vector>

#include "mv3dis/scene.h"

namespace mv3dis {

struct ProjectedPoint {
  double u = 0, v = 0;   // continuous pixel coordinates
  double z = 0;          // camera-space depth, may be <= 0
  bool projectable = false;  // false when the point lies on the camera plane (z == 0)
};

// Pinhole projection through a world->camera pose.
ProjectedPoint project_point(const Eigen::Vector3d& p, const CameraIntrinsics& intrinsics,
                             const CameraPose& pose);

// Nearest-pixel index used both for depth lookups and the synthetic renderer.
inline int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

// Visibility test: rounded pixel in bounds, measured depth valid, point in
// front of the camera, and |z - d| < alpha * d.
bool is_visible(double u, double v, double z, const Frame& frame, double alpha);

// Depth consistency weight 1 - |z - d| / (alpha * d); callers must have
// passed the visibility gate. Throws std::invalid_argument when d <= 0.
double depth_weight(double z, double d, double alpha);

// Per-frame projection results, struct-of-arrays over points.
struct FrameProjection {
  std::vector<std::int32_t> px, py;  // rounded pixel (valid when projectable)
  std::vector<double> cam_depth;     // z in camera space
  std::vector<std::uint8_t> visible;
  std::vector<double> weight;        // depth weight, 0 when invisible
};

struct ProjectionTable {
  std::vector<FrameProjection> frames;  // aligned with bundle.frames
  std::size_t point_count = 0;
};

// Populates the table for every (frame, point). When use_depth_weights is
// false every visible point gets weight 1 (the DCW ablation switch).
ProjectionTable build_projection_table(const SceneBundle& bundle, bool use_depth_weights = true);

}  // namespace mv3dis
