#pragma once

#include <string>
#include <vector>

#include "mv3dis/scene.h"

namespace mv3dis {

enum class PrimitiveKind { kBox, kCylinder, kPlane };

struct PrimitiveSpec {
  PrimitiveKind kind = PrimitiveKind::kBox;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  // Box: full extents (sx, sy, sz). Cylinder: (radius, radius, height).
  // Plane: a vertical sheet of width sx and height sz, normal along +y.
  Eigen::Vector3d size = Eigen::Vector3d::Constant(0.3);
  double yaw = 0;  // rotation around world z, radians
};

struct CameraRingSpec {
  int count = 8;
  double radius = 1.5;
  double height = 0.8;       // absolute world z of the camera centers
  Eigen::Vector3d look_at = Eigen::Vector3d::Zero();
  double arc = 2 * EIGEN_PI; // full ring by default
  double arc_start = 0;
};

struct CorruptionSpec {
  double fragment_prob = 0;
  int fragment_axis_splits = 2;
  double merge_prob = 0;
  double drop_prob = 0;
};

struct SceneSpec {
  std::vector<PrimitiveSpec> primitives;
  double density = 2500;  // surface samples per square meter
  std::vector<CameraRingSpec> rings;
  int image_width = 160;
  int image_height = 120;
  double focal = 160;  // fx == fy, principal point at the image center
  CorruptionSpec corruption;
  std::uint64_t seed = 0;
};

struct SyntheticGroundTruth {
  std::vector<int> point_instance;            // per point, instance = primitive index
  std::vector<std::vector<std::int32_t>> frame_labels;  // per frame, row-major, -1 background
};

// Deterministic scene construction: uniform surface sampling at the given
// density, ring cameras, point-splat z-buffer depth (the written depth is the
// winning point's exact projected depth), perfect per-instance masks, then
// seeded per-frame corruptions. Throws std::invalid_argument for invalid
// specs and "degenerate camera" when a camera sits inside a primitive.
std::pair<SceneBundle, SyntheticGroundTruth> generate(const SceneSpec& spec);

struct CorruptionReport {
  std::vector<int> masks_per_frame;
  int total_instance_views = 0;  // (frame, instance) pairs with any GT pixels
  int whole_masks = 0;
  int fragmented_instances = 0;  // (frame, instance) pairs covered by fragments
  int merged_masks = 0;          // masks spanning more than one instance
  int dropped_instances = 0;     // visible instances with no covering mask
  double fragmentation_rate = 0; // fragmented_instances / total_instance_views
};

// Classifies bundle masks against the ground-truth frame labels; exact counts
// for test assertions.
CorruptionReport corruption_report(const SceneBundle& bundle, const SyntheticGroundTruth& gt);

// JSON (de)serialization of the scene spec, used by the synth subcommand.
SceneSpec scene_spec_from_json_text(const std::string& text);
std::string scene_spec_to_json_text(const SceneSpec& spec);

}  // namespace mv3dis
