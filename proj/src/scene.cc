#include "mv3dis/scene.h"

#include <cmath>
#include <set>
#include <sstream>

namespace mv3dis {

Eigen::Matrix4d CameraPose::camera_to_world() const {
  Eigen::Matrix4d inv = Eigen::Matrix4d::Identity();
  const Eigen::Matrix3d r = rotation();
  const Eigen::Vector3d t = translation();
  inv.topLeftCorner<3, 3>() = r.transpose();
  inv.topRightCorner<3, 1>() = -r.transpose() * t;
  return inv;
}

namespace {

void check_cloud(const PointCloud& cloud, std::vector<Violation>& out) {
  if (cloud.positions.empty()) {
    out.push_back({"cloud.positions", "point cloud is empty"});
    return;
  }
  for (std::size_t i = 0; i < cloud.positions.size(); ++i) {
    if (!cloud.positions[i].allFinite()) {
      out.push_back({"cloud.positions[" + std::to_string(i) + "]", "non-finite coordinate"});
      break;
    }
  }
  if (cloud.has_colors() && cloud.colors.size() != cloud.positions.size())
    out.push_back({"cloud.colors", "color count does not match position count"});
  if (cloud.has_normals()) {
    if (cloud.normals.size() != cloud.positions.size()) {
      out.push_back({"cloud.normals", "normal count does not match position count"});
    } else {
      for (std::size_t i = 0; i < cloud.normals.size(); ++i) {
        const double n = cloud.normals[i].norm();
        if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-4) {
          out.push_back({"cloud.normals[" + std::to_string(i) + "]",
                         "normal not unit length (norm=" + std::to_string(n) + ")"});
          break;
        }
      }
    }
  }
}

void check_intrinsics(const CameraIntrinsics& k, const std::string& path,
                      std::vector<Violation>& out) {
  if (!(k.fx > 0) || !(k.fy > 0)) out.push_back({path, "focal lengths must be positive"});
  if (!(k.cx >= 0 && k.cx < k.width)) out.push_back({path + ".cx", "principal point outside image"});
  if (!(k.cy >= 0 && k.cy < k.height)) out.push_back({path + ".cy", "principal point outside image"});
  if (k.width <= 0 || k.height <= 0) out.push_back({path, "image size must be positive"});
}

void check_pose(const CameraPose& pose, const std::string& path, std::vector<Violation>& out) {
  const Eigen::Matrix4d& m = pose.world_to_camera;
  if (!m.allFinite()) {
    out.push_back({path, "non-finite transform"});
    return;
  }
  if (m.row(3) != Eigen::RowVector4d(0, 0, 0, 1))
    out.push_back({path, "bottom row must be [0 0 0 1]"});
  const Eigen::Matrix3d r = pose.rotation();
  const double ortho_err = (r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho_err > 1e-5)
    out.push_back({path, "rotation not orthonormal (max error " + std::to_string(ortho_err) + ")"});
  if (std::abs(r.determinant() - 1.0) > 1e-5)
    out.push_back({path, "rotation determinant must be +1"});
}

void check_frame(const Frame& frame, const std::string& path, std::vector<Violation>& out) {
  check_intrinsics(frame.intrinsics, path + ".intrinsics", out);
  check_pose(frame.pose, path + ".pose", out);

  const std::size_t expected =
      static_cast<std::size_t>(frame.intrinsics.width) * frame.intrinsics.height;
  if (frame.intrinsics.width > 0 && frame.intrinsics.height > 0 && frame.depth.size() != expected) {
    out.push_back({path + ".depth", "depth has " + std::to_string(frame.depth.size()) +
                                        " values, intrinsics imply " + std::to_string(expected)});
  } else {
    for (std::size_t i = 0; i < frame.depth.size(); ++i) {
      if (!(frame.depth[i] >= 0) || !std::isfinite(frame.depth[i])) {
        out.push_back({path + ".depth[" + std::to_string(i) + "]", "depth must be finite and >= 0"});
        break;
      }
    }
  }

  for (std::size_t j = 0; j < frame.masks.size(); ++j) {
    const Mask2D& mask = frame.masks[j];
    const std::string mpath = path + ".masks[" + std::to_string(j) + "]";
    if (mask.id.frame_id != frame.frame_id)
      out.push_back({mpath + ".id", "mask frame_id does not match its frame"});
    if (mask.rle.width != frame.intrinsics.width || mask.rle.height != frame.intrinsics.height) {
      out.push_back({mpath + ".rle", "mask size does not match frame size"});
      continue;
    }
    std::uint64_t total = 0, ones = 0;
    bool value = false;
    for (std::uint32_t c : mask.rle.counts) {
      total += c;
      if (value) ones += c;
      value = !value;
    }
    const std::uint64_t expected_bits =
        static_cast<std::uint64_t>(mask.rle.height) * mask.rle.width;
    if (total != expected_bits)
      out.push_back({mpath + ".rle", "RLE decodes to " + std::to_string(total) + " bits, expected " +
                                         std::to_string(expected_bits)});
    else if (ones == 0)
      out.push_back({mpath + ".rle", "mask is empty"});
    if (!(mask.score >= 0.0 && mask.score <= 1.0))
      out.push_back({mpath + ".score", "score outside [0,1]"});
  }
}

void check_config(const PipelineConfig& c, std::vector<Violation>& out) {
  auto in_open_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!in_open_unit(c.alpha)) out.push_back({"config.alpha", "must lie in (0,1)"});
  if (!in_open_unit(c.tau_f)) out.push_back({"config.tau_f", "must lie in (0,1)"});
  if (!in_open_unit(c.tau_m)) out.push_back({"config.tau_m", "must lie in (0,1)"});
  if (!in_open_unit(c.tau_merge)) out.push_back({"config.tau_merge", "must lie in (0,1)"});
  if (!in_open_unit(c.nms_iou)) out.push_back({"config.nms_iou", "must lie in (0,1)"});
  if (!in_open_unit(c.consistency_nms_iou))
    out.push_back({"config.consistency_nms_iou", "must lie in (0,1)"});
  if (c.refine_max_iters < 1) out.push_back({"config.refine_max_iters", "must be >= 1"});
  if (c.k_graph < 1) out.push_back({"config.k_graph", "must be >= 1"});
  if (!(c.weight_scale > 0)) out.push_back({"config.weight_scale", "must be > 0"});
  if (c.min_size < 1) out.push_back({"config.min_size", "must be >= 1"});
  if (c.threads < 0) out.push_back({"config.threads", "must be >= 0"});
}

}  // namespace

std::vector<Violation> validate_scene(const SceneBundle& bundle) {
  std::vector<Violation> out;
  check_cloud(bundle.cloud, out);
  if (bundle.frames.empty()) out.push_back({"frames", "at least one frame is required"});
  std::set<int> ids;
  for (std::size_t t = 0; t < bundle.frames.size(); ++t) {
    const std::string path = "frames[" + std::to_string(t) + "]";
    if (!ids.insert(bundle.frames[t].frame_id).second)
      out.push_back({path + ".frame_id", "duplicate frame id " + std::to_string(bundle.frames[t].frame_id)});
    check_frame(bundle.frames[t], path, out);
  }
  check_config(bundle.config, out);
  return out;
}

void require_valid(const SceneBundle& bundle) {
  const auto report = validate_scene(bundle);
  if (report.empty()) return;
  std::ostringstream os;
  os << "invalid scene bundle (" << report.size() << " violation(s)):";
  for (const auto& v : report) os << "\n  " << v.path << ": " << v.message;
  throw std::invalid_argument(os.str());
}

}  // namespace mv3dis
