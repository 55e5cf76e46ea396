#include "mv3dis/projection.h"

#include <cmath>
#include <stdexcept>

#include "mv3dis/parallel.h"

namespace mv3dis {

ProjectedPoint project_point(const Eigen::Vector3d& p, const CameraIntrinsics& intrinsics,
                             const CameraPose& pose) {
  const Eigen::Matrix3d r = pose.rotation();
  const Eigen::Vector3d pc = r * p + pose.translation();
  ProjectedPoint out;
  out.z = pc.z();
  if (pc.z() == 0.0) return out;  // on the camera plane, unprojectable
  out.projectable = true;
  out.u = intrinsics.fx * pc.x() / pc.z() + intrinsics.cx;
  out.v = intrinsics.fy * pc.y() / pc.z() + intrinsics.cy;
  return out;
}

bool is_visible(double u, double v, double z, const Frame& frame, double alpha) {
  if (!(z > 0.0)) return false;
  const int x = round_half_up(u);
  const int y = round_half_up(v);
  if (x < 0 || x >= frame.intrinsics.width || y < 0 || y >= frame.intrinsics.height) return false;
  const double d = frame.depth_at(x, y);
  if (!(d > 0.0)) return false;
  return std::abs(z - d) < alpha * d;
}

double depth_weight(double z, double d, double alpha) {
  if (!(d > 0.0)) throw std::invalid_argument("depth_weight: invalid depth");
  return 1.0 - std::abs(z - d) / (alpha * d);
}

ProjectionTable build_projection_table(const SceneBundle& bundle, bool use_depth_weights) {
  ProjectionTable table;
  table.point_count = bundle.cloud.size();
  table.frames.resize(bundle.frames.size());
  const double alpha = bundle.config.alpha;

  // Disjoint writes per (frame, point): safe and order-independent.
  parallel_for(bundle.frames.size(), [&](std::size_t t) {
    const Frame& frame = bundle.frames[t];
    FrameProjection& fp = table.frames[t];
    const std::size_t n = bundle.cloud.size();
    fp.px.assign(n, -1);
    fp.py.assign(n, -1);
    fp.cam_depth.assign(n, 0.0);
    fp.visible.assign(n, 0);
    fp.weight.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const ProjectedPoint pp = project_point(bundle.cloud.positions[i], frame.intrinsics, frame.pose);
      fp.cam_depth[i] = pp.z;
      if (!pp.projectable) continue;
      fp.px[i] = round_half_up(pp.u);
      fp.py[i] = round_half_up(pp.v);
      if (!is_visible(pp.u, pp.v, pp.z, frame, alpha)) continue;
      fp.visible[i] = 1;
      fp.weight[i] =
          use_depth_weights ? depth_weight(pp.z, frame.depth_at(fp.px[i], fp.py[i]), alpha) : 1.0;
    }
  });
  return table;
}

}  // namespace mv3dis
