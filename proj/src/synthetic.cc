#include "mv3dis/synthetic.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>
#include <set>
#include <stdexcept>

#include "mv3dis/parallel.h"
#include "mv3dis/projection.h"
#include "mv3dis/rng.h"

namespace mv3dis {

using nlohmann::json;

namespace {

Eigen::Matrix3d yaw_rotation(double yaw) {
  Eigen::Matrix3d r;
  r << std::cos(yaw), -std::sin(yaw), 0, std::sin(yaw), std::cos(yaw), 0, 0, 0, 1;
  return r;
}

struct SampledPoints {
  std::vector<Eigen::Vector3d> positions;
  std::vector<Eigen::Vector3d> normals;
};

std::size_t sample_count(double area, double density) {
  return static_cast<std::size_t>(std::max<long long>(1, std::llround(area * density)));
}

// Boxes are sampled on five faces; the -z face is never seen by a camera
// ring above the scene and would otherwise turn into orphан points.
void sample_box(const PrimitiveSpec& prim, double density, Rng& rng, SampledPoints& out) {
  const Eigen::Matrix3d r = yaw_rotation(prim.yaw);
  const Eigen::Vector3d half = prim.size / 2.0;

  struct Face {
    int axis;     // local axis of the face normal
    double sign;  // +1 or -1
  };
  const Face faces[] = {{0, +1}, {0, -1}, {1, +1}, {1, -1}, {2, +1}};
  for (const Face& face : faces) {
    const int u_axis = (face.axis + 1) % 3;
    const int v_axis = (face.axis + 2) % 3;
    const double area = prim.size[u_axis] * prim.size[v_axis];
    const std::size_t n = sample_count(area, density);
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::Vector3d local = Eigen::Vector3d::Zero();
      local[face.axis] = face.sign * half[face.axis];
      local[u_axis] = rng.uniform(-half[u_axis], half[u_axis]);
      local[v_axis] = rng.uniform(-half[v_axis], half[v_axis]);
      out.positions.push_back(prim.center + r * local);
      Eigen::Vector3d normal = Eigen::Vector3d::Zero();
      normal[face.axis] = face.sign;
      out.normals.push_back(r * normal);
    }
  }
}

void sample_cylinder(const PrimitiveSpec& prim, double density, Rng& rng, SampledPoints& out) {
  const double radius = prim.size.x();
  const double height = prim.size.z();
  const Eigen::Matrix3d r = yaw_rotation(prim.yaw);

  const std::size_t n_side = sample_count(2 * EIGEN_PI * radius * height, density);
  for (std::size_t i = 0; i < n_side; ++i) {
    const double theta = rng.uniform(0, 2 * EIGEN_PI);
    const double z = rng.uniform(-height / 2, height / 2);
    const Eigen::Vector3d local(radius * std::cos(theta), radius * std::sin(theta), z);
    out.positions.push_back(prim.center + r * local);
    out.normals.push_back(r * Eigen::Vector3d(std::cos(theta), std::sin(theta), 0));
  }
  const std::size_t n_top = sample_count(EIGEN_PI * radius * radius, density);
  for (std::size_t i = 0; i < n_top; ++i) {
    const double rad = radius * std::sqrt(rng.uniform());
    const double theta = rng.uniform(0, 2 * EIGEN_PI);
    const Eigen::Vector3d local(rad * std::cos(theta), rad * std::sin(theta), height / 2);
    out.positions.push_back(prim.center + r * local);
    out.normals.push_back(r * Eigen::Vector3d::UnitZ());
  }
}

void sample_plane(const PrimitiveSpec& prim, double density, Rng& rng, SampledPoints& out) {
  const Eigen::Matrix3d r = yaw_rotation(prim.yaw);
  const double sx = prim.size.x(), sz = prim.size.z();
  const std::size_t n = sample_count(sx * sz, density);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d local(rng.uniform(-sx / 2, sx / 2), 0, rng.uniform(-sz / 2, sz / 2));
    out.positions.push_back(prim.center + r * local);
    out.normals.push_back(r * Eigen::Vector3d::UnitY());
  }
}

bool camera_inside(const PrimitiveSpec& prim, const Eigen::Vector3d& pos) {
  const Eigen::Vector3d local = yaw_rotation(prim.yaw).transpose() * (pos - prim.center);
  switch (prim.kind) {
    case PrimitiveKind::kBox:
      return (local.cwiseAbs().array() <= (prim.size / 2.0).array()).all();
    case PrimitiveKind::kCylinder:
      return std::hypot(local.x(), local.y()) <= prim.size.x() &&
             std::abs(local.z()) <= prim.size.z() / 2.0;
    case PrimitiveKind::kPlane:
      return false;  // no volume
  }
  return false;
}

CameraPose look_at_pose(const Eigen::Vector3d& position, const Eigen::Vector3d& target) {
  const Eigen::Vector3d forward = (target - position).normalized();
  Eigen::Vector3d world_up = Eigen::Vector3d::UnitZ();
  if (std::abs(forward.dot(world_up)) > 0.999) world_up = Eigen::Vector3d::UnitY();
  // Camera convention: x right, y down, z forward.
  const Eigen::Vector3d x_axis = forward.cross(world_up).normalized();
  const Eigen::Vector3d y_axis = forward.cross(x_axis).normalized();

  CameraPose pose;
  Eigen::Matrix3d r;
  r.row(0) = x_axis;
  r.row(1) = y_axis;
  r.row(2) = forward;
  pose.world_to_camera.topLeftCorner<3, 3>() = r;
  pose.world_to_camera.topRightCorner<3, 1>() = -r * position;
  return pose;
}

struct PixelBBox {
  int min_x = 0, min_y = 0, max_x = -1, max_y = -1;
  bool valid() const { return max_x >= min_x && max_y >= min_y; }
  void add(int x, int y) {
    if (!valid()) {
      min_x = max_x = x;
      min_y = max_y = y;
    } else {
      min_x = std::min(min_x, x);
      max_x = std::max(max_x, x);
      min_y = std::min(min_y, y);
      max_y = std::max(max_y, y);
    }
  }
};

PixelBBox bitmap_bbox(const Bitmap& bm) {
  PixelBBox box;
  for (int y = 0; y < bm.height(); ++y)
    for (int x = 0; x < bm.width(); ++x)
      if (bm.get(x, y)) box.add(x, y);
  return box;
}

// Splits a mask into `splits` bands across the longer axis of its pixel
// bounding box; the pixel union of the pieces equals the original mask.
std::vector<Bitmap> fragment_mask(const Bitmap& bm, int splits) {
  const PixelBBox box = bitmap_bbox(bm);
  const int span_x = box.max_x - box.min_x + 1;
  const int span_y = box.max_y - box.min_y + 1;
  const bool split_x = span_x >= span_y;
  const int span = split_x ? span_x : span_y;
  const int lo = split_x ? box.min_x : box.min_y;

  std::vector<Bitmap> pieces;
  for (int s = 0; s < splits; ++s) {
    const int band_lo = lo + (span * s) / splits;
    const int band_hi = lo + (span * (s + 1)) / splits;  // exclusive
    Bitmap piece(bm.width(), bm.height());
    bool any = false;
    for (int y = 0; y < bm.height(); ++y) {
      for (int x = 0; x < bm.width(); ++x) {
        if (!bm.get(x, y)) continue;
        const int c = split_x ? x : y;
        if (c >= band_lo && c < band_hi) {
          piece.set(x, y);
          any = true;
        }
      }
    }
    if (any) pieces.push_back(std::move(piece));
  }
  return pieces;
}

Eigen::Vector2d bitmap_centroid(const Bitmap& bm) {
  double sx = 0, sy = 0, n = 0;
  for (int y = 0; y < bm.height(); ++y)
    for (int x = 0; x < bm.width(); ++x)
      if (bm.get(x, y)) {
        sx += x;
        sy += y;
        n += 1;
      }
  return {sx / n, sy / n};
}

}  // namespace

std::pair<SceneBundle, SyntheticGroundTruth> generate(const SceneSpec& spec) {
  if (spec.primitives.empty()) throw std::invalid_argument("generate: no primitives");
  if (spec.rings.empty()) throw std::invalid_argument("generate: no camera rings");
  for (const auto& p : {spec.corruption.fragment_prob, spec.corruption.merge_prob,
                        spec.corruption.drop_prob})
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("generate: corruption probabilities must lie in [0,1]");
  if (spec.corruption.fragment_axis_splits < 2)
    throw std::invalid_argument("generate: fragment_axis_splits must be >= 2");

  SceneBundle bundle;
  SyntheticGroundTruth gt;
  bundle.config.seed = spec.seed;

  // Sampling stays single-threaded per primitive with its own stream, so the
  // cloud is identical at every thread count.
  std::vector<SampledPoints> sampled(spec.primitives.size());
  parallel_for(spec.primitives.size(), [&](std::size_t i) {
    Rng rng = Rng::stream(spec.seed, "sample", i);
    switch (spec.primitives[i].kind) {
      case PrimitiveKind::kBox: sample_box(spec.primitives[i], spec.density, rng, sampled[i]); break;
      case PrimitiveKind::kCylinder:
        sample_cylinder(spec.primitives[i], spec.density, rng, sampled[i]);
        break;
      case PrimitiveKind::kPlane:
        sample_plane(spec.primitives[i], spec.density, rng, sampled[i]);
        break;
    }
  });
  for (std::size_t i = 0; i < sampled.size(); ++i) {
    for (std::size_t k = 0; k < sampled[i].positions.size(); ++k) {
      bundle.cloud.positions.push_back(sampled[i].positions[k]);
      bundle.cloud.normals.push_back(sampled[i].normals[k]);
      gt.point_instance.push_back(static_cast<int>(i));
    }
  }

  // Camera placement.
  CameraIntrinsics intrinsics;
  intrinsics.fx = intrinsics.fy = spec.focal;
  intrinsics.cx = spec.image_width / 2.0;
  intrinsics.cy = spec.image_height / 2.0;
  intrinsics.width = spec.image_width;
  intrinsics.height = spec.image_height;

  std::vector<CameraPose> poses;
  for (const CameraRingSpec& ring : spec.rings) {
    if (ring.count < 1) throw std::invalid_argument("generate: ring count must be >= 1");
    const bool full = ring.arc >= 2 * EIGEN_PI - 1e-9;
    for (int i = 0; i < ring.count; ++i) {
      const double theta = full ? ring.arc_start + 2 * EIGEN_PI * i / ring.count
                                : ring.arc_start + (ring.count > 1
                                                        ? ring.arc * i / (ring.count - 1)
                                                        : 0.0) - ring.arc / 2.0;
      const Eigen::Vector3d pos(ring.look_at.x() + ring.radius * std::cos(theta),
                                ring.look_at.y() + ring.radius * std::sin(theta), ring.height);
      for (const PrimitiveSpec& prim : spec.primitives)
        if (camera_inside(prim, pos)) throw std::invalid_argument("generate: degenerate camera");
      poses.push_back(look_at_pose(pos, ring.look_at));
    }
  }

  // Render depth and ground-truth labels, build per-frame masks, corrupt.
  const std::size_t num_points = bundle.cloud.size();
  bundle.frames.resize(poses.size());
  gt.frame_labels.resize(poses.size());
  parallel_for(poses.size(), [&](std::size_t t) {
    Frame& frame = bundle.frames[t];
    frame.frame_id = static_cast<int>(t);
    frame.intrinsics = intrinsics;
    frame.pose = poses[t];

    const std::size_t num_pixels =
        static_cast<std::size_t>(intrinsics.width) * intrinsics.height;
    frame.depth.assign(num_pixels, 0.0);
    std::vector<std::int32_t> winner(num_pixels, -1);
    for (std::size_t i = 0; i < num_points; ++i) {
      const ProjectedPoint pp = project_point(bundle.cloud.positions[i], intrinsics, frame.pose);
      if (!pp.projectable || pp.z <= 0) continue;
      const int x = round_half_up(pp.u);
      const int y = round_half_up(pp.v);
      if (x < 0 || x >= intrinsics.width || y < 0 || y >= intrinsics.height) continue;
      const std::size_t pix = static_cast<std::size_t>(y) * intrinsics.width + x;
      if (frame.depth[pix] == 0.0 || pp.z < frame.depth[pix]) {
        frame.depth[pix] = pp.z;  // exact projected depth of the winning point
        winner[pix] = static_cast<std::int32_t>(i);
      }
    }

    gt.frame_labels[t].assign(num_pixels, -1);
    std::vector<Bitmap> perfect(spec.primitives.size(),
                                Bitmap(intrinsics.width, intrinsics.height));
    for (std::size_t pix = 0; pix < num_pixels; ++pix) {
      if (winner[pix] < 0) continue;
      const int instance = gt.point_instance[winner[pix]];
      gt.frame_labels[t][pix] = instance;
      perfect[instance].set(static_cast<int>(pix % intrinsics.width),
                            static_cast<int>(pix / intrinsics.width));
    }

    // Corruption pass. Whole masks score 0.9; fragments deliberately score
    // higher (0.95) so they win the coarse flattening, reproducing the
    // fragmented-map failure mode the matcher must undo.
    Rng rng = Rng::stream(spec.seed, "corrupt", t);
    std::vector<Bitmap> final_bitmaps;
    std::vector<double> final_scores;
    std::vector<std::size_t> whole_positions;  // positions eligible for merging
    for (std::size_t inst = 0; inst < perfect.size(); ++inst) {
      if (perfect[inst].count() == 0) continue;
      const double u_drop = rng.uniform();
      const double u_frag = rng.uniform();
      if (u_drop < spec.corruption.drop_prob) continue;
      if (u_frag < spec.corruption.fragment_prob) {
        for (Bitmap& piece : fragment_mask(perfect[inst], spec.corruption.fragment_axis_splits)) {
          final_bitmaps.push_back(std::move(piece));
          final_scores.push_back(0.95);
        }
      } else {
        whole_positions.push_back(final_bitmaps.size());
        final_bitmaps.push_back(perfect[inst]);
        final_scores.push_back(0.9);
      }
    }

    if (whole_positions.size() >= 2 && rng.bernoulli(spec.corruption.merge_prob)) {
      // Merge the two whole masks with the closest pixel centroids; nearby
      // masks usually belong to 3D-adjacent objects, which is the harmful case.
      double best = -1;
      std::pair<std::size_t, std::size_t> pair{0, 0};
      for (std::size_t a = 0; a < whole_positions.size(); ++a) {
        for (std::size_t b = a + 1; b < whole_positions.size(); ++b) {
          const double d = (bitmap_centroid(final_bitmaps[whole_positions[a]]) -
                            bitmap_centroid(final_bitmaps[whole_positions[b]]))
                               .norm();
          if (best < 0 || d < best) {
            best = d;
            pair = {whole_positions[a], whole_positions[b]};
          }
        }
      }
      Bitmap merged(intrinsics.width, intrinsics.height);
      for (int y = 0; y < intrinsics.height; ++y)
        for (int x = 0; x < intrinsics.width; ++x)
          if (final_bitmaps[pair.first].get(x, y) || final_bitmaps[pair.second].get(x, y))
            merged.set(x, y);
      const double score = std::max(final_scores[pair.first], final_scores[pair.second]);
      final_bitmaps.erase(final_bitmaps.begin() + pair.second);
      final_scores.erase(final_scores.begin() + pair.second);
      final_bitmaps[pair.first] = std::move(merged);
      final_scores[pair.first] = score;
    }

    for (std::size_t j = 0; j < final_bitmaps.size(); ++j) {
      Mask2D mask;
      mask.id = {frame.frame_id, static_cast<int>(j)};
      mask.rle = rle_encode(final_bitmaps[j]);
      mask.score = final_scores[j];
      frame.masks.push_back(std::move(mask));
    }
  });

  return {std::move(bundle), std::move(gt)};
}

CorruptionReport corruption_report(const SceneBundle& bundle, const SyntheticGroundTruth& gt) {
  CorruptionReport report;
  for (std::size_t t = 0; t < bundle.frames.size(); ++t) {
    const Frame& frame = bundle.frames[t];
    report.masks_per_frame.push_back(static_cast<int>(frame.masks.size()));

    // Rebuild the perfect per-instance pixel sets from the GT label image.
    std::map<int, Bitmap> perfect;
    const int w = frame.intrinsics.width, h = frame.intrinsics.height;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int inst = gt.frame_labels[t][static_cast<std::size_t>(y) * w + x];
        if (inst < 0) continue;
        auto [it, inserted] = perfect.try_emplace(inst, Bitmap(w, h));
        it->second.set(x, y);
      }
    }
    report.total_instance_views += static_cast<int>(perfect.size());

    std::set<int> covered, fragmented;
    for (const Mask2D& mask : frame.masks) {
      const Bitmap bm = mask.bitmap();
      std::set<int> touched;
      bool equals_some = false, subset_of_some = false;
      int subset_instance = -1;
      for (const auto& [inst, pbm] : perfect) {
        const std::size_t inter = Bitmap::intersection_count(bm, pbm);
        if (inter == 0) continue;
        touched.insert(inst);
        if (inter == bm.count() && inter == pbm.count()) equals_some = true;
        else if (inter == bm.count()) {
          subset_of_some = true;
          subset_instance = inst;
        }
      }
      for (int inst : touched) covered.insert(inst);
      if (touched.size() > 1) ++report.merged_masks;
      else if (equals_some) ++report.whole_masks;
      else if (subset_of_some) fragmented.insert(subset_instance);
    }
    report.fragmented_instances += static_cast<int>(fragmented.size());
    for (const auto& [inst, pbm] : perfect)
      if (!covered.count(inst)) ++report.dropped_instances;
  }
  if (report.total_instance_views > 0)
    report.fragmentation_rate =
        static_cast<double>(report.fragmented_instances) / report.total_instance_views;
  return report;
}

// ---------------------------------------------------------------------------
// Spec JSON

namespace {

PrimitiveKind kind_from_string(const std::string& s) {
  if (s == "box") return PrimitiveKind::kBox;
  if (s == "cylinder") return PrimitiveKind::kCylinder;
  if (s == "plane") return PrimitiveKind::kPlane;
  throw std::invalid_argument("unknown primitive kind '" + s + "'");
}

std::string kind_to_string(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::kBox: return "box";
    case PrimitiveKind::kCylinder: return "cylinder";
    case PrimitiveKind::kPlane: return "plane";
  }
  return "box";
}

Eigen::Vector3d vec3_from_json(const json& a) {
  return {a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()};
}

}  // namespace

SceneSpec scene_spec_from_json_text(const std::string& text) {
  const json doc = json::parse(text);
  SceneSpec spec;
  for (const auto& jp : doc.at("primitives")) {
    PrimitiveSpec prim;
    prim.kind = kind_from_string(jp.at("kind").get<std::string>());
    prim.center = vec3_from_json(jp.at("center"));
    prim.size = vec3_from_json(jp.at("size"));
    prim.yaw = jp.value("yaw", 0.0);
    spec.primitives.push_back(prim);
  }
  spec.density = doc.value("density", spec.density);
  const json rings = doc.contains("rings") ? doc.at("rings") : json::array({doc.at("cameras")});
  for (const auto& jr : rings) {
    CameraRingSpec ring;
    ring.count = jr.at("count").get<int>();
    ring.radius = jr.at("radius").get<double>();
    ring.height = jr.at("height").get<double>();
    if (jr.contains("look_at")) ring.look_at = vec3_from_json(jr.at("look_at"));
    ring.arc = jr.value("arc", ring.arc);
    ring.arc_start = jr.value("arc_start", ring.arc_start);
    spec.rings.push_back(ring);
  }
  if (doc.contains("image")) {
    spec.image_width = doc.at("image").at(0).get<int>();
    spec.image_height = doc.at("image").at(1).get<int>();
  }
  spec.focal = doc.value("focal", spec.focal);
  if (doc.contains("corruption")) {
    const auto& jc = doc.at("corruption");
    spec.corruption.fragment_prob = jc.value("fragment_prob", 0.0);
    spec.corruption.fragment_axis_splits = jc.value("fragment_axis_splits", 2);
    spec.corruption.merge_prob = jc.value("merge_prob", 0.0);
    spec.corruption.drop_prob = jc.value("drop_prob", 0.0);
  }
  spec.seed = doc.value("seed", 0ULL);
  return spec;
}

std::string scene_spec_to_json_text(const SceneSpec& spec) {
  json doc;
  doc["primitives"] = json::array();
  for (const PrimitiveSpec& prim : spec.primitives) {
    doc["primitives"].push_back({{"kind", kind_to_string(prim.kind)},
                                 {"center", {prim.center.x(), prim.center.y(), prim.center.z()}},
                                 {"size", {prim.size.x(), prim.size.y(), prim.size.z()}},
                                 {"yaw", prim.yaw}});
  }
  doc["density"] = spec.density;
  doc["rings"] = json::array();
  for (const CameraRingSpec& ring : spec.rings) {
    doc["rings"].push_back({{"count", ring.count},
                            {"radius", ring.radius},
                            {"height", ring.height},
                            {"look_at", {ring.look_at.x(), ring.look_at.y(), ring.look_at.z()}},
                            {"arc", ring.arc},
                            {"arc_start", ring.arc_start}});
  }
  doc["image"] = {spec.image_width, spec.image_height};
  doc["focal"] = spec.focal;
  doc["corruption"] = {{"fragment_prob", spec.corruption.fragment_prob},
                       {"fragment_axis_splits", spec.corruption.fragment_axis_splits},
                       {"merge_prob", spec.corruption.merge_prob},
                       {"drop_prob", spec.corruption.drop_prob}};
  doc["seed"] = spec.seed;
  return doc.dump(2) + "\n";
}

}  // namespace mv3dis
