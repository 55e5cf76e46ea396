#include "mv3dis/scene_io.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

namespace mv3dis {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void fail(const fs::path& path, const std::string& what) {
  throw std::runtime_error(path.string() + ": " + what);
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) fail(path, "cannot open for reading");
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) fail(path, "cannot open for writing");
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// PLY

namespace {

struct PlyProperty {
  std::string name;
  std::string type;
};

std::size_t ply_type_size(const fs::path& path, const std::string& type) {
  if (type == "float" || type == "float32" || type == "int" || type == "int32" ||
      type == "uint" || type == "uint32")
    return 4;
  if (type == "uchar" || type == "uint8" || type == "char" || type == "int8") return 1;
  if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
  if (type == "double" || type == "float64") return 8;
  fail(path, "unsupported PLY property type '" + type + "'");
}

}  // namespace

PointCloud read_ply(const fs::path& path) {
  std::ifstream in = open_in(path, std::ios::binary);
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) fail(path, "not a PLY file");

  std::size_t vertex_count = 0;
  std::vector<PlyProperty> props;
  bool in_vertex_element = false;
  bool binary_le = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      binary_le = (fmt == "binary_little_endian");
      if (!binary_le) fail(path, "only binary_little_endian PLY is supported");
    } else if (word == "element") {
      std::string name;
      std::size_t count;
      ls >> name >> count;
      in_vertex_element = (name == "vertex");
      if (in_vertex_element) vertex_count = count;
      else if (count != 0) fail(path, "unsupported non-empty element '" + name + "'");
    } else if (word == "property" && in_vertex_element) {
      PlyProperty p;
      ls >> p.type >> p.name;
      props.push_back(p);
    } else if (word == "end_header") {
      break;
    }
  }
  if (vertex_count == 0) fail(path, "no vertices");

  std::size_t stride = 0;
  std::map<std::string, std::pair<std::size_t, std::string>> offsets;  // name -> (offset, type)
  for (const auto& p : props) {
    offsets[p.name] = {stride, p.type};
    stride += ply_type_size(path, p.type);
  }
  for (const char* req : {"x", "y", "z"})
    if (!offsets.count(req)) fail(path, std::string("missing property '") + req + "'");

  std::vector<char> row(stride);
  auto read_f32 = [&](const char* name) {
    float v;
    std::memcpy(&v, row.data() + offsets.at(name).first, 4);
    return v;
  };

  const bool has_colors = offsets.count("red") && offsets.count("green") && offsets.count("blue");
  const bool has_normals = offsets.count("nx") && offsets.count("ny") && offsets.count("nz");

  PointCloud cloud;
  cloud.positions.reserve(vertex_count);
  if (has_colors) cloud.colors.reserve(vertex_count);
  if (has_normals) cloud.normals.reserve(vertex_count);
  for (std::size_t i = 0; i < vertex_count; ++i) {
    if (!in.read(row.data(), static_cast<std::streamsize>(stride)))
      fail(path, "truncated vertex data at vertex " + std::to_string(i));
    cloud.positions.emplace_back(read_f32("x"), read_f32("y"), read_f32("z"));
    if (has_colors) {
      auto b = [&](const char* name) {
        return static_cast<std::uint8_t>(row[offsets.at(name).first]);
      };
      cloud.colors.emplace_back(b("red"), b("green"), b("blue"));
    }
    if (has_normals)
      cloud.normals.emplace_back(read_f32("nx"), read_f32("ny"), read_f32("nz"));
  }
  return cloud;
}

void write_ply(const fs::path& path, const PointCloud& cloud) {
  std::ofstream out = open_out(path, std::ios::binary);
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << cloud.positions.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (cloud.has_colors())
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  if (cloud.has_normals())
    out << "property float nx\nproperty float ny\nproperty float nz\n";
  out << "end_header\n";

  for (std::size_t i = 0; i < cloud.positions.size(); ++i) {
    const float xyz[3] = {static_cast<float>(cloud.positions[i].x()),
                          static_cast<float>(cloud.positions[i].y()),
                          static_cast<float>(cloud.positions[i].z())};
    out.write(reinterpret_cast<const char*>(xyz), 12);
    if (cloud.has_colors())
      out.write(reinterpret_cast<const char*>(cloud.colors[i].data()), 3);
    if (cloud.has_normals()) {
      const float n[3] = {static_cast<float>(cloud.normals[i].x()),
                          static_cast<float>(cloud.normals[i].y()),
                          static_cast<float>(cloud.normals[i].z())};
      out.write(reinterpret_cast<const char*>(n), 12);
    }
  }
  if (!out) fail(path, "write failed");
}

// ---------------------------------------------------------------------------
// PNG (16-bit grayscale)

namespace {

struct PngReadCtx {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* file = nullptr;
  ~PngReadCtx() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (file) std::fclose(file);
  }
};

struct PngWriteCtx {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* file = nullptr;
  ~PngWriteCtx() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (file) std::fclose(file);
  }
};

}  // namespace

std::vector<std::uint16_t> read_png16(const fs::path& path, int& width, int& height) {
  PngReadCtx ctx;
  ctx.file = std::fopen(path.c_str(), "rb");
  if (!ctx.file) fail(path, "cannot open for reading");
  ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.png || !ctx.info) fail(path, "libpng init failed");
  if (setjmp(png_jmpbuf(ctx.png))) fail(path, "PNG decode error");

  png_init_io(ctx.png, ctx.file);
  png_read_info(ctx.png, ctx.info);
  width = static_cast<int>(png_get_image_width(ctx.png, ctx.info));
  height = static_cast<int>(png_get_image_height(ctx.png, ctx.info));
  if (png_get_color_type(ctx.png, ctx.info) != PNG_COLOR_TYPE_GRAY ||
      png_get_bit_depth(ctx.png, ctx.info) != 16)
    fail(path, "expected 16-bit grayscale PNG");
  png_set_swap(ctx.png);  // PNG stores big-endian 16-bit samples

  std::vector<std::uint16_t> values(static_cast<std::size_t>(width) * height);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y)
    rows[y] = reinterpret_cast<png_bytep>(values.data() + static_cast<std::size_t>(y) * width);
  png_read_image(ctx.png, rows.data());
  png_read_end(ctx.png, nullptr);
  return values;
}

namespace {

void write_png16(const fs::path& path, const std::vector<std::uint16_t>& values, int width,
                 int height) {
  if (values.size() != static_cast<std::size_t>(width) * height)
    fail(path, "value count does not match image size");
  PngWriteCtx ctx;
  ctx.file = std::fopen(path.c_str(), "wb");
  if (!ctx.file) fail(path, "cannot open for writing");
  ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.png || !ctx.info) fail(path, "libpng init failed");
  if (setjmp(png_jmpbuf(ctx.png))) fail(path, "PNG encode error");

  png_init_io(ctx.png, ctx.file);
  png_set_IHDR(ctx.png, ctx.info, width, height, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(ctx.png, ctx.info);
  png_set_swap(ctx.png);

  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y)
    rows[y] = reinterpret_cast<png_bytep>(
        const_cast<std::uint16_t*>(values.data() + static_cast<std::size_t>(y) * width));
  png_write_image(ctx.png, rows.data());
  png_write_end(ctx.png, nullptr);
}

}  // namespace

std::vector<double> read_depth_png(const fs::path& path, int& width, int& height) {
  const auto mm = read_png16(path, width, height);
  std::vector<double> depth(mm.size());
  for (std::size_t i = 0; i < mm.size(); ++i) depth[i] = static_cast<double>(mm[i]) / 1000.0;
  return depth;
}

void write_depth_png(const fs::path& path, const std::vector<double>& depth_m, int width,
                     int height) {
  std::vector<std::uint16_t> mm(depth_m.size());
  for (std::size_t i = 0; i < depth_m.size(); ++i) {
    const double v = static_cast<double>(std::llround(depth_m[i] * 1000.0));
    mm[i] = static_cast<std::uint16_t>(std::clamp<double>(v, 0.0, 65535.0));
  }
  write_png16(path, mm, width, height);
}

void write_label_png(const fs::path& path, const std::vector<std::uint16_t>& values, int width,
                     int height) {
  write_png16(path, values, width, height);
}

// ---------------------------------------------------------------------------
// Pose / intrinsics text files

CameraPose read_pose(const fs::path& path) {
  std::ifstream in = open_in(path);
  CameraPose pose;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      if (!(in >> pose.world_to_camera(r, c))) fail(path, "expected 16 matrix entries");
  return pose;
}

void write_pose(const fs::path& path, const CameraPose& pose) {
  std::ofstream out = open_out(path);
  out.precision(17);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) out << pose.world_to_camera(r, c) << (c == 3 ? '\n' : ' ');
  }
}

CameraIntrinsics read_intrinsics(const fs::path& path) {
  std::ifstream in = open_in(path);
  CameraIntrinsics k;
  if (!(in >> k.fx >> k.fy >> k.cx >> k.cy >> k.width >> k.height))
    fail(path, "expected 'fx fy cx cy width height'");
  return k;
}

void write_intrinsics(const fs::path& path, const CameraIntrinsics& k) {
  std::ofstream out = open_out(path);
  out.precision(17);
  out << k.fx << ' ' << k.fy << ' ' << k.cx << ' ' << k.cy << ' ' << k.width << ' ' << k.height
      << '\n';
}

// ---------------------------------------------------------------------------
// Masks JSON

std::vector<Mask2D> read_masks_json(const fs::path& path, int expected_frame_id) {
  std::ifstream in = open_in(path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(path, std::string("malformed JSON: ") + e.what());
  }
  try {
    const int frame_id = doc.at("frame_id").get<int>();
    if (frame_id != expected_frame_id)
      fail(path, "frame_id " + std::to_string(frame_id) + " does not match frame " +
                     std::to_string(expected_frame_id));
    std::vector<Mask2D> masks;
    for (const auto& m : doc.at("masks")) {
      Mask2D mask;
      mask.id = {frame_id, m.at("index").get<int>()};
      mask.score = std::clamp(m.at("score").get<double>(), 0.0, 1.0);
      const auto& rle = m.at("rle");
      const auto size = rle.at("size");
      mask.rle.height = size.at(0).get<int>();
      mask.rle.width = size.at(1).get<int>();
      mask.rle.counts = rle.at("counts").get<std::vector<std::uint32_t>>();
      masks.push_back(std::move(mask));
    }
    return masks;
  } catch (const json::exception& e) {
    fail(path, std::string("bad mask document: ") + e.what());
  }
}

void write_masks_json(const fs::path& path, int frame_id, const std::vector<Mask2D>& masks) {
  json doc;
  doc["frame_id"] = frame_id;
  doc["masks"] = json::array();
  for (const auto& m : masks) {
    json jm;
    jm["index"] = m.id.index;
    jm["score"] = m.score;
    jm["rle"] = {{"size", {m.rle.height, m.rle.width}}, {"counts", m.rle.counts}};
    doc["masks"].push_back(std::move(jm));
  }
  std::ofstream out = open_out(path);
  out << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Pipeline config

namespace {

json config_to_json(const PipelineConfig& c) {
  return json{{"alpha", c.alpha},
              {"tau_f", c.tau_f},
              {"tau_m", c.tau_m},
              {"tau_merge", c.tau_merge},
              {"nms_iou", c.nms_iou},
              {"consistency_nms_iou", c.consistency_nms_iou},
              {"refine_max_iters", c.refine_max_iters},
              {"k_graph", c.k_graph},
              {"weight_scale", c.weight_scale},
              {"min_size", c.min_size},
              {"seed", c.seed},
              {"use_depth_weights", c.use_depth_weights},
              {"use_matching", c.use_matching},
              {"use_refinement", c.use_refinement},
              {"threads", c.threads}};
}

void apply_config_json(const json& doc, PipelineConfig& c) {
  auto get = [&](const char* key, auto& field) {
    if (doc.contains(key)) field = doc.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("alpha", c.alpha);
  get("tau_f", c.tau_f);
  get("tau_m", c.tau_m);
  get("tau_merge", c.tau_merge);
  get("nms_iou", c.nms_iou);
  get("consistency_nms_iou", c.consistency_nms_iou);
  get("refine_max_iters", c.refine_max_iters);
  get("k_graph", c.k_graph);
  get("weight_scale", c.weight_scale);
  get("min_size", c.min_size);
  get("seed", c.seed);
  get("use_depth_weights", c.use_depth_weights);
  get("use_matching", c.use_matching);
  get("use_refinement", c.use_refinement);
  get("threads", c.threads);
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (!config_to_json(PipelineConfig{}).contains(key))
      throw std::runtime_error("unknown config key '" + key + "'");
  }
}

}  // namespace

PipelineConfig read_config_json(const fs::path& path) {
  std::ifstream in = open_in(path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(path, std::string("malformed JSON: ") + e.what());
  }
  PipelineConfig c;
  try {
    apply_config_json(doc, c);
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
  return c;
}

PipelineConfig config_from_json_text(const std::string& text, PipelineConfig base) {
  apply_config_json(json::parse(text), base);
  return base;
}

void write_config_json(const fs::path& path, const PipelineConfig& config) {
  std::ofstream out = open_out(path);
  out << config_to_json(config).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Scene directory

namespace {

std::string frame_stem(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05d", index);
  return buf;
}

}  // namespace

SceneBundle load_scene(const fs::path& dir) {
  SceneBundle bundle;
  bundle.cloud = read_ply(dir / "cloud.ply");
  if (fs::exists(dir / "config.json")) bundle.config = read_config_json(dir / "config.json");

  const fs::path frames_dir = dir / "frames";
  if (!fs::is_directory(frames_dir)) fail(frames_dir, "missing frames directory");
  std::vector<int> frame_ids;
  for (const auto& entry : fs::directory_iterator(frames_dir)) {
    const std::string name = entry.path().filename().string();
    const auto pos = name.find(".pose.txt");
    if (pos != std::string::npos && pos + 9 == name.size())
      frame_ids.push_back(std::stoi(name.substr(0, pos)));
  }
  std::sort(frame_ids.begin(), frame_ids.end());

  for (int id : frame_ids) {
    Frame frame;
    frame.frame_id = id;
    const std::string stem = frame_stem(id);
    frame.intrinsics = read_intrinsics(frames_dir / (stem + ".intrinsics.txt"));
    frame.pose = read_pose(frames_dir / (stem + ".pose.txt"));
    int w = 0, h = 0;
    frame.depth = read_depth_png(frames_dir / (stem + ".depth.png"), w, h);
    if (w != frame.intrinsics.width || h != frame.intrinsics.height)
      fail(frames_dir / (stem + ".depth.png"), "depth image size does not match intrinsics");
    frame.masks = read_masks_json(frames_dir / (stem + ".masks.json"), id);
    bundle.frames.push_back(std::move(frame));
  }
  return bundle;
}

void save_scene(const fs::path& dir, const SceneBundle& bundle) {
  fs::create_directories(dir / "frames");
  write_ply(dir / "cloud.ply", bundle.cloud);
  write_config_json(dir / "config.json", bundle.config);
  for (const Frame& frame : bundle.frames) {
    const std::string stem = frame_stem(frame.frame_id);
    write_intrinsics(dir / "frames" / (stem + ".intrinsics.txt"), frame.intrinsics);
    write_pose(dir / "frames" / (stem + ".pose.txt"), frame.pose);
    write_depth_png(dir / "frames" / (stem + ".depth.png"), frame.depth, frame.intrinsics.width,
                    frame.intrinsics.height);
    write_masks_json(dir / "frames" / (stem + ".masks.json"), frame.frame_id, frame.masks);
  }
}

// ---------------------------------------------------------------------------
// Labels & hashing

std::vector<int> read_labels(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::vector<int> labels;
  int v;
  while (in >> v) labels.push_back(v);
  if (labels.empty()) fail(path, "no labels");
  return labels;
}

void write_labels(const fs::path& path, const std::vector<int>& labels) {
  std::ofstream out = open_out(path);
  for (int v : labels) out << v << '\n';
}

std::uint64_t hash_file(const fs::path& path) {
  std::ifstream in = open_in(path, std::ios::binary);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  return h;
}

}  // namespace mv3dis
