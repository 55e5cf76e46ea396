#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mv3dis/scene.h"

namespace mv3dis {

// All loaders throw std::runtime_error with the offending path in the message.

// Binary little-endian PLY: x,y,z float32; optional red,green,blue uint8;
// optional nx,ny,nz float32. The reader accepts any property order.
PointCloud read_ply(const std::filesystem::path& path);
void write_ply(const std::filesystem::path& path, const PointCloud& cloud);

// 16-bit grayscale PNG holding millimeters; loads as meters (value / 1000).
std::vector<double> read_depth_png(const std::filesystem::path& path, int& width, int& height);
void write_depth_png(const std::filesystem::path& path, const std::vector<double>& depth_m,
                     int width, int height);

// Generic 16-bit label image (used by the coarse-maps subcommand, value = label + 1).
void write_label_png(const std::filesystem::path& path, const std::vector<std::uint16_t>& values,
                     int width, int height);
std::vector<std::uint16_t> read_png16(const std::filesystem::path& path, int& width, int& height);

// 4x4 row-major world->camera matrix, one text file per frame.
CameraPose read_pose(const std::filesystem::path& path);
void write_pose(const std::filesystem::path& path, const CameraPose& pose);

// "fx fy cx cy width height" on one line.
CameraIntrinsics read_intrinsics(const std::filesystem::path& path);
void write_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& k);

// Per-frame mask document; scores are clamped to [0,1] on load.
std::vector<Mask2D> read_masks_json(const std::filesystem::path& path, int expected_frame_id);
void write_masks_json(const std::filesystem::path& path, int frame_id,
                      const std::vector<Mask2D>& masks);

PipelineConfig read_config_json(const std::filesystem::path& path);
void write_config_json(const std::filesystem::path& path, const PipelineConfig& config);
// Applies keys present in a JSON object on top of an existing config.
PipelineConfig config_from_json_text(const std::string& text, PipelineConfig base);

// Scene directory layout:
//   cloud.ply
//   config.json (optional)
//   frames/NNNNN.depth.png / .pose.txt / .intrinsics.txt / .masks.json
SceneBundle load_scene(const std::filesystem::path& dir);
void save_scene(const std::filesystem::path& dir, const SceneBundle& bundle);

// Per-point integer labels, one per line (-1 allowed).
std::vector<int> read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const std::vector<int>& labels);

// FNV-1a over a file's bytes; stage outputs embed this to pin their inputs.
std::uint64_t hash_file(const std::filesystem::path& path);

}  // namespace mv3dis
