#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mv3dis/scene.h"
#include "mv3dis/scene_io.h"
#include "mv3dis/synthetic.h"

using namespace mv3dis;
namespace fs = std::filesystem;

namespace {

SceneSpec two_frame_spec() {
  SceneSpec spec;
  PrimitiveSpec box;
  box.kind = PrimitiveKind::kBox;
  box.center = {0, 0, 0.3};
  box.size = {0.3, 0.3, 0.3};
  spec.primitives.push_back(box);
  CameraRingSpec ring;
  ring.count = 2;
  ring.radius = 1.2;
  ring.height = 0.6;
  ring.look_at = {0, 0, 0.3};
  spec.rings.push_back(ring);
  spec.density = 1500;
  spec.seed = 7;
  return spec;
}

Rle make_rle(int h, int w, std::vector<std::uint32_t> counts) {
  Rle rle;
  rle.height = h;
  rle.width = w;
  rle.counts = std::move(counts);
  return rle;
}

fs::path temp_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("well-formed synthetic bundle validates cleanly") {
  auto [bundle, gt] = generate(two_frame_spec());
  CHECK(bundle.frames.size() == 2);
  CHECK(validate_scene(bundle).empty());

  // purity: repeated validation yields the same report
  const auto a = validate_scene(bundle);
  const auto b = validate_scene(bundle);
  CHECK(a.size() == b.size());
}

TEST_CASE("depth size mismatch is reported with a path") {
  auto [bundle, gt] = generate(two_frame_spec());
  bundle.frames[0].depth.resize(100);  // 10x10 worth of values under 160x120 intrinsics
  const auto report = validate_scene(bundle);
  REQUIRE(report.size() == 1);
  CHECK(report[0].path == "frames[0].depth");
}

TEST_CASE("RLE with wrong bit count is reported") {
  auto [bundle, gt] = generate(two_frame_spec());
  REQUIRE(!bundle.frames[0].masks.empty());
  bundle.frames[0].masks[0].rle.counts.push_back(17);
  const auto report = validate_scene(bundle);
  REQUIRE(report.size() == 1);
  CHECK(report[0].path.find("masks[0].rle") != std::string::npos);
  CHECK(report[0].message.find("bits") != std::string::npos);
}

TEST_CASE("RLE decode/encode round-trips and rejects bad lengths") {
  // 2x3 image (h=2, w=3), column-major: pixel order (0,0),(1,0),(0,1),(1,1),(0,2),(1,2)
  const Rle rle = make_rle(2, 3, {1, 2, 3});
  const Bitmap bm = rle_decode(rle);
  CHECK(!bm.get(0, 0));
  CHECK(bm.get(0, 1));  // (x=0,y=1) is the second column-major bit
  CHECK(bm.get(1, 0));
  CHECK(!bm.get(1, 1));
  CHECK(!bm.get(2, 0));
  CHECK(!bm.get(2, 1));
  CHECK(rle_encode(bm) == rle);

  CHECK_THROWS_AS(rle_decode(make_rle(2, 3, {1, 2})), std::invalid_argument);
}

TEST_CASE("scene bundle round-trips through the directory format") {
  auto [bundle, gt] = generate(two_frame_spec());
  // Depths on disk are millimeter-quantized; use the loaded bundle as the
  // representative element of the representable domain.
  const fs::path dir_a = temp_dir("mv3dis_roundtrip_a");
  const fs::path dir_b = temp_dir("mv3dis_roundtrip_b");
  save_scene(dir_a, bundle);
  const SceneBundle loaded = load_scene(dir_a);
  CHECK(validate_scene(loaded).empty());
  save_scene(dir_b, loaded);
  const SceneBundle reloaded = load_scene(dir_b);

  // bit-identical structure
  REQUIRE(reloaded.cloud.positions.size() == loaded.cloud.positions.size());
  CHECK(reloaded.cloud.positions == loaded.cloud.positions);
  CHECK(reloaded.cloud.normals == loaded.cloud.normals);
  REQUIRE(reloaded.frames.size() == loaded.frames.size());
  for (std::size_t t = 0; t < loaded.frames.size(); ++t) {
    CHECK(reloaded.frames[t].frame_id == loaded.frames[t].frame_id);
    CHECK(reloaded.frames[t].depth == loaded.frames[t].depth);
    CHECK(reloaded.frames[t].pose.world_to_camera == loaded.frames[t].pose.world_to_camera);
    REQUIRE(reloaded.frames[t].masks.size() == loaded.frames[t].masks.size());
    for (std::size_t j = 0; j < loaded.frames[t].masks.size(); ++j) {
      CHECK(reloaded.frames[t].masks[j].rle == loaded.frames[t].masks[j].rle);
      CHECK(reloaded.frames[t].masks[j].score == loaded.frames[t].masks[j].score);
    }
  }

  // and byte-identical files
  for (const auto& entry : fs::recursive_directory_iterator(dir_a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), dir_a);
    CHECK(hash_file(entry.path()) == hash_file(dir_b / rel));
  }
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("mask scores are clamped to [0,1] on load") {
  const fs::path dir = temp_dir("mv3dis_clamp");
  {
    std::ofstream out(dir / "m.json");
    out << R"({"frame_id": 0, "masks": [{"index": 0, "score": 1.7,
           "rle": {"size": [2, 2], "counts": [1, 3]}}]})";
  }
  const auto masks = read_masks_json(dir / "m.json", 0);
  REQUIRE(masks.size() == 1);
  CHECK(masks[0].score == 1.0);
  fs::remove_all(dir);
}

TEST_CASE("config validation catches out-of-range values") {
  auto [bundle, gt] = generate(two_frame_spec());
  bundle.config.alpha = 0.0;
  bundle.config.refine_max_iters = 0;
  const auto report = validate_scene(bundle);
  CHECK(report.size() == 2);
}

TEST_CASE("pose orthonormality and normal length are enforced") {
  auto [bundle, gt] = generate(two_frame_spec());
  bundle.frames[0].pose.world_to_camera(0, 0) += 1e-3;
  bundle.cloud.normals[0] *= 2.0;
  const auto report = validate_scene(bundle);
  CHECK(report.size() >= 2);
}
