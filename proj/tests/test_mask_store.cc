#include <numeric>
#include <algorithm>
#include "doctest.h"
#include "mv3dis/mask_store.h"

using namespace mv3dis;

namespace {

Bitmap rect(int w, int h, int x0, int y0, int x1, int y1) {
  Bitmap bm(w, h);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) bm.set(x, y);
  return bm;
}

Mask2D mask_of(int index, double score, const Bitmap& bm) {
  Mask2D m;
  m.id = {0, index};
  m.score = score;
  m.rle = rle_encode(bm);
  return m;
}

Frame frame_8x8() {
  Frame f;
  f.intrinsics = {10, 10, 4, 4, 8, 8};
  f.depth.assign(64, 1.0);
  return f;
}

}  // namespace

TEST_CASE("mask IoU") {
  const Bitmap a = rect(8, 8, 0, 0, 2, 2);
  CHECK(mask_iou(a, a) == 1.0);
  CHECK(mask_iou(a, rect(8, 8, 4, 4, 6, 6)) == 0.0);
  // 2x2 blocks sharing 2 pixels: 2 / 6
  CHECK(mask_iou(a, rect(8, 8, 0, 1, 2, 3)) == doctest::Approx(2.0 / 6.0).epsilon(1e-12));
  CHECK_THROWS_AS(mask_iou(a, rect(4, 4, 0, 0, 1, 1)), std::invalid_argument);
}

TEST_CASE("greedy NMS traces") {
  const Bitmap bm = rect(8, 8, 0, 0, 4, 4);

  SUBCASE("identical masks: higher score survives") {
    std::vector<Mask2D> masks{mask_of(0, 0.9, bm), mask_of(1, 0.8, bm)};
    std::vector<Bitmap> bitmaps{bm, bm};
    CHECK(nms_by_score(masks, bitmaps, 0.5) == std::vector<std::size_t>{0});
  }

  SUBCASE("disjoint masks both survive") {
    const Bitmap other = rect(8, 8, 5, 5, 8, 8);
    std::vector<Mask2D> masks{mask_of(0, 0.5, bm), mask_of(1, 0.9, other)};
    std::vector<Bitmap> bitmaps{bm, other};
    CHECK(nms_by_score(masks, bitmaps, 0.3) == std::vector<std::size_t>{1, 0});
  }

  SUBCASE("A suppresses B, keeps C (hand-traced)") {
    // A: rows 0-4 of a 10-wide strip; B overlaps A with IoU 0.6; C overlaps A
    // with IoU 0.2 and B with 0.7 -- but B is gone, so C stays.
    // Construct on a 10x10 grid with single-row strips for exact ratios.
    // A = rows 0..5 (60 px), B = rows 2..7 (60 px): inter 40, union 80 -> 0.5? Use
    // explicit pixel sets instead:
    Bitmap A(10, 10), B(10, 10), C(10, 10);
    // A: 10 pixels row0; B: 6 of A's pixels + 2 extra (IoU 6/12=0.5... want 0.6: 7.5/12.5)
    // Simpler exact values: A = {0..9}, B = {0..7, 10, 11}: inter 8, union 12 -> 0.667
    for (int x = 0; x < 10; ++x) A.set(x, 0);
    for (int x = 0; x < 8; ++x) B.set(x, 0);
    B.set(0, 1);
    B.set(1, 1);
    // C: {8, 9, 12..19}: inter(A,C) = 2, union = 18 -> 0.111; inter(B,C)=0 small.
    C.set(8, 0);
    C.set(9, 0);
    for (int x = 2; x < 10; ++x) C.set(x, 1);
    const double iou_ab = mask_iou(A, B);
    const double iou_ac = mask_iou(A, C);
    REQUIRE(iou_ab > 0.5);
    REQUIRE(iou_ac <= 0.5);
    std::vector<Mask2D> masks{mask_of(0, 0.9, A), mask_of(1, 0.8, B), mask_of(2, 0.7, C)};
    std::vector<Bitmap> bitmaps{A, B, C};
    CHECK(nms_by_score(masks, bitmaps, 0.5) == std::vector<std::size_t>{0, 2});
  }

  SUBCASE("idempotence") {
    const Bitmap o1 = rect(8, 8, 0, 0, 4, 8);
    const Bitmap o2 = rect(8, 8, 2, 0, 6, 8);
    const Bitmap o3 = rect(8, 8, 5, 0, 8, 8);
    std::vector<Mask2D> masks{mask_of(0, 0.7, o1), mask_of(1, 0.9, o2), mask_of(2, 0.6, o3)};
    std::vector<Bitmap> bitmaps{o1, o2, o3};
    const auto kept = nms_by_score(masks, bitmaps, 0.4);
    std::vector<Mask2D> round2;
    std::vector<Bitmap> round2_bm;
    for (auto i : kept) {
      round2.push_back(masks[i]);
      round2_bm.push_back(bitmaps[i]);
    }
    const auto kept2 = nms_by_score(round2, round2_bm, 0.4);
    std::vector<std::size_t> expect(kept.size());
    std::iota(expect.begin(), expect.end(), 0u);
    CHECK(kept2 == expect);
  }

  SUBCASE("raising the threshold never removes a survivor") {
    const Bitmap o1 = rect(8, 8, 0, 0, 4, 8);
    const Bitmap o2 = rect(8, 8, 2, 0, 6, 8);
    const Bitmap o3 = rect(8, 8, 4, 0, 8, 8);
    std::vector<Mask2D> masks{mask_of(0, 0.7, o1), mask_of(1, 0.9, o2), mask_of(2, 0.6, o3)};
    std::vector<Bitmap> bitmaps{o1, o2, o3};
    std::vector<std::size_t> prev;
    for (double thr : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const auto kept = nms_by_score(masks, bitmaps, thr);
      for (std::size_t p : prev) CHECK(std::count(kept.begin(), kept.end(), p) == 1);
      prev = kept;
    }
  }
}

TEST_CASE("coarse map flattening") {
  const Frame frame = frame_8x8();

  SUBCASE("one mask covering the left half") {
    const Bitmap left = rect(8, 8, 0, 0, 4, 8);
    const auto map = build_coarse_map(frame, {mask_of(0, 0.9, left)}, {left});
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) CHECK(map.label_at(x, y) == (x < 4 ? 0 : -1));
  }

  SUBCASE("higher score wins the overlap") {
    const Bitmap a = rect(8, 8, 0, 0, 5, 8);
    const Bitmap b = rect(8, 8, 3, 0, 8, 8);
    const auto map =
        build_coarse_map(frame, {mask_of(0, 0.9, a), mask_of(1, 0.8, b)}, {a, b});
    CHECK(map.label_at(4, 0) == 0);   // overlap pixel goes to the 0.9 mask
    CHECK(map.label_at(6, 0) == 1);
    CHECK(map.masks[0] == MaskId{0, 0});
    CHECK(map.masks[1] == MaskId{0, 1});
  }

  SUBCASE("no survivors: all background") {
    const auto map = build_coarse_map(frame, {}, {});
    for (std::int32_t l : map.labels) CHECK(l == -1);
  }

  SUBCASE("covered pixels trace to exactly one mask") {
    const Bitmap a = rect(8, 8, 0, 0, 5, 8);
    const Bitmap b = rect(8, 8, 3, 0, 8, 8);
    const auto map =
        build_coarse_map(frame, {mask_of(0, 0.6, a), mask_of(1, 0.7, b)}, {a, b});
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) {
        const auto l = map.label_at(x, y);
        if (l >= 0) CHECK(l < static_cast<std::int32_t>(map.masks.size()));
      }
  }
}

TEST_CASE("refined map ordering uses consistency scores") {
  const Frame frame = frame_8x8();
  // fragment (high segmenter score, low consistency) loses every overlap pixel
  // to the whole-object mask.
  const Bitmap whole = rect(8, 8, 0, 0, 6, 8);
  const Bitmap fragment = rect(8, 8, 0, 0, 3, 8);
  std::vector<Mask2D> masks{mask_of(0, 0.95, fragment), mask_of(1, 0.9, whole)};
  const auto map = build_refined_map(frame, masks, {fragment, whole}, {0.3, 0.9});
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 6; ++x) CHECK(map.masks[map.label_at(x, y)] == MaskId{0, 1});
}
