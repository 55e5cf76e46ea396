#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace mv3dis {

// Packed binary image, row-major. Backs 2D masks; IoU runs on 64-bit blocks.
class Bitmap {
 public:
  Bitmap() = default;
  Bitmap(int width, int height)
      : width_(width), height_(height), bits_((static_cast<std::size_t>(width) * height + 63) / 64, 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return static_cast<std::size_t>(width_) * height_; }

  bool get(int x, int y) const {
    const std::size_t i = static_cast<std::size_t>(y) * width_ + x;
    return (bits_[i >> 6] >> (i & 63)) & 1ULL;
  }

  void set(int x, int y, bool v = true) {
    const std::size_t i = static_cast<std::size_t>(y) * width_ + x;
    if (v)
      bits_[i >> 6] |= (1ULL << (i & 63));
    else
      bits_[i >> 6] &= ~(1ULL << (i & 63));
  }

  std::size_t count() const;

  // |a AND b| and |a OR b|, dimensions must match.
  static std::size_t intersection_count(const Bitmap& a, const Bitmap& b);
  static std::size_t union_count(const Bitmap& a, const Bitmap& b);

  bool same_shape(const Bitmap& o) const { return width_ == o.width_ && height_ == o.height_; }

  bool operator==(const Bitmap& o) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint64_t> bits_;
};

// Column-major uncompressed-counts run-length encoding, first run counts
// zeros (the COCO "uncompressed RLE" convention).
struct Rle {
  int height = 0;
  int width = 0;
  std::vector<std::uint32_t> counts;

  bool operator==(const Rle& o) const = default;
};

// Throws std::invalid_argument when the counts do not sum to height*width.
Bitmap rle_decode(const Rle& rle);
Rle rle_encode(const Bitmap& bitmap);

}  // namespace mv3dis
