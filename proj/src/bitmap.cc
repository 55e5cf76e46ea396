#include "mv3dis/bitmap.h"

#include <bit>

namespace mv3dis {

std::size_t Bitmap::count() const {
  std::size_t n = 0;
  for (std::uint64_t w : bits_) n += std::popcount(w);
  return n;
}

std::size_t Bitmap::intersection_count(const Bitmap& a, const Bitmap& b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.bits_.size(); ++i) n += std::popcount(a.bits_[i] & b.bits_[i]);
  return n;
}

std::size_t Bitmap::union_count(const Bitmap& a, const Bitmap& b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.bits_.size(); ++i) n += std::popcount(a.bits_[i] | b.bits_[i]);
  return n;
}

Bitmap rle_decode(const Rle& rle) {
  std::uint64_t total = 0;
  for (std::uint32_t c : rle.counts) total += c;
  const std::uint64_t expected = static_cast<std::uint64_t>(rle.height) * rle.width;
  if (total != expected)
    throw std::invalid_argument("RLE counts sum to " + std::to_string(total) + ", expected " +
                                std::to_string(expected));

  Bitmap out(rle.width, rle.height);
  std::uint64_t pos = 0;
  bool value = false;  // first run is zeros
  for (std::uint32_t c : rle.counts) {
    if (value) {
      for (std::uint32_t k = 0; k < c; ++k) {
        const std::uint64_t i = pos + k;
        // column-major: linear index i -> (row, col)
        out.set(static_cast<int>(i / rle.height), static_cast<int>(i % rle.height));
      }
    }
    pos += c;
    value = !value;
  }
  return out;
}

Rle rle_encode(const Bitmap& bitmap) {
  Rle rle;
  rle.height = bitmap.height();
  rle.width = bitmap.width();
  bool value = false;
  std::uint32_t run = 0;
  for (int x = 0; x < bitmap.width(); ++x) {
    for (int y = 0; y < bitmap.height(); ++y) {
      const bool b = bitmap.get(x, y);
      if (b == value) {
        ++run;
      } else {
        rle.counts.push_back(run);
        value = b;
        run = 1;
      }
    }
  }
  rle.counts.push_back(run);
  return rle;
}

}  // namespace mv3dis
