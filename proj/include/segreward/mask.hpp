#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "segreward/geometry.hpp"

namespace segreward {

struct Pixel {
  std::size_t row = 0;
  std::size_t col = 0;
  friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

// Foreground/background raster, one bit per pixel, packed row-major into
// 64-bit words. Bits past width*height are always zero.
class BinaryMask {
 public:
  BinaryMask(std::size_t width, std::size_t height);

  // `values` is row-major, width*height entries; v > threshold is foreground.
  static BinaryMask from_values(std::size_t width, std::size_t height,
                                std::span<const std::uint8_t> values,
                                std::uint8_t threshold = 127);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t pixel_count() const { return width_ * height_; }

  bool get(std::size_t row, std::size_t col) const;
  void set(std::size_t row, std::size_t col, bool on = true);
  void fill_rect(std::size_t row0, std::size_t col0, std::size_t row1,
                 std::size_t col1);

  std::size_t count() const;
  bool empty() const { return count() == 0; }

  std::span<const std::uint64_t> words() const { return words_; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<std::uint64_t> words_;
};

void require_same_shape(const BinaryMask& a, const BinaryMask& b);

// Both empty counts as a perfect match (1.0); exactly one empty gives 0.
double dice(const BinaryMask& pred, const BinaryMask& gt);
double mask_iou(const BinaryMask& pred, const BinaryMask& gt);

// Raw pixel counts, for callers that need the exact-zero test.
std::size_t intersection_count(const BinaryMask& a, const BinaryMask& b);

enum class Connectivity { Four = 4, Eight = 8 };

// Maximal connected foreground regions. Components are ordered by their
// first pixel in raster order (topmost, then leftmost); pixels inside a
// component are in raster order.
std::vector<std::vector<Pixel>> connected_components(
    const BinaryMask& m, Connectivity conn = Connectivity::Eight);

enum class BoxMode { Union, PerComponent };

// Tight boxes around foreground, exclusive-edge convention.
std::vector<BBox> mask_to_boxes(const BinaryMask& m, BoxMode mode,
                                Connectivity conn = Connectivity::Eight);

}  // namespace segreward
