#include "segreward/mask.hpp"

#include <algorithm>
#include <limits>

#include "segreward/error.hpp"
#include "segreward/kernels.hpp"

namespace segreward {

namespace {

constexpr std::size_t kWordBits = 64;

std::size_t word_count(std::size_t pixels) {
  return (pixels + kWordBits - 1) / kWordBits;
}

}  // namespace

BinaryMask::BinaryMask(std::size_t width, std::size_t height)
    : width_(width), height_(height) {
  if (width == 0 || height == 0) {
    throw invalid_argument("mask dimensions must be at least 1x1");
  }
  if (width > std::numeric_limits<std::size_t>::max() / height) {
    throw invalid_argument("mask dimensions overflow");
  }
  words_.assign(word_count(width * height), 0);
}

BinaryMask BinaryMask::from_values(std::size_t width, std::size_t height,
                                   std::span<const std::uint8_t> values,
                                   std::uint8_t threshold) {
  BinaryMask m(width, height);
  if (values.size() != width * height) {
    throw invalid_argument("mask value count does not match dimensions");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > threshold) {
      m.words_[i / kWordBits] |= std::uint64_t{1} << (i % kWordBits);
    }
  }
  return m;
}

bool BinaryMask::get(std::size_t row, std::size_t col) const {
  if (row >= height_ || col >= width_) return false;
  const std::size_t i = row * width_ + col;
  return (words_[i / kWordBits] >> (i % kWordBits)) & 1u;
}

void BinaryMask::set(std::size_t row, std::size_t col, bool on) {
  if (row >= height_ || col >= width_) {
    throw invalid_argument("pixel outside mask bounds");
  }
  const std::size_t i = row * width_ + col;
  const std::uint64_t bit = std::uint64_t{1} << (i % kWordBits);
  if (on) {
    words_[i / kWordBits] |= bit;
  } else {
    words_[i / kWordBits] &= ~bit;
  }
}

void BinaryMask::fill_rect(std::size_t row0, std::size_t col0, std::size_t row1,
                           std::size_t col1) {
  for (std::size_t r = row0; r < row1; ++r) {
    for (std::size_t c = col0; c < col1; ++c) set(r, c);
  }
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(kernels::popcount(words_));
}

void require_same_shape(const BinaryMask& a, const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw invalid_argument(
        "mask dimension mismatch: " + std::to_string(a.width()) + "x" +
        std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
        std::to_string(b.height()));
  }
}

std::size_t intersection_count(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b);
  return kernels::overlap_counts(a.words(), b.words()).intersection;
}

double dice(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_shape(pred, gt);
  const auto c = kernels::overlap_counts(pred.words(), gt.words());
  const std::uint64_t denom = c.count_a + c.count_b;
  if (denom == 0) return 1.0;
  return 2.0 * static_cast<double>(c.intersection) / static_cast<double>(denom);
}

double mask_iou(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_shape(pred, gt);
  const auto c = kernels::overlap_counts(pred.words(), gt.words());
  const std::uint64_t uni = c.count_a + c.count_b - c.intersection;
  if (uni == 0) return 1.0;
  return static_cast<double>(c.intersection) / static_cast<double>(uni);
}

std::vector<std::vector<Pixel>> connected_components(const BinaryMask& m,
                                                     Connectivity conn) {
  const std::size_t w = m.width();
  const std::size_t h = m.height();
  std::vector<std::uint8_t> seen(w * h, 0);
  std::vector<std::vector<Pixel>> components;
  std::vector<Pixel> stack;

  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      if (!m.get(r, c) || seen[r * w + c]) continue;
      std::vector<Pixel> comp;
      seen[r * w + c] = 1;
      stack.push_back({r, c});
      while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        comp.push_back(p);
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            if (conn == Connectivity::Four && dr != 0 && dc != 0) continue;
            if ((dr < 0 && p.row == 0) || (dc < 0 && p.col == 0)) continue;
            const std::size_t nr = p.row + dr;
            const std::size_t nc = p.col + dc;
            if (nr >= h || nc >= w) continue;
            if (!m.get(nr, nc) || seen[nr * w + nc]) continue;
            seen[nr * w + nc] = 1;
            stack.push_back({nr, nc});
          }
        }
      }
      std::sort(comp.begin(), comp.end());
      components.push_back(std::move(comp));
    }
  }
  return components;
}

namespace {

BBox tight_box(const std::vector<Pixel>& pixels) {
  std::size_t r0 = pixels.front().row, r1 = r0;
  std::size_t c0 = pixels.front().col, c1 = c0;
  for (const Pixel& p : pixels) {
    r0 = std::min(r0, p.row);
    r1 = std::max(r1, p.row);
    c0 = std::min(c0, p.col);
    c1 = std::max(c1, p.col);
  }
  return BBox(static_cast<double>(c0), static_cast<double>(r0),
              static_cast<double>(c1 + 1), static_cast<double>(r1 + 1));
}

}  // namespace

std::vector<BBox> mask_to_boxes(const BinaryMask& m, BoxMode mode,
                                Connectivity conn) {
  if (mode == BoxMode::PerComponent) {
    std::vector<BBox> boxes;
    for (const auto& comp : connected_components(m, conn)) {
      boxes.push_back(tight_box(comp));
    }
    return boxes;
  }
  bool any = false;
  std::size_t r0 = 0, r1 = 0, c0 = 0, c1 = 0;
  for (std::size_t r = 0; r < m.height(); ++r) {
    for (std::size_t c = 0; c < m.width(); ++c) {
      if (!m.get(r, c)) continue;
      if (!any) {
        r0 = r1 = r;
        c0 = c1 = c;
        any = true;
      } else {
        r1 = r;
        c0 = std::min(c0, c);
        c1 = std::max(c1, c);
      }
    }
  }
  if (!any) return {};
  return {BBox(static_cast<double>(c0), static_cast<double>(r0),
               static_cast<double>(c1 + 1), static_cast<double>(r1 + 1))};
}

}  // namespace segreward
