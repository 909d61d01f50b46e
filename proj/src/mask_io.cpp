#include "segreward/mask_io.hpp"

#include <png.h>

#include <array>
#include <cstring>
#include <fstream>
#include <iterator>

#include "segreward/error.hpp"

namespace segreward {

namespace {

constexpr std::array<std::uint8_t, 8> kPngSignature = {0x89, 'P', 'N', 'G',
                                                       '\r', '\n', 0x1a, '\n'};

// The simplified libpng reader silently widens low bit depths and narrows
// 16-bit data, so the header is checked by hand first.
void check_header(std::span<const std::uint8_t> bytes, const std::string& ctx) {
  if (bytes.size() < 33 ||
      std::memcmp(bytes.data(), kPngSignature.data(), kPngSignature.size()) !=
          0) {
    throw io_error(ctx + ": not a PNG file");
  }
  if (std::memcmp(bytes.data() + 12, "IHDR", 4) != 0) {
    throw io_error(ctx + ": missing IHDR chunk");
  }
  const int bit_depth = bytes[24];
  const int color_type = bytes[25];
  if (bit_depth != 8) {
    throw io_error(ctx + ": unsupported bit depth " + std::to_string(bit_depth) +
                   " (expected 8)");
  }
  // 0 gray, 2 RGB, 4 gray+alpha, 6 RGBA. Palette images are rejected.
  if (color_type != 0 && color_type != 2 && color_type != 4 &&
      color_type != 6) {
    throw io_error(ctx + ": unsupported PNG color type " +
                   std::to_string(color_type));
  }
}

struct ImageGuard {
  png_image image;
  ImageGuard() {
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
  }
  ~ImageGuard() { png_image_free(&image); }
  ImageGuard(const ImageGuard&) = delete;
  ImageGuard& operator=(const ImageGuard&) = delete;
};

BinaryMask decode_impl(std::span<const std::uint8_t> bytes,
                       std::uint8_t threshold, const std::string& ctx) {
  check_header(bytes, ctx);
  ImageGuard g;
  if (!png_image_begin_read_from_memory(&g.image, bytes.data(), bytes.size())) {
    throw io_error(ctx + ": " + g.image.message);
  }
  g.image.format = PNG_FORMAT_RGBA;
  const std::size_t width = g.image.width;
  const std::size_t height = g.image.height;
  std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(g.image));
  if (!png_image_finish_read(&g.image, nullptr, rgba.data(), 0, nullptr)) {
    throw io_error(ctx + ": " + g.image.message);
  }
  std::vector<std::uint8_t> luma(width * height);
  for (std::size_t i = 0; i < luma.size(); ++i) {
    const unsigned r = rgba[4 * i];
    const unsigned gch = rgba[4 * i + 1];
    const unsigned b = rgba[4 * i + 2];
    luma[i] = static_cast<std::uint8_t>((299 * r + 587 * gch + 114 * b + 500) /
                                        1000);
  }
  return BinaryMask::from_values(width, height, luma, threshold);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error(path.string() + ": cannot open file");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::uint8_t> to_gray(const BinaryMask& m) {
  std::vector<std::uint8_t> gray(m.pixel_count(), 0);
  for (std::size_t r = 0; r < m.height(); ++r) {
    for (std::size_t c = 0; c < m.width(); ++c) {
      if (m.get(r, c)) gray[r * m.width() + c] = 255;
    }
  }
  return gray;
}

}  // namespace

BinaryMask load_mask(const std::filesystem::path& path, std::uint8_t threshold) {
  const auto bytes = read_file(path);
  return decode_impl(bytes, threshold, path.string());
}

BinaryMask decode_mask(std::span<const std::uint8_t> png_bytes,
                       std::uint8_t threshold) {
  return decode_impl(png_bytes, threshold, "<memory>");
}

std::vector<std::uint8_t> encode_mask(const BinaryMask& m) {
  const auto gray = to_gray(m);
  ImageGuard g;
  g.image.width = static_cast<png_uint_32>(m.width());
  g.image.height = static_cast<png_uint_32>(m.height());
  g.image.format = PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&g.image, nullptr, &size, 0, gray.data(), 0,
                                 nullptr)) {
    throw io_error(std::string("png encode: ") + g.image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&g.image, out.data(), &size, 0, gray.data(), 0,
                                 nullptr)) {
    throw io_error(std::string("png encode: ") + g.image.message);
  }
  out.resize(size);
  return out;
}

void save_mask(const BinaryMask& m, const std::filesystem::path& path) {
  const auto bytes = encode_mask(m);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error(path.string() + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw io_error(path.string() + ": write failed");
}

}  // namespace segreward
