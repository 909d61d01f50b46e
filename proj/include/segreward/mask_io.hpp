#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "segreward/mask.hpp"

namespace segreward {

inline constexpr std::uint8_t kDefaultMaskThreshold = 127;

// PNG, 8-bit gray or RGB (alpha channels are dropped). RGB is reduced to
// luminance (299 R + 587 G + 114 B) / 1000 before thresholding.
BinaryMask load_mask(const std::filesystem::path& path,
                     std::uint8_t threshold = kDefaultMaskThreshold);
BinaryMask decode_mask(std::span<const std::uint8_t> png_bytes,
                       std::uint8_t threshold = kDefaultMaskThreshold);

// 8-bit gray PNG, foreground 255, background 0.
void save_mask(const BinaryMask& m, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_mask(const BinaryMask& m);

}  // namespace segreward
