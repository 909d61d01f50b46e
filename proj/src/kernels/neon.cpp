#include <arm_neon.h>

#include "segreward/kernels.hpp"

namespace segreward::kernels::neon {

namespace {

inline uint64x2_t popcount_lanes(uint64x2_t v) {
  const uint8x16_t bytes = vcntq_u8(vreinterpretq_u8_u64(v));
  return vpaddlq_u32(vpaddlq_u16(vpaddlq_u8(bytes)));
}

}  // namespace

OverlapCounts overlap_counts(const std::uint64_t* a, const std::uint64_t* b,
                             std::size_t n) {
  uint64x2_t acc_i = vdupq_n_u64(0);
  uint64x2_t acc_a = vdupq_n_u64(0);
  uint64x2_t acc_b = vdupq_n_u64(0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const uint64x2_t va = vld1q_u64(a + i);
    const uint64x2_t vb = vld1q_u64(b + i);
    acc_i = vaddq_u64(acc_i, popcount_lanes(vandq_u64(va, vb)));
    acc_a = vaddq_u64(acc_a, popcount_lanes(va));
    acc_b = vaddq_u64(acc_b, popcount_lanes(vb));
  }
  OverlapCounts out{vaddvq_u64(acc_i), vaddvq_u64(acc_a), vaddvq_u64(acc_b)};
  for (; i < n; ++i) {
    out.intersection += __builtin_popcountll(a[i] & b[i]);
    out.count_a += __builtin_popcountll(a[i]);
    out.count_b += __builtin_popcountll(b[i]);
  }
  return out;
}

std::uint64_t popcount(const std::uint64_t* w, std::size_t n) {
  uint64x2_t acc = vdupq_n_u64(0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_u64(acc, popcount_lanes(vld1q_u64(w + i)));
  std::uint64_t total = vaddvq_u64(acc);
  for (; i < n; ++i) total += __builtin_popcountll(w[i]);
  return total;
}

}  // namespace segreward::kernels::neon
