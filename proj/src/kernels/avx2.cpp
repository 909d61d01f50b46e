// Compiled with -mavx2; only reached after a runtime CPU check.
#include <immintrin.h>

#include "segreward/kernels.hpp"

namespace segreward::kernels::avx2 {

namespace {

// Per-byte popcount via nibble lookup (Mula), then horizontal byte sums into
// four 64-bit lanes.
inline __m256i popcount_bytes(__m256i v) {
  const __m256i lut = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2,
                                       3, 3, 4, 0, 1, 1, 2, 1, 2, 2, 3, 1, 2,
                                       2, 3, 2, 3, 3, 4);
  const __m256i low_mask = _mm256_set1_epi8(0x0f);
  const __m256i lo = _mm256_and_si256(v, low_mask);
  const __m256i hi = _mm256_and_si256(_mm256_srli_epi16(v, 4), low_mask);
  return _mm256_add_epi8(_mm256_shuffle_epi8(lut, lo),
                         _mm256_shuffle_epi8(lut, hi));
}

inline __m256i popcount_lanes(__m256i v) {
  return _mm256_sad_epu8(popcount_bytes(v), _mm256_setzero_si256());
}

inline std::uint64_t horizontal_sum(__m256i v) {
  alignas(32) std::uint64_t lanes[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), v);
  return lanes[0] + lanes[1] + lanes[2] + lanes[3];
}

inline std::uint64_t popcount_word(std::uint64_t w) {
  return static_cast<std::uint64_t>(__builtin_popcountll(w));
}

}  // namespace

OverlapCounts overlap_counts(const std::uint64_t* a, const std::uint64_t* b,
                             std::size_t n) {
  __m256i acc_i = _mm256_setzero_si256();
  __m256i acc_a = _mm256_setzero_si256();
  __m256i acc_b = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256i va =
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
    const __m256i vb =
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
    acc_i = _mm256_add_epi64(acc_i, popcount_lanes(_mm256_and_si256(va, vb)));
    acc_a = _mm256_add_epi64(acc_a, popcount_lanes(va));
    acc_b = _mm256_add_epi64(acc_b, popcount_lanes(vb));
  }
  OverlapCounts out{horizontal_sum(acc_i), horizontal_sum(acc_a),
                    horizontal_sum(acc_b)};
  for (; i < n; ++i) {
    out.intersection += popcount_word(a[i] & b[i]);
    out.count_a += popcount_word(a[i]);
    out.count_b += popcount_word(b[i]);
  }
  return out;
}

std::uint64_t popcount(const std::uint64_t* w, std::size_t n) {
  __m256i acc = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_epi64(
        acc, popcount_lanes(
                 _mm256_loadu_si256(reinterpret_cast<const __m256i*>(w + i))));
  }
  std::uint64_t total = horizontal_sum(acc);
  for (; i < n; ++i) total += popcount_word(w[i]);
  return total;
}

}  // namespace segreward::kernels::avx2
