#include <bit>

#include "segreward/kernels.hpp"

namespace segreward::kernels::scalar {

OverlapCounts overlap_counts(const std::uint64_t* a, const std::uint64_t* b,
                             std::size_t n) {
  OverlapCounts out;
  for (std::size_t i = 0; i < n; ++i) {
    out.intersection += std::popcount(a[i] & b[i]);
    out.count_a += std::popcount(a[i]);
    out.count_b += std::popcount(b[i]);
  }
  return out;
}

std::uint64_t popcount(const std::uint64_t* w, std::size_t n) {
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < n; ++i) total += std::popcount(w[i]);
  return total;
}

}  // namespace segreward::kernels::scalar
