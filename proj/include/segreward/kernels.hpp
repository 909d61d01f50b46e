#pragma once

// Bit-parallel counting kernels over packed masks. Each backend computes the
// same integers; the dispatcher picks the widest one the CPU supports.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace segreward::kernels {

struct OverlapCounts {
  std::uint64_t intersection = 0;
  std::uint64_t count_a = 0;
  std::uint64_t count_b = 0;

  friend bool operator==(const OverlapCounts&, const OverlapCounts&) = default;
};

enum class Backend { Scalar, Avx2, Neon };

std::string_view backend_name(Backend b);

// Backends compiled into this binary that the running CPU can execute.
std::vector<Backend> available_backends();

// The backend used by the unqualified entry points. Honors SEGREWARD_SIMD
// ("scalar", "avx2", "neon") when set to an available backend.
Backend active_backend();

// Both spans must have the same length.
OverlapCounts overlap_counts(std::span<const std::uint64_t> a,
                             std::span<const std::uint64_t> b);
std::uint64_t popcount(std::span<const std::uint64_t> words);

OverlapCounts overlap_counts(Backend backend, std::span<const std::uint64_t> a,
                             std::span<const std::uint64_t> b);
std::uint64_t popcount(Backend backend, std::span<const std::uint64_t> words);

namespace scalar {
OverlapCounts overlap_counts(const std::uint64_t* a, const std::uint64_t* b,
                             std::size_t n);
std::uint64_t popcount(const std::uint64_t* w, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
OverlapCounts overlap_counts(const std::uint64_t* a, const std::uint64_t* b,
                             std::size_t n);
std::uint64_t popcount(const std::uint64_t* w, std::size_t n);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
OverlapCounts overlap_counts(const std::uint64_t* a, const std::uint64_t* b,
                             std::size_t n);
std::uint64_t popcount(const std::uint64_t* w, std::size_t n);
}  // namespace neon
#endif

}  // namespace segreward::kernels
