#include <cstdlib>
#include <string>

#include "segreward/error.hpp"
#include "segreward/kernels.hpp"

namespace segreward::kernels {

namespace {

bool cpu_supports(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Backend::Neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Backend detect() {
  if (const char* forced = std::getenv("SEGREWARD_SIMD")) {
    const std::string name(forced);
    for (Backend b : available_backends()) {
      if (backend_name(b) == name) return b;
    }
  }
  if (cpu_supports(Backend::Avx2)) return Backend::Avx2;
  if (cpu_supports(Backend::Neon)) return Backend::Neon;
  return Backend::Scalar;
}

void check_lengths(std::span<const std::uint64_t> a,
                   std::span<const std::uint64_t> b) {
  if (a.size() != b.size()) {
    throw invalid_argument("overlap_counts: word spans differ in length");
  }
}

}  // namespace

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return "scalar";
    case Backend::Avx2:
      return "avx2";
    case Backend::Neon:
      return "neon";
  }
  return "unknown";
}

std::vector<Backend> available_backends() {
  std::vector<Backend> out;
  for (Backend b : {Backend::Scalar, Backend::Avx2, Backend::Neon}) {
    if (cpu_supports(b)) out.push_back(b);
  }
  return out;
}

Backend active_backend() {
  static const Backend chosen = detect();
  return chosen;
}

OverlapCounts overlap_counts(Backend backend, std::span<const std::uint64_t> a,
                             std::span<const std::uint64_t> b) {
  check_lengths(a, b);
  switch (backend) {
#if defined(__x86_64__) || defined(_M_X64)
    case Backend::Avx2:
      return avx2::overlap_counts(a.data(), b.data(), a.size());
#endif
#if defined(__aarch64__)
    case Backend::Neon:
      return neon::overlap_counts(a.data(), b.data(), a.size());
#endif
    default:
      return scalar::overlap_counts(a.data(), b.data(), a.size());
  }
}

std::uint64_t popcount(Backend backend, std::span<const std::uint64_t> words) {
  switch (backend) {
#if defined(__x86_64__) || defined(_M_X64)
    case Backend::Avx2:
      return avx2::popcount(words.data(), words.size());
#endif
#if defined(__aarch64__)
    case Backend::Neon:
      return neon::popcount(words.data(), words.size());
#endif
    default:
      return scalar::popcount(words.data(), words.size());
  }
}

OverlapCounts overlap_counts(std::span<const std::uint64_t> a,
                             std::span<const std::uint64_t> b) {
  return overlap_counts(active_backend(), a, b);
}

std::uint64_t popcount(std::span<const std::uint64_t> words) {
  return popcount(active_backend(), words);
}

}  // namespace segreward::kernels
