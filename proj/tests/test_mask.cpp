#include <doctest.h>

#include <cmath>

#include "segreward/error.hpp"
#include "segreward/kernels.hpp"
#include "segreward/mask.hpp"
#include "segreward/mask_io.hpp"
#include "support.hpp"

using namespace segreward;

namespace {

struct NaiveCounts {
  std::size_t inter = 0, a = 0, b = 0;
};

NaiveCounts naive(const BinaryMask& x, const BinaryMask& y) {
  NaiveCounts n;
  for (std::size_t r = 0; r < x.height(); ++r) {
    for (std::size_t c = 0; c < x.width(); ++c) {
      const bool p = x.get(r, c), q = y.get(r, c);
      n.inter += p && q;
      n.a += p;
      n.b += q;
    }
  }
  return n;
}

}  // namespace

TEST_CASE("mask basics") {
  CHECK_THROWS_AS(BinaryMask(0, 4), Error);
  BinaryMask m(5, 3);
  CHECK(m.empty());
  m.set(2, 4);
  m.set(0, 0);
  CHECK(m.count() == 2);
  CHECK(m.get(2, 4));
  CHECK_FALSE(m.get(1, 4));
  m.set(2, 4, false);
  CHECK(m.count() == 1);
  m.fill_rect(0, 0, 3, 5);
  CHECK(m.count() == 15);
  const std::vector<std::uint8_t> values = {0, 200, 127, 128};
  const BinaryMask v = BinaryMask::from_values(2, 2, values);
  CHECK_FALSE(v.get(0, 0));
  CHECK(v.get(0, 1));
  CHECK_FALSE(v.get(1, 0));
  CHECK(v.get(1, 1));
}

TEST_CASE("dice and iou against a naive pixel counter") {
  auto g = testing::rng(21);
  for (int i = 0; i < 200; ++i) {
    const double da = testing::uniform(g, 0.02, 0.8);
    const double db = testing::uniform(g, 0.02, 0.8);
    const BinaryMask a = testing::random_mask(g, 32, 32, da);
    const BinaryMask b = testing::random_mask(g, 32, 32, db);
    const NaiveCounts n = naive(a, b);
    CHECK(intersection_count(a, b) == n.inter);
    CHECK(a.count() == n.a);
    const double d = 2.0 * n.inter / static_cast<double>(n.a + n.b);
    const double j = n.inter / static_cast<double>(n.a + n.b - n.inter);
    CHECK(dice(a, b) == d);
    CHECK(mask_iou(a, b) == j);
    CHECK(std::abs(dice(a, b) - 2 * mask_iou(a, b) / (1 + mask_iou(a, b))) < 1e-12);
  }
}

TEST_CASE("dice edge cases") {
  BinaryMask e(4, 4), f(4, 4);
  CHECK(dice(e, f) == 1.0);
  CHECK(mask_iou(e, f) == 1.0);
  f.set(1, 1);
  CHECK(dice(e, f) == 0.0);
  CHECK(dice(f, f) == 1.0);
  CHECK_THROWS_AS(dice(BinaryMask(4, 4), BinaryMask(4, 5)), Error);
}

TEST_CASE("kernel backends agree") {
  const auto backends = kernels::available_backends();
  REQUIRE(!backends.empty());
  CHECK(backends.front() == kernels::Backend::Scalar);
  auto g = testing::rng(22);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 17u, 31u, 64u, 100u, 257u}) {
    std::vector<std::uint64_t> a(n), b(n);
    for (auto& w : a) w = g();
    for (auto& w : b) w = g() & g();
    if (n > 2) {
      a[1] = ~0ull;
      b[1] = ~0ull;
    }
    const auto ref = kernels::scalar::overlap_counts(a.data(), b.data(), n);
    const auto ref_pop = kernels::scalar::popcount(a.data(), n);
    std::uint64_t expect = 0;
    for (auto w : a) expect += static_cast<std::uint64_t>(std::popcount(w));
    CHECK(ref_pop == expect);
    CHECK(ref.count_a == expect);
    for (auto be : backends) {
      INFO(kernels::backend_name(be), " n=", n);
      CHECK(kernels::overlap_counts(be, a, b) == ref);
      CHECK(kernels::popcount(be, a) == ref_pop);
    }
  }
}

TEST_CASE("connected components and boxes") {
  BinaryMask m(8, 6);
  m.fill_rect(0, 0, 2, 2);  // 2x2 block top-left
  m.set(2, 2);              // diagonal neighbour
  m.fill_rect(4, 5, 6, 8);
  const auto eight = connected_components(m, Connectivity::Eight);
  REQUIRE(eight.size() == 2);
  CHECK(eight[0].size() == 5);
  CHECK(eight[1].size() == 6);
  const auto four = connected_components(m, Connectivity::Four);
  CHECK(four.size() == 3);

  const auto per = mask_to_boxes(m, BoxMode::PerComponent);
  REQUIRE(per.size() == 2);
  CHECK(per[0] == BBox(0, 0, 3, 3));
  CHECK(per[1] == BBox(5, 4, 8, 6));
  const auto uni = mask_to_boxes(m, BoxMode::Union);
  REQUIRE(uni.size() == 1);
  CHECK(uni[0] == BBox(0, 0, 8, 6));
  CHECK(mask_to_boxes(BinaryMask(3, 3), BoxMode::Union).empty());

  BinaryMask px(4, 4);
  px.set(1, 2);
  CHECK(mask_to_boxes(px, BoxMode::Union)[0] == BBox(2, 1, 3, 2));
}

TEST_CASE("png round trip") {
  auto g = testing::rng(23);
  const BinaryMask m = testing::random_mask(g, 37, 19, 0.3);
  testing::TempDir dir("mask");
  save_mask(m, dir / "m.png");
  CHECK(load_mask(dir / "m.png") == m);
  const auto bytes = encode_mask(m);
  CHECK(decode_mask(bytes) == m);
  const std::vector<std::uint8_t> junk = {1, 2, 3};
  CHECK_THROWS_AS(decode_mask(junk), Error);
  CHECK_THROWS_AS(load_mask(dir / "missing.png"), Error);
}
