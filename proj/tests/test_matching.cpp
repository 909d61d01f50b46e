#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "segreward/error.hpp"
#include "segreward/matching.hpp"
#include "support.hpp"

using namespace segreward;

namespace {

// Minimum over all injective maps of the smaller side into the larger,
// returning the lexicographically smallest optimal assignment.
std::pair<double, Assignment> brute_force(const CostMatrix& m) {
  const std::size_t R = m.rows(), C = m.cols();
  const bool transpose = R > C;
  const std::size_t small = std::min(R, C), large = std::max(R, C);
  std::vector<std::size_t> perm(large);
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  Assignment best_a;
  do {
    Assignment a;
    double cost = 0;
    for (std::size_t i = 0; i < small; ++i) {
      const std::size_t r = transpose ? perm[i] : i;
      const std::size_t c = transpose ? i : perm[i];
      a.emplace_back(r, c);
    }
    std::sort(a.begin(), a.end());
    for (auto [r, c] : a) cost += m(r, c);
    if (cost < best || (cost == best && a < best_a)) {
      best = cost;
      best_a = a;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {best, best_a};
}

}  // namespace

TEST_CASE("hungarian matches exhaustive search") {
  auto g = testing::rng(31);
  for (int i = 0; i < 500; ++i) {
    const std::size_t R = testing::uniform_index(g, 1, 7);
    const std::size_t C = testing::uniform_index(g, 1, 7);
    CostMatrix m(R, C);
    const bool integral = i % 2 == 0;
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t c = 0; c < C; ++c)
        m(r, c) = integral ? static_cast<double>(testing::uniform_index(g, 0, 4))
                           : testing::uniform(g, 0, 1);
    const Assignment a = hungarian_assign(m);
    REQUIRE(a.size() == std::min(R, C));
    const auto [best, best_a] = brute_force(m);
    INFO("case ", i, " ", R, "x", C);
    CHECK(assignment_cost(m, a) == best);
    if (integral) CHECK(a == best_a);
  }
}

TEST_CASE("hungarian small examples") {
  CHECK(hungarian_assign(CostMatrix(1, 1, std::vector<double>{0.3})) == Assignment{{0, 0}});
  const CostMatrix m(2, 2, std::vector<double>{0.2, 0.9, 0.8, 0.4});
  const Assignment a = hungarian_assign(m);
  CHECK(a == Assignment{{0, 0}, {1, 1}});
  CHECK(assignment_cost(m, a) == doctest::Approx(0.6));
}

TEST_CASE("hungarian tie-break is lexicographic") {
  CostMatrix zeros(3, 3, 0.0);
  CHECK(hungarian_assign(zeros) == Assignment{{0, 0}, {1, 1}, {2, 2}});
  CostMatrix wide(2, 4, 1.0);
  CHECK(hungarian_assign(wide) == Assignment{{0, 0}, {1, 1}});
  CostMatrix tall(3, 1, 0.5);
  CHECK(hungarian_assign(tall) == Assignment{{0, 0}});
  CostMatrix anti(2, 2, std::vector<double>{1, 0, 0, 1});
  CHECK(hungarian_assign(anti) == Assignment{{0, 1}, {1, 0}});
}

TEST_CASE("hungarian input validation") {
  CHECK(hungarian_assign(CostMatrix(0, 3)).empty());
  CostMatrix bad(2, 2, 0.0);
  bad(1, 0) = NAN;
  CHECK_THROWS_AS(hungarian_assign(bad), Error);
  CHECK_THROWS_AS(CostMatrix(2, 2, std::vector<double>{1, 2, 3}), Error);
}

TEST_CASE("box matching worked case") {
  const std::vector<BBox> preds = {BBox(0, 0, 10, 10)};
  const std::vector<BBox> gts = {BBox(0, 0, 10, 10), BBox(20, 20, 30, 30)};
  const MatchResult m = match_boxes(preds, gts, 0.5);
  REQUIRE(m.pairs.size() == 1);
  CHECK(m.pairs[0].pred == 0);
  CHECK(m.pairs[0].gt == 0);
  CHECK(m.miou_matched == 1.0);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 0.5);
  CHECK(std::abs(m.f1 - 2.0 / 3.0) < 1e-15);
  CHECK(m.unmatched_gt == std::vector<std::size_t>{1});
  CHECK(m.unmatched_pred.empty());
}

TEST_CASE("box matching demotes low-iou pairs") {
  const std::vector<BBox> preds = {BBox(0, 0, 10, 10), BBox(100, 100, 110, 110)};
  const std::vector<BBox> gts = {BBox(5, 0, 15, 10)};
  const MatchResult m = match_boxes(preds, gts, 0.5);
  CHECK(m.pairs.empty());
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  CHECK(m.f1 == 0.0);
  CHECK(m.miou_matched == 0.0);
  CHECK(m.unmatched_pred == std::vector<std::size_t>{0, 1});
  CHECK(m.unmatched_gt == std::vector<std::size_t>{0});

  // same pair retained once tau drops below its IoU of 1/3
  const MatchResult low = match_boxes(preds, gts, 0.3);
  REQUIRE(low.pairs.size() == 1);
  CHECK(low.pairs[0].pred == 0);
  CHECK(low.precision == 0.5);
  CHECK(low.recall == 1.0);
  CHECK_THROWS_AS(match_boxes(preds, gts, 1.5), Error);
}

TEST_CASE("box matching properties") {
  auto g = testing::rng(32);
  for (int i = 0; i < 300; ++i) {
    std::vector<BBox> preds, gts;
    const std::size_t np = testing::uniform_index(g, 0, 5);
    const std::size_t ng = testing::uniform_index(g, 1, 5);
    for (std::size_t k = 0; k < np; ++k) preds.push_back(testing::random_box(g, 40));
    for (std::size_t k = 0; k < ng; ++k) gts.push_back(testing::random_box(g, 40));
    const MatchResult m = match_boxes(preds, gts);
    REQUIRE(m.pairs.size() + m.unmatched_pred.size() == np);
    REQUIRE(m.pairs.size() + m.unmatched_gt.size() == ng);
    for (const auto& p : m.pairs) REQUIRE(p.iou >= 0.5);
    REQUIRE(m.f1 >= 0.0);
    REQUIRE(m.f1 <= 1.0);
    REQUIRE(m.miou_matched <= 1.0);
    // a prediction set equal to the ground truth is matched perfectly
    const MatchResult self = match_boxes(gts, gts);
    REQUIRE(self.f1 == 1.0);
  }
}

TEST_CASE("box matching is permutation invariant and monotone") {
  auto g = testing::rng(33);
  for (int i = 0; i < 300; ++i) {
    std::vector<BBox> preds, gts;
    const std::size_t np = testing::uniform_index(g, 0, 5);
    const std::size_t ng = testing::uniform_index(g, 1, 5);
    for (std::size_t k = 0; k < np; ++k) preds.push_back(testing::random_int_box(g, 20));
    for (std::size_t k = 0; k < ng; ++k) gts.push_back(testing::random_int_box(g, 20));
    const MatchResult m = match_boxes(preds, gts);
    std::shuffle(preds.begin(), preds.end(), g);
    std::shuffle(gts.begin(), gts.end(), g);
    const MatchResult s = match_boxes(preds, gts);
    REQUIRE(s.precision == m.precision);
    REQUIRE(s.recall == m.recall);
    REQUIRE(s.f1 == m.f1);
    REQUIRE(std::abs(s.miou_matched - m.miou_matched) < 1e-12);

    if (!s.unmatched_gt.empty()) {
      std::vector<BBox> more = preds;
      more.push_back(gts[s.unmatched_gt.front()]);
      const MatchResult a = match_boxes(more, gts);
      REQUIRE(a.recall >= s.recall);
      REQUIRE(a.true_positives() >= s.true_positives());
    }
  }
}
