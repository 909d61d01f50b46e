#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "segreward/geometry.hpp"

namespace segreward {

// Dense row-major cost matrix.
class CostMatrix {
 public:
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t r, std::size_t c) const {
    return values_[r * cols_ + c];
  }
  double& operator()(std::size_t r, std::size_t c) {
    return values_[r * cols_ + c];
  }
  std::span<const double> values() const { return values_; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> values_;
};

using Assignment = std::vector<std::pair<std::size_t, std::size_t>>;

// Padding value used to square rectangular problems. Any constant works for
// optimality; this one sits above the largest 1 - IoU cost.
inline constexpr double kPaddingCost = 2.0;

// Minimum-cost assignment of min(rows, cols) pairs (Hungarian method with
// row/column potentials). Among optimal assignments, returns the
// lexicographically smallest list of (row, col) pairs. Pairs are sorted by
// row. Throws on non-finite costs.
Assignment hungarian_assign(const CostMatrix& cost);

// Sum of the assigned costs, accumulated in row order.
double assignment_cost(const CostMatrix& cost, const Assignment& a);

struct MatchedPair {
  std::size_t pred = 0;
  std::size_t gt = 0;
  double iou = 0;
};

struct MatchResult {
  std::vector<MatchedPair> pairs;  // retained pairs, iou >= tau
  std::vector<std::size_t> unmatched_pred;
  std::vector<std::size_t> unmatched_gt;
  double miou_matched = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;

  std::size_t true_positives() const { return pairs.size(); }
};

inline constexpr double kDefaultMatchThreshold = 0.5;

// Hungarian matching on 1 - IoU. Matched pairs below `tau` are demoted to a
// false positive plus a false negative.
MatchResult match_boxes(std::span<const BBox> preds, std::span<const BBox> gts,
                        double tau = kDefaultMatchThreshold);

}  // namespace segreward
