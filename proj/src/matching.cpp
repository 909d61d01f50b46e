#include "segreward/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "segreward/error.hpp"

namespace segreward {

CostMatrix::CostMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

CostMatrix::CostMatrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw invalid_argument("cost matrix value count does not match shape");
  }
}

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

struct SquareSolution {
  std::vector<double> u, v;          // row / column potentials
  std::vector<std::size_t> row_to_col;
};

// O(n^3) shortest augmenting path with potentials on a square matrix.
SquareSolution solve_square(const std::vector<double>& a, std::size_t n) {
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based internally; index 0 is the virtual source column.
  std::vector<double> u(n + 1, 0), v(n + 1, 0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<double> minv(n + 1);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  SquareSolution s;
  s.u.assign(u.begin() + 1, u.end());
  s.v.assign(v.begin() + 1, v.end());
  s.row_to_col.assign(n, kNone);
  for (std::size_t j = 1; j <= n; ++j) s.row_to_col[p[j] - 1] = j - 1;
  return s;
}

// Every optimal assignment lies on edges with zero reduced cost under
// optimal potentials, and every perfect matching on those edges is optimal.
// Walking rows in order and taking the smallest column that still admits a
// perfect matching yields the lexicographically smallest optimum.
class TightGraph {
 public:
  TightGraph(const std::vector<double>& a, std::size_t n,
             const SquareSolution& s, double tol)
      : n_(n), tight_(n * n, 0), row_to_col_(s.row_to_col),
        col_to_row_(n, kNone), fixed_row_(n, 0), fixed_col_(n, 0) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        tight_[i * n + j] = (a[i * n + j] - s.u[i] - s.v[j]) <= tol;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      col_to_row_[row_to_col_[i]] = i;
      tight_[i * n + row_to_col_[i]] = 1;
    }
  }

  // Pin `row` to the smallest feasible column in `order`.
  void fix_smallest(std::size_t row, const std::vector<std::size_t>& order) {
    for (std::size_t col : order) {
      if (fixed_col_[col] || !tight_[row * n_ + col]) continue;
      if (try_fix(row, col)) return;
    }
    // The current matching's own column is always feasible.
    fixed_row_[row] = 1;
    fixed_col_[row_to_col_[row]] = 1;
  }

  std::size_t col_of(std::size_t row) const { return row_to_col_[row]; }

 private:
  bool try_fix(std::size_t row, std::size_t col) {
    if (row_to_col_[row] == col) {
      fixed_row_[row] = 1;
      fixed_col_[col] = 1;
      return true;
    }
    const auto saved_rc = row_to_col_;
    const auto saved_cr = col_to_row_;
    const std::size_t freed_col = row_to_col_[row];
    const std::size_t displaced = col_to_row_[col];
    row_to_col_[row] = col;
    col_to_row_[col] = row;
    col_to_row_[freed_col] = kNone;
    row_to_col_[displaced] = kNone;
    fixed_row_[row] = 1;
    fixed_col_[col] = 1;
    std::vector<char> visited(n_, 0);
    if (augment(displaced, visited)) return true;
    row_to_col_ = saved_rc;
    col_to_row_ = saved_cr;
    fixed_row_[row] = 0;
    fixed_col_[col] = 0;
    return false;
  }

  bool augment(std::size_t row, std::vector<char>& visited) {
    for (std::size_t c = 0; c < n_; ++c) {
      if (fixed_col_[c] || visited[c] || !tight_[row * n_ + c]) continue;
      visited[c] = 1;
      const std::size_t owner = col_to_row_[c];
      if (owner == kNone || augment(owner, visited)) {
        row_to_col_[row] = c;
        col_to_row_[c] = row;
        return true;
      }
    }
    return false;
  }

  std::size_t n_;
  std::vector<char> tight_;
  std::vector<std::size_t> row_to_col_;
  std::vector<std::size_t> col_to_row_;
  std::vector<char> fixed_row_;
  std::vector<char> fixed_col_;
};

}  // namespace

double assignment_cost(const CostMatrix& cost, const Assignment& a) {
  double total = 0;
  for (const auto& [r, c] : a) total += cost(r, c);
  return total;
}

Assignment hungarian_assign(const CostMatrix& cost) {
  for (double c : cost.values()) {
    if (!std::isfinite(c)) throw invalid_argument("non-finite cost in matrix");
  }
  const std::size_t rows = cost.rows();
  const std::size_t cols = cost.cols();
  if (rows == 0 || cols == 0) return {};
  const std::size_t n = std::max(rows, cols);

  std::vector<double> a(n * n, kPaddingCost);
  double scale = 1.0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      a[r * n + c] = cost(r, c);
      scale = std::max(scale, std::abs(cost(r, c)));
    }
  }
  const SquareSolution s = solve_square(a, n);

  Assignment raw;
  for (std::size_t r = 0; r < rows; ++r) {
    if (s.row_to_col[r] < cols) raw.emplace_back(r, s.row_to_col[r]);
  }

  TightGraph graph(a, n, s, 1e-9 * scale);
  std::vector<std::size_t> order(n);
  for (std::size_t c = 0; c < n; ++c) order[c] = c;
  for (std::size_t r = 0; r < rows; ++r) graph.fix_smallest(r, order);

  Assignment best;
  for (std::size_t r = 0; r < rows; ++r) {
    if (graph.col_of(r) < cols) best.emplace_back(r, graph.col_of(r));
  }
  // Tolerance could in principle admit a near-tight edge; never return
  // anything costlier than the solver's own optimum.
  if (best.size() != raw.size() ||
      assignment_cost(cost, best) > assignment_cost(cost, raw)) {
    return raw;
  }
  return best;
}

MatchResult match_boxes(std::span<const BBox> preds, std::span<const BBox> gts,
                        double tau) {
  if (!(tau >= 0 && tau <= 1)) {
    throw invalid_argument("match threshold tau must lie in [0, 1]");
  }
  MatchResult out;
  std::vector<char> pred_used(preds.size(), 0), gt_used(gts.size(), 0);
  if (!preds.empty() && !gts.empty()) {
    CostMatrix cost(preds.size(), gts.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
      for (std::size_t j = 0; j < gts.size(); ++j) {
        cost(i, j) = 1.0 - iou(preds[i], gts[j]);
      }
    }
    double iou_sum = 0;
    for (const auto& [i, j] : hungarian_assign(cost)) {
      const double v = iou(preds[i], gts[j]);
      if (v < tau) continue;
      out.pairs.push_back({i, j, v});
      pred_used[i] = gt_used[j] = 1;
      iou_sum += v;
    }
    if (!out.pairs.empty()) {
      out.miou_matched = iou_sum / static_cast<double>(out.pairs.size());
    }
  }
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!pred_used[i]) out.unmatched_pred.push_back(i);
  }
  for (std::size_t j = 0; j < gts.size(); ++j) {
    if (!gt_used[j]) out.unmatched_gt.push_back(j);
  }
  const double tp = static_cast<double>(out.pairs.size());
  if (!preds.empty()) out.precision = tp / static_cast<double>(preds.size());
  if (!gts.empty()) out.recall = tp / static_cast<double>(gts.size());
  if (out.precision + out.recall > 0) {
    out.f1 = 2 * out.precision * out.recall / (out.precision + out.recall);
  }
  return out;
}

}  // namespace segreward
