#include "segreward/curation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "segreward/error.hpp"

namespace segreward {

double reduce_errors(std::span<const double> errors, ErrorReduction r) {
  if (errors.empty()) throw invalid_argument("sample has no model errors");
  for (double e : errors) {
    if (!(e >= 0 && e <= 1)) {
      throw invalid_argument("segmentation errors must lie in [0, 1]");
    }
  }
  if (r == ErrorReduction::Mean) {
    return std::accumulate(errors.begin(), errors.end(), 0.0) /
           static_cast<double>(errors.size());
  }
  std::vector<double> v(errors.begin(), errors.end());
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

namespace {

std::vector<double> sorted_tail(std::span<const double> values, double x_min) {
  std::vector<double> tail;
  for (double x : values) {
    if (x >= x_min) tail.push_back(x);
  }
  std::sort(tail.begin(), tail.end());
  return tail;
}

void require_positive_x_min(double x_min) {
  if (!(x_min > 0) || !std::isfinite(x_min)) {
    throw invalid_argument("x_min must be positive and finite");
  }
}

}  // namespace

double fit_alpha_mle(std::span<const double> values, double x_min) {
  require_positive_x_min(x_min);
  std::size_t n = 0;
  double log_sum = 0;
  for (double x : values) {
    if (x < x_min) continue;
    ++n;
    log_sum += std::log(x / x_min);
  }
  if (n < 2) throw invalid_argument("power-law tail needs at least 2 values");
  if (!(log_sum > 0)) throw degenerate("degenerate tail: all values equal x_min");
  return 1.0 + static_cast<double>(n) / log_sum;
}

double ks_distance(std::span<const double> values, double x_min, double alpha) {
  require_positive_x_min(x_min);
  const auto tail = sorted_tail(values, x_min);
  if (tail.empty()) throw invalid_argument("KS distance needs a nonempty tail");
  const double n = static_cast<double>(tail.size());
  double d = 0;
  std::size_t i = 0;
  while (i < tail.size()) {
    std::size_t j = i;
    while (j < tail.size() && tail[j] == tail[i]) ++j;
    const double model = 1.0 - std::pow(tail[i] / x_min, 1.0 - alpha);
    const double below = static_cast<double>(i) / n;
    const double at = static_cast<double>(j) / n;
    d = std::max({d, std::abs(model - below), std::abs(model - at)});
    i = j;
  }
  return std::clamp(d, 0.0, 1.0);
}

PowerLawFit fit_power_law(std::span<const double> values, double x_min) {
  PowerLawFit f;
  f.x_min = x_min;
  f.alpha = fit_alpha_mle(values, x_min);
  f.ks_statistic = ks_distance(values, x_min, f.alpha);
  f.n_tail = static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(),
                    [&](double x) { return x >= x_min; }));
  return f;
}

std::vector<double> x_min_candidates(std::span<const double> values,
                                     std::size_t max_candidates) {
  std::vector<double> distinct(values.begin(), values.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<double> all;
  // Skip the smallest value (the threshold must split the sample) and the
  // largest (its tail would be a single point).
  for (std::size_t i = 1; i + 1 < distinct.size(); ++i) {
    if (distinct[i] > 0) all.push_back(distinct[i]);
  }
  if (max_candidates < 2 || all.size() <= max_candidates) return all;
  std::vector<double> picked;
  const double step = static_cast<double>(all.size() - 1) /
                      static_cast<double>(max_candidates - 1);
  for (std::size_t k = 0; k < max_candidates; ++k) {
    const auto idx = static_cast<std::size_t>(std::llround(step * k));
    if (picked.empty() || picked.back() != all[idx]) picked.push_back(all[idx]);
  }
  return picked;
}

PowerLawFit fit_power_law_min_ks(std::span<const double> values,
                                 std::size_t max_candidates) {
  std::optional<PowerLawFit> best;
  for (double x_min : x_min_candidates(values, max_candidates)) {
    PowerLawFit f;
    try {
      f = fit_power_law(values, x_min);
    } catch (const Error&) {
      continue;
    }
    if (!best || f.ks_statistic < best->ks_statistic) best = f;
  }
  if (!best) throw degenerate("no tail structure: no usable x_min candidate");
  return *best;
}

std::optional<Knee> kneedle(std::span<const CurvePoint> points,
                            double sensitivity, KneeDirection direction,
                            KneeCurvature curvature) {
  const std::size_t n = points.size();
  if (n < 3) throw invalid_argument("kneedle needs at least 3 points");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(points[i].x) || !std::isfinite(points[i].y)) {
      throw invalid_argument("kneedle points must be finite");
    }
    if (i > 0 && !(points[i].x > points[i - 1].x)) {
      throw invalid_argument("kneedle x values must be strictly increasing");
    }
  }
  if (!(sensitivity >= 0)) {
    throw invalid_argument("kneedle sensitivity must be non-negative");
  }
  const double x_lo = points.front().x;
  const double x_span = points.back().x - x_lo;
  double y_lo = points[0].y, y_hi = points[0].y;
  for (const auto& p : points) {
    y_lo = std::min(y_lo, p.y);
    y_hi = std::max(y_hi, p.y);
  }
  if (!(y_hi > y_lo)) return std::nullopt;
  const double y_span = y_hi - y_lo;

  // Reflect into an increasing concave curve.
  const bool flip_x = (direction == KneeDirection::Decreasing) ==
                      (curvature == KneeCurvature::Concave);
  const bool flip_y = curvature == KneeCurvature::Convex;
  const auto source = [&](std::size_t k) { return flip_x ? n - 1 - k : k; };

  std::vector<double> diff(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& p = points[source(k)];
    double xn = (p.x - x_lo) / x_span;
    double yn = (p.y - y_lo) / y_span;
    if (flip_x) xn = 1.0 - xn;
    if (flip_y) yn = 1.0 - yn;
    diff[k] = yn - xn;
  }

  const double mean_dx = 1.0 / static_cast<double>(n - 1);
  std::optional<std::size_t> candidate;
  double threshold = 0;
  for (std::size_t k = 1; k < n; ++k) {
    const bool local_max =
        k + 1 < n && diff[k] >= diff[k - 1] && diff[k] >= diff[k + 1];
    if (local_max) {
      candidate = k;
      threshold = diff[k] - sensitivity * mean_dx;
      continue;
    }
    if (candidate && diff[k] < threshold) {
      const std::size_t i = source(*candidate);
      return Knee{i, points[i].x, points[i].y};
    }
  }
  return std::nullopt;
}

std::vector<CcdfRow> fitted_ccdf(std::span<const double> sorted_values,
                                 const PowerLawFit& fit) {
  const std::size_t n = sorted_values.size();
  std::vector<CcdfRow> rows;
  rows.reserve(n);
  const double total = static_cast<double>(n);
  const auto first_tail =
      std::lower_bound(sorted_values.begin(), sorted_values.end(), fit.x_min);
  const double tail_fraction =
      static_cast<double>(sorted_values.end() - first_tail) / total;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = sorted_values[i];
    const auto first_ge =
        std::lower_bound(sorted_values.begin(), sorted_values.end(), x);
    const double empirical =
        static_cast<double>(sorted_values.end() - first_ge) / total;
    const double model =
        x < fit.x_min
            ? empirical
            : tail_fraction * std::pow(x / fit.x_min, 1.0 - fit.alpha);
    rows.push_back({x, empirical, model});
  }
  return rows;
}

Selection select_hard_cases(std::span<const ErrorSample> samples,
                            const SelectionConfig& config) {
  if (samples.size() < config.min_samples) {
    throw invalid_argument("hard-case selection needs at least " +
                           std::to_string(config.min_samples) + " samples, got " +
                           std::to_string(samples.size()));
  }
  Selection sel;
  sel.mean_errors.reserve(samples.size());
  for (const auto& s : samples) {
    sel.mean_errors.push_back(reduce_errors(s.errors, config.reduction));
  }
  std::vector<double> sorted = sel.mean_errors;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) {
    throw degenerate("no tail structure: all errors are equal");
  }

  sel.min_ks_fit = fit_power_law_min_ks(sorted, config.max_candidates);
  sel.curve = fitted_ccdf(sorted, sel.min_ks_fit);

  sel.threshold = sel.min_ks_fit.x_min;
  if (config.strategy == ThresholdStrategy::Kneedle) {
    std::vector<CurvePoint> pts;
    for (const auto& row : sel.curve) {
      if (pts.empty() || row.error > pts.back().x) {
        pts.push_back({row.error, row.model_ccdf});
      }
    }
    if (pts.size() >= 3) {
      if (auto knee = kneedle(pts, config.sensitivity,
                              KneeDirection::Decreasing,
                              KneeCurvature::Convex)) {
        sel.threshold = knee->x;
        sel.knee_found = true;
      }
    }
  }

  try {
    sel.fit = fit_power_law(sorted, sel.threshold);
  } catch (const Error& e) {
    throw degenerate(std::string("no tail structure at threshold: ") + e.what());
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (sel.mean_errors[i] >= sel.threshold) {
      sel.selected_ids.push_back(samples[i].sample_id);
    }
  }
  return sel;
}

QualityScore quality_score(double s_normal, double s_lesion, double s_reason,
                           const QualityWeights& weights) {
  for (double s : {s_normal, s_lesion, s_reason}) {
    if (!(s >= 0 && s <= 1)) {
      throw invalid_argument("quality scores must lie in [0, 1]");
    }
  }
  for (double w : {weights.normal, weights.lesion, weights.reason}) {
    if (!(w >= 0) || !std::isfinite(w)) {
      throw invalid_argument("quality weights must be non-negative");
    }
  }
  const double sum = weights.normal + weights.lesion + weights.reason;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw invalid_argument("quality weights must sum to 1");
  }
  QualityScore q{s_normal, s_lesion, s_reason, weights, 0, false};
  q.s_final = weights.normal * s_normal + weights.lesion * s_lesion +
              weights.reason * s_reason;
  q.needs_regeneration = q.s_final < kRegenerationThreshold;
  return q;
}

}  // namespace segreward
