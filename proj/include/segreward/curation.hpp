#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace segreward {

// Per-sample errors (1 - Dice) from each voting model.
struct ErrorSample {
  std::string sample_id;
  std::vector<double> errors;
};

enum class ErrorReduction { Mean, Median };

double reduce_errors(std::span<const double> errors, ErrorReduction r);

struct PowerLawFit {
  double alpha = 0;
  double x_min = 0;
  double ks_statistic = 0;
  std::size_t n_tail = 0;
};

// Continuous maximum-likelihood exponent over values >= x_min:
//   alpha = 1 + n / sum(ln(x_i / x_min))
// Throws when fewer than two tail values exist or all equal x_min.
double fit_alpha_mle(std::span<const double> values, double x_min);

// Two-sided Kolmogorov-Smirnov distance between the empirical CDF of the
// tail (values >= x_min) and 1 - (x / x_min)^(1 - alpha).
double ks_distance(std::span<const double> values, double x_min, double alpha);

// Fit at x_min and attach the KS statistic and tail size.
PowerLawFit fit_power_law(std::span<const double> values, double x_min);

// Candidate x_min values tried by the Clauset-style scan: distinct values
// excluding the smallest, limited to those with a non-degenerate tail, and
// thinned to `max_candidates` evenly spaced quantiles.
std::vector<double> x_min_candidates(std::span<const double> values,
                                     std::size_t max_candidates = 100);

// Minimum-KS fit over x_min_candidates. Throws Degenerate if none is usable.
PowerLawFit fit_power_law_min_ks(std::span<const double> values,
                                 std::size_t max_candidates = 100);

struct CurvePoint {
  double x = 0;
  double y = 0;
};

enum class KneeDirection { Increasing, Decreasing };
enum class KneeCurvature { Concave, Convex };

struct Knee {
  std::size_t index = 0;
  double x = 0;
  double y = 0;
};

// Kneedle: normalize both axes to [0, 1], flip the curve into an increasing
// concave shape, and return the first local maximum of (y_n - x_n) after
// which the difference curve falls below max - sensitivity * mean(dx_n)
// before the next local maximum. Requires >= 3 points with strictly
// increasing x.
std::optional<Knee> kneedle(std::span<const CurvePoint> points,
                            double sensitivity = 1.0,
                            KneeDirection direction = KneeDirection::Increasing,
                            KneeCurvature curvature = KneeCurvature::Concave);

enum class ThresholdStrategy { Kneedle, MinKs };

struct SelectionConfig {
  ThresholdStrategy strategy = ThresholdStrategy::Kneedle;
  ErrorReduction reduction = ErrorReduction::Mean;
  double sensitivity = 1.0;
  std::size_t min_samples = 50;
  std::size_t max_candidates = 100;
};

struct CcdfRow {
  double error = 0;
  double empirical_ccdf = 0;
  double model_ccdf = 0;
};

struct Selection {
  double threshold = 0;
  PowerLawFit fit;         // fit at x_min = threshold
  PowerLawFit min_ks_fit;  // canonical Clauset fit, for comparison
  bool knee_found = false;
  std::vector<std::string> selected_ids;  // input order
  std::vector<double> mean_errors;        // input order
  std::vector<CcdfRow> curve;             // sorted by error
};

// Fitted complementary CDF at each sorted value: empirical below the fit's
// x_min, tail fraction times (x / x_min)^(1 - alpha) from x_min on.
std::vector<CcdfRow> fitted_ccdf(std::span<const double> sorted_values,
                                 const PowerLawFit& fit);

// Hard-case selection: reduce votes, fit the tail, locate the knee of the
// fitted CCDF, keep samples with error >= the knee. Falls back to the
// minimum-KS x_min when no knee exists.
Selection select_hard_cases(std::span<const ErrorSample> samples,
                            const SelectionConfig& config = {});

struct QualityWeights {
  double normal = 0.3;
  double lesion = 0.3;
  double reason = 0.4;
};

inline constexpr double kRegenerationThreshold = 0.8;

struct QualityScore {
  double s_normal = 0;
  double s_lesion = 0;
  double s_reason = 0;
  QualityWeights weights;
  double s_final = 0;
  bool needs_regeneration = false;
};

QualityScore quality_score(double s_normal, double s_lesion, double s_reason,
                           const QualityWeights& weights = {});

}  // namespace segreward
