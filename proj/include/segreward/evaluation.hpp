#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "segreward/geometry.hpp"
#include "segreward/mask.hpp"

namespace segreward {

struct EvalRecord {
  std::string sample_id;
  BinaryMask gt_mask{1, 1};
  std::vector<BBox> gt_boxes;
  std::string modality;
  std::string anatomy;
  std::string disease;
  std::string output_text;
  std::optional<BinaryMask> pred_mask;
  // Set when the prediction could not be loaded; the sample is scored as a
  // grounding failure and the message is carried into its row.
  std::optional<std::string> load_error;
};

enum class FailureKind { None, Format, Grounding };

std::string_view to_string(FailureKind k);

struct FailureVerdict {
  FailureKind kind = FailureKind::None;
  std::string reason;  // parse error name, "missing_mask", "zero_dice", ...
  bool failed() const { return kind != FailureKind::None; }
};

// Failure when the output is malformed, the mask is missing, or the mask has
// no pixel in common with the ground truth.
FailureVerdict classify_failure(const EvalRecord& rec);

struct GroupMetrics {
  std::size_t n = 0;
  double m_dice = 0;
  double m_iou = 0;
  double failure_rate = 0;

  friend bool operator==(const GroupMetrics&, const GroupMetrics&) = default;
};

struct SampleRow {
  std::string sample_id;
  std::string anatomy;
  std::string modality;
  double dice = 0;
  double iou = 0;
  FailureKind failure = FailureKind::None;
  std::string reason;

  friend bool operator==(const SampleRow&, const SampleRow&) = default;
};

struct EvalReport {
  GroupMetrics overall;
  std::map<std::string, GroupMetrics> by_anatomy;
  std::map<std::string, GroupMetrics> by_modality;
  std::vector<SampleRow> samples;  // sorted by sample_id
  // Vocabulary entries with no samples; omitted from the tables.
  std::vector<std::string> empty_anatomies;
  std::vector<std::string> empty_modalities;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

struct EvalVocabulary {
  std::vector<std::string> anatomies;
  std::vector<std::string> modalities;
};

// Failures count as Dice = IoU = 0 in every mean. Throws on duplicate ids
// and on empty ground truth masks.
EvalReport evaluate(const std::vector<EvalRecord>& records,
                    const EvalVocabulary* vocab = nullptr);

// Per-sample metrics for one record (dice, iou, verdict).
SampleRow score_record(const EvalRecord& rec);

// Fold already-scored rows into a report.
EvalReport aggregate(std::vector<SampleRow> rows,
                     const EvalVocabulary* vocab = nullptr);

enum class ReportFormat { Json, Csv, Markdown };

ReportFormat parse_report_format(std::string_view name);

// Percentages carry 2 decimals; JSON and CSV also carry the raw fractions.
std::string render_report(const EvalReport& report, ReportFormat format);

EvalReport parse_report_json(std::string_view text);
EvalReport parse_report_csv(std::string_view text);

}  // namespace segreward
