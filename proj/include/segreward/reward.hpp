#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segreward/geometry.hpp"
#include "segreward/mask.hpp"
#include "segreward/matching.hpp"

namespace segreward {

enum class ParseError {
  None,
  MissingThink,
  MissingAnswer,
  BadOrder,
  MissingSeg,
  MalformedBoxes,
};

std::string_view to_string(ParseError e);

// A model response of the form
//   <think> reasoning </think> <answer> ... [[x1,y1,x2,y2],...] ... <seg> </answer>
struct StructuredOutput {
  std::string raw_text;
  std::optional<std::string> think;
  std::optional<std::string> answer;
  bool has_seg_token = false;
  std::vector<BBox> boxes;
  bool parse_ok = false;
  ParseError parse_error = ParseError::None;
};

inline constexpr std::string_view kSegToken = "<seg>";

StructuredOutput parse_output(std::string_view text);

// Every bracketed box list in `text`. Accepts a single `[x1,y1,x2,y2]` or a
// list of them; returns nullopt on anything else inside brackets.
std::optional<std::vector<BBox>> parse_box_lists(std::string_view text);

int format_reward(const StructuredOutput& o);

struct BBoxReward {
  double value = 0;
  MatchResult match;
};

// mIoU over retained matches times detection F1. Throws on empty `gts`.
BBoxReward bbox_reward(std::span<const BBox> preds, std::span<const BBox> gts,
                       double tau = kDefaultMatchThreshold);

enum class MaskBranch { Giou, Dice };

std::string_view to_string(MaskBranch b);

struct MaskReward {
  double value = 0;
  MaskBranch branch = MaskBranch::Giou;
  double dice = 0;
  std::optional<double> giou;  // absent when the prediction is empty
};

inline constexpr double kDefaultLambda = 2.0;
inline constexpr double kDefaultDiceThreshold = 0.05;

// Box-level GIoU below the Dice threshold, 1 + lambda * Dice at or above it.
// An empty prediction has no box and scores -1 in the GIoU branch.
MaskReward mask_reward(const BinaryMask& pred, const BinaryMask& gt,
                       double lambda = kDefaultLambda,
                       double dice_threshold = kDefaultDiceThreshold);

struct RewardWeights {
  double format = 1.0;
  double bbox = 1.0;
  double mask = 1.0;
};

struct RewardConfig {
  double tau = kDefaultMatchThreshold;
  double lambda = kDefaultLambda;
  double dice_threshold = kDefaultDiceThreshold;
  RewardWeights weights;

  void validate() const;
};

struct RewardBreakdown {
  int r_fmt = 0;
  double r_bbox = 0;
  double r_mask = 0;
  double total = 0;
  ParseError parse_error = ParseError::None;
  // Present only when the format gate passed.
  std::optional<MaskBranch> branch;
  std::optional<double> dice;
  std::optional<double> giou;
  std::optional<MatchResult> match;
};

// Format gate, then weighted sum. A missing predicted mask is scored as an
// empty one.
RewardBreakdown composite_reward(const StructuredOutput& o,
                                 const BinaryMask* pred_mask,
                                 std::span<const BBox> gt_boxes,
                                 const BinaryMask& gt_mask,
                                 const RewardConfig& config = {});

enum class AdvantageMode { StdNormalized, MeanOnly };

struct GroupAdvantage {
  std::vector<double> rewards;
  double mean = 0;
  double std = 0;  // population
  std::vector<double> advantages;
};

inline constexpr double kDefaultAdvantageEpsilon = 1e-4;

// (r_i - mean) / (std + epsilon), or r_i - mean in MeanOnly mode.
GroupAdvantage group_advantages(
    std::span<const double> rewards,
    double epsilon = kDefaultAdvantageEpsilon,
    AdvantageMode mode = AdvantageMode::StdNormalized);

}  // namespace segreward
