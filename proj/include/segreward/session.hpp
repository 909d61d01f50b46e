#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segreward/datamodel.hpp"
#include "segreward/mask.hpp"
#include "segreward/reward.hpp"

namespace segreward {

// One line of a predictions file: {id, output_text, pred_mask_path?}.
struct PredictionRecord {
  std::string id;
  std::string output_text;
  std::optional<std::string> pred_mask_path;
};

// Throws with the line number on malformed lines and on duplicate ids.
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);
std::vector<PredictionRecord> parse_predictions(std::string_view text);

struct SampleReward {
  std::string id;
  RewardBreakdown breakdown;
  std::optional<std::string> error;  // sample-level failure, row still emitted
};

// Single-line JSON reward record with a fixed key order:
//   id r_fmt r_bbox r_mask branch total [parse_error] dice [giou]
//   miou_matched precision recall f1 [error]
std::string reward_record_json(const SampleReward& r);

struct GroupScore {
  std::vector<SampleReward> samples;
  GroupAdvantage advantages;
};

// Scoring context over a loaded dataset. Ground-truth masks are decoded once
// at construction; afterwards the session is read-only and safe to share
// between threads.
class RewardSession {
 public:
  RewardSession(RewardConfig config, std::vector<DatasetRecord> records,
                std::filesystem::path base_dir);

  static RewardSession open(const RewardConfig& config,
                            const std::filesystem::path& dataset_path);

  const RewardConfig& config() const { return config_; }
  bool contains(const std::string& id) const;
  const DatasetRecord& record(const std::string& id) const;

  // Throws invalid_argument for unknown ids. Sample-level problems (bad GT
  // mask, shape mismatch) are reported in SampleReward::error.
  SampleReward score(const std::string& id, std::string_view output_text,
                     const BinaryMask* pred_mask) const;
  SampleReward score_sample(const std::string& id, std::string_view output_text,
                            std::span<const std::uint8_t> pred_mask_png) const;
  GroupScore score_group(const std::vector<std::string>& ids,
                         const std::vector<std::string>& texts,
                         const std::vector<std::vector<std::uint8_t>>& masks,
                         double epsilon = kDefaultAdvantageEpsilon) const;

 private:
  struct Entry {
    DatasetRecord record;
    std::optional<BinaryMask> gt_mask;
    std::string load_error;
  };

  RewardConfig config_;
  std::map<std::string, Entry> entries_;
};

}  // namespace segreward
