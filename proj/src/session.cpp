#include "segreward/session.hpp"

#include <unordered_set>

#include "json_util.hpp"
#include "segreward/error.hpp"
#include "segreward/mask_io.hpp"

namespace segreward {

namespace {

PredictionRecord prediction_from_json(const detail::Json& j) {
  if (!j.is_object()) throw invalid_argument("prediction must be a JSON object");
  PredictionRecord p;
  if (!j.contains("id") || !j["id"].is_string()) {
    throw invalid_argument("missing string field 'id'");
  }
  p.id = j["id"].get<std::string>();
  if (!j.contains("output_text") || !j["output_text"].is_string()) {
    throw invalid_argument("missing string field 'output_text'");
  }
  p.output_text = j["output_text"].get<std::string>();
  if (j.contains("pred_mask_path") && !j["pred_mask_path"].is_null()) {
    if (!j["pred_mask_path"].is_string()) {
      throw invalid_argument("field 'pred_mask_path' must be a string");
    }
    p.pred_mask_path = j["pred_mask_path"].get<std::string>();
  }
  return p;
}

detail::Json optional_number(const std::optional<double>& v) {
  return v ? detail::number(*v) : detail::Json(nullptr);
}

}  // namespace

std::vector<PredictionRecord> parse_predictions(std::string_view text) {
  std::vector<PredictionRecord> out;
  std::unordered_set<std::string> ids;
  detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (detail::blank(line)) return;
    PredictionRecord p;
    try {
      p = prediction_from_json(detail::Json::parse(line));
    } catch (const std::exception& e) {
      throw invalid_argument("predictions line " + std::to_string(line_no) +
                             ": " + e.what());
    }
    if (!ids.insert(p.id).second) {
      throw invalid_argument("predictions line " + std::to_string(line_no) +
                             ": duplicate id '" + p.id + "'");
    }
    out.push_back(std::move(p));
  });
  return out;
}

std::vector<PredictionRecord> load_predictions(
    const std::filesystem::path& path) {
  const std::string text = detail::read_text_file(path);
  try {
    return parse_predictions(text);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::string reward_record_json(const SampleReward& r) {
  const RewardBreakdown& b = r.breakdown;
  detail::Json j;
  j["id"] = r.id;
  j["r_fmt"] = b.r_fmt;
  j["r_bbox"] = detail::number(b.r_bbox);
  j["r_mask"] = detail::number(b.r_mask);
  j["branch"] = b.branch ? detail::Json(std::string(to_string(*b.branch)))
                         : detail::Json(nullptr);
  j["total"] = detail::number(b.total);
  if (b.parse_error != ParseError::None) {
    j["parse_error"] = std::string(to_string(b.parse_error));
  }
  j["dice"] = optional_number(b.dice);
  if (b.giou) j["giou"] = detail::number(*b.giou);
  if (b.match) {
    j["miou_matched"] = detail::number(b.match->miou_matched);
    j["precision"] = detail::number(b.match->precision);
    j["recall"] = detail::number(b.match->recall);
    j["f1"] = detail::number(b.match->f1);
  } else {
    j["miou_matched"] = nullptr;
    j["precision"] = nullptr;
    j["recall"] = nullptr;
    j["f1"] = nullptr;
  }
  if (r.error) j["error"] = *r.error;
  return detail::dump(j);
}

RewardSession::RewardSession(RewardConfig config,
                             std::vector<DatasetRecord> records,
                             std::filesystem::path base_dir)
    : config_(config) {
  config_.validate();
  for (auto& rec : records) {
    Entry e;
    try {
      e.gt_mask = load_mask(resolve_path(base_dir, rec.mask_path));
      if (e.gt_mask->empty()) {
        e.load_error = "ground truth mask is empty";
        e.gt_mask.reset();
      }
    } catch (const Error& err) {
      e.load_error = err.what();
    }
    if (rec.boxes.empty() && e.load_error.empty()) {
      e.load_error = "record has no ground truth boxes";
    }
    std::string id = rec.id;
    e.record = std::move(rec);
    if (!entries_.emplace(id, std::move(e)).second) {
      throw invalid_argument("duplicate dataset id '" + id + "'");
    }
  }
}

RewardSession RewardSession::open(const RewardConfig& config,
                                  const std::filesystem::path& dataset_path) {
  return RewardSession(config, load_dataset(dataset_path),
                       dataset_path.parent_path());
}

bool RewardSession::contains(const std::string& id) const {
  return entries_.contains(id);
}

const DatasetRecord& RewardSession::record(const std::string& id) const {
  const auto it = entries_.find(id);
  if (it == entries_.end()) throw invalid_argument("unknown sample id '" + id + "'");
  return it->second.record;
}

SampleReward RewardSession::score(const std::string& id,
                                  std::string_view output_text,
                                  const BinaryMask* pred_mask) const {
  const auto it = entries_.find(id);
  if (it == entries_.end()) throw invalid_argument("unknown sample id '" + id + "'");
  const Entry& e = it->second;
  SampleReward out;
  out.id = id;
  const StructuredOutput o = parse_output(output_text);
  if (!e.gt_mask) {
    out.breakdown.parse_error = o.parse_error;
    out.breakdown.r_fmt = format_reward(o);
    out.error = e.load_error;
    return out;
  }
  try {
    out.breakdown =
        composite_reward(o, pred_mask, e.record.boxes, *e.gt_mask, config_);
  } catch (const Error& err) {
    out.breakdown = RewardBreakdown{};
    out.breakdown.parse_error = o.parse_error;
    out.breakdown.r_fmt = format_reward(o);
    out.error = err.what();
  }
  return out;
}

SampleReward RewardSession::score_sample(
    const std::string& id, std::string_view output_text,
    std::span<const std::uint8_t> pred_mask_png) const {
  if (pred_mask_png.empty()) return score(id, output_text, nullptr);
  BinaryMask mask(1, 1);
  try {
    mask = decode_mask(pred_mask_png);
  } catch (const Error& err) {
    if (!contains(id)) throw;
    SampleReward out = score(id, output_text, nullptr);
    // An undecodable mask is a sample-level failure, not a missing one.
    out.breakdown = RewardBreakdown{};
    const StructuredOutput o = parse_output(output_text);
    out.breakdown.parse_error = o.parse_error;
    out.breakdown.r_fmt = format_reward(o);
    out.error = std::string("pred mask: ") + err.what();
    return out;
  }
  return score(id, output_text, &mask);
}

GroupScore RewardSession::score_group(
    const std::vector<std::string>& ids, const std::vector<std::string>& texts,
    const std::vector<std::vector<std::uint8_t>>& masks, double epsilon) const {
  if (ids.size() != texts.size() || ids.size() != masks.size()) {
    throw invalid_argument("score_group: ids, texts and masks differ in length");
  }
  if (ids.size() < 2) throw invalid_argument("score_group needs at least 2 samples");
  GroupScore g;
  std::vector<double> totals;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    g.samples.push_back(score_sample(ids[i], texts[i], masks[i]));
    totals.push_back(g.samples.back().breakdown.total);
  }
  g.advantages = group_advantages(totals, epsilon);
  return g;
}

}  // namespace segreward
