#include "segreward/reward.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>

#include "segreward/error.hpp"

namespace segreward {

std::string_view to_string(ParseError e) {
  switch (e) {
    case ParseError::None:
      return "none";
    case ParseError::MissingThink:
      return "missing_think";
    case ParseError::MissingAnswer:
      return "missing_answer";
    case ParseError::BadOrder:
      return "bad_order";
    case ParseError::MissingSeg:
      return "missing_seg";
    case ParseError::MalformedBoxes:
      return "malformed_boxes";
  }
  return "unknown";
}

std::string_view to_string(MaskBranch b) {
  return b == MaskBranch::Dice ? "dice" : "giou";
}

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

std::size_t count_of(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

bool is_blank(std::string_view s) {
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

// Recursive-descent reader for `[...]` groups of numbers.
class BracketReader {
 public:
  explicit BracketReader(std::string_view s) : s_(s) {}

  // Reads one bracketed group at the cursor, appending the boxes it denotes.
  bool read_group(std::vector<BBox>& out) {
    skip_ws();
    const std::size_t start = pos_;
    if (!consume('[')) return false;
    skip_ws();
    if (peek() == '[') {
      // list of boxes
      while (true) {
        std::vector<double> nums;
        if (!read_number_list(nums) || nums.size() != 4) return false;
        if (!push_box(nums, out)) return false;
        skip_ws();
        if (consume(',')) continue;
        return consume(']');
      }
    }
    std::vector<double> nums;
    pos_ = start;  // flat list: re-read from the opening bracket
    if (!read_number_list(nums) || nums.size() != 4) return false;
    return push_box(nums, out);
  }

  std::size_t pos() const { return pos_; }
  void seek(std::size_t p) { pos_ = p; }

 private:
  bool read_number_list(std::vector<double>& nums) {
    skip_ws();
    if (!consume('[')) return false;
    while (true) {
      skip_ws();
      double v = 0;
      if (!read_number(v)) return false;
      nums.push_back(v);
      skip_ws();
      if (consume(',')) continue;
      return consume(']');
    }
  }

  bool read_number(double& v) {
    const std::size_t start = pos_;
    if (peek() == '-' || peek() == '+') ++pos_;
    std::size_t digits = 0;
    while (std::isdigit(static_cast<unsigned char>(peek()))) {
      ++pos_;
      ++digits;
    }
    if (peek() == '.') {
      ++pos_;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        ++pos_;
        ++digits;
      }
    }
    if (digits == 0) return false;
    std::string_view tok = s_.substr(start, pos_ - start);
    if (tok.starts_with('+')) tok.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    return ec == std::errc() && ptr == tok.data() + tok.size() &&
           std::isfinite(v);
  }

  static bool push_box(const std::vector<double>& n, std::vector<BBox>& out) {
    if (n[0] > n[2] || n[1] > n[3]) return false;
    out.emplace_back(n[0], n[1], n[2], n[3]);
    return true;
  }

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  bool consume(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }
  void skip_ws() {
    while (std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::optional<std::vector<BBox>> parse_box_lists(std::string_view text) {
  std::vector<BBox> boxes;
  BracketReader reader(text);
  std::size_t from = 0;
  while (true) {
    const std::size_t open = text.find('[', from);
    if (open == std::string_view::npos) break;
    reader.seek(open);
    if (!reader.read_group(boxes)) return std::nullopt;
    from = reader.pos();
  }
  if (text.find(']', 0) != std::string_view::npos) {
    // A stray closing bracket outside any group.
    std::size_t closes = count_of(text, "]");
    std::size_t opens = count_of(text, "[");
    if (closes != opens) return std::nullopt;
  }
  return boxes;
}

StructuredOutput parse_output(std::string_view text) {
  StructuredOutput o;
  o.raw_text = std::string(text);

  const auto fail = [&](ParseError e) {
    o.parse_ok = false;
    o.parse_error = e;
    return o;
  };

  const std::size_t n_to = count_of(text, kThinkOpen);
  const std::size_t n_tc = count_of(text, kThinkClose);
  const std::size_t n_ao = count_of(text, kAnswerOpen);
  const std::size_t n_ac = count_of(text, kAnswerClose);
  if (n_to == 0 || n_tc == 0) return fail(ParseError::MissingThink);
  if (n_ao == 0 || n_ac == 0) return fail(ParseError::MissingAnswer);
  if (n_to > 1 || n_tc > 1 || n_ao > 1 || n_ac > 1) {
    return fail(ParseError::BadOrder);
  }

  const std::size_t to = text.find(kThinkOpen);
  const std::size_t tc = text.find(kThinkClose);
  const std::size_t ao = text.find(kAnswerOpen);
  const std::size_t ac = text.find(kAnswerClose);
  if (!(to < tc && tc < ao && ao < ac)) return fail(ParseError::BadOrder);

  const std::size_t think_begin = to + kThinkOpen.size();
  const std::size_t answer_begin = ao + kAnswerOpen.size();
  o.think = std::string(text.substr(think_begin, tc - think_begin));
  o.answer = std::string(text.substr(answer_begin, ac - answer_begin));

  const std::size_t after_think = tc + kThinkClose.size();
  const std::size_t after_answer = ac + kAnswerClose.size();
  if (!is_blank(text.substr(0, to)) ||
      !is_blank(text.substr(after_think, ao - after_think)) ||
      !is_blank(text.substr(after_answer))) {
    return fail(ParseError::BadOrder);
  }

  o.has_seg_token = o.answer->find(kSegToken) != std::string::npos;
  if (!o.has_seg_token) return fail(ParseError::MissingSeg);

  auto boxes = parse_box_lists(*o.answer);
  if (!boxes) return fail(ParseError::MalformedBoxes);
  o.boxes = std::move(*boxes);
  o.parse_ok = true;
  o.parse_error = ParseError::None;
  return o;
}

int format_reward(const StructuredOutput& o) { return o.parse_ok ? 1 : 0; }

BBoxReward bbox_reward(std::span<const BBox> preds, std::span<const BBox> gts,
                       double tau) {
  if (gts.empty()) {
    throw invalid_argument("no ground truth boxes for bbox reward");
  }
  BBoxReward out;
  out.match = match_boxes(preds, gts, tau);
  out.value = out.match.miou_matched * out.match.f1;
  return out;
}

MaskReward mask_reward(const BinaryMask& pred, const BinaryMask& gt,
                       double lambda, double dice_threshold) {
  require_same_shape(pred, gt);
  const auto gt_boxes = mask_to_boxes(gt, BoxMode::Union);
  if (gt_boxes.empty()) {
    throw invalid_argument("empty ground truth mask for mask reward");
  }
  MaskReward out;
  out.dice = dice(pred, gt);
  if (out.dice >= dice_threshold) {
    out.branch = MaskBranch::Dice;
    out.value = 1.0 + lambda * out.dice;
    return out;
  }
  out.branch = MaskBranch::Giou;
  const auto pred_boxes = mask_to_boxes(pred, BoxMode::Union);
  if (pred_boxes.empty()) {
    out.value = -1.0;
    return out;
  }
  out.giou = giou(pred_boxes.front(), gt_boxes.front());
  out.value = *out.giou;
  return out;
}

void RewardConfig::validate() const {
  if (!(tau >= 0 && tau <= 1)) throw invalid_argument("tau must lie in [0, 1]");
  if (!(lambda > 0) || !std::isfinite(lambda)) {
    throw invalid_argument("lambda must be positive and finite");
  }
  if (!(dice_threshold >= 0 && dice_threshold <= 1)) {
    throw invalid_argument("dice threshold must lie in [0, 1]");
  }
  for (double w : {weights.format, weights.bbox, weights.mask}) {
    if (!(w >= 0) || !std::isfinite(w)) {
      throw invalid_argument("reward weights must be non-negative and finite");
    }
  }
}

RewardBreakdown composite_reward(const StructuredOutput& o,
                                 const BinaryMask* pred_mask,
                                 std::span<const BBox> gt_boxes,
                                 const BinaryMask& gt_mask,
                                 const RewardConfig& config) {
  RewardBreakdown out;
  out.parse_error = o.parse_error;
  out.r_fmt = format_reward(o);
  if (out.r_fmt == 0) return out;

  auto box = bbox_reward(o.boxes, gt_boxes, config.tau);
  out.r_bbox = box.value;
  out.match = std::move(box.match);

  const BinaryMask empty(gt_mask.width(), gt_mask.height());
  const BinaryMask& pred = pred_mask ? *pred_mask : empty;
  const auto m = mask_reward(pred, gt_mask, config.lambda, config.dice_threshold);
  out.r_mask = m.value;
  out.branch = m.branch;
  out.dice = m.dice;
  out.giou = m.giou;

  out.total = config.weights.format * out.r_fmt +
              config.weights.bbox * out.r_bbox +
              config.weights.mask * out.r_mask;
  return out;
}

GroupAdvantage group_advantages(std::span<const double> rewards, double epsilon,
                                AdvantageMode mode) {
  if (rewards.size() < 2) {
    throw invalid_argument("group advantages need at least 2 rewards");
  }
  if (!(epsilon >= 0)) throw invalid_argument("epsilon must be non-negative");
  GroupAdvantage g;
  g.rewards.assign(rewards.begin(), rewards.end());
  const double n = static_cast<double>(rewards.size());
  g.mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double ss = 0;
  for (double r : rewards) ss += (r - g.mean) * (r - g.mean);
  g.std = std::sqrt(ss / n);
  const bool constant = std::all_of(rewards.begin(), rewards.end(),
                                    [&](double r) { return r == rewards[0]; });
  if (constant) {
    g.mean = rewards[0];
    g.std = 0;
    g.advantages.assign(rewards.size(), 0.0);
    return g;
  }
  const double scale = mode == AdvantageMode::MeanOnly ? 1.0 : g.std + epsilon;
  g.advantages.reserve(rewards.size());
  for (double r : rewards) g.advantages.push_back((r - g.mean) / scale);
  return g;
}

}  // namespace segreward
