#include "segreward/datamodel.hpp"

#include <algorithm>
#include <regex>
#include <unordered_set>

#include "json_util.hpp"
#include "segreward/error.hpp"
#include "segreward/mask.hpp"
#include "segreward/mask_io.hpp"
#include "segreward/reward.hpp"

namespace segreward {

namespace {

constexpr std::string_view kAnswerPrefix = "The ";
constexpr std::string_view kAnswerInfix = " is located at ";

constexpr std::string_view kBuiltinVocabulary = R"(# version 1
[modality]
CT
MRI
X-Ray
Ultrasound
OCT
Endoscopy
Dermoscopy
Fundus
[anatomy]
Head
Abdomen
Lung
Eye
Neck
Skin
Foot
Breast
Heart
[disease]
)";

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string required_string(const detail::Json& j, const char* key) {
  if (!j.contains(key)) throw invalid_argument(std::string("missing field '") + key + "'");
  if (!j[key].is_string()) {
    throw invalid_argument(std::string("field '") + key + "' must be a string");
  }
  return j[key].get<std::string>();
}

std::string optional_string(const detail::Json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return {};
  if (!j[key].is_string()) {
    throw invalid_argument(std::string("field '") + key + "' must be a string");
  }
  return j[key].get<std::string>();
}

detail::Json record_to_json(const DatasetRecord& r) {
  detail::Json j;
  j["id"] = r.id;
  j["image_path"] = r.image_path;
  j["mask_path"] = r.mask_path;
  j["question"] = r.question;
  j["reasoning"] = r.reasoning;
  j["answer"] = r.answer;
  j["boxes"] = detail::boxes_to_json(r.boxes);
  j["modality"] = r.modality;
  j["anatomy"] = r.anatomy;
  j["disease"] = r.disease;
  return j;
}

DatasetRecord record_from_json(const detail::Json& j) {
  if (!j.is_object()) throw invalid_argument("record must be a JSON object");
  DatasetRecord r;
  r.id = required_string(j, "id");
  if (r.id.empty()) throw invalid_argument("record id is empty");
  r.image_path = optional_string(j, "image_path");
  r.mask_path = required_string(j, "mask_path");
  r.question = optional_string(j, "question");
  r.reasoning = optional_string(j, "reasoning");
  r.answer = required_string(j, "answer");
  if (!j.contains("boxes")) throw invalid_argument("missing field 'boxes'");
  r.boxes = detail::boxes_from_json(j["boxes"]);
  r.modality = optional_string(j, "modality");
  r.anatomy = optional_string(j, "anatomy");
  r.disease = optional_string(j, "disease");
  return r;
}

std::vector<BBox> sorted_boxes(std::vector<BBox> b) {
  std::sort(b.begin(), b.end(), [](const BBox& l, const BBox& r) {
    return std::tuple(l.x1(), l.y1(), l.x2(), l.y2()) <
           std::tuple(r.x1(), r.y1(), r.x2(), r.y2());
  });
  return b;
}

}  // namespace

std::string render_answer(std::string_view lesion,
                          const std::vector<BBox>& boxes) {
  return std::string(kAnswerPrefix) + std::string(lesion) +
         std::string(kAnswerInfix) + to_string(boxes) + ".";
}

std::optional<ParsedAnswer> parse_answer(std::string_view answer) {
  std::string_view s = trim(answer);
  ParsedAnswer out;
  if (s.ends_with(kSegToken)) {
    out.has_seg_token = true;
    s.remove_suffix(kSegToken.size());
    s = trim(s);
  }
  if (!s.starts_with(kAnswerPrefix) || !s.ends_with('.')) return std::nullopt;
  s.remove_prefix(kAnswerPrefix.size());
  s.remove_suffix(1);
  const auto at = s.find(kAnswerInfix);
  if (at == std::string_view::npos || at == 0) return std::nullopt;
  out.lesion = std::string(s.substr(0, at));
  const std::string_view boxes = trim(s.substr(at + kAnswerInfix.size()));
  if (!boxes.starts_with('[') || !boxes.ends_with(']')) return std::nullopt;
  auto parsed = parse_box_lists(boxes);
  if (!parsed || parsed->empty()) return std::nullopt;
  out.boxes = std::move(*parsed);
  return out;
}

bool contains_coordinates(std::string_view text) {
  static const std::regex kCoords(
      R"(\[\s*[-+]?\d+(\.\d+)?\s*,\s*[-+]?\d+(\.\d+)?\s*,\s*[-+]?\d+(\.\d+)?\s*,\s*[-+]?\d+(\.\d+)?\s*\])");
  return std::regex_search(text.begin(), text.end(), kCoords);
}

Vocabulary parse_vocabulary(std::string_view text) {
  Vocabulary v;
  std::set<std::string>* section = nullptr;
  detail::for_each_line(text, [&](std::size_t line_no, std::string_view raw) {
    const std::string_view line = trim(raw);
    if (line.empty()) return;
    if (line.starts_with('#')) {
      const std::string_view body = trim(line.substr(1));
      if (body.starts_with("version ")) {
        v.version = std::string(trim(body.substr(8)));
      }
      return;
    }
    if (line == "[modality]") {
      section = &v.modalities;
    } else if (line == "[anatomy]") {
      section = &v.anatomies;
    } else if (line == "[disease]") {
      section = &v.diseases;
    } else if (line.starts_with('[')) {
      throw invalid_argument("vocabulary line " + std::to_string(line_no) +
                             ": unknown section " + std::string(line));
    } else if (!section) {
      throw invalid_argument("vocabulary line " + std::to_string(line_no) +
                             ": entry before any section");
    } else {
      section->insert(std::string(line));
    }
  });
  return v;
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  return parse_vocabulary(detail::read_text_file(path));
}

const Vocabulary& builtin_vocabulary() {
  static const Vocabulary v = parse_vocabulary(kBuiltinVocabulary);
  return v;
}

std::filesystem::path resolve_path(const std::filesystem::path& base_dir,
                                   const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_absolute() || base_dir.empty()) return path;
  return base_dir / path;
}

std::vector<Violation> validate_record(const DatasetRecord& rec,
                                       const ValidationOptions& opts) {
  std::vector<Violation> out;
  const auto add = [&](std::string field, std::string code, std::string msg,
                       Severity sev = Severity::Error) {
    out.push_back({std::move(field), std::move(code), std::move(msg), sev});
  };

  if (rec.id.empty()) add("id", "missing_field", "record id is empty");
  if (rec.mask_path.empty()) add("mask_path", "missing_field", "mask path is empty");
  if (rec.boxes.empty()) add("boxes", "empty_boxes", "record has no boxes");

  const auto parsed = parse_answer(rec.answer);
  if (!parsed) {
    add("answer", "answer_template",
        "answer does not match 'The {lesion} is located at {bboxes}.'");
  } else if (parsed->boxes != rec.boxes) {
    add("answer", "answer_box_mismatch",
        "answer boxes " + to_string(parsed->boxes) + " differ from boxes field " +
            to_string(rec.boxes));
  }
  if (contains_coordinates(rec.reasoning)) {
    add("reasoning", "coordinate_leak",
        "reasoning contains an explicit coordinate list");
  }

  if (opts.vocabulary) {
    const Vocabulary& v = *opts.vocabulary;
    if (!v.modalities.empty() && !v.modalities.contains(rec.modality)) {
      add("modality", "unknown_vocabulary", "modality '" + rec.modality +
          "' not in vocabulary", Severity::Warning);
    }
    if (!v.anatomies.empty() && !v.anatomies.contains(rec.anatomy)) {
      add("anatomy", "unknown_vocabulary", "anatomy '" + rec.anatomy +
          "' not in vocabulary", Severity::Warning);
    }
    if (!v.diseases.empty() && !v.diseases.contains(rec.disease)) {
      add("disease", "unknown_vocabulary", "disease '" + rec.disease +
          "' not in vocabulary", Severity::Warning);
    }
  }

  if (opts.base_dir && !rec.mask_path.empty()) {
    std::optional<BinaryMask> mask;
    try {
      mask = load_mask(resolve_path(*opts.base_dir, rec.mask_path));
    } catch (const Error& e) {
      add("mask_path", "mask_unreadable", e.what());
    }
    if (mask) {
      const double w = static_cast<double>(mask->width());
      const double h = static_cast<double>(mask->height());
      for (const auto& b : rec.boxes) {
        if (b.x1() < 0 || b.y1() < 0 || b.x2() > w || b.y2() > h) {
          add("boxes", "box_out_of_bounds",
              "box " + to_string(b) + " exceeds image bounds " +
                  std::to_string(mask->width()) + "x" +
                  std::to_string(mask->height()));
        }
      }
      if (mask->empty()) {
        add("mask_path", "empty_mask", "ground truth mask has no foreground");
      } else if (sorted_boxes(mask_to_boxes(*mask, BoxMode::PerComponent)) !=
                 sorted_boxes(rec.boxes)) {
        add("boxes", "boxes_mask_mismatch",
            "boxes differ from the mask's connected components",
            Severity::Warning);
      }
    }
  }
  return out;
}

std::vector<DatasetRecord> parse_dataset(std::string_view text) {
  std::vector<DatasetRecord> out;
  std::unordered_set<std::string> ids;
  detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (detail::blank(line)) return;
    DatasetRecord rec;
    try {
      rec = record_from_json(detail::Json::parse(line));
    } catch (const std::exception& e) {
      throw invalid_argument("dataset line " + std::to_string(line_no) + ": " +
                             e.what());
    }
    if (!ids.insert(rec.id).second) {
      throw invalid_argument("dataset line " + std::to_string(line_no) +
                             ": duplicate id '" + rec.id + "'");
    }
    out.push_back(std::move(rec));
  });
  return out;
}

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path) {
  const std::string text = detail::read_text_file(path);
  try {
    return parse_dataset(text);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::string serialize_record(const DatasetRecord& rec) {
  return detail::dump(record_to_json(rec));
}

void write_dataset(const std::vector<DatasetRecord>& records,
                   const std::filesystem::path& path) {
  std::string text;
  for (const auto& r : records) {
    text += serialize_record(r);
    text += '\n';
  }
  detail::write_text_file(path, text);
}

}  // namespace segreward
