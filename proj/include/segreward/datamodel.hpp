#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "segreward/geometry.hpp"

namespace segreward {

struct DatasetRecord {
  std::string id;
  std::string image_path;
  std::string mask_path;
  std::string question;
  std::string reasoning;
  std::string answer;
  std::vector<BBox> boxes;
  std::string modality;
  std::string anatomy;
  std::string disease;

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

// "The {lesion} is located at {bboxes}." with the canonical box rendering.
std::string render_answer(std::string_view lesion,
                          const std::vector<BBox>& boxes);

struct ParsedAnswer {
  std::string lesion;
  std::vector<BBox> boxes;
  bool has_seg_token = false;
};

// Inverse of render_answer; tolerates a trailing <seg> token.
std::optional<ParsedAnswer> parse_answer(std::string_view answer);

// True when `text` contains a 4-number bracketed coordinate group.
bool contains_coordinates(std::string_view text);

struct Vocabulary {
  std::string version;
  std::set<std::string> modalities;
  std::set<std::string> anatomies;
  std::set<std::string> diseases;  // empty means unrestricted
};

// Plain list file: "# version N" line, "[modality]" / "[anatomy]" /
// "[disease]" section headers, one entry per line.
Vocabulary load_vocabulary(const std::filesystem::path& path);
Vocabulary parse_vocabulary(std::string_view text);
const Vocabulary& builtin_vocabulary();

enum class Severity { Error, Warning };

struct Violation {
  std::string field;
  std::string code;
  std::string message;
  Severity severity = Severity::Error;
};

struct ValidationOptions {
  // Relative mask paths resolve against this directory. When unset, mask
  // bounds and box consistency are not checked.
  std::optional<std::filesystem::path> base_dir;
  const Vocabulary* vocabulary = nullptr;
};

std::vector<Violation> validate_record(const DatasetRecord& rec,
                                       const ValidationOptions& opts = {});

// One JSON object per line, UTF-8, blank lines ignored. Throws with the
// 1-based line number on malformed lines and on duplicate ids.
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path);
std::vector<DatasetRecord> parse_dataset(std::string_view text);

// Canonical form: fixed key order, shortest round-trip numbers.
std::string serialize_record(const DatasetRecord& rec);
void write_dataset(const std::vector<DatasetRecord>& records,
                   const std::filesystem::path& path);

std::filesystem::path resolve_path(const std::filesystem::path& base_dir,
                                   const std::string& p);

}  // namespace segreward
