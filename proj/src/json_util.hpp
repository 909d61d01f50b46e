#pragma once

// Shared JSON helpers for the line-oriented file formats.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "segreward/error.hpp"
#include "segreward/geometry.hpp"

namespace segreward::detail {

using Json = nlohmann::ordered_json;

// Integral values are stored as JSON integers so they print without ".0".
inline Json number(double v) {
  if (v == std::floor(v) && std::abs(v) < 9007199254740992.0) {
    return static_cast<std::int64_t>(v);
  }
  return v;
}

inline Json boxes_to_json(const std::vector<BBox>& boxes) {
  Json arr = Json::array();
  for (const auto& b : boxes) {
    arr.push_back(
        Json::array({number(b.x1()), number(b.y1()), number(b.x2()), number(b.y2())}));
  }
  return arr;
}

inline std::vector<BBox> boxes_from_json(const Json& j) {
  if (!j.is_array()) throw invalid_argument("box list must be an array");
  std::vector<BBox> out;
  for (const auto& b : j) {
    if (!b.is_array() || b.size() != 4) {
      throw invalid_argument("each box must be a 4-element array");
    }
    double v[4];
    for (int k = 0; k < 4; ++k) {
      if (!b[k].is_number()) throw invalid_argument("box coordinates must be numbers");
      v[k] = b[k].get<double>();
    }
    out.emplace_back(v[0], v[1], v[2], v[3]);
  }
  return out;
}

inline std::string dump(const Json& j) {
  return j.dump(-1, ' ', false, Json::error_handler_t::strict);
}

// Splits on '\n', keeping 1-based line numbers; strips a trailing '\r'.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
    std::string_view line = text.substr(pos, end - pos);
    if (line.ends_with('\r')) line.remove_suffix(1);
    ++line_no;
    if (nl == std::string_view::npos && line.empty()) break;
    fn(line_no, line);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
}

inline bool blank(std::string_view s) {
  return s.find_first_not_of(" \t\r") == std::string_view::npos;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path,
                            std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error(path.string() + ": cannot open for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw io_error(path.string() + ": write failed");
}

}  // namespace segreward::detail
