#pragma once

// Shared helpers for the test binaries: seeded generators, temp dirs and a
// small on-disk corpus (PNG masks plus JSON-lines files).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "segreward/datamodel.hpp"
#include "segreward/geometry.hpp"
#include "segreward/mask.hpp"
#include "segreward/mask_io.hpp"

namespace testing {

namespace fs = std::filesystem;
using namespace segreward;

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline std::size_t uniform_index(std::mt19937_64& g, std::size_t lo,
                                 std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(g);
}

inline BBox random_box(std::mt19937_64& g, double extent = 100.0,
                       double min_side = 0.5) {
  const double x1 = uniform(g, 0, extent);
  const double y1 = uniform(g, 0, extent);
  return BBox(x1, y1, x1 + uniform(g, min_side, extent / 2),
              y1 + uniform(g, min_side, extent / 2));
}

inline BBox random_int_box(std::mt19937_64& g, int extent = 20) {
  const int x1 = static_cast<int>(uniform_index(g, 0, extent - 1));
  const int y1 = static_cast<int>(uniform_index(g, 0, extent - 1));
  const int w = static_cast<int>(uniform_index(g, 1, extent / 2));
  const int h = static_cast<int>(uniform_index(g, 1, extent / 2));
  return BBox(x1, y1, x1 + w, y1 + h);
}

// Each pixel is on with probability `density`.
inline BinaryMask random_mask(std::mt19937_64& g, std::size_t w, std::size_t h,
                              double density) {
  BinaryMask m(w, h);
  std::bernoulli_distribution on(density);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c)
      if (on(g)) m.set(r, c);
  return m;
}

inline BinaryMask rect_mask(std::size_t w, std::size_t h, std::size_t r0,
                            std::size_t c0, std::size_t r1, std::size_t c1) {
  BinaryMask m(w, h);
  m.fill_rect(r0, c0, r1, c1);
  return m;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("segreward-" + tag + "-" + std::to_string(rd()) + "-" +
             std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string json_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      default: out += ch;
    }
  }
  return out;
}

inline std::string structured(const std::string& boxes, bool seg = true) {
  return "<think>lesion is bright</think><answer>The lesion is located at " +
         boxes + "." + (seg ? " <seg>" : "") + "</answer>";
}

// Fixture corpus: 32x32 ground truths with a 10x10 lesion at rows/cols
// [8, 18), and one prediction per sample covering the interesting branches.
struct Corpus {
  fs::path dataset;
  fs::path preds;
  std::vector<DatasetRecord> records;
};

struct CorpusSample {
  std::string id;
  std::string modality;
  std::string anatomy;
  std::string output_text;
  std::string mask_kind;  // perfect, half, shifted, far, empty, mismatch, none, corrupt
};

inline std::vector<CorpusSample> corpus_samples() {
  const std::string gt = "[[8,8,18,18]]";
  return {
      {"s01", "CT", "Lung", structured(gt), "perfect"},
      {"s02", "CT", "Abdomen", structured(gt), "half"},
      {"s03", "MRI", "Head", structured("[[8,8,13,18]]"), "half"},
      {"s04", "MRI", "Head", structured(gt), "far"},
      {"s05", "X-Ray", "Lung", structured(gt), "empty"},
      {"s06", "Ultrasound", "Breast",
       "<answer>The lesion is located at [[8,8,18,18]]. <seg></answer>", "perfect"},
      {"s07", "Ultrasound", "Neck", structured(gt, false), "perfect"},
      {"s08", "OCT", "Eye", structured("[[8,8,18,18],[0,0,4,4]]"), "shifted"},
      {"s09", "Endoscopy", "Abdomen", structured(gt), "mismatch"},
      {"s10", "Dermoscopy", "Skin", structured(gt), "none"},
      {"s11", "CT", "Lung", structured("[[20,20,30,30]]"), "sliver"},
      {"s12", "MRI", "Heart", structured(gt), "corrupt"},
  };
}

inline BinaryMask corpus_pred_mask(const std::string& kind) {
  if (kind == "perfect") return rect_mask(32, 32, 8, 8, 18, 18);
  if (kind == "half") return rect_mask(32, 32, 8, 8, 18, 13);
  if (kind == "shifted") return rect_mask(32, 32, 10, 10, 20, 20);
  if (kind == "far") return rect_mask(32, 32, 24, 24, 30, 30);
  if (kind == "sliver") return rect_mask(32, 32, 17, 17, 30, 30);
  if (kind == "mismatch") return rect_mask(16, 16, 8, 8, 12, 12);
  return BinaryMask(32, 32);
}

inline Corpus build_corpus(const fs::path& dir) {
  Corpus c;
  fs::create_directories(dir / "masks");
  fs::create_directories(dir / "preds");
  const BinaryMask gt = rect_mask(32, 32, 8, 8, 18, 18);
  std::string dataset, preds;
  for (const auto& s : corpus_samples()) {
    DatasetRecord r;
    r.id = s.id;
    r.image_path = "images/" + s.id + ".png";
    r.mask_path = "masks/" + s.id + ".png";
    r.question = "Where is the abnormality?";
    r.reasoning = "A well defined region stands out from the surrounding tissue.";
    r.boxes = {BBox(8, 8, 18, 18)};
    r.answer = render_answer("lesion", r.boxes) + " <seg>";
    r.modality = s.modality;
    r.anatomy = s.anatomy;
    r.disease = "tumor";
    save_mask(gt, dir / r.mask_path);
    dataset += serialize_record(r) + "\n";
    c.records.push_back(r);

    std::string line =
        "{\"id\":\"" + s.id + "\",\"output_text\":\"" + json_escape(s.output_text) + "\"";
    if (s.mask_kind == "corrupt") {
      write_file(dir / "preds" / (s.id + ".png"), "not a png");
      line += ",\"pred_mask_path\":\"preds/" + s.id + ".png\"";
    } else if (s.mask_kind != "none") {
      save_mask(corpus_pred_mask(s.mask_kind), dir / "preds" / (s.id + ".png"));
      line += ",\"pred_mask_path\":\"preds/" + s.id + ".png\"";
    }
    preds += line + "}\n";
  }
  c.dataset = dir / "dataset.jsonl";
  c.preds = dir / "predictions.jsonl";
  write_file(c.dataset, dataset);
  write_file(c.preds, preds);
  return c;
}

}  // namespace testing
