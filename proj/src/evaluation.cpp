#include "segreward/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "json_util.hpp"
#include "segreward/error.hpp"
#include "segreward/numfmt.hpp"
#include "segreward/reward.hpp"

namespace segreward {

std::string_view to_string(FailureKind k) {
  switch (k) {
    case FailureKind::None:
      return "none";
    case FailureKind::Format:
      return "format";
    case FailureKind::Grounding:
      return "grounding";
  }
  return "unknown";
}

namespace {

FailureKind failure_from_string(std::string_view s) {
  if (s == "none" || s.empty()) return FailureKind::None;
  if (s == "format") return FailureKind::Format;
  if (s == "grounding") return FailureKind::Grounding;
  throw invalid_argument("unknown failure kind '" + std::string(s) + "'");
}

}  // namespace

FailureVerdict classify_failure(const EvalRecord& rec) {
  const StructuredOutput o = parse_output(rec.output_text);
  if (!o.parse_ok) {
    return {FailureKind::Format, std::string(to_string(o.parse_error))};
  }
  if (rec.load_error) return {FailureKind::Grounding, "mask_unreadable"};
  if (!rec.pred_mask) return {FailureKind::Grounding, "missing_mask"};
  const BinaryMask& pred = *rec.pred_mask;
  if (pred.width() != rec.gt_mask.width() ||
      pred.height() != rec.gt_mask.height()) {
    return {FailureKind::Grounding, "shape_mismatch"};
  }
  if (intersection_count(pred, rec.gt_mask) == 0) {
    return {FailureKind::Grounding, "zero_dice"};
  }
  return {};
}

SampleRow score_record(const EvalRecord& rec) {
  if (rec.gt_mask.empty()) {
    throw invalid_argument("sample '" + rec.sample_id +
                           "': missing ground truth (empty mask)");
  }
  SampleRow row;
  row.sample_id = rec.sample_id;
  row.anatomy = rec.anatomy;
  row.modality = rec.modality;
  const FailureVerdict v = classify_failure(rec);
  row.failure = v.kind;
  row.reason = v.reason;
  if (rec.load_error && v.kind == FailureKind::Grounding) {
    row.reason += ": " + *rec.load_error;
  }
  if (!v.failed()) {
    row.dice = dice(*rec.pred_mask, rec.gt_mask);
    row.iou = mask_iou(*rec.pred_mask, rec.gt_mask);
  }
  return row;
}

namespace {

struct Accumulator {
  std::size_t n = 0;
  std::size_t failures = 0;
  double dice_sum = 0;
  double iou_sum = 0;

  void add(const SampleRow& r) {
    ++n;
    dice_sum += r.dice;
    iou_sum += r.iou;
    if (r.failure != FailureKind::None) ++failures;
  }

  GroupMetrics metrics() const {
    GroupMetrics g;
    g.n = n;
    if (n == 0) return g;
    const double dn = static_cast<double>(n);
    g.m_dice = dice_sum / dn;
    g.m_iou = iou_sum / dn;
    g.failure_rate = static_cast<double>(failures) / dn;
    return g;
  }
};

std::vector<std::string> missing_groups(
    const std::vector<std::string>& vocab,
    const std::map<std::string, GroupMetrics>& present) {
  std::set<std::string> out;
  for (const auto& v : vocab) {
    if (!present.contains(v)) out.insert(v);
  }
  return {out.begin(), out.end()};
}

}  // namespace

EvalReport aggregate(std::vector<SampleRow> rows, const EvalVocabulary* vocab) {
  if (rows.empty()) throw invalid_argument("evaluation needs at least one sample");
  std::sort(rows.begin(), rows.end(),
            [](const SampleRow& a, const SampleRow& b) {
              return a.sample_id < b.sample_id;
            });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].sample_id == rows[i - 1].sample_id) {
      throw invalid_argument("duplicate sample_id '" + rows[i].sample_id + "'");
    }
  }
  Accumulator all;
  std::map<std::string, Accumulator> anat, mod;
  for (const auto& r : rows) {
    all.add(r);
    anat[r.anatomy].add(r);
    mod[r.modality].add(r);
  }
  EvalReport rep;
  rep.overall = all.metrics();
  for (const auto& [k, a] : anat) rep.by_anatomy[k] = a.metrics();
  for (const auto& [k, a] : mod) rep.by_modality[k] = a.metrics();
  if (vocab) {
    rep.empty_anatomies = missing_groups(vocab->anatomies, rep.by_anatomy);
    rep.empty_modalities = missing_groups(vocab->modalities, rep.by_modality);
  }
  rep.samples = std::move(rows);
  return rep;
}

EvalReport evaluate(const std::vector<EvalRecord>& records,
                    const EvalVocabulary* vocab) {
  std::vector<SampleRow> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(score_record(r));
  return aggregate(std::move(rows), vocab);
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  if (name == "markdown" || name == "md") return ReportFormat::Markdown;
  throw invalid_argument("unknown report format '" + std::string(name) + "'");
}

namespace {

std::string pct(double fraction) { return format_fixed(100.0 * fraction, 2); }

detail::Json group_json(const GroupMetrics& g) {
  detail::Json j;
  j["n"] = g.n;
  j["m_dice"] = detail::number(g.m_dice);
  j["m_iou"] = detail::number(g.m_iou);
  j["failure_rate"] = detail::number(g.failure_rate);
  j["m_dice_pct"] = pct(g.m_dice);
  j["m_iou_pct"] = pct(g.m_iou);
  j["failure_rate_pct"] = pct(g.failure_rate);
  return j;
}

std::string render_json(const EvalReport& r) {
  detail::Json j;
  j["overall"] = group_json(r.overall);
  const auto groups = [](const std::map<std::string, GroupMetrics>& m) {
    detail::Json arr = detail::Json::array();
    for (const auto& [k, g] : m) {
      detail::Json e;
      e["group"] = k;
      const detail::Json fields = group_json(g);
      for (const auto& [field, value] : fields.items()) e[field] = value;
      arr.push_back(std::move(e));
    }
    return arr;
  };
  j["by_anatomy"] = groups(r.by_anatomy);
  j["by_modality"] = groups(r.by_modality);
  detail::Json samples = detail::Json::array();
  for (const auto& s : r.samples) {
    detail::Json e;
    e["sample_id"] = s.sample_id;
    e["anatomy"] = s.anatomy;
    e["modality"] = s.modality;
    e["dice"] = detail::number(s.dice);
    e["iou"] = detail::number(s.iou);
    e["failure"] = std::string(to_string(s.failure));
    e["reason"] = s.reason;
    samples.push_back(std::move(e));
  }
  j["samples"] = std::move(samples);
  j["omitted_groups"] = {{"anatomy", r.empty_anatomies},
                         {"modality", r.empty_modalities}};
  return j.dump(2) + "\n";
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

constexpr std::string_view kCsvHeader =
    "scope,key,anatomy,modality,n,m_dice,m_iou,failure_rate,m_dice_pct,"
    "m_iou_pct,failure_rate_pct,failure,reason";

std::string csv_group_row(std::string_view scope, std::string_view key,
                          const GroupMetrics& g) {
  return std::string(scope) + "," + csv_field(key) + ",,," + std::to_string(g.n) +
         "," + format_number(g.m_dice) + "," + format_number(g.m_iou) + "," +
         format_number(g.failure_rate) + "," + pct(g.m_dice) + "," +
         pct(g.m_iou) + "," + pct(g.failure_rate) + ",,\n";
}

std::string join(const std::vector<std::string>& v, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

std::string render_csv(const EvalReport& r) {
  std::string out(kCsvHeader);
  out += "\n";
  out += csv_group_row("overall", "all", r.overall);
  for (const auto& [k, g] : r.by_anatomy) out += csv_group_row("anatomy", k, g);
  for (const auto& [k, g] : r.by_modality) out += csv_group_row("modality", k, g);
  for (const auto& s : r.samples) {
    out += "sample," + csv_field(s.sample_id) + "," + csv_field(s.anatomy) + "," +
           csv_field(s.modality) + ",1," + format_number(s.dice) + "," +
           format_number(s.iou) + "," +
           (s.failure == FailureKind::None ? "0" : "1") + "," + pct(s.dice) +
           "," + pct(s.iou) + "," +
           (s.failure == FailureKind::None ? "0.00" : "100.00") + "," +
           std::string(to_string(s.failure)) + "," + csv_field(s.reason) + "\n";
  }
  if (!r.empty_anatomies.empty()) {
    out += "# omitted anatomy: " + join(r.empty_anatomies, ";") + "\n";
  }
  if (!r.empty_modalities.empty()) {
    out += "# omitted modality: " + join(r.empty_modalities, ";") + "\n";
  }
  return out;
}

std::string md_cell(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

std::string render_markdown(const EvalReport& r) {
  std::string out;
  const auto table = [&](std::string_view title, std::string_view key_name,
                         const std::map<std::string, GroupMetrics>& groups) {
    out += "### " + std::string(title) + "\n\n";
    out += "| " + std::string(key_name) +
           " | n | mDice (%) | mIoU (%) | Fail (%) |\n";
    out += "|---|---:|---:|---:|---:|\n";
    for (const auto& [k, g] : groups) {
      out += "| " + md_cell(k) + " | " + std::to_string(g.n) + " | " +
             pct(g.m_dice) + " | " + pct(g.m_iou) + " | " +
             pct(g.failure_rate) + " |\n";
    }
    out += "\n";
  };
  out += "## Evaluation report\n\n";
  out += "| n | mDice (%) | mIoU (%) | Fail (%) |\n";
  out += "|---:|---:|---:|---:|\n";
  out += "| " + std::to_string(r.overall.n) + " | " + pct(r.overall.m_dice) +
         " | " + pct(r.overall.m_iou) + " | " + pct(r.overall.failure_rate) +
         " |\n\n";
  table("By anatomy", "Anatomy", r.by_anatomy);
  table("By modality", "Modality", r.by_modality);
  out += "### Samples\n\n";
  out += "| Sample | Anatomy | Modality | Dice (%) | IoU (%) | Failure |\n";
  out += "|---|---|---|---:|---:|---|\n";
  for (const auto& s : r.samples) {
    std::string failure(to_string(s.failure));
    if (s.failure != FailureKind::None) failure += " (" + s.reason + ")";
    out += "| " + md_cell(s.sample_id) + " | " + md_cell(s.anatomy) + " | " +
           md_cell(s.modality) + " | " + pct(s.dice) + " | " + pct(s.iou) +
           " | " + md_cell(failure) + " |\n";
  }
  if (!r.empty_anatomies.empty() || !r.empty_modalities.empty()) {
    out += "\n";
    if (!r.empty_anatomies.empty()) {
      out += "_No samples for anatomy: " + join(r.empty_anatomies, ", ") + "._\n";
    }
    if (!r.empty_modalities.empty()) {
      out += "_No samples for modality: " + join(r.empty_modalities, ", ") +
             "._\n";
    }
  }
  return out;
}

GroupMetrics group_from_json(const detail::Json& j) {
  GroupMetrics g;
  g.n = j.at("n").get<std::size_t>();
  g.m_dice = j.at("m_dice").get<double>();
  g.m_iou = j.at("m_iou").get<double>();
  g.failure_rate = j.at("failure_rate").get<double>();
  return g;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

double parse_double(const std::string& s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw invalid_argument("bad number '" + s + "' in report");
  }
  return v;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto next = s.find(sep, pos);
    const auto end = next == std::string_view::npos ? s.size() : next;
    if (end > pos) out.emplace_back(s.substr(pos, end - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

}  // namespace

std::string render_report(const EvalReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Json:
      return render_json(report);
    case ReportFormat::Csv:
      return render_csv(report);
    case ReportFormat::Markdown:
      return render_markdown(report);
  }
  throw invalid_argument("unknown report format");
}

EvalReport parse_report_json(std::string_view text) {
  const auto j = detail::Json::parse(text);
  EvalReport r;
  r.overall = group_from_json(j.at("overall"));
  for (const auto& e : j.at("by_anatomy")) {
    r.by_anatomy[e.at("group").get<std::string>()] = group_from_json(e);
  }
  for (const auto& e : j.at("by_modality")) {
    r.by_modality[e.at("group").get<std::string>()] = group_from_json(e);
  }
  for (const auto& e : j.at("samples")) {
    SampleRow s;
    s.sample_id = e.at("sample_id").get<std::string>();
    s.anatomy = e.at("anatomy").get<std::string>();
    s.modality = e.at("modality").get<std::string>();
    s.dice = e.at("dice").get<double>();
    s.iou = e.at("iou").get<double>();
    s.failure = failure_from_string(e.at("failure").get<std::string>());
    s.reason = e.at("reason").get<std::string>();
    r.samples.push_back(std::move(s));
  }
  if (j.contains("omitted_groups")) {
    r.empty_anatomies =
        j["omitted_groups"].at("anatomy").get<std::vector<std::string>>();
    r.empty_modalities =
        j["omitted_groups"].at("modality").get<std::vector<std::string>>();
  }
  return r;
}

EvalReport parse_report_csv(std::string_view text) {
  EvalReport r;
  bool header_seen = false;
  detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (detail::blank(line)) return;
    if (line.starts_with('#')) {
      constexpr std::string_view kAnat = "# omitted anatomy: ";
      constexpr std::string_view kMod = "# omitted modality: ";
      if (line.starts_with(kAnat)) r.empty_anatomies = split(line.substr(kAnat.size()), ';');
      if (line.starts_with(kMod)) r.empty_modalities = split(line.substr(kMod.size()), ';');
      return;
    }
    if (!header_seen) {
      if (line != kCsvHeader) {
        throw invalid_argument("report csv line " + std::to_string(line_no) +
                               ": unexpected header");
      }
      header_seen = true;
      return;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 13) {
      throw invalid_argument("report csv line " + std::to_string(line_no) +
                             ": expected 13 fields");
    }
    const std::string& scope = f[0];
    if (scope == "sample") {
      SampleRow s;
      s.sample_id = f[1];
      s.anatomy = f[2];
      s.modality = f[3];
      s.dice = parse_double(f[5]);
      s.iou = parse_double(f[6]);
      s.failure = failure_from_string(f[11]);
      s.reason = f[12];
      r.samples.push_back(std::move(s));
      return;
    }
    GroupMetrics g;
    g.n = static_cast<std::size_t>(parse_double(f[4]));
    g.m_dice = parse_double(f[5]);
    g.m_iou = parse_double(f[6]);
    g.failure_rate = parse_double(f[7]);
    if (scope == "overall") {
      r.overall = g;
    } else if (scope == "anatomy") {
      r.by_anatomy[f[1]] = g;
    } else if (scope == "modality") {
      r.by_modality[f[1]] = g;
    } else {
      throw invalid_argument("report csv line " + std::to_string(line_no) +
                             ": unknown scope '" + scope + "'");
    }
  });
  return r;
}

}  // namespace segreward
