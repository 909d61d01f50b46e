#include "segreward/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "json_util.hpp"
#include "segreward/curation.hpp"
#include "segreward/datamodel.hpp"
#include "segreward/error.hpp"
#include "segreward/evaluation.hpp"
#include "segreward/mask_io.hpp"
#include "segreward/matching.hpp"
#include "segreward/numfmt.hpp"
#include "segreward/parallel.hpp"
#include "segreward/session.hpp"

namespace segreward::cli {

namespace fs = std::filesystem;
using detail::Json;

namespace {

// Exit-code carrier for conditions found after argument parsing.
struct Exit {
  int code;
  std::string message;
};

std::size_t default_workers() {
  if (const char* env = std::getenv("SEGREWARD_WORKERS")) {
    std::size_t n = 0;
    const std::string_view s(env);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec == std::errc() && ptr == s.data() + s.size() && n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<double> parse_weight_list(const std::string& text,
                                      std::size_t expected) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size()) {
      throw invalid_argument("bad weight '" + item + "' in '" + text + "'");
    }
    if (!(v >= 0) || !std::isfinite(v)) {
      throw invalid_argument("weights must be non-negative: '" + text + "'");
    }
    out.push_back(v);
  }
  if (out.size() != expected) {
    throw invalid_argument("expected " + std::to_string(expected) +
                           " comma-separated weights, got '" + text + "'");
  }
  return out;
}

// Every output starts with this record. Worker count is deliberately not
// part of it: outputs must not depend on parallelism.
Json header(const std::string& command, const Json& flags, std::uint64_t seed) {
  Json h;
  h["tool"] = kToolName;
  h["version"] = kToolVersion;
  h["command"] = command;
  h["flags"] = flags;
  h["seed"] = seed;
  return h;
}

std::string header_line(const Json& h) {
  Json wrapper;
  wrapper["header"] = h;
  return detail::dump(wrapper);
}

void emit(const std::optional<std::string>& path, const std::string& text,
          std::ostream& out) {
  if (path && !path->empty() && *path != "-") {
    detail::write_text_file(*path, text);
  } else {
    out << text;
  }
}

// Messages name the path as written in the predictions file so outputs do
// not depend on where the corpus lives.
BinaryMask load_pred_mask(const fs::path& base, const std::string& rel) {
  std::string text;
  try {
    text = detail::read_text_file(resolve_path(base, rel));
  } catch (const Error&) {
    throw io_error(rel + ": cannot open file");
  }
  const std::vector<std::uint8_t> bytes(text.begin(), text.end());
  try {
    return decode_mask(bytes);
  } catch (const Error& e) {
    std::string msg = e.what();
    if (const auto colon = msg.find(": "); colon != std::string::npos) {
      msg = msg.substr(colon + 2);
    }
    throw io_error(rel + ": " + msg);
  }
}

// ---------------------------------------------------------------- reward

struct RewardArgs {
  std::string preds, dataset, out;
  RewardConfig config;
  std::string weights = "1,1,1";
  std::size_t workers = 1;
  std::uint64_t seed = 0;
};

int cmd_reward(const RewardArgs& a, std::ostream& out) {
  RewardConfig cfg = a.config;
  const auto w = parse_weight_list(a.weights, 3);
  cfg.weights = {w[0], w[1], w[2]};
  cfg.validate();

  const auto preds = load_predictions(a.preds);
  const RewardSession session = RewardSession::open(cfg, a.dataset);
  const fs::path preds_dir = fs::path(a.preds).parent_path();
  for (const auto& p : preds) {
    if (!session.contains(p.id)) {
      throw invalid_argument("prediction id '" + p.id + "' is not in the dataset");
    }
  }

  const auto rows = parallel_map(preds.size(), a.workers, [&](std::size_t i) {
    const PredictionRecord& p = preds[i];
    SampleReward r;
    r.id = p.id;
    if (!p.pred_mask_path) {
      return reward_record_json(session.score(p.id, p.output_text, nullptr));
    }
    std::optional<BinaryMask> mask;
    try {
      mask = load_pred_mask(preds_dir, *p.pred_mask_path);
    } catch (const Error& e) {
      r = session.score(p.id, p.output_text, nullptr);
      const StructuredOutput o = parse_output(p.output_text);
      r.breakdown = RewardBreakdown{};
      r.breakdown.r_fmt = format_reward(o);
      r.breakdown.parse_error = o.parse_error;
      r.error = std::string("pred mask: ") + e.what();
      return reward_record_json(r);
    }
    return reward_record_json(session.score(p.id, p.output_text, &*mask));
  });

  Json flags;
  flags["preds"] = fs::path(a.preds).filename().string();
  flags["dataset"] = fs::path(a.dataset).filename().string();
  flags["tau"] = detail::number(cfg.tau);
  flags["lambda"] = detail::number(cfg.lambda);
  flags["dice_threshold"] = detail::number(cfg.dice_threshold);
  flags["weights"] = Json::array({detail::number(cfg.weights.format),
                                  detail::number(cfg.weights.bbox),
                                  detail::number(cfg.weights.mask)});
  std::string text = header_line(header("reward", flags, a.seed)) + "\n";
  for (const auto& line : rows) text += line + "\n";
  emit(a.out, text, out);
  return kExitOk;
}

// -------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string preds, dataset, format = "json", vocab;
  std::optional<std::string> out;
  std::size_t workers = 1;
  std::uint64_t seed = 0;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const ReportFormat format = parse_report_format(a.format);
  const auto preds = load_predictions(a.preds);
  const auto dataset = load_dataset(a.dataset);
  const fs::path data_dir = fs::path(a.dataset).parent_path();
  const fs::path preds_dir = fs::path(a.preds).parent_path();

  Vocabulary vocab = a.vocab.empty() ? builtin_vocabulary() : load_vocabulary(a.vocab);
  EvalVocabulary ev{{vocab.anatomies.begin(), vocab.anatomies.end()},
                    {vocab.modalities.begin(), vocab.modalities.end()}};

  std::map<std::string, const PredictionRecord*> by_id;
  for (const auto& p : preds) by_id[p.id] = &p;
  for (const auto& p : preds) {
    const bool known = std::any_of(dataset.begin(), dataset.end(),
                                   [&](const DatasetRecord& r) { return r.id == p.id; });
    if (!known) throw invalid_argument("prediction id '" + p.id + "' is not in the dataset");
  }

  auto rows = parallel_map(dataset.size(), a.workers, [&](std::size_t i) {
    const DatasetRecord& d = dataset[i];
    EvalRecord rec;
    rec.sample_id = d.id;
    rec.gt_boxes = d.boxes;
    rec.modality = d.modality;
    rec.anatomy = d.anatomy;
    rec.disease = d.disease;
    rec.gt_mask = load_mask(resolve_path(data_dir, d.mask_path));
    const auto it = by_id.find(d.id);
    if (it == by_id.end()) {
      SampleRow row;
      row.sample_id = d.id;
      row.anatomy = d.anatomy;
      row.modality = d.modality;
      row.failure = FailureKind::Format;
      row.reason = "missing_prediction";
      return row;
    }
    rec.output_text = it->second->output_text;
    if (it->second->pred_mask_path) {
      const std::string& rel = *it->second->pred_mask_path;
      try {
        rec.pred_mask = load_pred_mask(preds_dir, rel);
      } catch (const Error& e) {
        rec.load_error = e.what();
      }
    }
    return score_record(rec);
  });
  const EvalReport report = aggregate(std::move(rows), &ev);

  Json flags;
  flags["preds"] = fs::path(a.preds).filename().string();
  flags["dataset"] = fs::path(a.dataset).filename().string();
  flags["format"] = a.format;
  flags["vocab"] = a.vocab.empty() ? std::string("builtin:") + vocab.version
                                   : fs::path(a.vocab).filename().string();
  const Json h = header("evaluate", flags, a.seed);

  std::string text;
  const std::string body = render_report(report, format);
  switch (format) {
    case ReportFormat::Json: {
      Json doc;
      doc["header"] = h;
      const Json parsed = Json::parse(body);
      for (const auto& [k, v] : parsed.items()) doc[k] = v;
      text = doc.dump(2) + "\n";
      break;
    }
    case ReportFormat::Csv:
      text = "# " + detail::dump(h) + "\n" + body;
      break;
    case ReportFormat::Markdown:
      text = "<!-- " + detail::dump(h) + " -->\n" + body;
      break;
  }
  emit(a.out, text, out);
  return kExitOk;
}

// ---------------------------------------------------------------- filter

struct FilterArgs {
  std::string errors, out, plot_csv, strategy = "kneedle", reduction = "mean";
  double sensitivity = 1.0;
  std::size_t min_samples = 50;
  std::uint64_t seed = 0;
};

std::vector<ErrorSample> load_error_table(const std::string& path) {
  const std::string text = detail::read_text_file(path);
  std::vector<ErrorSample> out;
  std::set<std::string> ids;
  detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (detail::blank(line)) return;
    try {
      const Json j = Json::parse(line);
      ErrorSample s;
      s.sample_id = j.at("sample_id").get<std::string>();
      s.errors = j.at("errors").get<std::vector<double>>();
      if (!ids.insert(s.sample_id).second) {
        throw invalid_argument("duplicate sample_id '" + s.sample_id + "'");
      }
      out.push_back(std::move(s));
    } catch (const std::exception& e) {
      throw invalid_argument(path + ": line " + std::to_string(line_no) + ": " +
                             e.what());
    }
  });
  return out;
}

Json fit_json(const PowerLawFit& f) {
  Json j;
  j["alpha"] = detail::number(f.alpha);
  j["x_min"] = detail::number(f.x_min);
  j["ks"] = detail::number(f.ks_statistic);
  j["n_tail"] = f.n_tail;
  return j;
}

int cmd_filter(const FilterArgs& a, std::ostream& out) {
  SelectionConfig cfg;
  if (a.strategy == "kneedle") {
    cfg.strategy = ThresholdStrategy::Kneedle;
  } else if (a.strategy == "ks") {
    cfg.strategy = ThresholdStrategy::MinKs;
  } else {
    throw invalid_argument("unknown strategy '" + a.strategy + "'");
  }
  if (a.reduction == "mean") {
    cfg.reduction = ErrorReduction::Mean;
  } else if (a.reduction == "median") {
    cfg.reduction = ErrorReduction::Median;
  } else {
    throw invalid_argument("unknown reduction '" + a.reduction + "'");
  }
  cfg.sensitivity = a.sensitivity;
  cfg.min_samples = a.min_samples;

  const auto samples = load_error_table(a.errors);
  const Selection sel = select_hard_cases(samples, cfg);

  Json flags;
  flags["errors"] = fs::path(a.errors).filename().string();
  flags["strategy"] = a.strategy;
  flags["reduction"] = a.reduction;
  flags["sensitivity"] = detail::number(a.sensitivity);
  flags["min_samples"] = a.min_samples;
  const Json h = header("filter", flags, a.seed);

  Json report;
  report["header"] = h;
  report["threshold"] = detail::number(sel.threshold);
  report["alpha"] = detail::number(sel.fit.alpha);
  report["x_min"] = detail::number(sel.fit.x_min);
  report["ks"] = detail::number(sel.fit.ks_statistic);
  report["n_tail"] = sel.fit.n_tail;
  report["knee_found"] = sel.knee_found;
  report["min_ks_fit"] = fit_json(sel.min_ks_fit);
  report["n_samples"] = samples.size();
  report["selected_ids"] = sel.selected_ids;
  emit(a.out, report.dump(2) + "\n", out);

  const std::string plot = a.plot_csv.empty() ? a.out + ".ccdf.csv" : a.plot_csv;
  std::string csv = "# " + detail::dump(h) + "\nerror,empirical_ccdf,model_ccdf\n";
  for (const auto& row : sel.curve) {
    csv += format_number(row.error) + "," + format_number(row.empirical_ccdf) +
           "," + format_number(row.model_ccdf) + "\n";
  }
  detail::write_text_file(plot, csv);
  return kExitOk;
}

// ----------------------------------------------------------------- match

struct MatchArgs {
  std::string preds_boxes, gt_boxes;
  std::optional<std::string> out;
  double tau = kDefaultMatchThreshold;
  std::uint64_t seed = 0;
};

std::vector<BBox> load_box_file(const std::string& path) {
  const std::string text = detail::read_text_file(path);
  try {
    return detail::boxes_from_json(Json::parse(text));
  } catch (const std::exception& e) {
    throw invalid_argument(path + ": malformed box list: " + e.what());
  }
}

int cmd_match(const MatchArgs& a, std::ostream& out) {
  const auto preds = load_box_file(a.preds_boxes);
  const auto gts = load_box_file(a.gt_boxes);
  const MatchResult m = match_boxes(preds, gts, a.tau);

  Json flags;
  flags["preds_boxes"] = fs::path(a.preds_boxes).filename().string();
  flags["gt_boxes"] = fs::path(a.gt_boxes).filename().string();
  flags["tau"] = detail::number(a.tau);
  Json j;
  j["header"] = header("match", flags, a.seed);
  j["r_bbox"] = detail::number(m.miou_matched * m.f1);
  j["miou_matched"] = detail::number(m.miou_matched);
  j["precision"] = detail::number(m.precision);
  j["recall"] = detail::number(m.recall);
  j["f1"] = detail::number(m.f1);
  Json pairs = Json::array();
  for (const auto& p : m.pairs) {
    pairs.push_back({{"pred", p.pred}, {"gt", p.gt}, {"iou", detail::number(p.iou)}});
  }
  j["pairs"] = std::move(pairs);
  j["unmatched_pred"] = m.unmatched_pred;
  j["unmatched_gt"] = m.unmatched_gt;
  emit(a.out, j.dump(2) + "\n", out);
  return kExitOk;
}

// -------------------------------------------------------------- qa-score

struct QaArgs {
  std::string scores, weights = "0.3,0.3,0.4";
  std::optional<std::string> out;
  std::uint64_t seed = 0;
};

int cmd_qa_score(const QaArgs& a, std::ostream& out) {
  const auto w = parse_weight_list(a.weights, 3);
  const QualityWeights weights{w[0], w[1], w[2]};
  quality_score(0, 0, 0, weights);  // validates the weights up front

  const std::string text = detail::read_text_file(a.scores);
  Json flags;
  flags["scores"] = fs::path(a.scores).filename().string();
  flags["weights"] = Json::array(
      {detail::number(w[0]), detail::number(w[1]), detail::number(w[2])});
  std::string result = header_line(header("qa-score", flags, a.seed)) + "\n";
  detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (detail::blank(line)) return;
    try {
      const Json j = Json::parse(line);
      const QualityScore q = quality_score(
          j.at("s_normal").get<double>(), j.at("s_lesion").get<double>(),
          j.at("s_reason").get<double>(), weights);
      Json r;
      r["id"] = j.at("id").get<std::string>();
      r["s_final"] = detail::number(q.s_final);
      r["needs_regeneration"] = q.needs_regeneration;
      result += detail::dump(r) + "\n";
    } catch (const std::exception& e) {
      throw invalid_argument(a.scores + ": line " + std::to_string(line_no) +
                             ": " + e.what());
    }
  });
  emit(a.out, result, out);
  return kExitOk;
}

// -------------------------------------------------------------- validate

struct ValidateArgs {
  std::string dataset, vocab;
  std::optional<std::string> out;
  bool strict = false;
};

int cmd_validate(const ValidateArgs& a, std::ostream& out) {
  const auto records = load_dataset(a.dataset);
  const Vocabulary vocab =
      a.vocab.empty() ? builtin_vocabulary() : load_vocabulary(a.vocab);
  ValidationOptions opts;
  opts.base_dir = fs::path(a.dataset).parent_path();
  opts.vocabulary = &vocab;
  Json flags;
  flags["dataset"] = fs::path(a.dataset).filename().string();
  flags["vocab"] = a.vocab.empty() ? std::string("builtin:") + vocab.version
                                   : fs::path(a.vocab).filename().string();
  flags["strict"] = a.strict;
  std::string text = header_line(header("validate", flags, 0)) + "\n";
  std::size_t errors = 0, warnings = 0;
  for (const auto& r : records) {
    for (const auto& v : validate_record(r, opts)) {
      Json j;
      j["id"] = r.id;
      j["field"] = v.field;
      j["code"] = v.code;
      j["severity"] = v.severity == Severity::Error ? "error" : "warning";
      j["message"] = v.message;
      text += detail::dump(j) + "\n";
      (v.severity == Severity::Error ? errors : warnings)++;
    }
  }
  emit(a.out, text, out);
  if (errors > 0 || (a.strict && warnings > 0)) {
    throw Exit{kExitInputError, std::to_string(errors) + " error(s), " +
                                    std::to_string(warnings) + " warning(s)"};
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Reward, evaluation and curation tools for reasoning segmentation", std::string(kToolName)};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  RewardArgs ra;
  ra.workers = default_workers();
  auto* reward = app.add_subcommand("reward", "score model outputs with the composite reward");
  reward->add_option("--preds", ra.preds, "predictions file (JSON lines)")->required();
  reward->add_option("--dataset", ra.dataset, "dataset file (JSON lines)")->required();
  reward->add_option("--out", ra.out, "reward records output")->required();
  reward->add_option("--tau", ra.config.tau, "IoU threshold for a true positive");
  reward->add_option("--lambda", ra.config.lambda, "Dice amplification factor");
  reward->add_option("--dice-threshold", ra.config.dice_threshold,
                     "Dice below which the GIoU branch is used");
  reward->add_option("--weights", ra.weights, "format,bbox,mask weights");
  reward->add_option("--workers", ra.workers, "worker threads");
  reward->add_option("--seed", ra.seed, "seed recorded in the output header");

  EvaluateArgs ea;
  ea.workers = default_workers();
  auto* evaluate_cmd = app.add_subcommand("evaluate", "mDice / mIoU / failure rate report");
  evaluate_cmd->add_option("--preds", ea.preds, "predictions file (JSON lines)")->required();
  evaluate_cmd->add_option("--dataset", ea.dataset, "dataset file (JSON lines)")->required();
  evaluate_cmd->add_option("--out", ea.out, "report output (default stdout)");
  evaluate_cmd->add_option("--format", ea.format, "json | csv | markdown");
  evaluate_cmd->add_option("--vocab", ea.vocab, "vocabulary manifest (default built-in)");
  evaluate_cmd->add_option("--workers", ea.workers, "worker threads");
  evaluate_cmd->add_option("--seed", ea.seed, "seed recorded in the output header");

  FilterArgs fa;
  auto* filter = app.add_subcommand("filter", "difficulty-aware hard-case selection");
  filter->add_option("--errors", fa.errors, "error table (JSON lines)")->required();
  filter->add_option("--out", fa.out, "selection report")->required();
  filter->add_option("--plot-csv", fa.plot_csv, "CCDF plot data (default <out>.ccdf.csv)");
  filter->add_option("--strategy", fa.strategy, "kneedle | ks");
  filter->add_option("--sensitivity", fa.sensitivity, "Kneedle sensitivity");
  filter->add_option("--reduction", fa.reduction, "mean | median over voting models");
  filter->add_option("--min-samples", fa.min_samples, "minimum sample count");
  filter->add_option("--seed", fa.seed, "seed recorded in the output header");

  MatchArgs ma;
  auto* match = app.add_subcommand("match", "Hungarian box matching and r_bbox");
  match->add_option("--preds-boxes", ma.preds_boxes, "predicted box list (JSON)")->required();
  match->add_option("--gt-boxes", ma.gt_boxes, "ground-truth box list (JSON)")->required();
  match->add_option("--tau", ma.tau, "IoU threshold for a true positive");
  match->add_option("--out", ma.out, "output (default stdout)");
  match->add_option("--seed", ma.seed, "seed recorded in the output header");

  QaArgs qa;
  auto* qa_cmd = app.add_subcommand("qa-score", "weighted quality score per record");
  qa_cmd->add_option("--scores", qa.scores, "component scores (JSON lines)")->required();
  qa_cmd->add_option("--weights", qa.weights, "normal,lesion,reason weights");
  qa_cmd->add_option("--out", qa.out, "output (default stdout)");
  qa_cmd->add_option("--seed", qa.seed, "seed recorded in the output header");

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "check dataset records");
  validate->add_option("--dataset", va.dataset, "dataset file (JSON lines)")->required();
  validate->add_option("--vocab", va.vocab, "vocabulary manifest (default built-in)");
  validate->add_option("--out", va.out, "violations output (default stdout)");
  validate->add_flag("--strict", va.strict, "treat warnings as errors");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }

  try {
    if (reward->parsed()) return cmd_reward(ra, out);
    if (evaluate_cmd->parsed()) return cmd_evaluate(ea, out);
    if (filter->parsed()) return cmd_filter(fa, out);
    if (match->parsed()) return cmd_match(ma, out);
    if (qa_cmd->parsed()) return cmd_qa_score(qa, out);
    if (validate->parsed()) return cmd_validate(va, out);
  } catch (const Exit& e) {
    err << "error: " << e.message << "\n";
    return e.code;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.kind() == Error::Kind::Degenerate ? kExitDegenerate : kExitInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace segreward::cli
