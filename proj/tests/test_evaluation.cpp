#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "segreward/error.hpp"
#include "segreward/evaluation.hpp"
#include "support.hpp"

using namespace segreward;

namespace {

const std::string kGood =
    "<think>focal opacity</think><answer>The lesion is located at [[8,8,18,18]]. <seg></answer>";

EvalRecord base(const std::string& id, const std::string& anatomy,
                const std::string& modality) {
  EvalRecord r;
  r.sample_id = id;
  r.gt_mask = testing::rect_mask(32, 32, 8, 8, 18, 18);
  r.gt_boxes = {BBox(8, 8, 18, 18)};
  r.anatomy = anatomy;
  r.modality = modality;
  r.output_text = kGood;
  return r;
}

// 7 samples at Dice 0.5 (10x10 prediction shifted by 5 columns) and 3
// failures: bad format, missing mask, disjoint mask.
std::vector<EvalRecord> ten_sample_fixture() {
  std::vector<EvalRecord> out;
  const char* anat[] = {"Lung", "Lung", "Head", "Head", "Abdomen", "Lung", "Eye"};
  const char* mods[] = {"CT", "CT", "MRI", "MRI", "CT", "X-Ray", "OCT"};
  for (int i = 0; i < 7; ++i) {
    EvalRecord r = base("ok" + std::to_string(i), anat[i], mods[i]);
    r.pred_mask = testing::rect_mask(32, 32, 8, 13, 18, 23);
    out.push_back(r);
  }
  EvalRecord fmt = base("f0", "Lung", "CT");
  fmt.output_text = "<answer>The lesion is located at [[8,8,18,18]]. <seg></answer>";
  fmt.pred_mask = fmt.gt_mask;
  out.push_back(fmt);
  EvalRecord missing = base("f1", "Head", "MRI");
  out.push_back(missing);
  EvalRecord disjoint = base("f2", "Abdomen", "CT");
  disjoint.pred_mask = testing::rect_mask(32, 32, 20, 20, 30, 30);
  out.push_back(disjoint);
  return out;
}

}  // namespace

TEST_CASE("failure classification") {
  EvalRecord r = base("a", "Lung", "CT");
  r.pred_mask = r.gt_mask;
  CHECK_FALSE(classify_failure(r).failed());

  EvalRecord fmt = r;
  fmt.output_text = "<think>x</think><answer>[[8,8,18,18]]</answer>";
  CHECK(classify_failure(fmt).kind == FailureKind::Format);
  CHECK(classify_failure(fmt).reason == "missing_seg");

  EvalRecord none = r;
  none.pred_mask.reset();
  CHECK(classify_failure(none).kind == FailureKind::Grounding);
  CHECK(classify_failure(none).reason == "missing_mask");

  EvalRecord empty = r;
  empty.pred_mask = BinaryMask(32, 32);
  CHECK(classify_failure(empty).reason == "zero_dice");

  EvalRecord shape = r;
  shape.pred_mask = BinaryMask(16, 16);
  CHECK(classify_failure(shape).reason == "shape_mismatch");

  EvalRecord unreadable = r;
  unreadable.pred_mask.reset();
  unreadable.load_error = "bad png";
  CHECK(classify_failure(unreadable).reason == "mask_unreadable");

  EvalRecord no_gt = r;
  no_gt.gt_mask = BinaryMask(32, 32);
  CHECK_THROWS_AS(score_record(no_gt), Error);
}

TEST_CASE("ten sample fold") {
  const auto recs = ten_sample_fixture();
  REQUIRE(dice(*recs[0].pred_mask, recs[0].gt_mask) == 0.5);
  const EvalReport rep = evaluate(recs);
  CHECK(rep.overall.n == 10);
  CHECK(std::abs(rep.overall.m_dice - 0.35) < 1e-12);
  CHECK(std::abs(rep.overall.failure_rate - 0.3) < 1e-12);
  CHECK(std::abs(rep.overall.m_iou - 7.0 / 30.0) < 1e-12);

  const std::string json = render_report(rep, ReportFormat::Json);
  CHECK(json.find("\"m_dice_pct\": \"35.00\"") != std::string::npos);
  CHECK(json.find("\"failure_rate_pct\": \"30.00\"") != std::string::npos);
  const std::string md = render_report(rep, ReportFormat::Markdown);
  CHECK(md.find("35.00") != std::string::npos);
  CHECK(md.find("30.00") != std::string::npos);

  for (const auto* groups : {&rep.by_anatomy, &rep.by_modality}) {
    double dice_sum = 0, iou_sum = 0, fail_sum = 0;
    std::size_t n = 0;
    for (const auto& [k, g] : *groups) {
      dice_sum += g.m_dice * g.n;
      iou_sum += g.m_iou * g.n;
      fail_sum += g.failure_rate * g.n;
      n += g.n;
    }
    CHECK(n == 10);
    CHECK(std::abs(dice_sum / n - rep.overall.m_dice) < 1e-9);
    CHECK(std::abs(iou_sum / n - rep.overall.m_iou) < 1e-9);
    CHECK(std::abs(fail_sum / n - rep.overall.failure_rate) < 1e-9);
  }
}

TEST_CASE("shuffled input gives identical reports") {
  auto recs = ten_sample_fixture();
  const EvalVocabulary vocab{{"Lung", "Head", "Abdomen", "Eye", "Skin"},
                             {"CT", "MRI", "X-Ray", "OCT", "Fundus"}};
  const EvalReport ref = evaluate(recs, &vocab);
  std::vector<std::string> rendered;
  for (auto f : {ReportFormat::Json, ReportFormat::Csv, ReportFormat::Markdown})
    rendered.push_back(render_report(ref, f));
  auto g = testing::rng(71);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(recs.begin(), recs.end(), g);
    const EvalReport rep = evaluate(recs, &vocab);
    CHECK(rep == ref);
    CHECK(render_report(rep, ReportFormat::Json) == rendered[0]);
    CHECK(render_report(rep, ReportFormat::Csv) == rendered[1]);
    CHECK(render_report(rep, ReportFormat::Markdown) == rendered[2]);
  }
}

TEST_CASE("empty groups are footnoted") {
  const EvalVocabulary vocab{{"Lung", "Skin"}, {"CT", "Fundus"}};
  const EvalReport rep = evaluate(ten_sample_fixture(), &vocab);
  CHECK(rep.empty_anatomies == std::vector<std::string>{"Skin"});
  CHECK(rep.empty_modalities == std::vector<std::string>{"Fundus"});
  CHECK(rep.by_anatomy.count("Skin") == 0);
  const std::string md = render_report(rep, ReportFormat::Markdown);
  CHECK(md.find("Skin") != std::string::npos);
  const std::string csv = render_report(rep, ReportFormat::Csv);
  CHECK(csv.find("# omitted anatomy: Skin") != std::string::npos);
}

TEST_CASE("json and csv reports round trip") {
  const EvalVocabulary vocab{{"Lung", "Skin"}, {"CT", "Fundus"}};
  auto recs = ten_sample_fixture();
  auto g = testing::rng(72);
  for (int i = 0; i < 30; ++i) {
    EvalRecord r = base("rand" + std::to_string(i), i % 2 ? "Lung" : "Neck", "CT");
    r.pred_mask = testing::random_mask(g, 32, 32, testing::uniform(g, 0.05, 0.6));
    recs.push_back(r);
  }
  const EvalReport rep = evaluate(recs, &vocab);
  CHECK(parse_report_json(render_report(rep, ReportFormat::Json)) == rep);
  CHECK(parse_report_csv(render_report(rep, ReportFormat::Csv)) == rep);
  CHECK_THROWS_AS(parse_report_format("xml"), Error);
}

TEST_CASE("duplicate sample ids are rejected") {
  auto recs = ten_sample_fixture();
  recs.push_back(recs.front());
  CHECK_THROWS_AS(evaluate(recs), Error);
  CHECK_THROWS_AS(evaluate({}), Error);
}
