#include <doctest.h>

#include <cmath>
#include <json.hpp>
#include <sstream>

#include "segreward/error.hpp"
#include "segreward/mask_io.hpp"
#include "segreward/session.hpp"
#include "support.hpp"

using namespace segreward;
namespace fs = std::filesystem;

TEST_CASE("session scoring matches the free functions") {
  testing::TempDir dir("session");
  const testing::Corpus c = testing::build_corpus(dir.path());
  const RewardSession s = RewardSession::open(RewardConfig{}, c.dataset);
  const BinaryMask gt = testing::rect_mask(32, 32, 8, 8, 18, 18);
  for (const auto& cs : testing::corpus_samples()) {
    if (cs.mask_kind == "none" || cs.mask_kind == "corrupt" || cs.mask_kind == "mismatch")
      continue;
    const BinaryMask pred = testing::corpus_pred_mask(cs.mask_kind);
    const SampleReward via_session = s.score(cs.id, cs.output_text, &pred);
    const RewardBreakdown direct = composite_reward(
        parse_output(cs.output_text), &pred, s.record(cs.id).boxes, gt);
    INFO(cs.id);
    CHECK_FALSE(via_session.error);
    CHECK(via_session.breakdown.total == direct.total);
    CHECK(via_session.breakdown.r_mask == direct.r_mask);
    const SampleReward via_png = s.score_sample(cs.id, cs.output_text, encode_mask(pred));
    CHECK(reward_record_json(via_png) == reward_record_json(via_session));
  }
}

TEST_CASE("session sample-level errors") {
  testing::TempDir dir("session-err");
  const testing::Corpus c = testing::build_corpus(dir.path());
  const RewardSession s = RewardSession::open(RewardConfig{}, c.dataset);
  CHECK_THROWS_AS(s.score("nope", "", nullptr), Error);
  const BinaryMask small(16, 16);
  const SampleReward mismatch = s.score("s01", testing::structured("[[8,8,18,18]]"), &small);
  CHECK(mismatch.error);
  CHECK(mismatch.breakdown.total == 0.0);
  CHECK(mismatch.breakdown.r_fmt == 1);
  const std::vector<std::uint8_t> junk = {1, 2, 3, 4};
  const SampleReward bad = s.score_sample("s01", testing::structured("[[8,8,18,18]]"), junk);
  CHECK(bad.error);
  const SampleReward none = s.score_sample("s01", testing::structured("[[8,8,18,18]]"), {});
  CHECK_FALSE(none.error);
  CHECK(none.breakdown.r_mask == -1.0);
}

TEST_CASE("group scoring") {
  testing::TempDir dir("session-group");
  const testing::Corpus c = testing::build_corpus(dir.path());
  const RewardSession s = RewardSession::open(RewardConfig{}, c.dataset);
  const std::string text = testing::structured("[[8,8,18,18]]");
  const std::vector<std::string> ids = {"s01", "s01", "s01", "s01"};
  const std::vector<std::string> texts = {text, text, "garbage", text};
  const std::vector<std::vector<std::uint8_t>> masks = {
      encode_mask(testing::corpus_pred_mask("perfect")),
      encode_mask(testing::corpus_pred_mask("half")),
      {},
      {}};
  const GroupScore g = s.score_group(ids, texts, masks);
  REQUIRE(g.samples.size() == 4);
  std::vector<double> totals;
  for (const auto& smp : g.samples) totals.push_back(smp.breakdown.total);
  CHECK(totals[0] == 5.0);
  CHECK(totals[2] == 0.0);
  CHECK(totals[3] == 1.0);
  const GroupAdvantage ref = group_advantages(totals);
  CHECK(g.advantages.advantages == ref.advantages);
  CHECK_THROWS_AS(s.score_group({"s01"}, {text}, {{}}), Error);
  CHECK_THROWS_AS(s.score_group(ids, texts, {{}}), Error);
}

TEST_CASE("prediction files") {
  const auto p = parse_predictions(
      "{\"id\":\"a\",\"output_text\":\"x\"}\n\n{\"id\":\"b\",\"output_text\":\"y\",\"pred_mask_path\":\"m.png\"}\n");
  REQUIRE(p.size() == 2);
  CHECK_FALSE(p[0].pred_mask_path);
  CHECK(*p[1].pred_mask_path == "m.png");
  try {
    parse_predictions("{\"id\":\"a\",\"output_text\":\"x\"}\n{\"id\":\"a\",\"output_text\":\"x\"}\n");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_predictions("{\"id\":\"a\"}\n"), Error);
}

TEST_CASE("session results match the cli golden records") {
  testing::TempDir dir("session-golden");
  const testing::Corpus c = testing::build_corpus(dir.path());
  const RewardSession s = RewardSession::open(RewardConfig{}, c.dataset);
  const std::string golden =
      testing::read_file(fs::path(SEGREWARD_GOLDEN_DIR) / "reward_corpus.jsonl");
  std::istringstream in(golden);
  std::string line;
  std::getline(in, line);  // header
  std::size_t compared = 0;
  for (const auto& cs : testing::corpus_samples()) {
    REQUIRE(std::getline(in, line));
    const auto expect = nlohmann::json::parse(line);
    REQUIRE(expect["id"] == cs.id);
    std::vector<std::uint8_t> bytes;
    const fs::path mask = dir / "preds" / (cs.id + ".png");
    if (fs::exists(mask)) {
      const std::string raw = testing::read_file(mask);
      bytes.assign(raw.begin(), raw.end());
    }
    const auto got = nlohmann::json::parse(reward_record_json(s.score_sample(cs.id, cs.output_text, bytes)));
    INFO(cs.id);
    CHECK(got.contains("error") == expect.contains("error"));
    for (const char* key : {"r_fmt", "r_bbox", "r_mask", "total", "dice", "f1"}) {
      if (expect[key].is_null()) {
        CHECK(got[key].is_null());
      } else {
        CHECK(std::abs(got[key].get<double>() - expect[key].get<double>()) <= 1e-12);
      }
    }
    ++compared;
  }
  CHECK(compared == 12);
}
