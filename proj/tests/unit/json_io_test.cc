/*
 * Copyright 2026 The cfscope Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include "cfscope/json_io.h"

#include <filesystem>
#include <random>
#include <string>

#include "cfscope/status_macros.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "testing/testing.h"

namespace cfscope {
namespace {

namespace fs = std::filesystem;
using ::cfscope::testing::LoadFixture;
using ::nlohmann::json;

SegmentForest Fixture(const std::string& name) {
  return SegmentSentence(LoadFixture(name));
}

// First non-root, non-leaf, normal segment; -1 if none.
int Mergeable(const SegmentForest& forest) {
  for (const auto& [id, seg] : forest.segments()) {
    if (id != forest.root_id() && !seg.is_leaf() &&
        seg.kind == SegmentKind::kNormal) {
      return id;
    }
  }
  return -1;
}

absl::StatusOr<SegmentForest> RoundTrip(const SegmentForest& forest) {
  return ForestFromJson(json::parse(ForestToJson(forest).dump()),
                        forest.sentence_ptr());
}

TEST(JsonIoTest, ForestRoundTripOnFixtures) {
  for (const char* name : {"patient_01", "medqa_01", "medqa_02", "billsum_01",
                           "billsum_02", "fiqa_01", "multinews_01"}) {
    const SegmentForest forest = Fixture(name);
    auto back = RoundTrip(forest);
    ASSERT_TRUE(back.ok()) << name << ": " << back.status();
    EXPECT_EQ(back->segments(), forest.segments()) << name;
    EXPECT_EQ(back->variable_ids(), forest.variable_ids());
    EXPECT_EQ(ForestToJson(*back).dump(), ForestToJson(forest).dump());
  }
}

TEST(JsonIoTest, ForestRoundTripOnRandomParses) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const SegmentForest forest =
        SegmentSentence(testing::RandomParse(rng, 2 + i % 14));
    auto back = RoundTrip(forest);
    ASSERT_TRUE(back.ok()) << back.status();
    EXPECT_EQ(back->segments(), forest.segments());
  }
}

TEST(JsonIoTest, MergeLogSurvivesRoundTrip) {
  const SegmentForest forest = Fixture("medqa_01");
  const int target = Mergeable(forest);
  ASSERT_GE(target, 0);
  auto merged = MergeBranch(forest, target);
  ASSERT_TRUE(merged.ok());
  auto back = RoundTrip(merged->forest);
  ASSERT_TRUE(back.ok()) << back.status();
  EXPECT_EQ(back->merge_log(), merged->forest.merge_log());
  auto expanded = Expand(*back, target);
  ASSERT_TRUE(expanded.ok());
  EXPECT_EQ(expanded->segments(), forest.segments());
}

TEST(JsonIoTest, ForestValidation) {
  const SegmentForest forest = Fixture("patient_01");
  json j = json::parse(ForestToJson(forest).dump());
  json twice = j;
  twice["segments"][1]["tokens"].push_back(1);
  EXPECT_EQ(ErrorCode(ForestFromJson(twice, forest.sentence_ptr()).status()),
            "InvalidForest");
  json orphan = j;
  orphan["segments"][1]["parent"] = nullptr;
  EXPECT_EQ(ErrorCode(ForestFromJson(orphan, forest.sentence_ptr()).status()),
            "InvalidForest");
  json range = j;
  range["segments"][0]["tokens"].push_back(99);
  EXPECT_EQ(ErrorCode(ForestFromJson(range, forest.sentence_ptr()).status()),
            "InvalidForest");
  json bad_kind = j;
  bad_kind["segments"][0]["kind"] = "weird";
  EXPECT_EQ(ErrorCode(ForestFromJson(bad_kind, forest.sentence_ptr()).status()),
            "InvalidJson");
  EXPECT_EQ(ErrorCode(ForestFromJson(json::object(), forest.sentence_ptr())
                          .status()),
            "InvalidJson");
}

TEST(JsonIoTest, CounterfactualLine) {
  Counterfactual cf;
  cf.vector.inclusion = {1, 0, 1};
  cf.vector.choice = {0, 0, 2};
  cf.text = "A \"quoted\" text.";
  cf.word_count = 3;
  const OrderedJson j = CounterfactualToJson("cf7", cf);
  EXPECT_EQ(j.dump(),
            R"({"id":"cf7","bits":"101","choices":[0,0,2],)"
            R"("text":"A \"quoted\" text.","word_count":3})");
  auto back = CounterfactualFromJson(json::parse(j.dump()));
  ASSERT_TRUE(back.ok());
  EXPECT_EQ(back->first, "cf7");
  EXPECT_EQ(back->second.vector, cf.vector);
  EXPECT_EQ(back->second.text, cf.text);
  json bad = json::parse(j.dump());
  bad["bits"] = "10x";
  EXPECT_EQ(ErrorCode(CounterfactualFromJson(bad).status()), "InvalidJson");
}

TEST(JsonIoTest, EvaluatorJson) {
  const Evaluator ev{Operator::kSemanticEqual, "the drug", "drug"};
  EXPECT_EQ(EvaluatorToJson(ev).dump(),
            R"({"name":"drug","operator":"SEMANTICEQUAL","argument":"the drug"})");
  EXPECT_EQ(*EvaluatorFromJson(json::parse(EvaluatorToJson(ev).dump())), ev);
  EXPECT_EQ(ErrorCode(EvaluatorFromJson(json{{"name", "x"},
                                             {"operator", "LIKE"},
                                             {"argument", "a"}})
                          .status()),
            "UnknownOperator");
  EXPECT_EQ(ErrorCode(EvaluatorFromJson(json{{"name", "x"}}).status()),
            "EvaluatorInvalid");
}

TEST(JsonIoTest, OutcomeRecordRoundTrip) {
  OutcomeRecord r;
  r.cf_id = "cf1";
  r.samples = {true, false, true};
  r.outcome = 2.0 / 3.0;
  r.requested_n = 4;
  r.raw_responses = {"a", "b", "", "c"};
  r.failures = {{2, "Transport", "HTTP 503"}};
  auto back = OutcomeRecordFromJson(json::parse(OutcomeRecordToJson(r).dump()));
  ASSERT_TRUE(back.ok());
  EXPECT_EQ(*back, r);

  OutcomeRecord failed;
  failed.cf_id = "cf2";
  failed.requested_n = 1;
  failed.raw_responses = {""};
  failed.failures = {{0, "AuthFailed", "no key"}};
  const OrderedJson fj = OutcomeRecordToJson(failed);
  EXPECT_TRUE(fj["outcome"].is_null());
  EXPECT_EQ(*OutcomeRecordFromJson(json::parse(fj.dump())), failed);
}

TEST(JsonIoTest, ShapResultRoundTripIsExact) {
  ShapResult r;
  r.phi0 = 0.1;
  r.phi = {1.0 / 3.0, -2e-17, 0.0};
  r.segment_ids = {1, 2, 5};
  r.non_identifiable = {5};
  r.condition_estimate = 12.5;
  r.residual_norm = 1e-12;
  r.rows = 9;
  const std::string text = ShapResultToJson(r).dump(2);
  auto back = ShapResultFromJson(json::parse(text));
  ASSERT_TRUE(back.ok());
  EXPECT_EQ(back->phi, r.phi);
  EXPECT_EQ(back->phi0, r.phi0);
  EXPECT_EQ(ShapResultToJson(*back).dump(2), text);
  EXPECT_EQ(json::parse(text)["v"], 1);
}

TEST(JsonIoTest, SpaceViewForPatient) {
  const DocumentSpace space = DocumentSpace::FromForest(Fixture("patient_01"));
  const OrderedJson view = SpaceViewJson(space);
  EXPECT_EQ(view["segments"].size(), 7u);
  EXPECT_EQ(view["segments"][0]["id"], 0);
  EXPECT_TRUE(view["segments"][0]["parent"].is_null());
  EXPECT_EQ(view["segments"][0]["bit"], -1);
  EXPECT_EQ(view["segments"][0]["text"], "The patient reports.");
  EXPECT_EQ(view["dimension"], 6);
  for (const auto& seg : view["segments"]) {
    for (const auto& span : seg["spans"]) {
      EXPECT_LT(span[0].get<int>(), span[1].get<int>());
      EXPECT_LE(span[1].get<size_t>(), space.text().size());
    }
  }
}

TEST(JsonIoTest, DocumentSpaceRoundTrip) {
  const SegmentForest a = Fixture("medqa_01");
  const SegmentForest patient = Fixture("patient_01");
  auto merged = MergeBranch(patient, Mergeable(patient));
  ASSERT_TRUE(merged.ok());
  const SegmentForest b = merged->forest;
  const std::string text = "  " + a.sentence().original_text() + "\n\n" +
                           b.sentence().original_text() + " ";
  auto space = DocumentSpace::Create(
      text, {{a, false, 0}, {b, true, 100}});
  ASSERT_TRUE(space.ok()) << space.status();
  const std::string dumped = DocumentSpaceToJson(*space).dump();
  auto back = DocumentSpaceFromJson(json::parse(dumped));
  ASSERT_TRUE(back.ok()) << back.status();
  EXPECT_EQ(back->text(), text);
  EXPECT_EQ(back->variable_ids(), space->variable_ids());
  EXPECT_EQ(back->sentence(1).forest.merge_log(), b.merge_log());
  EXPECT_EQ(DocumentSpaceToJson(*back).dump(), dumped);
  EXPECT_EQ(back->Count().value, space->Count().value);
}

TEST(JsonIoTest, JsonLines) {
  const std::string text = ToJsonLines({OrderedJson{{"a", 1}}, OrderedJson{{"b", 2}}});
  EXPECT_EQ(text, "{\"a\":1}\n{\"b\":2}\n");
  auto docs = ParseJsonLines(text + "\n");
  ASSERT_TRUE(docs.ok());
  EXPECT_EQ(docs->size(), 2u);
  auto bad = ParseJsonLines("{}\n{oops\n");
  EXPECT_EQ(ErrorCode(bad.status()), "InvalidJson");
  EXPECT_THAT(std::string(bad.status().message()), ::testing::HasSubstr("line 2"));
}

TEST(JsonIoTest, AtomicFileWrite) {
  const fs::path dir = fs::temp_directory_path() /
                       ("cfscope_json_io_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  const fs::path file = dir / "a" / "b.json";
  ASSERT_TRUE(WriteFileAtomic(file, "one").ok());
  ASSERT_TRUE(WriteFileAtomic(file, "two").ok());
  EXPECT_EQ(*ReadFileToString(file), "two");
  int entries = 0;
  for (const auto& e : fs::directory_iterator(file.parent_path())) {
    (void)e;
    ++entries;
  }
  EXPECT_EQ(entries, 1);
  EXPECT_EQ(ErrorCode(ReadFileToString(dir / "missing").status()),
            "FileUnreadable");
  fs::remove_all(dir);
}

}  // namespace
}  // namespace cfscope
