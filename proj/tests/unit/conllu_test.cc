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


#include "cfscope/conllu.h"

#include <random>

#include "cfscope/status_macros.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "testing/testing.h"

namespace cfscope {
namespace {

using ::testing::ElementsAre;
using ::testing::Field;

std::vector<std::string> Codes(const std::vector<TreeDiagnostic>& diags) {
  std::vector<std::string> out;
  for (const auto& d : diags) out.push_back(d.code);
  return out;
}

TEST(ParseConllu, MinimalBlock) {
  auto blocks = ParseConllu(
      "1\tHi\t_\t_\t_\t_\t0\troot\t_\tSpaceAfter=No\n"
      "2\t!\t_\t_\t_\t_\t1\tpunct\t_\t_\n");
  ASSERT_EQ(blocks.size(), 1u);
  ASSERT_TRUE(blocks[0].parse.ok()) << blocks[0].parse.status();
  const SentenceParse& p = *blocks[0].parse;
  EXPECT_EQ(p.size(), 2);
  EXPECT_EQ(p.root(), 1);
  EXPECT_EQ(p.original_text(), "Hi!");
}

TEST(ParseConllu, SkipsCommentsRangesAndEmptyNodes) {
  auto parses = ParseConlluStrict(
      "# sent_id = 1\n"
      "# text = I can't.\n"
      "1\tI\t_\t_\t_\t_\t3\tnsubj\t_\t_\n"
      "2-3\tcan't\t_\t_\t_\t_\t_\t_\t_\t_\n"
      "2\tca\t_\t_\t_\t_\t3\taux\t_\tSpaceAfter=No\n"
      "3\tn't\t_\t_\t_\t_\t0\troot\t_\tSpaceAfter=No\n"
      "3.1\tx\t_\t_\t_\t_\t_\t_\t_\t_\n"
      "4\t.\t_\t_\t_\t_\t3\tpunct\t_\tSpaceAfter=No\n");
  ASSERT_TRUE(parses.ok()) << parses.status();
  ASSERT_EQ(parses->size(), 1u);
  EXPECT_EQ((*parses)[0].size(), 4);
  EXPECT_EQ((*parses)[0].original_text(), "I can't.");
}

TEST(ParseConllu, CycleDetected) {
  auto blocks = ParseConllu(
      "1\ta\t_\t_\t_\t_\t2\tdep\t_\t_\n"
      "2\tb\t_\t_\t_\t_\t1\tdep\t_\t_\n");
  ASSERT_EQ(blocks.size(), 1u);
  EXPECT_EQ(ErrorCode(blocks[0].parse.status()), "CycleDetected");
}

TEST(ParseConllu, MalformedLineDoesNotAbortBatch) {
  auto blocks = ParseConllu(
      "1\tbad\tline\n"
      "\n"
      "1\tOk\t_\t_\t_\t_\t0\troot\t_\t_\n");
  ASSERT_EQ(blocks.size(), 2u);
  EXPECT_EQ(ErrorCode(blocks[0].parse.status()), "MalformedLine");
  EXPECT_TRUE(blocks[1].parse.ok());
  EXPECT_EQ(blocks[1].first_line, 3);
}

TEST(ParseConllu, NonContiguousIds) {
  auto blocks = ParseConllu(
      "1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n"
      "3\tb\t_\t_\t_\t_\t1\tdep\t_\t_\n");
  EXPECT_EQ(ErrorCode(blocks[0].parse.status()), "NonContiguousIds");
}

TEST(ParseConllu, StrictReportsFirstError) {
  auto parses = ParseConlluStrict(
      "1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n\n"
      "1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n"
      "2\tb\t_\t_\t_\t_\t0\troot\t_\t_\n");
  EXPECT_EQ(ErrorCode(parses.status()), "MultipleRoots");
}

TEST(ParseConllu, MedqaFixture) {
  SentenceParse p = testing::LoadFixture("medqa_01");
  // Hyphenated compounds stay single tokens in this fixture.
  EXPECT_EQ(p.size(), 14);
  EXPECT_EQ(p.original_text(),
            "A 23-year-old pregnant woman at 22 weeks gestation presents with "
            "burning upon urination.");
  EXPECT_TRUE(ValidateTree(p).empty());
}

TEST(ValidateTree, MultipleRoots) {
  std::vector<Token> tokens = {{1, "a", "_", "_", 0, "root", true},
                               {2, "b", "_", "_", 0, "root", true}};
  EXPECT_THAT(Codes(ValidateTree(tokens)), ElementsAre("MultipleRoots"));
}

TEST(ValidateTree, DanglingHead) {
  std::vector<Token> tokens = {{1, "a", "_", "_", 0, "root", true},
                               {2, "b", "_", "_", 7, "dep", true}};
  auto diags = ValidateTree(tokens);
  ASSERT_THAT(Codes(diags), ::testing::Contains("DanglingHead"));
  EXPECT_THAT(diags, ::testing::Contains(Field(&TreeDiagnostic::token, 2)));
}

TEST(ValidateTree, ListsEveryViolation) {
  std::vector<Token> tokens = {{1, "a", "_", "_", 2, "dep", true},
                               {2, "b", "_", "_", 1, "dep", true},
                               {3, "", "_", "_", 9, "dep", true}};
  auto codes = Codes(ValidateTree(tokens));
  EXPECT_THAT(codes, ::testing::IsSupersetOf(
                         {"CycleDetected", "NoRoot", "DanglingHead",
                          "EmptySurface"}));
}

TEST(ValidateTree, ValidFixturesAreClean) {
  for (const char* name :
       {"medqa_01", "medqa_02", "billsum_01", "billsum_02", "multinews_01",
        "fiqa_01", "fiqa_02", "tinytextbooks_01", "tinytextbooks_02",
        "patient_01"}) {
    EXPECT_TRUE(ValidateTree(testing::LoadFixture(name)).empty()) << name;
  }
}

TEST(Serialize, RoundTripRandomParses) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    SentenceParse p = testing::RandomParse(rng, 1 + trial % 15);
    auto back = ParseConlluStrict(SerializeConllu(p));
    ASSERT_TRUE(back.ok()) << back.status();
    ASSERT_EQ(back->size(), 1u);
    EXPECT_EQ((*back)[0].original_text(), p.original_text());
    EXPECT_EQ((*back)[0], p);
  }
}

TEST(Serialize, OffsetsCoverSurfaces) {
  SentenceParse p = testing::LoadFixture("multinews_01");
  for (int i = 1; i <= p.size(); ++i) {
    EXPECT_EQ(p.original_text().substr(p.char_start(i),
                                       p.char_end(i) - p.char_start(i)),
              p.token(i).surface);
  }
}

}  // namespace
}  // namespace cfscope
