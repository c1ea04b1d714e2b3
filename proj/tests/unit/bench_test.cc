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


#include "cfscope/bench.h"

#include <mutex>
#include <string>
#include <vector>

#include "absl/strings/match.h"
#include "cfscope/status_macros.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "testing/mock_languagetool.h"
#include "testing/testing.h"

namespace cfscope {
namespace {

using ::cfscope::testing::MockGrammarRules;
using ::cfscope::testing::MockLanguageTool;
using ::cfscope::testing::SourcePath;

// Returns fixed rule lists keyed by text; unknown texts are clean.
class TableChecker : public GrammarChecker {
 public:
  explicit TableChecker(std::map<std::string, std::vector<std::string>> table)
      : table_(std::move(table)) {}
  absl::StatusOr<std::vector<std::string>> Check(
      absl::string_view text) override {
    auto it = table_.find(std::string(text));
    if (it == table_.end()) return std::vector<std::string>{};
    if (it->second == std::vector<std::string>{"!fail"}) {
      return MakeError(absl::StatusCode::kUnavailable, "CheckerUnavailable",
                       "scripted");
    }
    return it->second;
  }

 private:
  std::map<std::string, std::vector<std::string>> table_;
};

TEST(NewErrorCountTest, MultisetDifference) {
  EXPECT_EQ(NewErrorCount({}, {}), 0);
  EXPECT_EQ(NewErrorCount({"A"}, {"A"}), 0);
  EXPECT_EQ(NewErrorCount({"A"}, {"A", "A"}), 1);
  EXPECT_EQ(NewErrorCount({"A", "A", "B"}, {"A", "C", "B", "C"}), 2);
  EXPECT_EQ(NewErrorCount({"A", "B"}, {}), 0);
  EXPECT_EQ(NewErrorCount({"B"}, {"A"}), 1);
}

TEST(GrammarNewErrorsTest, ScriptedChecker) {
  TableChecker checker({{"proto", {"X", "Y"}}, {"cf", {"Y", "Z", "Z"}}});
  EXPECT_EQ(*GrammarNewErrors("proto", "cf", checker), 2);
  EXPECT_EQ(*GrammarNewErrors("proto", "proto", checker), 0);
}

TEST(MockLanguageToolTest, Rules) {
  EXPECT_THAT(MockGrammarRules("A woman presents."), ::testing::IsEmpty());
  EXPECT_THAT(MockGrammarRules("woman presents ."),
              ::testing::ElementsAre("UPPERCASE_SENTENCE_START",
                                     "COMMA_PARENTHESIS_WHITESPACE"));
  EXPECT_THAT(MockGrammarRules("An woman saw a egg."),
              ::testing::ElementsAre("EN_A_VS_AN", "EN_A_VS_AN"));
  EXPECT_THAT(MockGrammarRules(", She left,, and and."),
              ::testing::ElementsAre("PUNCTUATION_PARAGRAPH_START",
                                     "DOUBLE_PUNCTUATION",
                                     "ENGLISH_WORD_REPEAT_RULE",
                                     "DANGLING_CONJUNCTION"));
}

TEST(LanguageToolClientTest, SpeaksProtocol) {
  MockLanguageTool lt;
  auto client = LanguageToolClient::Create(lt.base_url());
  ASSERT_TRUE(client.ok());
  auto ids = (*client)->Check("a apple fell .");
  ASSERT_TRUE(ids.ok()) << ids.status();
  EXPECT_THAT(*ids, ::testing::ElementsAre("UPPERCASE_SENTENCE_START",
                                           "EN_A_VS_AN",
                                           "COMMA_PARENTHESIS_WHITESPACE"));
  EXPECT_EQ(lt.requests(), 1);

  const std::string proto =
      "A 23-year-old pregnant woman at 22 weeks gestation presents with "
      "burning upon urination.";
  EXPECT_EQ(*GrammarNewErrors(proto, proto, **client), 0);
  EXPECT_GE(*GrammarNewErrors(
                proto, "A 23-year-old pregnant woman at weeks gestation "
                       "presents with with burning upon urination .",
                **client),
            1);
}

TEST(LanguageToolClientTest, UnreachableIsCheckerUnavailable) {
  auto client = LanguageToolClient::Create("http://127.0.0.1:1");
  ASSERT_TRUE(client.ok());
  EXPECT_EQ(ErrorCode((*client)->Check("x").status()), "CheckerUnavailable");
  EXPECT_EQ(ErrorCode(LanguageToolClient::Create("nope").status()),
            "InvalidConfig");
}

TEST(LoadCorpusTest, ReadsFixtureDirectoryInNameOrder) {
  auto corpus = LoadCorpus(SourcePath("fixtures"));
  ASSERT_TRUE(corpus.ok()) << corpus.status();
  ASSERT_EQ(corpus->size(), 10u);
  EXPECT_EQ((*corpus)[0].name, "billsum_01");
  EXPECT_EQ((*corpus)[9].name, "tinytextbooks_02");
  EXPECT_EQ(ErrorCode(LoadCorpus("/nonexistent/dir").status()),
            "CorpusUnreadable");
}

TEST(RunBenchmarkTest, FixtureCorpusIsFullyGrammatical) {
  auto corpus = LoadCorpus(SourcePath("fixtures"));
  ASSERT_TRUE(corpus.ok());
  MockLanguageTool lt;
  auto checker = LanguageToolClient::Create(lt.base_url());
  ASSERT_TRUE(checker.ok());
  BenchConfig config;
  config.dataset = "fixtures";
  const BenchReport report = RunBenchmark(*corpus, config, **checker);
  EXPECT_EQ(report.sentences, 10);
  EXPECT_EQ(report.failed, 0);
  for (const SentenceBench& s : report.per_sentence) {
    EXPECT_THAT(s.flagged, ::testing::IsEmpty()) << s.name;
    EXPECT_FALSE(s.sampled);
    // Distinct texts match the valid count when enumerating.
    EXPECT_EQ(static_cast<uint64_t>(s.perturbations), s.count_valid) << s.name;
  }
  EXPECT_DOUBLE_EQ(report.grammatical_rate, 1.0);
  EXPECT_GT(report.avg_perturbations_per_sentence, 1.0);
  EXPECT_GT(report.avg_sentence_length, 5.0);

  const auto j = BenchReportToJson(report);
  for (const char* key :
       {"dataset", "sentences", "avg_sentence_length",
        "avg_perturbations_per_sentence", "grammatical_rate",
        "avg_parse_sample_ms"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  const std::string md = BenchReportMarkdown(report);
  EXPECT_TRUE(absl::StartsWith(md, "| Dataset "));
  EXPECT_TRUE(absl::StrContains(md, "100.0%"));
}

TEST(RunBenchmarkTest, DeterministicAndRecordsFailures) {
  auto corpus = LoadCorpus(SourcePath("fixtures"));
  ASSERT_TRUE(corpus.ok());
  const std::string medqa = (*corpus)[4].parse.original_text();
  TableChecker checker({{medqa, {"!fail"}}, {"A woman presents.", {"NEW"}}});
  BenchConfig config;
  config.workers = 3;
  const BenchReport a = RunBenchmark(*corpus, config, checker);
  config.workers = 1;
  const BenchReport b = RunBenchmark(*corpus, config, checker);
  EXPECT_EQ(a.failed, 1);
  EXPECT_EQ(a.sentences, 9);
  EXPECT_EQ(a.grammatical_rate, b.grammatical_rate);
  EXPECT_FALSE(a.per_sentence[4].error.empty());
  EXPECT_TRUE(absl::StrContains(a.per_sentence[4].error, "CheckerUnavailable"));
}

TEST(RunBenchmarkTest, SamplesLargeSpaces) {
  auto corpus = LoadCorpus(SourcePath("fixtures"));
  ASSERT_TRUE(corpus.ok());
  TableChecker checker({});
  BenchConfig config;
  config.cap = 3;
  config.sample = 3;
  const BenchReport r = RunBenchmark(*corpus, config, checker);
  for (const SentenceBench& s : r.per_sentence) {
    EXPECT_EQ(s.sampled, s.count_valid > 3);
    EXPECT_LE(s.perturbations, 3);
  }
}

}  // namespace
}  // namespace cfscope
