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


#include "cfscope/run_executor.h"

#include <atomic>
#include <filesystem>
#include <string>

#include "absl/strings/match.h"
#include "absl/strings/str_cat.h"
#include "cfscope/status_macros.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "testing/testing.h"

namespace cfscope {
namespace {

namespace fs = std::filesystem;
using ::cfscope::testing::LoadFixture;
using ::cfscope::testing::StubLlm;

// Deterministic model: answers depend only on the prompt and sample index.
absl::StatusOr<std::string> Oracle(const CompletionRequest& r) {
  if (absl::StrContains(r.prompt, "intense")) {
    return std::string(r.sample_index % 2 == 0 ? "Pain is the issue."
                                               : "Unclear.");
  }
  return std::string("Sleep is the issue.");
}

class RunExecutorTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            absl::StrCat("cfscope_run_", ::getpid(), "_",
                         ::testing::UnitTest::GetInstance()
                             ->current_test_info()
                             ->name());
    fs::remove_all(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  RunInput PatientInput() {
    RunInput in;
    in.space = DocumentSpace::FromForest(
        SegmentSentence(LoadFixture("patient_01")));
    in.prompt_template = "Patient note: {input}\nMain complaint?";
    in.evaluators = {{Operator::kContain, "pain", "pain"},
                     {Operator::kContain, "sleep", "sleep"}};
    in.model = "stub";
    return in;
  }

  fs::path root_;
};

std::map<std::string, std::string> ReadDir(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    files[e.path().filename().string()] = *ReadFileToString(e.path());
  }
  return files;
}

TEST_F(RunExecutorTest, PatientRunWithStub) {
  StubLlm model(Oracle);
  const RunInput in = PatientInput();
  ASSERT_TRUE(ExecuteRun(in, root_ / "a", model).ok());
  const auto files = ReadDir(root_ / "a");
  EXPECT_THAT(files, ::testing::SizeIs(8));
  for (const char* name :
       {"config.json", "space.json", "counterfactuals.jsonl", "status.json",
        "outcomes_pain.jsonl", "outcomes_sleep.jsonl", "shap_pain.json",
        "shap_sleep.json"}) {
    EXPECT_TRUE(files.count(name)) << name;
  }
  auto a = LoadRunArtifact(root_ / "a");
  ASSERT_TRUE(a.ok()) << a.status();
  EXPECT_EQ(a->progress.status, RunStatus::kDone);
  EXPECT_EQ(a->counterfactuals.size(), in.space.Count().value);
  EXPECT_EQ(model.calls(), static_cast<int>(5 * a->counterfactuals.size()));
  for (const OutcomeRecord& r : a->outcomes["sleep"]) {
    EXPECT_EQ(r.samples.size(), 5u);
    EXPECT_THAT(r.outcome, ::testing::AnyOf(0.0, 1.0));
  }
  for (size_t i = 0; i < a->counterfactuals.size(); ++i) {
    const bool intense =
        absl::StrContains(a->counterfactuals[i].second.text, "intense");
    EXPECT_DOUBLE_EQ(a->outcomes["pain"][i].outcome, intense ? 3.0 / 5 : 0.0);
  }
  EXPECT_TRUE(a->shap["pain"].contains("phi"));
  EXPECT_EQ(a->shap["pain"]["segment_ids"].get<std::vector<int>>(),
            in.space.variable_ids());
  // The full text is among the counterfactuals.
  EXPECT_EQ(a->counterfactuals.back().second.text, in.space.text());
}

TEST_F(RunExecutorTest, RunsAreByteIdentical) {
  StubLlm m1(Oracle), m2(Oracle);
  RunInput in = PatientInput();
  in.config.seed = 11;
  in.config.cap = 10;  // Forces sampling.
  in.config.sample = 10;
  ASSERT_TRUE(ExecuteRun(in, root_ / "a", m1).ok());
  ASSERT_TRUE(ExecuteRun(in, root_ / "b", m2).ok());
  EXPECT_EQ(ReadDir(root_ / "a"), ReadDir(root_ / "b"));
  auto a = LoadRunArtifact(root_ / "a");
  ASSERT_TRUE(a.ok());
  EXPECT_EQ(a->counterfactuals.size(), 10u);

  // Attribution recomputed from stored outcomes is unchanged.
  const std::string before = *ReadFileToString(root_ / "a" / "shap_pain.json");
  ASSERT_TRUE(RecomputeShap(root_ / "a").ok());
  EXPECT_EQ(*ReadFileToString(root_ / "a" / "shap_pain.json"), before);
}

TEST_F(RunExecutorTest, OutcomeIsTrueFraction) {
  for (int k = 0; k <= 5; ++k) {
    StubLlm model([k](const CompletionRequest& r) {
      return std::string(r.sample_index < k ? "yes" : "no");
    });
    RunInput in = PatientInput();
    in.evaluators = {{Operator::kEqual, "yes", "yes"}};
    const fs::path dir = root_ / absl::StrCat("k", k);
    ASSERT_TRUE(ExecuteRun(in, dir, model).ok());
    auto a = LoadRunArtifact(dir);
    ASSERT_TRUE(a.ok());
    for (const OutcomeRecord& r : a->outcomes["yes"]) {
      EXPECT_EQ(r.outcome, k / 5.0);
    }
  }
}

TEST_F(RunExecutorTest, DeadGatewayFailsWithPartialArtifact) {
  StubLlm model([](const CompletionRequest&) -> absl::StatusOr<std::string> {
    return MakeError(absl::StatusCode::kUnauthenticated, "AuthFailed", "no key");
  });
  ASSERT_TRUE(ExecuteRun(PatientInput(), root_ / "a", model).ok());
  auto a = LoadRunArtifact(root_ / "a");
  ASSERT_TRUE(a.ok()) << a.status();
  EXPECT_EQ(a->progress.status, RunStatus::kFailed);
  EXPECT_EQ(a->progress.error_code, "GatewayExhausted");
  EXPECT_THAT(a->progress.error_message, ::testing::HasSubstr("AuthFailed"));
  EXPECT_FALSE(a->counterfactuals.empty());
  EXPECT_TRUE(a->outcomes["pain"].empty());
  auto rows = ResultRows(*a, "pain");
  ASSERT_TRUE(rows.ok());
  for (const ResultRow& row : *rows) EXPECT_FALSE(row.outcome.has_value());
}

TEST_F(RunExecutorTest, FailureAfterFirstBatchKeepsCompletedOutcomes) {
  std::atomic<int> calls{0};
  StubLlm model([&](const CompletionRequest& r) -> absl::StatusOr<std::string> {
    if (calls++ >= kRunBatchSize * 5) {
      return MakeError(absl::StatusCode::kUnavailable, "Transport", "down");
    }
    return Oracle(r);
  });
  RunInput in;
  in.space =
      DocumentSpace::FromForest(SegmentSentence(LoadFixture("billsum_01")));
  in.prompt_template = "{input}";
  in.evaluators = {{Operator::kContain, "issue", "issue"}};
  in.config.n = 5;
  ASSERT_GT(in.space.Count().value, static_cast<uint64_t>(kRunBatchSize));
  ASSERT_TRUE(ExecuteRun(in, root_ / "a", model).ok());
  auto a = LoadRunArtifact(root_ / "a");
  ASSERT_TRUE(a.ok());
  EXPECT_EQ(a->progress.status, RunStatus::kFailed);
  EXPECT_EQ(a->progress.done, kRunBatchSize);
  EXPECT_EQ(a->outcomes["issue"].size(), static_cast<size_t>(kRunBatchSize));
  EXPECT_FALSE(a->shap.count("issue"));
}

TEST_F(RunExecutorTest, SampleFailuresAreRecorded) {
  StubLlm model([](const CompletionRequest& r) -> absl::StatusOr<std::string> {
    if (r.sample_index == 4) {
      return MakeError(absl::StatusCode::kResourceExhausted, "RateLimited", "429");
    }
    return std::string("yes");
  });
  RunInput in = PatientInput();
  in.evaluators = {{Operator::kEqual, "yes", "yes"}};
  ASSERT_TRUE(ExecuteRun(in, root_ / "a", model).ok());
  auto a = LoadRunArtifact(root_ / "a");
  ASSERT_TRUE(a.ok());
  const OutcomeRecord& r = a->outcomes["yes"][0];
  EXPECT_EQ(r.effective_n(), 4);
  EXPECT_EQ(r.requested_n, 5);
  EXPECT_EQ(r.raw_responses, (std::vector<std::string>{"yes", "yes", "yes",
                                                       "yes", ""}));
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].code, "RateLimited");
}

TEST_F(RunExecutorTest, StopFlagLeavesRunResumable) {
  StubLlm model(Oracle);
  std::atomic<bool> stop{true};
  const absl::Status s = ExecuteRun(PatientInput(), root_ / "a", model, nullptr,
                                    &stop);
  EXPECT_TRUE(absl::IsCancelled(s));
  auto a = LoadRunArtifact(root_ / "a");
  ASSERT_TRUE(a.ok());
  EXPECT_EQ(a->progress.status, RunStatus::kRunning);
  EXPECT_EQ(model.calls(), 0);
}

TEST_F(RunExecutorTest, FrozenSentencesAppearVerbatimInEveryPrompt) {
  const SentenceParse q = LoadFixture("medqa_01");
  const SentenceParse p = LoadFixture("patient_01");
  const std::string text = q.original_text() + " " + p.original_text();
  const SegmentForest fq = SegmentSentence(q);
  const SegmentForest fp = SegmentSentence(p);
  auto space = DocumentSpace::Create(
      text, {{fq, true, 0}, {fp, false, DocumentSpace::DefaultBases({fq, fp})[1]}});
  ASSERT_TRUE(space.ok());
  StubLlm model(Oracle);
  RunInput in = PatientInput();
  in.space = *space;
  ASSERT_TRUE(ExecuteRun(in, root_ / "a", model).ok());
  for (const CompletionRequest& r : model.requests()) {
    EXPECT_TRUE(absl::StrContains(r.prompt, q.original_text())) << r.prompt;
    EXPECT_TRUE(absl::StartsWith(r.prompt, "Patient note: "));
  }
}

TEST_F(RunExecutorTest, LogicEvaluatorUsesJudge) {
  StubLlm model(Oracle);
  StubLlm judge([](const CompletionRequest& r) {
    return std::string(absl::StrContains(r.prompt, "Premise: Pain") ? "YES"
                                                                    : "NO");
  });
  RunInput in = PatientInput();
  in.evaluators = {{Operator::kEntail, "The patient is in pain.", "pain"}};
  ASSERT_TRUE(ExecuteRun(in, root_ / "a", model, &judge).ok());
  auto a = LoadRunArtifact(root_ / "a");
  ASSERT_TRUE(a.ok());
  EXPECT_GT(judge.calls(), 0);
  for (const CompletionRequest& r : judge.requests()) {
    EXPECT_EQ(r.temperature, 0.0);
  }
  for (size_t i = 0; i < a->counterfactuals.size(); ++i) {
    const bool intense =
        absl::StrContains(a->counterfactuals[i].second.text, "intense");
    EXPECT_DOUBLE_EQ(a->outcomes["pain"][i].outcome, intense ? 3.0 / 5 : 0.0);
  }
}

TEST_F(RunExecutorTest, InputValidation) {
  StubLlm model(Oracle);
  RunInput in = PatientInput();
  in.prompt_template = "no slot";
  EXPECT_EQ(ErrorCode(ExecuteRun(in, root_ / "a", model)), "TemplateInvalid");
  in = PatientInput();
  in.evaluators.clear();
  EXPECT_EQ(ErrorCode(ExecuteRun(in, root_ / "a", model)), "NoEvaluators");
  in = PatientInput();
  in.config.n = 0;
  EXPECT_EQ(ErrorCode(ExecuteRun(in, root_ / "a", model)), "InvalidRunConfig");
  EXPECT_EQ(ErrorCode(LoadRunArtifact(root_ / "missing").status()),
            "UnknownRun");
  EXPECT_EQ(ErrorCode(RunConfigFromJson(nlohmann::json{{"n", "five"}}).status()),
            "InvalidRunConfig");
}

}  // namespace
}  // namespace cfscope
