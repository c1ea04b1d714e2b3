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


// Single-rule evaluators that turn model responses into Booleans, and outcome
// estimation from repeated queries.

#ifndef CFSCOPE_EVALUATOR_H_
#define CFSCOPE_EVALUATOR_H_

#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "cfscope/cf_engine.h"
#include "cfscope/llm_client.h"

namespace cfscope {

enum class Operator {
  kContain,
  kStartWith,
  kEqual,
  kEntail,
  kContradict,
  kSemanticEqual,
};

absl::string_view OperatorName(Operator op);
// Case-insensitive. Error code UnknownOperator.
absl::StatusOr<Operator> ParseOperator(absl::string_view name);
bool IsTokenOperator(Operator op);

struct Evaluator {
  Operator op = Operator::kContain;
  std::string argument;
  std::string name;
  bool operator==(const Evaluator&) const = default;
};

// Error code EvaluatorInvalid: empty argument, or a name that is not 1-64
// characters of [A-Za-z0-9_-].
absl::Status ValidateEvaluator(const Evaluator& ev);

// CONTAIN: substring; STARTWITH: prefix after leading whitespace; EQUAL:
// equality after trimming. All ASCII case-insensitive.
bool EvalToken(const Evaluator& ev, absl::string_view response);

// Judge prompt for kEntail or kContradict.
std::string JudgePrompt(Operator relation, absl::string_view premise,
                        absl::string_view hypothesis);

// The reply's last word must be YES or NO. Error code JudgeUnparseable.
absl::StatusOr<bool> ParseJudgeAnswer(absl::string_view reply);

// Response is the premise, the argument the hypothesis; SEMANTICEQUAL asks
// both directions. Judge calls run at temperature 0. Error codes:
// JudgeUnparseable, GatewayUnavailable.
absl::StatusOr<bool> EvalLogic(const Evaluator& ev, absl::string_view response,
                               LlmClient& judge);

struct SampleFailure {
  int sample_index = 0;
  std::string code;
  std::string message;
  bool operator==(const SampleFailure&) const = default;
};

struct OutcomeRecord {
  std::string cf_id;
  std::vector<bool> samples;               // Completed samples only.
  double outcome = 0.0;                    // true count / samples.size()
  std::vector<std::string> raw_responses;  // One per query; "" if it failed.
  int requested_n = 0;
  std::vector<SampleFailure> failures;

  int effective_n() const { return static_cast<int>(samples.size()); }
  bool operator==(const OutcomeRecord&) const = default;
};

// Applies `ev` to query results (index = sample index). Failed queries and
// unparseable judge replies become failures, not false samples; with no
// completed sample the record has empty `samples` and outcome 0. `judge` is
// needed only for logic operators.
absl::StatusOr<OutcomeRecord> AssembleOutcome(
    const std::string& cf_id, const Evaluator& ev,
    const std::vector<absl::StatusOr<std::string>>& responses,
    LlmClient* judge);

// AssembleOutcome, failing when no sample completed. Error code AllFailed.
absl::StatusOr<OutcomeRecord> EvaluateResponses(
    const std::string& cf_id, const Evaluator& ev,
    const std::vector<absl::StatusOr<std::string>>& responses,
    LlmClient* judge);

// Exactly one "{input}". Error code TemplateInvalid.
absl::Status ValidateTemplate(absl::string_view prompt_template);
std::string RenderPrompt(absl::string_view prompt_template,
                         absl::string_view input);

// n draws of one prompt, sample indices 0..n-1.
std::vector<absl::StatusOr<std::string>> QueryModel(const std::string& prompt,
                                                    int n, LlmClient& model);

// Renders the template, queries `model` n times and evaluates. The judge
// defaults to `model`. Error codes: AllFailed, InvalidArgument for n < 1.
absl::StatusOr<OutcomeRecord> EstimateOutcome(
    const std::string& cf_id, const Counterfactual& cf,
    absl::string_view prompt_template, const Evaluator& ev, int n,
    LlmClient& model, LlmClient* judge = nullptr);

}  // namespace cfscope

#endif  // CFSCOPE_EVALUATOR_H_
