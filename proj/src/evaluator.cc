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


#include "cfscope/evaluator.h"

#include <algorithm>
#include <utility>

#include "absl/strings/ascii.h"
#include "absl/strings/match.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_replace.h"
#include "cfscope/status_macros.h"

namespace cfscope {
namespace {

constexpr absl::string_view kEntailTemplate =
#include "judge_entail.inc"
    ;
constexpr absl::string_view kContradictTemplate =
#include "judge_contradict.inc"
    ;

constexpr absl::string_view kInputPlaceholder = "{input}";

struct OperatorEntry {
  Operator op;
  absl::string_view name;
};

constexpr OperatorEntry kOperators[] = {
    {Operator::kContain, "CONTAIN"},       {Operator::kStartWith, "STARTWITH"},
    {Operator::kEqual, "EQUAL"},           {Operator::kEntail, "ENTAIL"},
    {Operator::kContradict, "CONTRADICT"}, {Operator::kSemanticEqual,
                                            "SEMANTICEQUAL"}};

CompletionRequest JudgeRequest(Operator relation, absl::string_view premise,
                               absl::string_view hypothesis) {
  CompletionRequest r;
  r.prompt = JudgePrompt(relation, premise, hypothesis);
  r.sample_index = 0;
  r.temperature = 0.0;
  return r;
}

absl::Status GatewayError(const absl::Status& status) {
  return MakeError(absl::StatusCode::kUnavailable, "GatewayUnavailable",
                   absl::StrCat(ErrorCode(status), ": ", status.message()));
}

}  // namespace

absl::string_view OperatorName(Operator op) {
  for (const auto& e : kOperators) {
    if (e.op == op) return e.name;
  }
  return "CONTAIN";
}

absl::StatusOr<Operator> ParseOperator(absl::string_view name) {
  const std::string upper = absl::AsciiStrToUpper(name);
  for (const auto& e : kOperators) {
    if (e.name == upper) return e.op;
  }
  return MakeError(absl::StatusCode::kInvalidArgument, "UnknownOperator",
                   absl::StrCat("unknown operator \"", name, "\""));
}

bool IsTokenOperator(Operator op) {
  return op == Operator::kContain || op == Operator::kStartWith ||
         op == Operator::kEqual;
}

absl::Status ValidateEvaluator(const Evaluator& ev) {
  if (absl::StripAsciiWhitespace(ev.argument).empty()) {
    return MakeError(absl::StatusCode::kInvalidArgument, "EvaluatorInvalid",
                     "evaluator argument is empty");
  }
  // Names become file names in run artifacts.
  const bool simple =
      !ev.name.empty() && ev.name.size() <= 64 &&
      std::all_of(ev.name.begin(), ev.name.end(), [](char c) {
        return absl::ascii_isalnum(static_cast<unsigned char>(c)) || c == '_' ||
               c == '-';
      });
  if (!simple) {
    return MakeError(absl::StatusCode::kInvalidArgument, "EvaluatorInvalid",
                     absl::StrCat("evaluator name must be 1-64 characters of "
                                  "[A-Za-z0-9_-]: \"", ev.name, "\""));
  }
  return absl::OkStatus();
}

bool EvalToken(const Evaluator& ev, absl::string_view response) {
  const std::string arg = absl::AsciiStrToLower(ev.argument);
  switch (ev.op) {
    case Operator::kContain:
      return absl::StrContains(absl::AsciiStrToLower(response), arg);
    case Operator::kStartWith:
      return absl::StartsWith(
          absl::AsciiStrToLower(absl::StripLeadingAsciiWhitespace(response)),
          arg);
    case Operator::kEqual:
      return absl::AsciiStrToLower(absl::StripAsciiWhitespace(response)) ==
             absl::AsciiStrToLower(absl::StripAsciiWhitespace(ev.argument));
    default:
      return false;
  }
}

std::string JudgePrompt(Operator relation, absl::string_view premise,
                        absl::string_view hypothesis) {
  const absl::string_view tmpl =
      relation == Operator::kContradict ? kContradictTemplate : kEntailTemplate;
  return absl::StrReplaceAll(tmpl, {{"{A}", premise}, {"{B}", hypothesis}});
}

absl::StatusOr<bool> ParseJudgeAnswer(absl::string_view reply) {
  // Last run of letters.
  size_t end = reply.size();
  while (end > 0 && !absl::ascii_isalpha(static_cast<unsigned char>(reply[end - 1]))) {
    --end;
  }
  size_t start = end;
  while (start > 0 &&
         absl::ascii_isalpha(static_cast<unsigned char>(reply[start - 1]))) {
    --start;
  }
  const std::string word =
      absl::AsciiStrToUpper(reply.substr(start, end - start));
  if (word == "YES") return true;
  if (word == "NO") return false;
  return MakeError(absl::StatusCode::kDataLoss, "JudgeUnparseable",
                   absl::StrCat("judge reply does not end in YES or NO: \"",
                                reply.substr(0, 80), "\""));
}

absl::StatusOr<bool> EvalLogic(const Evaluator& ev, absl::string_view response,
                               LlmClient& judge) {
  std::vector<CompletionRequest> requests;
  if (ev.op == Operator::kSemanticEqual) {
    requests.push_back(JudgeRequest(Operator::kEntail, response, ev.argument));
    requests.push_back(JudgeRequest(Operator::kEntail, ev.argument, response));
  } else {
    requests.push_back(JudgeRequest(ev.op, response, ev.argument));
  }
  bool all = true;
  for (const CompletionRequest& r : requests) {
    absl::StatusOr<std::string> reply = judge.Complete(r);
    if (!reply.ok()) return GatewayError(reply.status());
    ASSIGN_OR_RETURN(const bool yes, ParseJudgeAnswer(*reply));
    all &= yes;
  }
  return all;
}

absl::StatusOr<OutcomeRecord> AssembleOutcome(
    const std::string& cf_id, const Evaluator& ev,
    const std::vector<absl::StatusOr<std::string>>& responses,
    LlmClient* judge) {
  OutcomeRecord record;
  record.cf_id = cf_id;
  record.requested_n = static_cast<int>(responses.size());
  std::vector<std::optional<bool>> verdicts(responses.size());
  auto fail = [&](int i, const absl::Status& status) {
    record.failures.push_back(
        {i, ErrorCode(status), std::string(status.message())});
  };

  // Judge requests for logic operators, batched across samples.
  std::vector<CompletionRequest> judge_requests;
  std::vector<int> owner;
  for (size_t i = 0; i < responses.size(); ++i) {
    record.raw_responses.push_back(responses[i].ok() ? *responses[i] : "");
    if (!responses[i].ok() || IsTokenOperator(ev.op)) continue;
    if (ev.op == Operator::kSemanticEqual) {
      judge_requests.push_back(
          JudgeRequest(Operator::kEntail, *responses[i], ev.argument));
      judge_requests.push_back(
          JudgeRequest(Operator::kEntail, ev.argument, *responses[i]));
      owner.insert(owner.end(), {static_cast<int>(i), static_cast<int>(i)});
    } else {
      judge_requests.push_back(JudgeRequest(ev.op, *responses[i], ev.argument));
      owner.push_back(static_cast<int>(i));
    }
  }
  std::vector<absl::StatusOr<std::string>> judged;
  if (!judge_requests.empty()) {
    if (judge == nullptr) {
      return absl::FailedPreconditionError("logic evaluator needs a judge");
    }
    judged = judge->BatchComplete(judge_requests);
  }
  std::vector<absl::Status> judge_error(responses.size());
  std::vector<bool> judge_yes(responses.size(), true);
  for (size_t j = 0; j < judged.size(); ++j) {
    const int i = owner[j];
    if (!judge_error[i].ok()) continue;
    if (!judged[j].ok()) {
      judge_error[i] = GatewayError(judged[j].status());
      continue;
    }
    absl::StatusOr<bool> yes = ParseJudgeAnswer(*judged[j]);
    if (!yes.ok()) {
      judge_error[i] = yes.status();
    } else {
      judge_yes[i] = judge_yes[i] && *yes;
    }
  }

  int trues = 0;
  for (size_t i = 0; i < responses.size(); ++i) {
    const int index = static_cast<int>(i);
    if (!responses[i].ok()) {
      fail(index, responses[i].status());
      continue;
    }
    if (!judge_error[i].ok()) {
      fail(index, judge_error[i]);
      continue;
    }
    const bool v = IsTokenOperator(ev.op) ? EvalToken(ev, *responses[i])
                                          : judge_yes[i];
    record.samples.push_back(v);
    trues += v;
  }
  if (!record.samples.empty()) {
    record.outcome = static_cast<double>(trues) / record.samples.size();
  }
  return record;
}

absl::StatusOr<OutcomeRecord> EvaluateResponses(
    const std::string& cf_id, const Evaluator& ev,
    const std::vector<absl::StatusOr<std::string>>& responses,
    LlmClient* judge) {
  ASSIGN_OR_RETURN(OutcomeRecord record,
                   AssembleOutcome(cf_id, ev, responses, judge));
  if (record.samples.empty()) {
    return MakeError(absl::StatusCode::kUnavailable, "AllFailed",
                     absl::StrCat("all ", responses.size(),
                                  " samples failed for ", cf_id));
  }
  return record;
}

absl::Status ValidateTemplate(absl::string_view prompt_template) {
  const size_t first = prompt_template.find(kInputPlaceholder);
  if (first == absl::string_view::npos ||
      prompt_template.find(kInputPlaceholder, first + 1) !=
          absl::string_view::npos) {
    return MakeError(absl::StatusCode::kInvalidArgument, "TemplateInvalid",
                     "prompt template must contain {input} exactly once");
  }
  return absl::OkStatus();
}

std::string RenderPrompt(absl::string_view prompt_template,
                         absl::string_view input) {
  const size_t at = prompt_template.find(kInputPlaceholder);
  if (at == absl::string_view::npos) return std::string(prompt_template);
  return absl::StrCat(prompt_template.substr(0, at), input,
                      prompt_template.substr(at + kInputPlaceholder.size()));
}

std::vector<absl::StatusOr<std::string>> QueryModel(const std::string& prompt,
                                                    int n, LlmClient& model) {
  std::vector<CompletionRequest> requests(n);
  for (int i = 0; i < n; ++i) {
    requests[i].prompt = prompt;
    requests[i].sample_index = i;
  }
  return model.BatchComplete(requests);
}

absl::StatusOr<OutcomeRecord> EstimateOutcome(
    const std::string& cf_id, const Counterfactual& cf,
    absl::string_view prompt_template, const Evaluator& ev, int n,
    LlmClient& model, LlmClient* judge) {
  if (n < 1) return absl::InvalidArgumentError("n must be at least 1");
  RETURN_IF_ERROR(ValidateTemplate(prompt_template));
  const std::string prompt = RenderPrompt(prompt_template, cf.text);
  return EvaluateResponses(cf_id, ev, QueryModel(prompt, n, model),
                           judge != nullptr ? judge : &model);
}

}  // namespace cfscope
