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


// One run over a document space: generate counterfactuals, query the model,
// evaluate, attribute, and persist everything under a run directory. Shared
// by the service and the command line so both write identical artifacts.
//
// Run directory layout:
//   config.json             config snapshot
//   space.json              restorable document space
//   counterfactuals.jsonl   one line per counterfactual
//   outcomes_<ev>.jsonl     one outcome record per counterfactual
//   shap_<ev>.json          attribution, or {"v":1,"error":{...}}
//   status.json             progress; the only file rewritten during a run

#ifndef CFSCOPE_RUN_EXECUTOR_H_
#define CFSCOPE_RUN_EXECUTOR_H_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "cfscope/analysis.h"
#include "cfscope/document_space.h"
#include "cfscope/evaluator.h"
#include "cfscope/json_io.h"
#include "cfscope/llm_client.h"

namespace cfscope {

struct RunConfig {
  int n = 5;
  uint64_t seed = 0;
  int cap = 10000;  // Enumerate when the space has at most this many vectors.
  int sample = 0;   // Otherwise draw this many; 0 means `cap`.
  std::vector<std::string> evaluators;  // Names to run; empty means all.
  bool operator==(const RunConfig&) const = default;
};

// Error code InvalidRunConfig.
absl::Status ValidateRunConfig(const RunConfig& config);
OrderedJson RunConfigToJson(const RunConfig& config);
// Missing keys keep their defaults. Error code InvalidRunConfig.
absl::StatusOr<RunConfig> RunConfigFromJson(const nlohmann::json& j);

enum class RunStatus { kRunning, kDone, kFailed };
absl::string_view RunStatusName(RunStatus status);

struct RunProgress {
  RunStatus status = RunStatus::kRunning;
  int done = 0;   // Counterfactuals with outcomes.
  int total = 0;
  std::string error_code;
  std::string error_message;
  bool operator==(const RunProgress&) const = default;
};

OrderedJson RunProgressToJson(const RunProgress& progress);
absl::StatusOr<RunProgress> RunProgressFromJson(const nlohmann::json& j);

struct RunInput {
  DocumentSpace space;
  std::string prompt_template;
  std::vector<Evaluator> evaluators;  // Already filtered by config.
  RunConfig config;
  std::string model;  // Recorded in the snapshot only.
};

// Every valid vector when the space has at most `cap` of them, otherwise
// `sample` (or `cap`) uniform draws under `seed`. Ids are "cf0", "cf1", ...
absl::StatusOr<std::vector<std::pair<std::string, Counterfactual>>>
GenerateCounterfactuals(const DocumentSpace& space, const RunConfig& config);

// Writes config.json and space.json, everything a resumed run needs.
absl::Status WriteRunInput(const RunInput& input,
                           const std::filesystem::path& dir);
// Error codes: FileUnreadable, InvalidJson, plus validation errors.
absl::StatusOr<RunInput> LoadRunInput(const std::filesystem::path& dir);

// Counterfactuals per gateway batch; progress is saved between batches.
inline constexpr int kRunBatchSize = 32;

// Runs to completion and returns OK with status.json saying Done, or Failed
// with error code GatewayExhausted when a whole batch got no response (the
// partial artifact stays). A set `stop` flag ends the run between batches
// with a Cancelled status and status.json still Running, so the run can be
// resumed. `judge` defaults to `model`. Errors other than those come from
// invalid input or the file system.
absl::Status ExecuteRun(const RunInput& input,
                        const std::filesystem::path& dir, LlmClient& model,
                        LlmClient* judge = nullptr,
                        const std::atomic<bool>* stop = nullptr);

struct RunArtifact {
  RunInput input;
  std::vector<std::pair<std::string, Counterfactual>> counterfactuals;
  // Keyed by evaluator name; counterfactual order, possibly a prefix.
  std::map<std::string, std::vector<OutcomeRecord>> outcomes;
  std::map<std::string, nlohmann::json> shap;  // Files present so far.
  RunProgress progress;
};

// Error codes: UnknownRun (no such directory), FileUnreadable, InvalidJson.
absl::StatusOr<RunArtifact> LoadRunArtifact(const std::filesystem::path& dir);

// Rows for `evaluator`; counterfactuals without a record have no outcome.
// Error code UnknownEvaluator.
absl::StatusOr<std::vector<ResultRow>> ResultRows(const RunArtifact& artifact,
                                                  const std::string& evaluator);

// Attribution JSON for one evaluator's outcomes.
OrderedJson ShapJson(const DocumentSpace& space,
                     const std::vector<std::pair<std::string, Counterfactual>>&
                         counterfactuals,
                     const std::vector<OutcomeRecord>& outcomes);

// Rewrites every shap_<ev>.json from the stored outcomes.
absl::Status RecomputeShap(const std::filesystem::path& dir);

}  // namespace cfscope

#endif  // CFSCOPE_RUN_EXECUTOR_H_
