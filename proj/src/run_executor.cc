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

#include <algorithm>

#include "absl/strings/str_cat.h"
#include "cfscope/attribution.h"
#include "cfscope/status_macros.h"

namespace cfscope {
namespace {

namespace fs = std::filesystem;
using ::nlohmann::json;

absl::Status RunConfigError(absl::string_view message) {
  return MakeError(absl::StatusCode::kInvalidArgument, "InvalidRunConfig",
                   message);
}

std::string OutcomesFile(const std::string& evaluator) {
  return absl::StrCat("outcomes_", evaluator, ".jsonl");
}

std::string ShapFile(const std::string& evaluator) {
  return absl::StrCat("shap_", evaluator, ".json");
}

std::string Pretty(const OrderedJson& j) { return j.dump(2) + "\n"; }

absl::Status SaveProgress(const fs::path& dir, const RunProgress& progress) {
  return WriteFileAtomic(dir / "status.json",
                         Pretty(RunProgressToJson(progress)));
}

OrderedJson SnapshotJson(const RunInput& input) {
  OrderedJson j;
  j["v"] = 1;
  j["config"] = RunConfigToJson(input.config);
  j["model"] = input.model;
  j["prompt_template"] = input.prompt_template;
  OrderedJson evs = OrderedJson::array();
  for (const Evaluator& ev : input.evaluators) evs.push_back(EvaluatorToJson(ev));
  j["evaluators"] = std::move(evs);
  return j;
}

absl::StatusOr<std::vector<json>> LoadLines(const fs::path& path) {
  ASSIGN_OR_RETURN(const std::string text, ReadFileToString(path));
  return ParseJsonLines(text);
}

}  // namespace

absl::Status ValidateRunConfig(const RunConfig& c) {
  if (c.n < 1) return RunConfigError("n must be at least 1");
  if (c.cap < 1) return RunConfigError("cap must be at least 1");
  if (c.sample < 0) return RunConfigError("sample must be non-negative");
  return absl::OkStatus();
}

OrderedJson RunConfigToJson(const RunConfig& c) {
  OrderedJson j;
  j["n"] = c.n;
  j["seed"] = c.seed;
  j["cap"] = c.cap;
  j["sample"] = c.sample;
  j["evaluators"] = c.evaluators;
  return j;
}

absl::StatusOr<RunConfig> RunConfigFromJson(const json& j) {
  if (!j.is_object()) return RunConfigError("run config must be an object");
  RunConfig c;
  try {
    c.n = j.value("n", c.n);
    c.seed = j.value("seed", c.seed);
    c.cap = j.value("cap", c.cap);
    c.sample = j.value("sample", c.sample);
    c.evaluators = j.value("evaluators", c.evaluators);
  } catch (const json::exception& e) {
    return RunConfigError(e.what());
  }
  RETURN_IF_ERROR(ValidateRunConfig(c));
  return c;
}

absl::string_view RunStatusName(RunStatus status) {
  switch (status) {
    case RunStatus::kRunning:
      return "Running";
    case RunStatus::kDone:
      return "Done";
    case RunStatus::kFailed:
      return "Failed";
  }
  return "Running";
}

OrderedJson RunProgressToJson(const RunProgress& p) {
  OrderedJson j;
  j["status"] = std::string(RunStatusName(p.status));
  j["done"] = p.done;
  j["total"] = p.total;
  if (!p.error_code.empty()) {
    j["error"] = {{"code", p.error_code}, {"message", p.error_message}};
  }
  return j;
}

absl::StatusOr<RunProgress> RunProgressFromJson(const json& j) {
  try {
    RunProgress p;
    const std::string status = j.at("status").get<std::string>();
    if (status == "Running") {
      p.status = RunStatus::kRunning;
    } else if (status == "Done") {
      p.status = RunStatus::kDone;
    } else if (status == "Failed") {
      p.status = RunStatus::kFailed;
    } else {
      return MakeError(absl::StatusCode::kInvalidArgument, kInvalidJson,
                       absl::StrCat("unknown run status ", status));
    }
    p.done = j.at("done").get<int>();
    p.total = j.at("total").get<int>();
    if (j.contains("error")) {
      p.error_code = j["error"].at("code").get<std::string>();
      p.error_message = j["error"].at("message").get<std::string>();
    }
    return p;
  } catch (const json::exception& e) {
    return MakeError(absl::StatusCode::kInvalidArgument, kInvalidJson,
                     absl::StrCat("run status: ", e.what()));
  }
}

OrderedJson ShapJson(
    const DocumentSpace& space,
    const std::vector<std::pair<std::string, Counterfactual>>& counterfactuals,
    const std::vector<OutcomeRecord>& outcomes) {
  std::vector<ShapRecord> records;
  for (size_t i = 0; i < outcomes.size() && i < counterfactuals.size(); ++i) {
    if (outcomes[i].samples.empty()) continue;
    records.push_back(
        {counterfactuals[i].second.vector.inclusion, outcomes[i].outcome});
  }
  absl::StatusOr<ShapResult> result =
      ComputeShap(records, space.variable_ids());
  if (result.ok()) return ShapResultToJson(*result);
  OrderedJson j;
  j["v"] = 1;
  j["error"] = {{"code", ErrorCode(result.status())},
                {"message", std::string(result.status().message())}};
  return j;
}

absl::StatusOr<std::vector<std::pair<std::string, Counterfactual>>>
GenerateCounterfactuals(const DocumentSpace& space, const RunConfig& config) {
  // The whole space when it fits under the cap.
  std::vector<CounterfactualVector> vectors;
  const CountResult count = space.Count();
  if (!count.saturated && count.value <= static_cast<uint64_t>(config.cap)) {
    ASSIGN_OR_RETURN(vectors, space.Enumerate(config.cap));
  } else {
    vectors = space.Sample(config.sample > 0 ? config.sample : config.cap,
                           config.seed);
  }
  std::vector<std::pair<std::string, Counterfactual>> cfs;
  for (size_t i = 0; i < vectors.size(); ++i) {
    ASSIGN_OR_RETURN(Counterfactual cf, space.Realize(vectors[i]));
    cfs.emplace_back(absl::StrCat("cf", i), std::move(cf));
  }
  return cfs;
}

absl::Status ExecuteRun(const RunInput& input, const fs::path& dir,
                        LlmClient& model, LlmClient* judge,
                        const std::atomic<bool>* stop) {
  RETURN_IF_ERROR(ValidateRunConfig(input.config));
  RETURN_IF_ERROR(ValidateTemplate(input.prompt_template));
  if (input.evaluators.empty()) {
    return MakeError(absl::StatusCode::kInvalidArgument, "NoEvaluators",
                     "a run needs at least one evaluator");
  }
  for (const Evaluator& ev : input.evaluators) {
    RETURN_IF_ERROR(ValidateEvaluator(ev));
  }
  if (judge == nullptr) judge = &model;
  const RunConfig& config = input.config;
  const DocumentSpace& space = input.space;

  ASSIGN_OR_RETURN(const auto cfs, GenerateCounterfactuals(space, config));
  std::vector<OrderedJson> lines;
  for (const auto& [id, cf] : cfs) lines.push_back(CounterfactualToJson(id, cf));

  RunProgress progress;
  progress.total = static_cast<int>(cfs.size());
  RETURN_IF_ERROR(SaveProgress(dir, progress));
  RETURN_IF_ERROR(WriteRunInput(input, dir));
  RETURN_IF_ERROR(
      WriteFileAtomic(dir / "counterfactuals.jsonl", ToJsonLines(lines)));

  std::map<std::string, std::vector<OutcomeRecord>> outcomes;
  for (const Evaluator& ev : input.evaluators) outcomes[ev.name];
  const int n = config.n;
  for (size_t begin = 0; begin < cfs.size(); begin += kRunBatchSize) {
    if (stop != nullptr && stop->load()) {
      return absl::CancelledError("run interrupted");
    }
    const size_t end = std::min(cfs.size(), begin + kRunBatchSize);
    std::vector<CompletionRequest> requests;
    for (size_t i = begin; i < end; ++i) {
      const std::string prompt =
          RenderPrompt(input.prompt_template, cfs[i].second.text);
      for (int s = 0; s < n; ++s) requests.push_back({prompt, s, std::nullopt});
    }
    const std::vector<absl::StatusOr<std::string>> responses =
        model.BatchComplete(requests);
    const auto first_ok = std::find_if(responses.begin(), responses.end(),
                                       [](const auto& r) { return r.ok(); });
    if (first_ok == responses.end()) {
      progress.status = RunStatus::kFailed;
      progress.error_code = "GatewayExhausted";
      progress.error_message = absl::StrCat(
          "no response for counterfactuals ", begin, "-", end - 1, ": ",
          ErrorCode(responses.front().status()), " ",
          responses.front().status().message());
      return SaveProgress(dir, progress);
    }
    for (size_t i = begin; i < end; ++i) {
      const std::vector<absl::StatusOr<std::string>> mine(
          responses.begin() + (i - begin) * n,
          responses.begin() + (i - begin + 1) * n);
      for (const Evaluator& ev : input.evaluators) {
        ASSIGN_OR_RETURN(OutcomeRecord record,
                         AssembleOutcome(cfs[i].first, ev, mine, judge));
        outcomes[ev.name].push_back(std::move(record));
      }
    }
    for (const auto& [name, records] : outcomes) {
      std::vector<OrderedJson> docs;
      for (const OutcomeRecord& r : records) docs.push_back(OutcomeRecordToJson(r));
      RETURN_IF_ERROR(WriteFileAtomic(dir / OutcomesFile(name), ToJsonLines(docs)));
    }
    progress.done = static_cast<int>(end);
    RETURN_IF_ERROR(SaveProgress(dir, progress));
  }
  if (cfs.empty()) {
    for (const auto& [name, records] : outcomes) {
      RETURN_IF_ERROR(WriteFileAtomic(dir / OutcomesFile(name), ""));
    }
  }

  for (const auto& [name, records] : outcomes) {
    RETURN_IF_ERROR(WriteFileAtomic(dir / ShapFile(name),
                                    Pretty(ShapJson(space, cfs, records))));
  }
  progress.status = RunStatus::kDone;
  return SaveProgress(dir, progress);
}

absl::Status WriteRunInput(const RunInput& input, const fs::path& dir) {
  RETURN_IF_ERROR(
      WriteFileAtomic(dir / "config.json", Pretty(SnapshotJson(input))));
  return WriteFileAtomic(dir / "space.json",
                         Pretty(DocumentSpaceToJson(input.space)));
}

absl::StatusOr<RunInput> LoadRunInput(const fs::path& dir) {
  RunInput in;
  ASSIGN_OR_RETURN(const std::string config_text,
                   ReadFileToString(dir / "config.json"));
  ASSIGN_OR_RETURN(const json snapshot, ParseJson(config_text));
  try {
    ASSIGN_OR_RETURN(in.config, RunConfigFromJson(snapshot.at("config")));
    in.model = snapshot.at("model").get<std::string>();
    in.prompt_template = snapshot.at("prompt_template").get<std::string>();
    for (const json& ej : snapshot.at("evaluators")) {
      ASSIGN_OR_RETURN(Evaluator ev, EvaluatorFromJson(ej));
      in.evaluators.push_back(std::move(ev));
    }
  } catch (const json::exception& e) {
    return MakeError(absl::StatusCode::kInvalidArgument, kInvalidJson,
                     absl::StrCat("config.json: ", e.what()));
  }
  ASSIGN_OR_RETURN(const std::string space_text,
                   ReadFileToString(dir / "space.json"));
  ASSIGN_OR_RETURN(const json space_json, ParseJson(space_text));
  ASSIGN_OR_RETURN(in.space, DocumentSpaceFromJson(space_json));
  return in;
}

absl::StatusOr<RunArtifact> LoadRunArtifact(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    return MakeError(absl::StatusCode::kNotFound, "UnknownRun",
                     absl::StrCat("no run at ", dir.string()));
  }
  RunArtifact a;
  ASSIGN_OR_RETURN(const std::string status_text,
                   ReadFileToString(dir / "status.json"));
  ASSIGN_OR_RETURN(const json status, ParseJson(status_text));
  ASSIGN_OR_RETURN(a.progress, RunProgressFromJson(status));

  ASSIGN_OR_RETURN(a.input, LoadRunInput(dir));

  ASSIGN_OR_RETURN(const std::vector<json> cf_lines,
                   LoadLines(dir / "counterfactuals.jsonl"));
  for (const json& line : cf_lines) {
    ASSIGN_OR_RETURN(auto cf, CounterfactualFromJson(line));
    a.counterfactuals.push_back(std::move(cf));
  }
  for (const Evaluator& ev : a.input.evaluators) {
    std::vector<OutcomeRecord>& records = a.outcomes[ev.name];
    const fs::path outcomes_path = dir / OutcomesFile(ev.name);
    if (fs::exists(outcomes_path)) {
      ASSIGN_OR_RETURN(const std::vector<json> lines, LoadLines(outcomes_path));
      for (const json& line : lines) {
        ASSIGN_OR_RETURN(OutcomeRecord r, OutcomeRecordFromJson(line));
        records.push_back(std::move(r));
      }
    }
    const fs::path shap_path = dir / ShapFile(ev.name);
    if (fs::exists(shap_path)) {
      ASSIGN_OR_RETURN(const std::string text, ReadFileToString(shap_path));
      ASSIGN_OR_RETURN(a.shap[ev.name], ParseJson(text));
    }
  }
  return a;
}

absl::StatusOr<std::vector<ResultRow>> ResultRows(const RunArtifact& a,
                                                  const std::string& evaluator) {
  auto it = a.outcomes.find(evaluator);
  if (it == a.outcomes.end()) {
    return MakeError(absl::StatusCode::kNotFound, "UnknownEvaluator",
                     absl::StrCat("run has no evaluator \"", evaluator, "\""));
  }
  std::map<std::string, const OutcomeRecord*> by_id;
  for (const OutcomeRecord& r : it->second) by_id[r.cf_id] = &r;
  std::vector<ResultRow> rows;
  for (const auto& [id, cf] : a.counterfactuals) {
    ResultRow row;
    row.cf_id = id;
    row.vector = cf.vector;
    row.word_count = cf.word_count;
    auto rec = by_id.find(id);
    if (rec != by_id.end() && !rec->second->samples.empty()) {
      row.outcome = rec->second->outcome;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

absl::Status RecomputeShap(const fs::path& dir) {
  ASSIGN_OR_RETURN(const RunArtifact a, LoadRunArtifact(dir));
  for (const auto& [name, records] : a.outcomes) {
    RETURN_IF_ERROR(WriteFileAtomic(
        dir / ShapFile(name),
        Pretty(ShapJson(a.input.space, a.counterfactuals, records))));
  }
  return absl::OkStatus();
}

}  // namespace cfscope
