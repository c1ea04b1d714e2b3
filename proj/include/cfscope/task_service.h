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


// Tasks and runs with file-backed persistence.
//
// Data directory layout:
//   tasks/<task_id>/task.json
//   tasks/<task_id>/runs/<run_id>/...   (see run_executor.h)

#ifndef CFSCOPE_TASK_SERVICE_H_
#define CFSCOPE_TASK_SERVICE_H_

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "cfscope/analysis.h"
#include "cfscope/document_space.h"
#include "cfscope/evaluator.h"
#include "cfscope/json_io.h"
#include "cfscope/llm_client.h"
#include "cfscope/rule_table.h"
#include "cfscope/run_executor.h"
#include "cfscope/segmenter.h"

namespace cfscope {

enum class TaskStatus { kDraft, kRunning, kDone, kFailed };
absl::string_view TaskStatusName(TaskStatus status);

struct Task {
  std::string id;
  std::string prototype_text;
  std::string prompt_template;
  std::vector<CharSpan> pinned;       // Byte spans of prototype_text.
  std::vector<Evaluator> evaluators;
  DocumentSpace space;
  std::vector<int> pinned_sentences;  // Frozen for good.
  TaskStatus status = TaskStatus::kDraft;
  std::vector<std::string> run_ids;   // Creation order.
};

// Persisted form, also the REST representation (with a "view" added there).
OrderedJson TaskToJson(const Task& task);
absl::StatusOr<Task> TaskFromJson(const nlohmann::json& j);

struct CreateTaskRequest {
  std::string prototype;
  std::string prompt_template = "{input}";
  std::vector<CharSpan> pinned;
  std::vector<Evaluator> evaluators;
  // Parse of `prototype`; the parse provider is used when absent.
  std::optional<std::string> conllu;
};

struct SegmentEdit {
  enum class Op { kMerge, kExpand, kAlternatives, kFreeze, kUnfreeze };
  Op op = Op::kMerge;
  int segment_id = 0;                // Merge, expand, alternatives.
  std::vector<std::string> options;  // Alternatives.
  int sentence = 0;                  // Freeze, unfreeze.
};

// Error code InvalidEdit.
absl::StatusOr<SegmentEdit> SegmentEditFromJson(const nlohmann::json& j);

struct RunInfo {
  std::string run_id;
  std::string task_id;
  RunProgress progress;
};

struct ResultsQuery {
  std::string evaluator;  // Empty: the run's first evaluator.
  FilterSpec filter;
};

struct ServiceOptions {
  std::filesystem::path data_dir;
  std::string parse_provider_url;  // Empty: tasks must attach CoNLL-U.
  const RemovabilityRuleTable* rules = nullptr;  // Default table if null.
  std::string model_name = "unknown";            // For run snapshots.
};

class TaskService {
 public:
  // Loads existing tasks and restarts runs left Running. `judge` defaults to
  // `model`. Error codes: FileUnreadable, InvalidJson.
  static absl::StatusOr<std::unique_ptr<TaskService>> Open(
      ServiceOptions options, std::shared_ptr<LlmClient> model,
      std::shared_ptr<LlmClient> judge = nullptr);
  // Stops active runs between batches; they resume on the next Open.
  ~TaskService();

  TaskService(const TaskService&) = delete;
  TaskService& operator=(const TaskService&) = delete;

  // Error codes: InvalidPrototype, TemplateInvalid, EvaluatorInvalid,
  // InvalidPinnedSpan, ParseProviderUnavailable, SentenceMismatch and
  // CoNLL-U errors.
  absl::StatusOr<Task> CreateTask(const CreateTaskRequest& request);
  // Error code UnknownTask.
  absl::StatusOr<Task> GetTask(const std::string& task_id) const;
  std::vector<std::string> ListTasks() const;
  // Error codes: UnknownTask, RunActive, UnknownSegment, UnknownSentence,
  // PinnedSentence, and the segmenter's edit errors.
  absl::StatusOr<Task> EditSegments(const std::string& task_id,
                                    const SegmentEdit& edit);
  // Error codes: UnknownTask, UnknownSegment, NotALeaf, GatewayUnavailable,
  // SuggestionUnparseable.
  absl::StatusOr<AlternativeSuggestions> Suggest(const std::string& task_id,
                                                 int segment_id);

  // Starts a run in the background. Error codes: UnknownTask, RunActive,
  // InvalidRunConfig, NoEvaluators, UnknownEvaluator.
  absl::StatusOr<RunInfo> StartRun(const std::string& task_id,
                                   const RunConfig& config);
  // Error code UnknownRun.
  absl::StatusOr<RunInfo> GetRun(const std::string& run_id) const;
  // Blocks until the run's thread finishes (returns at once if none).
  absl::StatusOr<RunInfo> WaitForRun(const std::string& run_id);
  std::filesystem::path RunDir(const std::string& run_id) const;

  // Analytics over the run's persisted artifact. Error codes: UnknownRun,
  // UnknownEvaluator, UnknownSegment, InvalidSelection.
  absl::StatusOr<OrderedJson> Results(const std::string& run_id,
                                      const ResultsQuery& query) const;
  absl::StatusOr<std::vector<GroupSummary>> GroupBy(
      const std::string& run_id, const std::string& evaluator,
      const std::vector<int>& selection) const;
  // {"id","text","prompt","word_count"}. Error codes: UnknownRun,
  // UnknownCounterfactual.
  absl::StatusOr<OrderedJson> CounterfactualText(
      const std::string& run_id, const std::string& cf_id) const;

 private:
  TaskService(ServiceOptions options, std::shared_ptr<LlmClient> model,
              std::shared_ptr<LlmClient> judge);

  absl::Status Load();
  absl::Status SaveTask(const Task& task) const;
  std::filesystem::path TaskDir(const std::string& task_id) const;
  absl::StatusOr<Task*> FindTask(const std::string& task_id);
  // Runs in a worker thread.
  void Execute(std::string task_id, std::string run_id, RunInput input);
  void Launch(const std::string& task_id, const std::string& run_id,
              RunInput input);
  absl::StatusOr<RunArtifact> LoadRun(const std::string& run_id) const;

  ServiceOptions options_;
  std::shared_ptr<LlmClient> model_;
  std::shared_ptr<LlmClient> judge_;

  mutable std::mutex mu_;
  std::map<std::string, Task> tasks_;
  std::map<std::string, std::string> run_owner_;  // run id -> task id
  std::map<std::string, std::thread> threads_;    // run id -> worker
  std::atomic<bool> stopping_{false};
  int next_task_number_ = 1;
};

}  // namespace cfscope

#endif  // CFSCOPE_TASK_SERVICE_H_
