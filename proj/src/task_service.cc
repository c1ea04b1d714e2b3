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


#include "cfscope/task_service.h"

#include <algorithm>
#include <regex>
#include <set>

#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "cfscope/parse_provider.h"
#include "cfscope/status_macros.h"

namespace cfscope {
namespace {

namespace fs = std::filesystem;
using ::nlohmann::json;

const std::regex& TaskIdPattern() {
  static const std::regex* re = new std::regex("t([0-9]{4,9})");
  return *re;
}

const std::regex& RunIdPattern() {
  static const std::regex* re = new std::regex("(t[0-9]{4,9})-r([0-9]{1,9})");
  return *re;
}

absl::Status UnknownTask(const std::string& id) {
  return MakeError(absl::StatusCode::kNotFound, "UnknownTask",
                   absl::StrCat("no task \"", id, "\""));
}

absl::Status UnknownRun(const std::string& id) {
  return MakeError(absl::StatusCode::kNotFound, "UnknownRun",
                   absl::StrCat("no run \"", id, "\""));
}

absl::Status RunActive(const std::string& task_id) {
  return MakeError(absl::StatusCode::kFailedPrecondition, "RunActive",
                   absl::StrCat("task ", task_id, " has a run in progress"));
}

std::vector<SpaceSentence> Sentences(const DocumentSpace& space) {
  std::vector<SpaceSentence> out;
  for (int i = 0; i < space.sentence_count(); ++i) {
    out.push_back(space.sentence(i));
  }
  return out;
}

OrderedJson RowJson(const ResultRow& row, const Counterfactual& cf) {
  OrderedJson j = CounterfactualToJson(row.cf_id, cf);
  j["outcome"] = row.outcome ? OrderedJson(*row.outcome) : OrderedJson(nullptr);
  return j;
}

OrderedJson RunInfoJson(const RunInfo& info) {
  OrderedJson j;
  j["run_id"] = info.run_id;
  j["task_id"] = info.task_id;
  const OrderedJson progress = RunProgressToJson(info.progress);
  for (const auto& [k, v] : progress.items()) j[k] = v;
  return j;
}

}  // namespace

absl::string_view TaskStatusName(TaskStatus status) {
  switch (status) {
    case TaskStatus::kDraft:
      return "Draft";
    case TaskStatus::kRunning:
      return "Running";
    case TaskStatus::kDone:
      return "Done";
    case TaskStatus::kFailed:
      return "Failed";
  }
  return "Draft";
}

OrderedJson TaskToJson(const Task& t) {
  OrderedJson j;
  j["v"] = 1;
  j["id"] = t.id;
  j["status"] = std::string(TaskStatusName(t.status));
  j["prototype_text"] = t.prototype_text;
  j["prompt_template"] = t.prompt_template;
  OrderedJson pinned = OrderedJson::array();
  for (const CharSpan& s : t.pinned) pinned.push_back({s.start, s.end});
  j["pinned"] = std::move(pinned);
  j["pinned_sentences"] = t.pinned_sentences;
  OrderedJson evs = OrderedJson::array();
  for (const Evaluator& ev : t.evaluators) evs.push_back(EvaluatorToJson(ev));
  j["evaluators"] = std::move(evs);
  j["runs"] = t.run_ids;
  j["space"] = DocumentSpaceToJson(t.space);
  return j;
}

absl::StatusOr<Task> TaskFromJson(const json& j) {
  Task t;
  try {
    t.id = j.at("id").get<std::string>();
    const std::string status = j.at("status").get<std::string>();
    bool known = false;
    for (TaskStatus s : {TaskStatus::kDraft, TaskStatus::kRunning,
                         TaskStatus::kDone, TaskStatus::kFailed}) {
      if (TaskStatusName(s) == status) {
        t.status = s;
        known = true;
      }
    }
    if (!known) {
      return MakeError(absl::StatusCode::kInvalidArgument, kInvalidJson,
                       absl::StrCat("unknown task status ", status));
    }
    t.prototype_text = j.at("prototype_text").get<std::string>();
    t.prompt_template = j.at("prompt_template").get<std::string>();
    for (const json& s : j.at("pinned")) {
      t.pinned.push_back({s.at(0).get<int>(), s.at(1).get<int>()});
    }
    t.pinned_sentences = j.at("pinned_sentences").get<std::vector<int>>();
    for (const json& ej : j.at("evaluators")) {
      ASSIGN_OR_RETURN(Evaluator ev, EvaluatorFromJson(ej));
      t.evaluators.push_back(std::move(ev));
    }
    t.run_ids = j.at("runs").get<std::vector<std::string>>();
    ASSIGN_OR_RETURN(t.space, DocumentSpaceFromJson(j.at("space")));
  } catch (const json::exception& e) {
    return MakeError(absl::StatusCode::kInvalidArgument, kInvalidJson,
                     absl::StrCat("task: ", e.what()));
  }
  return t;
}

absl::StatusOr<SegmentEdit> SegmentEditFromJson(const json& j) {
  auto invalid = [](absl::string_view m) {
    return MakeError(absl::StatusCode::kInvalidArgument, "InvalidEdit", m);
  };
  if (!j.is_object()) return invalid("edit must be an object");
  SegmentEdit e;
  try {
    const std::string op = absl::AsciiStrToLower(j.at("op").get<std::string>());
    if (op == "merge") {
      e.op = SegmentEdit::Op::kMerge;
    } else if (op == "expand") {
      e.op = SegmentEdit::Op::kExpand;
    } else if (op == "alternatives") {
      e.op = SegmentEdit::Op::kAlternatives;
    } else if (op == "freeze") {
      e.op = SegmentEdit::Op::kFreeze;
    } else if (op == "unfreeze") {
      e.op = SegmentEdit::Op::kUnfreeze;
    } else {
      return invalid(absl::StrCat("unknown op \"", op, "\""));
    }
    if (e.op == SegmentEdit::Op::kFreeze || e.op == SegmentEdit::Op::kUnfreeze) {
      e.sentence = j.at("sentence").get<int>();
    } else {
      e.segment_id = j.at("segment").get<int>();
    }
    if (e.op == SegmentEdit::Op::kAlternatives) {
      e.options = j.at("options").get<std::vector<std::string>>();
    }
  } catch (const json::exception& ex) {
    return invalid(ex.what());
  }
  return e;
}

TaskService::TaskService(ServiceOptions options,
                         std::shared_ptr<LlmClient> model,
                         std::shared_ptr<LlmClient> judge)
    : options_(std::move(options)),
      model_(std::move(model)),
      judge_(judge ? std::move(judge) : model_) {}

absl::StatusOr<std::unique_ptr<TaskService>> TaskService::Open(
    ServiceOptions options, std::shared_ptr<LlmClient> model,
    std::shared_ptr<LlmClient> judge) {
  std::unique_ptr<TaskService> service(
      new TaskService(std::move(options), std::move(model), std::move(judge)));
  RETURN_IF_ERROR(service->Load());
  return service;
}

TaskService::~TaskService() {
  stopping_ = true;
  std::map<std::string, std::thread> threads;
  {
    std::lock_guard<std::mutex> lock(mu_);
    threads.swap(threads_);
  }
  for (auto& [id, t] : threads) {
    if (t.joinable()) t.join();
  }
}

fs::path TaskService::TaskDir(const std::string& task_id) const {
  return options_.data_dir / "tasks" / task_id;
}

fs::path TaskService::RunDir(const std::string& run_id) const {
  std::smatch m;
  if (!std::regex_match(run_id, m, RunIdPattern())) return {};
  return TaskDir(m[1].str()) / "runs" / run_id;
}

absl::Status TaskService::SaveTask(const Task& task) const {
  return WriteFileAtomic(TaskDir(task.id) / "task.json",
                         TaskToJson(task).dump(2) + "\n");
}

absl::Status TaskService::Load() {
  const fs::path tasks_dir = options_.data_dir / "tasks";
  std::error_code ec;
  fs::create_directories(tasks_dir, ec);
  std::vector<std::pair<std::string, RunInput>> resume;
  for (const auto& entry : fs::directory_iterator(tasks_dir, ec)) {
    const std::string name = entry.path().filename().string();
    std::smatch m;
    if (!entry.is_directory() || !std::regex_match(name, m, TaskIdPattern())) {
      continue;
    }
    ASSIGN_OR_RETURN(const std::string text,
                     ReadFileToString(entry.path() / "task.json"));
    ASSIGN_OR_RETURN(const json j, ParseJson(text));
    ASSIGN_OR_RETURN(Task task, TaskFromJson(j));
    int number = 0;
    if (absl::SimpleAtoi(m[1].str(), &number)) {
      next_task_number_ = std::max(next_task_number_, number + 1);
    }
    bool running = false;
    for (const std::string& run_id : task.run_ids) {
      run_owner_[run_id] = task.id;
      const fs::path dir = RunDir(run_id);
      absl::StatusOr<std::string> status_text =
          ReadFileToString(dir / "status.json");
      if (!status_text.ok()) continue;
      absl::StatusOr<json> status = ParseJson(*status_text);
      if (!status.ok()) continue;
      absl::StatusOr<RunProgress> progress = RunProgressFromJson(*status);
      if (!progress.ok() || progress->status != RunStatus::kRunning) continue;
      absl::StatusOr<RunInput> input = LoadRunInput(dir);
      if (!input.ok()) {
        RunProgress failed = *progress;
        failed.status = RunStatus::kFailed;
        failed.error_code = ErrorCode(input.status());
        failed.error_message = std::string(input.status().message());
        RETURN_IF_ERROR(WriteFileAtomic(
            dir / "status.json", RunProgressToJson(failed).dump(2) + "\n"));
        continue;
      }
      resume.emplace_back(run_id, *std::move(input));
      running = true;
    }
    if (running) {
      task.status = TaskStatus::kRunning;
    } else if (task.status == TaskStatus::kRunning) {
      task.status = TaskStatus::kFailed;
    }
    tasks_[task.id] = std::move(task);
  }
  if (ec) {
    return MakeError(absl::StatusCode::kNotFound, "FileUnreadable",
                     absl::StrCat(tasks_dir.string(), ": ", ec.message()));
  }
  for (auto& [run_id, input] : resume) {
    std::lock_guard<std::mutex> lock(mu_);
    Launch(run_owner_[run_id], run_id, std::move(input));
  }
  return absl::OkStatus();
}

absl::StatusOr<Task*> TaskService::FindTask(const std::string& task_id) {
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) return UnknownTask(task_id);
  return &it->second;
}

absl::StatusOr<Task> TaskService::CreateTask(const CreateTaskRequest& req) {
  if (absl::StripAsciiWhitespace(req.prototype).empty()) {
    return MakeError(absl::StatusCode::kInvalidArgument, "InvalidPrototype",
                     "prototype text is empty");
  }
  RETURN_IF_ERROR(ValidateTemplate(req.prompt_template));
  std::set<std::string> names;
  for (const Evaluator& ev : req.evaluators) {
    RETURN_IF_ERROR(ValidateEvaluator(ev));
    if (!names.insert(ev.name).second) {
      return MakeError(absl::StatusCode::kInvalidArgument, "EvaluatorInvalid",
                       absl::StrCat("duplicate evaluator name \"", ev.name,
                                    "\""));
    }
  }
  const int length = static_cast<int>(req.prototype.size());
  for (const CharSpan& s : req.pinned) {
    if (s.start < 0 || s.start >= s.end || s.end > length) {
      return MakeError(
          absl::StatusCode::kInvalidArgument, "InvalidPinnedSpan",
          absl::StrCat("pinned span [", s.start, ", ", s.end,
                       ") is empty or outside the prototype"));
    }
  }

  std::vector<SentenceParse> parses;
  if (req.conllu) {
    ASSIGN_OR_RETURN(parses, ParseConlluStrict(*req.conllu));
  } else if (!options_.parse_provider_url.empty()) {
    ASSIGN_OR_RETURN(parses, ParseWithProvider(options_.parse_provider_url,
                                               req.prototype));
  } else {
    return MakeError(absl::StatusCode::kUnavailable, "ParseProviderUnavailable",
                     "no CoNLL-U attached and no parse provider configured");
  }
  if (parses.empty()) {
    return MakeError(absl::StatusCode::kInvalidArgument, "SentenceMismatch",
                     "the parse has no sentences");
  }
  const RemovabilityRuleTable& rules =
      options_.rules ? *options_.rules : RemovabilityRuleTable::Default();
  std::vector<SegmentForest> forests;
  for (const SentenceParse& p : parses) {
    forests.push_back(SegmentSentence(p, rules));
  }
  const std::vector<int> bases = DocumentSpace::DefaultBases(forests);
  std::vector<SpaceSentence> sentences;
  for (size_t i = 0; i < forests.size(); ++i) {
    sentences.push_back({forests[i], false, bases[i]});
  }
  ASSIGN_OR_RETURN(DocumentSpace probe,
                   DocumentSpace::Create(req.prototype, sentences));

  Task task;
  task.prototype_text = req.prototype;
  task.prompt_template = req.prompt_template;
  task.pinned = req.pinned;
  task.evaluators = req.evaluators;
  for (int i = 0; i < probe.sentence_count(); ++i) {
    const int start = probe.sentence_offset(i);
    const int end =
        start + static_cast<int>(
                    probe.sentence(i).forest.sentence().original_text().size());
    for (const CharSpan& s : req.pinned) {
      if (s.start < end && start < s.end) {
        task.pinned_sentences.push_back(i);
        sentences[i].frozen = true;
        break;
      }
    }
  }
  ASSIGN_OR_RETURN(task.space,
                   DocumentSpace::Create(req.prototype, std::move(sentences)));

  std::lock_guard<std::mutex> lock(mu_);
  task.id = absl::StrFormat("t%04d", next_task_number_++);
  RETURN_IF_ERROR(SaveTask(task));
  tasks_[task.id] = task;
  return task;
}

absl::StatusOr<Task> TaskService::GetTask(const std::string& task_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) return UnknownTask(task_id);
  return it->second;
}

std::vector<std::string> TaskService::ListTasks() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<std::string> ids;
  for (const auto& [id, task] : tasks_) ids.push_back(id);
  return ids;
}

absl::StatusOr<Task> TaskService::EditSegments(const std::string& task_id,
                                               const SegmentEdit& edit) {
  std::lock_guard<std::mutex> lock(mu_);
  ASSIGN_OR_RETURN(Task * task, FindTask(task_id));
  if (task->status == TaskStatus::kRunning) return RunActive(task_id);
  std::vector<SpaceSentence> sentences = Sentences(task->space);

  if (edit.op == SegmentEdit::Op::kFreeze ||
      edit.op == SegmentEdit::Op::kUnfreeze) {
    if (edit.sentence < 0 ||
        edit.sentence >= static_cast<int>(sentences.size())) {
      return MakeError(absl::StatusCode::kNotFound, "UnknownSentence",
                       absl::StrCat("no sentence ", edit.sentence));
    }
    const bool freeze = edit.op == SegmentEdit::Op::kFreeze;
    if (!freeze && std::count(task->pinned_sentences.begin(),
                              task->pinned_sentences.end(), edit.sentence)) {
      return MakeError(absl::StatusCode::kFailedPrecondition, "PinnedSentence",
                       absl::StrCat("sentence ", edit.sentence,
                                    " overlaps a pinned span"));
    }
    sentences[edit.sentence].frozen = freeze;
  } else {
    ASSIGN_OR_RETURN(const DocumentSpace::Local local,
                     task->space.Locate(edit.segment_id));
    const SegmentForest& forest = sentences[local.sentence].forest;
    SegmentForest updated;
    switch (edit.op) {
      case SegmentEdit::Op::kMerge: {
        ASSIGN_OR_RETURN(ForestUpdate u, MergeBranch(forest, local.id));
        updated = std::move(u.forest);
        break;
      }
      case SegmentEdit::Op::kExpand: {
        ASSIGN_OR_RETURN(updated, Expand(forest, local.id));
        break;
      }
      default: {
        ASSIGN_OR_RETURN(updated,
                         ConfigureAlternatives(forest, local.id, edit.options));
        break;
      }
    }
    sentences[local.sentence].forest = std::move(updated);
  }
  ASSIGN_OR_RETURN(DocumentSpace space,
                   DocumentSpace::Create(task->prototype_text,
                                         std::move(sentences)));
  Task next = *task;
  next.space = std::move(space);
  RETURN_IF_ERROR(SaveTask(next));
  *task = std::move(next);
  return *task;
}

absl::StatusOr<AlternativeSuggestions> TaskService::Suggest(
    const std::string& task_id, int segment_id) {
  SegmentForest forest;
  int local_id = 0;
  {
    std::lock_guard<std::mutex> lock(mu_);
    ASSIGN_OR_RETURN(Task * task, FindTask(task_id));
    ASSIGN_OR_RETURN(const DocumentSpace::Local local,
                     task->space.Locate(segment_id));
    forest = task->space.sentence(local.sentence).forest;
    local_id = local.id;
  }
  return SuggestAlternatives(forest, local_id, *model_);
}

absl::StatusOr<RunInfo> TaskService::StartRun(const std::string& task_id,
                                              const RunConfig& config) {
  RETURN_IF_ERROR(ValidateRunConfig(config));
  std::lock_guard<std::mutex> lock(mu_);
  ASSIGN_OR_RETURN(Task * task, FindTask(task_id));
  if (task->status == TaskStatus::kRunning) return RunActive(task_id);

  RunInput input;
  if (config.evaluators.empty()) {
    input.evaluators = task->evaluators;
  } else {
    for (const std::string& name : config.evaluators) {
      auto it = std::find_if(task->evaluators.begin(), task->evaluators.end(),
                             [&](const Evaluator& e) { return e.name == name; });
      if (it == task->evaluators.end()) {
        return MakeError(absl::StatusCode::kNotFound, "UnknownEvaluator",
                         absl::StrCat("task has no evaluator \"", name, "\""));
      }
      input.evaluators.push_back(*it);
    }
  }
  if (input.evaluators.empty()) {
    return MakeError(absl::StatusCode::kInvalidArgument, "NoEvaluators",
                     "the task has no evaluators");
  }
  input.space = task->space;
  input.prompt_template = task->prompt_template;
  input.config = config;
  input.model = options_.model_name;

  RunInfo info;
  info.run_id = absl::StrCat(task_id, "-r", task->run_ids.size() + 1);
  info.task_id = task_id;
  const fs::path dir = RunDir(info.run_id);
  RETURN_IF_ERROR(WriteRunInput(input, dir));
  RETURN_IF_ERROR(WriteFileAtomic(
      dir / "status.json", RunProgressToJson(info.progress).dump(2) + "\n"));

  Task next = *task;
  next.status = TaskStatus::kRunning;
  next.run_ids.push_back(info.run_id);
  RETURN_IF_ERROR(SaveTask(next));
  *task = std::move(next);
  run_owner_[info.run_id] = task_id;
  Launch(task_id, info.run_id, std::move(input));
  return info;
}

void TaskService::Launch(const std::string& task_id, const std::string& run_id,
                         RunInput input) {
  threads_[run_id] = std::thread(&TaskService::Execute, this, task_id, run_id,
                                 std::move(input));
}

void TaskService::Execute(std::string task_id, std::string run_id,
                          RunInput input) {
  const fs::path dir = RunDir(run_id);
  const absl::Status status =
      ExecuteRun(input, dir, *model_, judge_.get(), &stopping_);
  if (absl::IsCancelled(status)) return;  // Resumed by the next Open.

  RunStatus final_status = RunStatus::kFailed;
  if (!status.ok()) {
    RunProgress failed;
    failed.status = RunStatus::kFailed;
    failed.error_code = ErrorCode(status);
    failed.error_message = std::string(status.message());
    WriteFileAtomic(dir / "status.json",
                    RunProgressToJson(failed).dump(2) + "\n")
        .IgnoreError();
  } else if (absl::StatusOr<std::string> text =
                 ReadFileToString(dir / "status.json");
             text.ok()) {
    absl::StatusOr<json> j = ParseJson(*text);
    if (j.ok()) {
      absl::StatusOr<RunProgress> p = RunProgressFromJson(*j);
      if (p.ok()) final_status = p->status;
    }
  }
  std::lock_guard<std::mutex> lock(mu_);
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) return;
  it->second.status = final_status == RunStatus::kDone ? TaskStatus::kDone
                                                       : TaskStatus::kFailed;
  SaveTask(it->second).IgnoreError();
}

absl::StatusOr<RunInfo> TaskService::GetRun(const std::string& run_id) const {
  std::string task_id;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = run_owner_.find(run_id);
    if (it == run_owner_.end()) return UnknownRun(run_id);
    task_id = it->second;
  }
  RunInfo info;
  info.run_id = run_id;
  info.task_id = task_id;
  ASSIGN_OR_RETURN(const std::string text,
                   ReadFileToString(RunDir(run_id) / "status.json"));
  ASSIGN_OR_RETURN(const json j, ParseJson(text));
  ASSIGN_OR_RETURN(info.progress, RunProgressFromJson(j));
  return info;
}

absl::StatusOr<RunInfo> TaskService::WaitForRun(const std::string& run_id) {
  std::thread worker;
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (!run_owner_.count(run_id)) return UnknownRun(run_id);
    auto it = threads_.find(run_id);
    if (it != threads_.end()) {
      worker = std::move(it->second);
      threads_.erase(it);
    }
  }
  if (worker.joinable()) worker.join();
  return GetRun(run_id);
}

absl::StatusOr<RunArtifact> TaskService::LoadRun(
    const std::string& run_id) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (!run_owner_.count(run_id)) return UnknownRun(run_id);
  }
  return LoadRunArtifact(RunDir(run_id));
}

absl::StatusOr<OrderedJson> TaskService::Results(
    const std::string& run_id, const ResultsQuery& query) const {
  ASSIGN_OR_RETURN(const RunInfo info, GetRun(run_id));
  ASSIGN_OR_RETURN(const RunArtifact a, LoadRun(run_id));
  const std::string evaluator =
      query.evaluator.empty() ? a.input.evaluators.front().name
                              : query.evaluator;
  ASSIGN_OR_RETURN(const std::vector<ResultRow> rows, ResultRows(a, evaluator));
  ASSIGN_OR_RETURN(const std::vector<ResultRow> shown,
                   FilterSort(a.input.space, rows, query.filter));
  std::map<std::string, const Counterfactual*> by_id;
  for (const auto& [id, cf] : a.counterfactuals) by_id[id] = &cf;

  OrderedJson j;
  j["run"] = RunInfoJson(info);
  j["evaluator"] = evaluator;
  OrderedJson evs = OrderedJson::array();
  for (const Evaluator& ev : a.input.evaluators) evs.push_back(EvaluatorToJson(ev));
  j["evaluators"] = std::move(evs);
  j["config"] = RunConfigToJson(a.input.config);
  j["space"] = SpaceViewJson(a.input.space);
  OrderedJson edges = OrderedJson::array();
  for (int id : a.input.space.segment_ids()) {
    if (std::optional<int> parent = a.input.space.parent_of(id)) {
      edges.push_back({{"child", id}, {"parent", *parent}});
    }
  }
  j["edges"] = std::move(edges);
  auto shap = a.shap.find(evaluator);
  j["shap"] = shap != a.shap.end() ? OrderedJson(shap->second)
                                   : OrderedJson(nullptr);
  j["total"] = rows.size();
  OrderedJson out_rows = OrderedJson::array();
  for (const ResultRow& row : shown) {
    out_rows.push_back(RowJson(row, *by_id.at(row.cf_id)));
  }
  j["rows"] = std::move(out_rows);
  return j;
}

absl::StatusOr<std::vector<GroupSummary>> TaskService::GroupBy(
    const std::string& run_id, const std::string& evaluator,
    const std::vector<int>& selection) const {
  ASSIGN_OR_RETURN(const RunArtifact a, LoadRun(run_id));
  const std::string name =
      evaluator.empty() ? a.input.evaluators.front().name : evaluator;
  ASSIGN_OR_RETURN(const std::vector<ResultRow> rows, ResultRows(a, name));
  return cfscope::GroupBy(a.input.space, rows, selection);
}

absl::StatusOr<OrderedJson> TaskService::CounterfactualText(
    const std::string& run_id, const std::string& cf_id) const {
  ASSIGN_OR_RETURN(const RunArtifact a, LoadRun(run_id));
  for (const auto& [id, cf] : a.counterfactuals) {
    if (id != cf_id) continue;
    OrderedJson j;
    j["id"] = id;
    j["text"] = cf.text;
    j["prompt"] = RenderPrompt(a.input.prompt_template, cf.text);
    j["word_count"] = cf.word_count;
    return j;
  }
  return MakeError(absl::StatusCode::kNotFound, "UnknownCounterfactual",
                   absl::StrCat("run ", run_id, " has no \"", cf_id, "\""));
}

}  // namespace cfscope
