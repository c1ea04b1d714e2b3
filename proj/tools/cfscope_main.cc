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


// cfscope command line: segment, generate, run, attribute, bench, serve.
// Exit status is 0 on success, 1 on a runtime error and 2 on a usage error.

#include <csignal>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "cfscope/bench.h"
#include "cfscope/conllu.h"
#include "cfscope/document_space.h"
#include "cfscope/json_io.h"
#include "cfscope/llm_gateway.h"
#include "cfscope/rest_server.h"
#include "cfscope/rule_table.h"
#include "cfscope/run_executor.h"
#include "cfscope/segmenter.h"
#include "cfscope/status_macros.h"
#include "cfscope/task_service.h"

namespace cfscope {
namespace {

namespace fs = std::filesystem;
using ::nlohmann::json;

// Options shared by several subcommands. Unset flags fall back to the
// --config file, then to built-in defaults.
struct Flags {
  std::string config_path;
  std::optional<std::string> rules;
  std::optional<uint64_t> seed;
  std::optional<int> cap;
  std::optional<int> sample;
  std::optional<int> n;
  std::optional<std::string> model;
  std::optional<std::string> base_url;
  std::optional<std::string> cache_dir;
  std::optional<std::string> api_key_env;
  std::optional<std::string> data_dir;
  std::optional<std::string> parse_url;
  std::optional<std::string> checker_url;
};

// Settings after merging flags over the config file.
struct Settings {
  RemovabilityRuleTable rules = RemovabilityRuleTable::Default();
  GatewayConfig gateway;
  RunConfig run;
  std::string data_dir = "cfscope-data";
  std::string parse_url;
  std::string checker_url = "http://localhost:8081";
};

absl::StatusOr<Settings> Resolve(const Flags& f) {
  Settings s;
  json file = json::object();
  if (!f.config_path.empty()) {
    ASSIGN_OR_RETURN(const std::string text, ReadFileToString(f.config_path));
    ASSIGN_OR_RETURN(file, ParseJson(text));
    if (!file.is_object()) {
      return MakeError(absl::StatusCode::kInvalidArgument, "InvalidConfig",
                       "config file must hold a JSON object");
    }
  }
  auto str = [&](const char* key) -> std::optional<std::string> {
    if (file.contains(key) && file[key].is_string()) {
      return file[key].get<std::string>();
    }
    return std::nullopt;
  };
  if (file.contains("gateway")) {
    ASSIGN_OR_RETURN(s.gateway, GatewayConfigFromJson(file["gateway"]));
  }
  if (file.contains("run")) {
    ASSIGN_OR_RETURN(s.run, RunConfigFromJson(file["run"]));
  }
  const std::optional<std::string> rules = f.rules ? f.rules : str("rules");
  if (rules) {
    ASSIGN_OR_RETURN(s.rules, RemovabilityRuleTable::Load(*rules));
  }
  if (auto v = f.data_dir ? f.data_dir : str("data_dir")) s.data_dir = *v;
  if (auto v = f.parse_url ? f.parse_url : str("parse_provider_url")) {
    s.parse_url = *v;
  }
  if (auto v = f.checker_url ? f.checker_url : str("checker_url")) {
    s.checker_url = *v;
  }
  if (f.model) s.gateway.model = *f.model;
  if (f.base_url) s.gateway.base_url = *f.base_url;
  if (f.cache_dir) s.gateway.cache_dir = *f.cache_dir;
  if (f.api_key_env) s.gateway.api_key_env_var = *f.api_key_env;
  if (f.seed) s.run.seed = *f.seed;
  if (f.cap) s.run.cap = *f.cap;
  if (f.sample) s.run.sample = *f.sample;
  if (f.n) s.run.n = *f.n;
  RETURN_IF_ERROR(ValidateGatewayConfig(s.gateway));
  RETURN_IF_ERROR(ValidateRunConfig(s.run));
  return s;
}

// Space over every sentence of a CoNLL-U file, joined by single spaces.
absl::StatusOr<DocumentSpace> SpaceFromConllu(const std::string& path,
                                              const Settings& s) {
  ASSIGN_OR_RETURN(const std::string text, ReadFileToString(path));
  ASSIGN_OR_RETURN(const std::vector<SentenceParse> parses,
                   ParseConlluStrict(text));
  std::vector<SegmentForest> forests;
  std::vector<std::string> texts;
  for (const SentenceParse& p : parses) {
    forests.push_back(SegmentSentence(p, s.rules));
    texts.push_back(p.original_text());
  }
  const std::vector<int> bases = DocumentSpace::DefaultBases(forests);
  std::vector<SpaceSentence> sentences;
  for (size_t i = 0; i < forests.size(); ++i) {
    sentences.push_back({forests[i], false, bases[i]});
  }
  return DocumentSpace::Create(absl::StrJoin(texts, " "), std::move(sentences));
}

absl::Status Segment(const std::string& path, const Settings& s) {
  ASSIGN_OR_RETURN(const std::string text, ReadFileToString(path));
  ASSIGN_OR_RETURN(const std::vector<SentenceParse> parses,
                   ParseConlluStrict(text));
  for (size_t i = 0; i < parses.size(); ++i) {
    if (i > 0) std::cout << "\n";
    const SegmentForest forest = SegmentSentence(parses[i], s.rules);
    std::cout << forest.DebugString();
  }
  return absl::OkStatus();
}

absl::Status Generate(const std::string& path, const std::string& out,
                      const Settings& s) {
  ASSIGN_OR_RETURN(const DocumentSpace space, SpaceFromConllu(path, s));
  ASSIGN_OR_RETURN(const auto cfs, GenerateCounterfactuals(space, s.run));
  std::vector<OrderedJson> lines;
  for (const auto& [id, cf] : cfs) lines.push_back(CounterfactualToJson(id, cf));
  const std::string body = ToJsonLines(lines);
  if (out.empty()) {
    std::cout << body;
    return absl::OkStatus();
  }
  return WriteFileAtomic(out, body);
}

absl::StatusOr<std::unique_ptr<TaskService>> OpenService(const Settings& s) {
  ASSIGN_OR_RETURN(std::unique_ptr<LlmGateway> gateway,
                   LlmGateway::Create(s.gateway));
  ServiceOptions options;
  options.data_dir = s.data_dir;
  options.parse_provider_url = s.parse_url;
  options.rules = &s.rules;
  options.model_name = s.gateway.model;
  return TaskService::Open(options, std::shared_ptr<LlmClient>(std::move(gateway)));
}

absl::Status Run(const std::string& task_path, const Settings& s) {
  ASSIGN_OR_RETURN(const std::string text, ReadFileToString(task_path));
  ASSIGN_OR_RETURN(json j, ParseJson(text));
  // A CoNLL-U path is resolved against the task file's directory.
  if (j.is_object() && j.contains("conllu_file")) {
    const fs::path conllu =
        fs::path(task_path).parent_path() / j["conllu_file"].get<std::string>();
    ASSIGN_OR_RETURN(j["conllu"], ReadFileToString(conllu));
  }
  ASSIGN_OR_RETURN(const CreateTaskRequest request,
                   CreateTaskRequestFromJson(j));
  ASSIGN_OR_RETURN(std::unique_ptr<TaskService> service, OpenService(s));
  ASSIGN_OR_RETURN(const Task task, service->CreateTask(request));
  ASSIGN_OR_RETURN(const RunInfo started, service->StartRun(task.id, s.run));
  ASSIGN_OR_RETURN(const RunInfo done, service->WaitForRun(started.run_id));
  std::cout << service->RunDir(done.run_id).string() << "\n";
  std::cerr << done.run_id << ": " << RunStatusName(done.progress.status)
            << " (" << done.progress.done << "/" << done.progress.total
            << " counterfactuals)\n";
  if (done.progress.status != RunStatus::kDone) {
    return MakeError(absl::StatusCode::kUnavailable,
                     done.progress.error_code.empty()
                         ? "RunFailed"
                         : done.progress.error_code,
                     done.progress.error_message);
  }
  return absl::OkStatus();
}

absl::Status Attribute(const std::string& dir) {
  RETURN_IF_ERROR(RecomputeShap(dir));
  ASSIGN_OR_RETURN(const RunArtifact a, LoadRunArtifact(dir));
  OrderedJson out = OrderedJson::object();
  for (const auto& [name, shap] : a.shap) out[name] = shap;
  std::cout << out.dump(2) << "\n";
  return absl::OkStatus();
}

absl::Status Bench(const std::string& dir, const std::string& out,
                   const std::string& dataset, int workers, const Settings& s) {
  ASSIGN_OR_RETURN(const std::vector<CorpusSentence> corpus, LoadCorpus(dir));
  ASSIGN_OR_RETURN(std::unique_ptr<LanguageToolClient> checker,
                   LanguageToolClient::Create(s.checker_url));
  BenchConfig config;
  config.dataset = dataset.empty() ? fs::path(dir).filename().string() : dataset;
  if (config.dataset.empty()) config.dataset = "corpus";
  config.cap = s.run.cap;
  if (s.run.sample > 0) config.sample = s.run.sample;
  config.seed = s.run.seed;
  config.workers = workers;
  config.rules = &s.rules;
  const BenchReport report = RunBenchmark(corpus, config, *checker);
  const std::string markdown = BenchReportMarkdown(report);
  if (!out.empty()) {
    RETURN_IF_ERROR(WriteFileAtomic(fs::path(out) / "report.json",
                                    BenchReportToJson(report).dump(2) + "\n"));
    RETURN_IF_ERROR(WriteFileAtomic(fs::path(out) / "report.md", markdown));
  }
  std::cout << markdown;
  if (report.failed > 0) {
    return MakeError(absl::StatusCode::kUnavailable, "CheckerUnavailable",
                     absl::StrCat(report.failed, " sentence(s) failed"));
  }
  return absl::OkStatus();
}

absl::Status Serve(const std::string& host, int port, const Settings& s) {
  // Block the stop signals before any thread starts; sigwait picks them up.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  ASSIGN_OR_RETURN(std::unique_ptr<TaskService> service, OpenService(s));
  RestServer server(service.get());
  RETURN_IF_ERROR(server.Start(host, port));
  std::cerr << "serving http://" << host << ":" << server.port() << kApiPrefix
            << " (data in " << s.data_dir << ")\n";
  int sig = 0;
  sigwait(&signals, &sig);
  server.Stop();
  return absl::OkStatus();
}

int Fail(const absl::Status& status) {
  std::cerr << "cfscope: " << status.message() << "\n";
  return 1;
}

void AddRunFlags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--seed", f.seed, "Sampling seed");
  cmd->add_option("--cap", f.cap,
                  "Enumerate when the space has at most this many vectors");
  cmd->add_option("--sample", f.sample, "Draws when the cap is exceeded");
}

void AddGatewayFlags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--model", f.model, "Model name");
  cmd->add_option("--base-url", f.base_url,
                  "OpenAI-compatible endpoint, e.g. http://host/v1");
  cmd->add_option("--cache-dir", f.cache_dir, "Completion cache directory");
  cmd->add_option("--api-key-env", f.api_key_env,
                  "Environment variable holding the API key ('' for none)");
  cmd->add_option("--data-dir", f.data_dir, "Task and run storage");
  cmd->add_option("--parse-url", f.parse_url, "Parse provider base URL");
}

int Main(int argc, char** argv) {
  CLI::App app{"Counterfactual text generation and attribution", "cfscope"};
  app.require_subcommand(1);
  Flags f;
  app.add_option("--config", f.config_path, "JSON config file")
      ->check(CLI::ExistingFile);
  app.add_option("--rules", f.rules, "Removability rule table")
      ->check(CLI::ExistingFile);

  std::string input, out, task_path, dataset, host = "127.0.0.1";
  int port = 8080;
  int workers = 4;

  CLI::App* segment = app.add_subcommand("segment", "Print segment trees");
  segment->add_option("conllu", input, "CoNLL-U file")
      ->required()
      ->check(CLI::ExistingFile);

  CLI::App* generate =
      app.add_subcommand("generate", "Write counterfactuals as JSON lines");
  generate->add_option("conllu", input, "CoNLL-U file")
      ->required()
      ->check(CLI::ExistingFile);
  generate->add_option("--out", out, "Output file (default stdout)");
  AddRunFlags(generate, f);

  CLI::App* run = app.add_subcommand("run", "Create a task and run it");
  run->add_option("--task", task_path, "Task JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--n", f.n, "Samples per counterfactual");
  AddRunFlags(run, f);
  AddGatewayFlags(run, f);

  CLI::App* attribute =
      app.add_subcommand("attribute", "Recompute attributions of a run");
  attribute->add_option("run_dir", input, "Run directory")
      ->required()
      ->check(CLI::ExistingDirectory);

  CLI::App* bench = app.add_subcommand("bench", "Grammaticality benchmark");
  bench->add_option("corpus_dir", input, "Directory of .conllu files")
      ->required()
      ->check(CLI::ExistingDirectory);
  bench->add_option("--checker-url", f.checker_url, "LanguageTool base URL");
  bench->add_option("--out", out, "Directory for report.json and report.md");
  bench->add_option("--dataset", dataset, "Dataset label");
  bench->add_option("--workers", workers, "Parallel sentences")
      ->check(CLI::Range(1, 256));
  AddRunFlags(bench, f);

  CLI::App* serve = app.add_subcommand("serve", "Serve the REST API");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port")->check(CLI::Range(1, 65535));
  AddGatewayFlags(serve, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  absl::StatusOr<Settings> settings = Resolve(f);
  if (!settings.ok()) return Fail(settings.status());
  absl::Status status;
  if (*segment) {
    status = Segment(input, *settings);
  } else if (*generate) {
    status = Generate(input, out, *settings);
  } else if (*run) {
    status = Run(task_path, *settings);
  } else if (*attribute) {
    status = Attribute(input);
  } else if (*bench) {
    status = Bench(input, out, dataset, workers, *settings);
  } else if (*serve) {
    status = Serve(host, port, *settings);
  }
  return status.ok() ? 0 : Fail(status);
}

}  // namespace
}  // namespace cfscope

int main(int argc, char** argv) { return cfscope::Main(argc, argv); }
