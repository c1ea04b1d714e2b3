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


// Diversity and fluency benchmark over a corpus of precomputed parses.

#ifndef CFSCOPE_BENCH_H_
#define CFSCOPE_BENCH_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "cfscope/conllu.h"
#include "cfscope/http_util.h"
#include "cfscope/rule_table.h"
#include "json.hpp"

namespace cfscope {

class GrammarChecker {
 public:
  virtual ~GrammarChecker() = default;
  // Rule ids of every match, in checker order. Must be thread-safe.
  virtual absl::StatusOr<std::vector<std::string>> Check(
      absl::string_view text) = 0;
};

// LanguageTool HTTP protocol: POST {base}/v2/check, form fields `text` and
// `language`, rule ids read from matches[].rule.id.
class LanguageToolClient : public GrammarChecker {
 public:
  // Error code InvalidConfig.
  static absl::StatusOr<std::unique_ptr<LanguageToolClient>> Create(
      absl::string_view base_url, std::string language = "en-US");

  // Error code CheckerUnavailable.
  absl::StatusOr<std::vector<std::string>> Check(
      absl::string_view text) override;

 private:
  LanguageToolClient(HttpEndpoint endpoint, std::string language)
      : endpoint_(std::move(endpoint)), language_(std::move(language)) {}

  HttpEndpoint endpoint_;
  std::string language_;
};

// Matches in `counterfactual` not paired with an equal rule id in
// `prototype` (multiset difference size).
int NewErrorCount(const std::vector<std::string>& prototype,
                  const std::vector<std::string>& counterfactual);

absl::StatusOr<int> GrammarNewErrors(absl::string_view prototype,
                                     absl::string_view counterfactual,
                                     GrammarChecker& checker);

struct CorpusSentence {
  std::string name;  // File stem, with "#k" for the k-th extra sentence.
  SentenceParse parse;
};

// Every *.conllu file in `dir`, in file name order. Error codes:
// CorpusUnreadable, plus CoNLL-U errors naming the file.
absl::StatusOr<std::vector<CorpusSentence>> LoadCorpus(
    const std::filesystem::path& dir);

struct BenchConfig {
  std::string dataset = "corpus";
  int cap = 10000;    // Enumerate when the space is at most this large,
  int sample = 1000;  // otherwise draw this many.
  uint64_t seed = 0;
  int workers = 4;
  const RemovabilityRuleTable* rules = nullptr;  // Default table if null.
};

struct SentenceBench {
  std::string name;
  int words = 0;
  uint64_t count_valid = 0;
  bool sampled = false;
  int perturbations = 0;  // Distinct realized texts.
  int checked = 0;
  int with_new_errors = 0;
  std::vector<std::string> flagged;  // Texts with new errors.
  double engine_ms = 0.0;            // Segment + generate + realize.
  std::string error;                 // Non-empty when the sentence failed.
};

struct BenchReport {
  std::string dataset;
  int sentences = 0;  // Successful ones.
  int failed = 0;
  double avg_sentence_length = 0.0;
  double avg_perturbations_per_sentence = 0.0;
  double grammatical_rate = 0.0;  // Over all checked counterfactuals.
  double avg_parse_sample_ms = 0.0;
  std::vector<SentenceBench> per_sentence;  // Corpus order.
};

// Per-sentence failures are recorded in the report, not returned.
BenchReport RunBenchmark(const std::vector<CorpusSentence>& corpus,
                         const BenchConfig& config, GrammarChecker& checker);

nlohmann::ordered_json BenchReportToJson(const BenchReport& report);
std::string BenchReportMarkdown(const BenchReport& report);

}  // namespace cfscope

#endif  // CFSCOPE_BENCH_H_
