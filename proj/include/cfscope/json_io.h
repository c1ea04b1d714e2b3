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


// JSON and JSON-lines encodings of the core types, plus small file helpers.
// Key order is fixed so that equal values serialize to equal bytes.

#ifndef CFSCOPE_JSON_IO_H_
#define CFSCOPE_JSON_IO_H_

#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "cfscope/analysis.h"
#include "cfscope/attribution.h"
#include "cfscope/cf_engine.h"
#include "cfscope/document_space.h"
#include "cfscope/evaluator.h"
#include "cfscope/segmenter.h"
#include "json.hpp"

namespace cfscope {

using OrderedJson = nlohmann::ordered_json;

// Reading helpers report schema problems with this error code.
inline constexpr absl::string_view kInvalidJson = "InvalidJson";

// {"id","bits","choices","text","word_count"}
OrderedJson CounterfactualToJson(const std::string& id,
                                 const Counterfactual& cf);
absl::StatusOr<std::pair<std::string, Counterfactual>> CounterfactualFromJson(
    const nlohmann::json& j);

// {"name","operator","argument"}. Validates on read.
OrderedJson EvaluatorToJson(const Evaluator& ev);
absl::StatusOr<Evaluator> EvaluatorFromJson(const nlohmann::json& j);

// "outcome" is null when no sample completed.
OrderedJson OutcomeRecordToJson(const OutcomeRecord& record);
absl::StatusOr<OutcomeRecord> OutcomeRecordFromJson(const nlohmann::json& j);

// {"v":1,"phi0","phi","segment_ids","non_identifiable","diagnostics"}
OrderedJson ShapResultToJson(const ShapResult& result);
absl::StatusOr<ShapResult> ShapResultFromJson(const nlohmann::json& j);

OrderedJson SegmentToJson(const Segment& segment);
absl::StatusOr<Segment> SegmentFromJson(const nlohmann::json& j);
// Full structural state, including the merge log.
OrderedJson ForestToJson(const SegmentForest& forest);
// Checks that the segments form a tree owning every token once. Error codes:
// InvalidJson, InvalidForest.
absl::StatusOr<SegmentForest> ForestFromJson(
    const nlohmann::json& j, std::shared_ptr<const SentenceParse> sentence);

// Restorable form: {"text","sentences":[{"conllu","frozen","base_id",
// "forest"}]}.
OrderedJson DocumentSpaceToJson(const DocumentSpace& space);
// Error codes: InvalidJson, InvalidForest, CoNLL-U and DocumentSpace errors.
absl::StatusOr<DocumentSpace> DocumentSpaceFromJson(const nlohmann::json& j);

// Client view: text, sentences and per-segment text, spans and tree edges.
OrderedJson SpaceViewJson(const DocumentSpace& space);

OrderedJson OutcomeStatsToJson(const OutcomeStats& stats);
OrderedJson GroupSummaryToJson(const GroupSummary& group);

// One compact JSON document per line.
std::string ToJsonLines(const std::vector<OrderedJson>& docs);
// Blank lines are skipped. Error code InvalidJson with the line number.
absl::StatusOr<std::vector<nlohmann::json>> ParseJsonLines(
    absl::string_view text);
// Error code InvalidJson.
absl::StatusOr<nlohmann::json> ParseJson(absl::string_view text);

// Error code FileUnreadable.
absl::StatusOr<std::string> ReadFileToString(const std::filesystem::path& path);
// Writes a sibling temp file and renames it over `path`. Creates parent
// directories. Error code FileWriteFailed.
absl::Status WriteFileAtomic(const std::filesystem::path& path,
                             absl::string_view content);

}  // namespace cfscope

#endif  // CFSCOPE_JSON_IO_H_
