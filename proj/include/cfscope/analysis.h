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


// Table-view analytics over a run's results: group-by on selected segments,
// Tukey boxplot statistics, filtering and sorting, and span annotations over
// the original text.

#ifndef CFSCOPE_ANALYSIS_H_
#define CFSCOPE_ANALYSIS_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "cfscope/cf_engine.h"
#include "cfscope/document_space.h"

namespace cfscope {

enum class SegmentState { kIncluded, kExcluded, kVaries };

absl::string_view SegmentStateName(SegmentState state);

struct ResultRow {
  std::string cf_id;
  CounterfactualVector vector;
  std::optional<double> outcome;  // Absent when every sample failed.
  int word_count = 0;
};

struct OutcomeStats {
  int count = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  double whisker_lo = 0, whisker_hi = 0;
  std::vector<std::string> outlier_ids;
};

// Linear-interpolation quartiles, whiskers at the most extreme values within
// 1.5 IQR of the box. `ids` labels the values for outlier reporting; when
// empty, positions are used. Error code EmptyInput.
absl::StatusOr<OutcomeStats> BoxplotStats(
    const std::vector<double>& values,
    const std::vector<std::string>& ids = {});

// Interpolated quantile of sorted data, p in [0, 1].
double Quantile(const std::vector<double>& sorted, double p);

struct GroupKey {
  std::vector<int> segment_ids;
  std::vector<SegmentState> pattern;
  bool operator==(const GroupKey&) const = default;
};

struct AnnotatedSpan {
  int char_start = 0;
  int char_end = 0;
  SegmentState state = SegmentState::kVaries;
  int segment_id = 0;
  bool operator==(const AnnotatedSpan&) const = default;
};

struct GroupSummary {
  GroupKey key;
  std::vector<std::string> member_cf_ids;
  std::optional<OutcomeStats> outcome_stats;
  // Variable segments, not selected, whose state the pattern fixes through
  // the validity rules, with the state they are fixed to.
  std::vector<int> influenced_segments;
  std::map<int, SegmentState> influenced_states;
  std::vector<AnnotatedSpan> annotation;
};

// One group per inclusion pattern of `selection` that occurs in `rows`,
// all-included pattern first. Error codes: UnknownSegment, InvalidSelection
// (duplicate ids).
absl::StatusOr<std::vector<GroupSummary>> GroupBy(
    const DocumentSpace& space, const std::vector<ResultRow>& rows,
    const std::vector<int>& selection);

// Spans of every segment over space.text(): selected and influenced segments
// carry their fixed state, always-present ones are Included, the rest Varies.
std::vector<AnnotatedSpan> AnnotateText(const DocumentSpace& space,
                                        const GroupSummary& group);

struct ValueRange {
  double lo = 0.0;
  double hi = 0.0;
  bool include_hi = false;
  bool Contains(double v) const {
    return v >= lo && (include_hi ? v <= hi : v < hi);
  }
};

enum class SortKey { kNone, kOutcome, kWordCount };

struct FilterSpec {
  std::optional<ValueRange> outcome;
  std::optional<ValueRange> word_count;
  std::map<int, bool> required;  // segment id -> must be included
  SortKey sort_key = SortKey::kNone;
  bool descending = false;
};

// Stable filter then stable sort. Rows without an outcome fail any outcome
// range and sort last. Error code UnknownSegment.
absl::StatusOr<std::vector<ResultRow>> FilterSort(
    const DocumentSpace& space, const std::vector<ResultRow>& rows,
    const FilterSpec& spec);

}  // namespace cfscope

#endif  // CFSCOPE_ANALYSIS_H_
