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


#include "cfscope/analysis.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "absl/strings/str_cat.h"
#include "cfscope/status_macros.h"

namespace cfscope {

absl::string_view SegmentStateName(SegmentState state) {
  switch (state) {
    case SegmentState::kIncluded:
      return "Included";
    case SegmentState::kExcluded:
      return "Excluded";
    case SegmentState::kVaries:
      return "Varies";
  }
  return "Varies";
}

double Quantile(const std::vector<double>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const size_t lo = static_cast<size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - lo) * (sorted[lo + 1] - sorted[lo]);
}

absl::StatusOr<OutcomeStats> BoxplotStats(const std::vector<double>& values,
                                          const std::vector<std::string>& ids) {
  if (values.empty()) {
    return MakeError(absl::StatusCode::kInvalidArgument, "EmptyInput",
                     "boxplot of no values");
  }
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  OutcomeStats s;
  s.count = static_cast<int>(values.size());
  s.min = sorted.front();
  s.max = sorted.back();
  s.q1 = Quantile(sorted, 0.25);
  s.median = Quantile(sorted, 0.5);
  s.q3 = Quantile(sorted, 0.75);
  const double iqr = s.q3 - s.q1;
  const double fence_lo = s.q1 - 1.5 * iqr;
  const double fence_hi = s.q3 + 1.5 * iqr;
  s.whisker_lo = s.q1;
  s.whisker_hi = s.q3;
  for (double v : sorted) {
    if (v >= fence_lo) {
      s.whisker_lo = std::min(v, s.q1);
      break;
    }
  }
  for (auto it = sorted.rbegin(); it != sorted.rend(); ++it) {
    if (*it <= fence_hi) {
      s.whisker_hi = std::max(*it, s.q3);
      break;
    }
  }
  for (size_t i = 0; i < values.size(); ++i) {
    if (values[i] < fence_lo || values[i] > fence_hi) {
      s.outlier_ids.push_back(i < ids.size() ? ids[i] : absl::StrCat(i));
    }
  }
  return s;
}

absl::StatusOr<std::vector<GroupSummary>> GroupBy(
    const DocumentSpace& space, const std::vector<ResultRow>& rows,
    const std::vector<int>& selection) {
  std::vector<int> bits;
  for (int id : selection) {
    const int bit = space.bit_of(id);
    if (bit < 0) {
      return MakeError(absl::StatusCode::kNotFound, "UnknownSegment",
                       absl::StrCat("segment ", id,
                                    " is not a variable segment"));
    }
    bits.push_back(bit);
  }
  if (std::set<int>(selection.begin(), selection.end()).size() !=
      selection.size()) {
    return MakeError(absl::StatusCode::kInvalidArgument, "InvalidSelection",
                     "selection lists a segment twice");
  }

  // Pattern as 0 (included) / 1 (excluded) so the map orders all-included
  // first.
  std::map<std::vector<int>, std::vector<const ResultRow*>> buckets;
  for (const ResultRow& row : rows) {
    if (static_cast<int>(row.vector.inclusion.size()) != space.dimension()) {
      return MakeError(absl::StatusCode::kInvalidArgument, "InvalidVector",
                       absl::StrCat("row ", row.cf_id, " has ",
                                    row.vector.inclusion.size(), " bits"));
    }
    std::vector<int> key;
    for (int bit : bits) key.push_back(row.vector.inclusion[bit] ? 0 : 1);
    buckets[key].push_back(&row);
  }

  std::vector<GroupSummary> out;
  for (const auto& [key, members] : buckets) {
    GroupSummary g;
    g.key.segment_ids = selection;
    std::map<int, Force> forced;
    for (size_t i = 0; i < key.size(); ++i) {
      g.key.pattern.push_back(key[i] == 0 ? SegmentState::kIncluded
                                          : SegmentState::kExcluded);
      forced[selection[i]] = key[i] == 0 ? Force::kIncluded : Force::kExcluded;
    }
    std::vector<double> values;
    std::vector<std::string> ids;
    for (const ResultRow* row : members) {
      g.member_cf_ids.push_back(row->cf_id);
      if (row->outcome) {
        values.push_back(*row->outcome);
        ids.push_back(row->cf_id);
      }
    }
    if (!values.empty()) {
      ASSIGN_OR_RETURN(OutcomeStats stats, BoxplotStats(values, ids));
      g.outcome_stats = std::move(stats);
    }
    for (int id : space.variable_ids()) {
      if (forced.count(id)) continue;
      std::map<int, Force> with = forced;
      with[id] = Force::kIncluded;
      const bool can_include = space.CountConstrained(with).value > 0;
      with[id] = Force::kExcluded;
      const bool can_exclude = space.CountConstrained(with).value > 0;
      if (can_include != can_exclude) {
        g.influenced_segments.push_back(id);
        g.influenced_states[id] =
            can_include ? SegmentState::kIncluded : SegmentState::kExcluded;
      }
    }
    g.annotation = AnnotateText(space, g);
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<AnnotatedSpan> AnnotateText(const DocumentSpace& space,
                                        const GroupSummary& group) {
  std::map<int, SegmentState> fixed = group.influenced_states;
  for (size_t i = 0; i < group.key.segment_ids.size(); ++i) {
    fixed[group.key.segment_ids[i]] = group.key.pattern[i];
  }
  std::vector<AnnotatedSpan> out;
  for (int id : space.segment_ids()) {
    SegmentState state = SegmentState::kVaries;
    if (auto it = fixed.find(id); it != fixed.end()) {
      state = it->second;
    } else if (space.bit_of(id) < 0) {
      state = SegmentState::kIncluded;  // Root or frozen sentence.
    }
    for (const CharSpan& span : space.SegmentSpans(id)) {
      out.push_back({span.start, span.end, state, id});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const AnnotatedSpan& a, const AnnotatedSpan& b) {
              return a.char_start < b.char_start;
            });
  return out;
}

absl::StatusOr<std::vector<ResultRow>> FilterSort(
    const DocumentSpace& space, const std::vector<ResultRow>& rows,
    const FilterSpec& spec) {
  std::vector<std::pair<int, bool>> required;
  for (const auto& [id, included] : spec.required) {
    const int bit = space.bit_of(id);
    if (bit < 0) {
      return MakeError(absl::StatusCode::kNotFound, "UnknownSegment",
                       absl::StrCat("segment ", id,
                                    " is not a variable segment"));
    }
    required.emplace_back(bit, included);
  }
  std::vector<ResultRow> out;
  for (const ResultRow& row : rows) {
    if (spec.outcome && (!row.outcome || !spec.outcome->Contains(*row.outcome))) {
      continue;
    }
    if (spec.word_count && !spec.word_count->Contains(row.word_count)) continue;
    bool ok = true;
    for (const auto& [bit, included] : required) {
      ok &= bit < static_cast<int>(row.vector.inclusion.size()) &&
            (row.vector.inclusion[bit] != 0) == included;
    }
    if (ok) out.push_back(row);
  }
  if (spec.sort_key == SortKey::kNone) return out;
  auto key = [&](const ResultRow& r) -> std::optional<double> {
    if (spec.sort_key == SortKey::kWordCount) return r.word_count;
    return r.outcome;
  };
  std::stable_sort(out.begin(), out.end(),
                   [&](const ResultRow& a, const ResultRow& b) {
                     const auto ka = key(a), kb = key(b);
                     if (!ka || !kb) return ka.has_value() && !kb.has_value();
                     return spec.descending ? *ka > *kb : *ka < *kb;
                   });
  return out;
}

}  // namespace cfscope
