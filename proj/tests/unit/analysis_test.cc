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

#include <random>
#include <set>

#include "absl/strings/str_cat.h"
#include "cfscope/status_macros.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "testing/testing.h"

namespace cfscope {
namespace {

using ::testing::ElementsAre;
using ::testing::IsEmpty;

int FindSegment(const SegmentForest& forest, const std::string& text) {
  for (const auto& [id, seg] : forest.segments()) {
    if (forest.SegmentText(id) == text) return id;
  }
  return -1;
}

std::vector<ResultRow> FullRows(const DocumentSpace& space,
                                std::mt19937_64* rng = nullptr) {
  std::vector<ResultRow> rows;
  int i = 0;
  const std::vector<CounterfactualVector> all = *space.Enumerate(1 << 14);
  for (const auto& v : all) {
    ResultRow r;
    r.cf_id = absl::StrCat("cf", i++);
    r.vector = v;
    r.word_count = space.Realize(v)->word_count;
    r.outcome = rng ? std::uniform_int_distribution<int>(0, 5)(*rng) / 5.0
                    : static_cast<double>(r.word_count % 6) / 5.0;
    rows.push_back(r);
  }
  return rows;
}

// Independent check: a non-selected segment is reported influenced exactly
// when its bit is constant over the group's members (full enumerations).
void ExpectInfluencedMatchesScan(const DocumentSpace& space,
                                 const std::vector<ResultRow>& rows,
                                 const std::vector<GroupSummary>& groups) {
  std::map<std::string, const ResultRow*> by_id;
  for (const auto& r : rows) by_id[r.cf_id] = &r;
  for (const GroupSummary& g : groups) {
    std::set<int> selected(g.key.segment_ids.begin(), g.key.segment_ids.end());
    std::vector<int> constant;
    for (int id : space.variable_ids()) {
      if (selected.count(id)) continue;
      const int bit = space.bit_of(id);
      std::set<int> values;
      for (const auto& cf : g.member_cf_ids) {
        values.insert(by_id[cf]->vector.inclusion[bit]);
      }
      if (values.size() == 1) {
        constant.push_back(id);
        EXPECT_EQ(g.influenced_states.at(id), *values.begin() ? SegmentState::kIncluded
                                                             : SegmentState::kExcluded);
      }
    }
    EXPECT_EQ(g.influenced_segments, constant);
  }
}

TEST(BoxplotStats, HandComputed) {
  auto s = BoxplotStats({0.2, 0.4, 0.6, 0.8, 1.0});
  ASSERT_TRUE(s.ok());
  EXPECT_DOUBLE_EQ(s->median, 0.6);
  EXPECT_DOUBLE_EQ(s->q1, 0.4);
  EXPECT_DOUBLE_EQ(s->q3, 0.8);
  EXPECT_DOUBLE_EQ(s->whisker_lo, 0.2);
  EXPECT_DOUBLE_EQ(s->whisker_hi, 1.0);
  EXPECT_THAT(s->outlier_ids, IsEmpty());
}

TEST(BoxplotStats, Degenerate) {
  auto s = BoxplotStats({0.4, 0.4, 0.4});
  ASSERT_TRUE(s.ok());
  EXPECT_EQ(s->q3 - s->q1, 0.0);
  EXPECT_EQ(s->whisker_lo, 0.4);
  EXPECT_THAT(s->outlier_ids, IsEmpty());
  EXPECT_EQ(ErrorCode(BoxplotStats({}).status()), "EmptyInput");
}

TEST(BoxplotStats, LowOutliers) {
  auto s = BoxplotStats({1, 1, 1, 1, 0.8, 1, 1, 0.2, 0.4, 1},
                        {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"});
  ASSERT_TRUE(s.ok());
  EXPECT_THAT(s->outlier_ids, ElementsAre("h", "i"));
  EXPECT_DOUBLE_EQ(s->whisker_lo, 0.8);
  EXPECT_LE(s->min, s->q1);
  EXPECT_LE(s->q1, s->median);
  EXPECT_LE(s->median, s->q3);
  EXPECT_LE(s->q3, s->max);
}

TEST(GroupBy, EmptySelectionIsOneGroup) {
  DocumentSpace space =
      DocumentSpace::FromForest(SegmentSentence(testing::LoadFixture("medqa_01")));
  std::vector<ResultRow> rows = FullRows(space);
  auto groups = GroupBy(space, rows, {});
  ASSERT_TRUE(groups.ok());
  ASSERT_EQ(groups->size(), 1u);
  EXPECT_EQ((*groups)[0].member_cf_ids.size(), 24u);
  EXPECT_THAT((*groups)[0].influenced_segments, IsEmpty());
}

TEST(GroupBy, TwoSegmentsFourGroups) {
  SegmentForest forest = SegmentSentence(testing::LoadFixture("medqa_01"));
  DocumentSpace space = DocumentSpace::FromForest(forest);
  std::vector<ResultRow> rows = FullRows(space);
  const int pregnant = FindSegment(forest, "pregnant");
  const int burning = FindSegment(forest, "with burning");
  auto groups = GroupBy(space, rows, {pregnant, burning});
  ASSERT_TRUE(groups.ok());
  ASSERT_EQ(groups->size(), 4u);
  EXPECT_THAT((*groups)[0].key.pattern,
              ElementsAre(SegmentState::kIncluded, SegmentState::kIncluded));
  size_t total = 0;
  for (const auto& g : *groups) total += g.member_cf_ids.size();
  EXPECT_EQ(total, rows.size());
  // Dropping "with burning" forces its child out.
  const int urination = FindSegment(forest, "upon urination");
  EXPECT_THAT((*groups)[1].influenced_segments, ElementsAre(urination));
  EXPECT_EQ((*groups)[1].influenced_states.at(urination),
            SegmentState::kExcluded);
  ExpectInfluencedMatchesScan(space, rows, *groups);
}

TEST(GroupBy, ChildForcesParent) {
  SegmentForest forest = SegmentSentence(testing::LoadFixture("medqa_01"));
  DocumentSpace space = DocumentSpace::FromForest(forest);
  std::vector<ResultRow> rows = FullRows(space);
  const int urination = FindSegment(forest, "upon urination");
  const int burning = FindSegment(forest, "with burning");
  auto groups = GroupBy(space, rows, {urination});
  ASSERT_TRUE(groups.ok());
  ASSERT_EQ(groups->size(), 2u);
  EXPECT_THAT((*groups)[0].influenced_segments, ElementsAre(burning));
  EXPECT_EQ((*groups)[0].influenced_states.at(burning), SegmentState::kIncluded);
  EXPECT_THAT((*groups)[1].influenced_segments, IsEmpty());
}

TEST(GroupBy, CoordinationConstraints) {
  SegmentForest forest = SegmentSentence(testing::LoadFixture("patient_01"));
  DocumentSpace space = DocumentSpace::FromForest(forest);
  std::vector<ResultRow> rows = FullRows(space);
  const int trouble = FindSegment(forest, "trouble");
  const int pain = FindSegment(forest, "pain");
  auto groups = GroupBy(space, rows, {pain});
  ASSERT_TRUE(groups.ok());
  ASSERT_EQ(groups->size(), 2u);
  // Without "pain" the coordination needs "trouble".
  EXPECT_EQ((*groups)[1].influenced_states.at(trouble), SegmentState::kIncluded);
  ExpectInfluencedMatchesScan(space, rows, *groups);
}

TEST(GroupBy, Errors) {
  DocumentSpace space =
      DocumentSpace::FromForest(SegmentSentence(testing::LoadFixture("medqa_01")));
  std::vector<ResultRow> rows = FullRows(space);
  EXPECT_EQ(ErrorCode(GroupBy(space, rows, {0}).status()), "UnknownSegment");
  EXPECT_EQ(ErrorCode(GroupBy(space, rows, {99}).status()), "UnknownSegment");
  EXPECT_EQ(ErrorCode(GroupBy(space, rows, {1, 1}).status()),
            "InvalidSelection");
}

TEST(GroupBy, RandomForestsMatchScan) {
  std::mt19937_64 rng(17);
  int runs = 0;
  while (runs < 100) {
    DocumentSpace space =
        DocumentSpace::FromForest(SegmentSentence(testing::RandomParse(rng, 10)));
    if (space.dimension() < 1 || space.Count().value > 2000) continue;
    std::vector<ResultRow> rows = FullRows(space, &rng);
    std::vector<int> selection = space.variable_ids();
    std::shuffle(selection.begin(), selection.end(), rng);
    selection.resize(std::min<size_t>(selection.size(), 1 + runs % 3));
    auto groups = GroupBy(space, rows, selection);
    ASSERT_TRUE(groups.ok());
    ExpectInfluencedMatchesScan(space, rows, *groups);
    ++runs;
  }
}

TEST(AnnotateText, SpansCoverTextDisjointly) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    DocumentSpace space =
        DocumentSpace::FromForest(SegmentSentence(testing::RandomParse(rng, 12)));
    if (space.dimension() == 0 || space.Count().value > 4096) continue;
    std::vector<ResultRow> rows = FullRows(space);
    auto groups = GroupBy(space, rows, {space.variable_ids()[0]});
    ASSERT_TRUE(groups.ok());
    for (const auto& g : *groups) {
      int prev_end = 0;
      for (const auto& span : g.annotation) {
        EXPECT_LE(0, span.char_start);
        EXPECT_LT(span.char_start, span.char_end);
        EXPECT_LE(span.char_end, static_cast<int>(space.text().size()));
        EXPECT_LE(prev_end, span.char_start);
        prev_end = span.char_end;
      }
    }
  }
}

TEST(AnnotateText, SelectedSpansCarryPattern) {
  SegmentForest forest = SegmentSentence(testing::LoadFixture("medqa_01"));
  DocumentSpace space = DocumentSpace::FromForest(forest);
  std::vector<ResultRow> rows = FullRows(space);
  const int pregnant = FindSegment(forest, "pregnant");
  auto groups = GroupBy(space, rows, {pregnant});
  ASSERT_TRUE(groups.ok());
  for (const auto& span : (*groups)[1].annotation) {
    const std::string text = space.text().substr(
        span.char_start, span.char_end - span.char_start);
    if (span.segment_id == pregnant) {
      EXPECT_EQ(text, "pregnant");
      EXPECT_EQ(span.state, SegmentState::kExcluded);
    } else if (span.segment_id == forest.root_id()) {
      EXPECT_EQ(span.state, SegmentState::kIncluded);
    } else {
      EXPECT_EQ(span.state, SegmentState::kVaries);
    }
  }
}

TEST(FilterSort, RangesSortingAndPatterns) {
  SegmentForest forest = SegmentSentence(testing::LoadFixture("multinews_01"));
  DocumentSpace space = DocumentSpace::FromForest(forest);
  std::vector<ResultRow> rows = FullRows(space);
  FilterSpec by_words;
  by_words.sort_key = SortKey::kWordCount;
  auto sorted = FilterSort(space, rows, by_words);
  ASSERT_TRUE(sorted.ok());
  EXPECT_EQ(space.Realize(sorted->front().vector)->text, "He fails.");
  // Idempotent.
  EXPECT_EQ(FilterSort(space, *sorted, by_words)->size(), sorted->size());
  for (size_t i = 0; i < sorted->size(); ++i) {
    EXPECT_EQ((*FilterSort(space, *sorted, by_words))[i].cf_id,
              (*sorted)[i].cf_id);
  }

  FilterSpec empty;
  empty.outcome = ValueRange{0.3, 0.3, false};
  EXPECT_THAT(*FilterSort(space, rows, empty), IsEmpty());

  FilterSpec low;
  low.outcome = ValueRange{0.0, 0.5, false};
  const std::vector<ResultRow> low_rows = *FilterSort(space, rows, low);
  EXPECT_FALSE(low_rows.empty());
  for (const auto& r : low_rows) EXPECT_LT(*r.outcome, 0.5);

  FilterSpec need;
  const int humor = FindSegment(forest, "at humor");
  need.required[humor] = true;
  need.sort_key = SortKey::kOutcome;
  need.descending = true;
  auto kept = FilterSort(space, rows, need);
  ASSERT_TRUE(kept.ok());
  EXPECT_FALSE(kept->empty());
  for (size_t i = 0; i < kept->size(); ++i) {
    EXPECT_TRUE((*kept)[i].vector.inclusion[space.bit_of(humor)]);
    if (i > 0) {
      EXPECT_GE(*(*kept)[i - 1].outcome, *(*kept)[i].outcome);
    }
  }
  need.required[99] = true;
  EXPECT_EQ(ErrorCode(FilterSort(space, rows, need).status()),
            "UnknownSegment");
}

TEST(FilterSort, MissingOutcomesSortLast) {
  DocumentSpace space =
      DocumentSpace::FromForest(SegmentSentence(testing::LoadFixture("fiqa_01")));
  std::vector<ResultRow> rows = FullRows(space);
  rows[0].outcome.reset();
  FilterSpec spec;
  spec.sort_key = SortKey::kOutcome;
  auto sorted = FilterSort(space, rows, spec);
  EXPECT_EQ(sorted->back().cf_id, rows[0].cf_id);
  spec.outcome = ValueRange{0.0, 1.0, true};
  EXPECT_EQ(FilterSort(space, rows, spec)->size(), rows.size() - 1);
}

}  // namespace
}  // namespace cfscope
