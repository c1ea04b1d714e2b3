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


#include "cfscope/cf_engine.h"

#include <algorithm>
#include <random>
#include <set>

#include "cfscope/status_macros.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "testing/testing.h"

namespace cfscope {
namespace {

using ::testing::UnorderedElementsAreArray;

struct ListingCase {
  const char* name;
  uint64_t count;
};

const ListingCase kListings[] = {
    {"medqa_01", 24},        {"medqa_02", 12}, {"multinews_01", 14},
    {"fiqa_01", 5},          {"fiqa_02", 8},   {"tinytextbooks_01", 9},
    {"tinytextbooks_02", 18}, {"billsum_01", 56}};

std::vector<std::string> RealizeAll(const SegmentForest& forest) {
  auto vectors = EnumerateValid(forest);
  EXPECT_TRUE(vectors.ok()) << vectors.status();
  std::vector<std::string> out;
  for (const auto& v : *vectors) {
    auto cf = RealizeText(forest, v);
    EXPECT_TRUE(cf.ok()) << cf.status();
    out.push_back(cf->text);
  }
  return out;
}

int FindSegment(const SegmentForest& forest, const std::string& text) {
  for (const auto& [id, seg] : forest.segments()) {
    if (forest.SegmentText(id) == text) return id;
  }
  return -1;
}

CounterfactualVector Keep(const SegmentForest& forest, std::set<int> ids) {
  CounterfactualVector v;
  for (int id : forest.variable_ids()) v.inclusion.push_back(ids.count(id));
  v.choice.assign(forest.dimension(), 0);
  return v;
}

TEST(CountValid, ListingSizes) {
  for (const auto& c : kListings) {
    SegmentForest forest = SegmentSentence(testing::LoadFixture(c.name));
    EXPECT_EQ(CountValid(forest).value, c.count) << c.name;
    EXPECT_FALSE(CountValid(forest).saturated);
  }
  EXPECT_EQ(CountValid(SegmentSentence(testing::LoadFixture("billsum_02")))
                .value,
            33u);
}

TEST(CountValid, RootOnly) {
  SegmentForest forest = SegmentSentence(testing::FlatParse(0));
  EXPECT_EQ(CountValid(forest).value, 1u);
  auto all = EnumerateValid(forest);
  ASSERT_TRUE(all.ok());
  ASSERT_EQ(all->size(), 1u);
  EXPECT_TRUE((*all)[0].inclusion.empty());
  EXPECT_EQ(RealizeText(forest, (*all)[0])->text, "word");
}

TEST(CountValid, Saturates) {
  // 70 independent optional modifiers: 2^70 does not fit.
  SegmentForest forest = SegmentSentence(testing::FlatParse(70));
  EXPECT_TRUE(CountValid(forest).saturated);
  EXPECT_EQ(ErrorCode(EnumerateValid(forest).status()), "CapExceeded");
  auto sample = SampleValid(forest, 20, 3);
  EXPECT_EQ(sample.size(), 20u);
  for (const auto& v : sample) EXPECT_TRUE(ValidateVector(forest, v).ok());
}

TEST(EnumerateValid, ListingsMatchExactly) {
  for (const auto& c : kListings) {
    SCOPED_TRACE(c.name);
    SegmentForest forest = SegmentSentence(testing::LoadFixture(c.name));
    EXPECT_THAT(RealizeAll(forest),
                UnorderedElementsAreArray(testing::LoadExpected(c.name)));
  }
}

TEST(EnumerateValid, ReorderedListingMatchesInCountOnly) {
  // The published listing for this sentence places a prepositional phrase
  // after the other conjunct, which surface-order realization cannot do.
  SegmentForest forest = SegmentSentence(testing::LoadFixture("billsum_02"));
  std::vector<std::string> got = RealizeAll(forest);
  std::vector<std::string> want = testing::LoadExpected("billsum_02");
  EXPECT_EQ(got.size(), want.size());
  EXPECT_EQ(std::set<std::string>(got.begin(), got.end()).size(), got.size());
}

TEST(EnumerateValid, MatchesBruteForceOnRandomForests) {
  std::mt19937_64 rng(21);
  int checked = 0;
  for (int trial = 0; trial < 400; ++trial) {
    SegmentForest forest = SegmentSentence(testing::RandomParse(rng, 2 + trial % 16));
    if (forest.dimension() > 12) continue;
    auto got = EnumerateValid(forest, 1 << 13);
    ASSERT_TRUE(got.ok());
    EXPECT_EQ(*got, testing::BruteForceValid(forest)) << forest.DebugString();
    EXPECT_EQ(CountValid(forest).value, got->size());
    ++checked;
  }
  EXPECT_GT(checked, 300);
}

TEST(EnumerateValid, WithAlternativesMatchesBruteForce) {
  SegmentForest forest = SegmentSentence(testing::LoadFixture("medqa_01"));
  auto configured = ConfigureAlternatives(
      forest, FindSegment(forest, "at 22 weeks gestation"),
      {"at 30 weeks gestation", "at 38 weeks gestation"});
  ASSERT_TRUE(configured.ok());
  configured = ConfigureAlternatives(*configured, FindSegment(forest, "pregnant"),
                                     {"expecting"});
  ASSERT_TRUE(configured.ok());
  auto got = EnumerateValid(*configured);
  ASSERT_TRUE(got.ok());
  EXPECT_EQ(*got, testing::BruteForceValid(*configured));
  EXPECT_EQ(got->size(), 72u);
  std::set<std::string> texts;
  for (const auto& v : *got) texts.insert(RealizeText(*configured, v)->text);
  EXPECT_EQ(texts.size(), got->size());
  EXPECT_TRUE(texts.count(
      "A expecting woman at 38 weeks gestation presents.") == 0);
  EXPECT_TRUE(texts.count(
      "An expecting woman at 38 weeks gestation presents."));
}

TEST(EnumerateValid, OrderIsLexicographic) {
  SegmentForest forest = SegmentSentence(testing::LoadFixture("medqa_01"));
  auto got = EnumerateValid(forest);
  ASSERT_TRUE(got.ok());
  EXPECT_TRUE(std::is_sorted(got->begin(), got->end()));
  EXPECT_EQ(std::adjacent_find(got->begin(), got->end()), got->end());
}

TEST(EnumerateValid, CapExceeded) {
  SegmentForest forest = SegmentSentence(testing::LoadFixture("billsum_01"));
  EXPECT_EQ(ErrorCode(EnumerateValid(forest, 55).status()), "CapExceeded");
  EXPECT_TRUE(EnumerateValid(forest, 56).ok());
}

TEST(ValidateVector, RejectsRuleViolations) {
  SegmentForest forest = SegmentSentence(testing::LoadFixture("patient_01"));
  const int dummy = FindSegment(forest, "[and]");
  const int pain = FindSegment(forest, "pain");
  const int intense = FindSegment(forest, "intense");
  const int trouble = FindSegment(forest, "trouble");
  // Child kept without parent.
  EXPECT_EQ(ErrorCode(ValidateVector(forest, Keep(forest, {dummy, intense, trouble}))),
            "InvalidVector");
  // Coordination kept without conjuncts.
  EXPECT_EQ(ErrorCode(ValidateVector(forest, Keep(forest, {dummy}))),
            "InvalidVector");
  // Unremovable coordination dropped under a kept root.
  EXPECT_EQ(ErrorCode(ValidateVector(forest, Keep(forest, {}))),
            "InvalidVector");
  EXPECT_TRUE(ValidateVector(forest, Keep(forest, {dummy, pain})).ok());
  CounterfactualVector bad_choice = Keep(forest, {dummy, pain});
  bad_choice.choice[forest.bit_of(pain)] = 1;
  EXPECT_FALSE(ValidateVector(forest, bad_choice).ok());
  CounterfactualVector short_vec;
  EXPECT_FALSE(ValidateVector(forest, short_vec).ok());
}

TEST(RealizeText, FullVectorIsOriginal) {
  for (const char* name : {"medqa_01", "medqa_02", "billsum_01", "billsum_02",
                           "multinews_01", "fiqa_01", "fiqa_02",
                           "tinytextbooks_01", "tinytextbooks_02",
                           "patient_01"}) {
    SegmentForest forest = SegmentSentence(testing::LoadFixture(name));
    auto cf = RealizeText(forest, FullVector(forest));
    ASSERT_TRUE(cf.ok());
    EXPECT_EQ(cf->text, forest.sentence().original_text()) << name;
    EXPECT_EQ(cf->word_count, CountWords(cf->text));
  }
}

TEST(RealizeText, Examples) {
  SegmentForest medqa = SegmentSentence(testing::LoadFixture("medqa_01"));
  EXPECT_EQ(RealizeText(medqa, Keep(medqa, {FindSegment(medqa, "pregnant")}))
                ->text,
            "A pregnant woman presents.");

  SegmentForest news = SegmentSentence(testing::LoadFixture("multinews_01"));
  const int fails = FindSegment(news, "he fails");
  auto cf = RealizeText(news, Keep(news, {fails, FindSegment(news, "horribly"),
                                          FindSegment(news, "at humor")}));
  ASSERT_TRUE(cf.ok());
  EXPECT_EQ(cf->text, "He fails horribly at humor.");
  EXPECT_EQ(cf->word_count, 5);

  SegmentForest patient = SegmentSentence(testing::LoadFixture("patient_01"));
  auto alt = ConfigureAlternatives(patient, FindSegment(patient, "in the neck"),
                                   {"in the stomach"});
  ASSERT_TRUE(alt.ok());
  CounterfactualVector v = FullVector(*alt);
  v.choice[alt->bit_of(FindSegment(patient, "in the neck"))] = 1;
  EXPECT_EQ(RealizeText(*alt, v)->text,
            "The patient reports trouble sleeping and intense pain in the "
            "stomach.");
  EXPECT_EQ(ErrorCode(RealizeText(patient, Keep(patient, {})).status()),
            "InvalidVector");
}

TEST(RealizeText, ThreeWayCoordinationSeparators) {
  std::vector<Token> tokens = {
      {1, "Tom", "_", "_", 6, "nsubj", false}, {2, ",", "_", "_", 1, "punct", true},
      {3, "Ann", "_", "_", 1, "conj", true},   {4, "and", "_", "_", 3, "cc", true},
      {5, "Bob", "_", "_", 3, "conj", true},   {6, "sing", "_", "_", 0, "ROOT", false},
      {7, ".", "_", "_", 6, "punct", false}};
  SegmentForest forest = SegmentSentence(SentenceParse(tokens));
  EXPECT_THAT(RealizeAll(forest),
              UnorderedElementsAreArray(
                  {"Tom, Ann and Bob sing.", "Tom and Ann sing.",
                   "Tom and Bob sing.", "Ann and Bob sing.", "Tom sing.",
                   "Ann sing.", "Bob sing."}));
}

TEST(RealizeText, DistinctAndMonotone) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 150; ++trial) {
    SegmentForest forest = SegmentSentence(testing::RandomParse(rng, 3 + trial % 12));
    auto all = EnumerateValid(forest, 1 << 13);
    if (!all.ok()) continue;
    std::vector<Counterfactual> cfs;
    for (const auto& v : *all) {
      auto cf = RealizeText(forest, v);
      ASSERT_TRUE(cf.ok());
      EXPECT_FALSE(cf->text.empty());
      EXPECT_EQ(cf->word_count, CountWords(cf->text));
      cfs.push_back(*cf);
    }
    for (size_t a = 0; a < cfs.size(); ++a) {
      for (size_t b = 0; b < cfs.size(); ++b) {
        bool subset = true;
        for (size_t i = 0; i < cfs[a].vector.inclusion.size(); ++i) {
          subset &= cfs[a].vector.inclusion[i] <= cfs[b].vector.inclusion[i];
        }
        if (subset) {
          EXPECT_LE(cfs[a].word_count, cfs[b].word_count);
        }
      }
    }
  }
}

TEST(SampleValid, DeterministicDistinctAndValid) {
  SegmentForest forest = SegmentSentence(testing::LoadFixture("billsum_01"));
  auto a = SampleValid(forest, 20, 99);
  auto b = SampleValid(forest, 20, 99);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.size(), 20u);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_EQ(std::adjacent_find(a.begin(), a.end()), a.end());
  for (const auto& v : a) EXPECT_TRUE(testing::OracleValid(forest, v));
  EXPECT_NE(SampleValid(forest, 20, 100), a);
}

TEST(SampleValid, ExhaustionReturnsEnumeration) {
  SegmentForest forest = SegmentSentence(testing::LoadFixture("medqa_01"));
  EXPECT_EQ(SampleValid(forest, 24, 5), *EnumerateValid(forest));
  EXPECT_EQ(SampleValid(forest, 1000, 5), *EnumerateValid(forest));
}

TEST(UniformSampler, DrawsAreValid) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    SegmentForest forest = SegmentSentence(testing::RandomParse(rng, 2 + trial % 20));
    UniformSampler sampler(forest);
    for (int i = 0; i < 50; ++i) {
      EXPECT_TRUE(testing::OracleValid(forest, sampler.Draw(rng)));
    }
  }
}

TEST(UniformSampler, RoughlyUniformOnSmallForest) {
  SegmentForest forest = SegmentSentence(testing::LoadFixture("fiqa_01"));
  UniformSampler sampler(forest);
  std::mt19937_64 rng(5);
  std::map<CounterfactualVector, int> freq;
  for (int i = 0; i < 5000; ++i) ++freq[sampler.Draw(rng)];
  ASSERT_EQ(freq.size(), 5u);
  for (const auto& [v, n] : freq) {
    EXPECT_NEAR(n, 1000, 3 * std::sqrt(5000 * 0.2 * 0.8));
  }
}

TEST(UniformUnit, Range) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = UniformUnit(rng);
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(CountWords, Whitespace) {
  EXPECT_EQ(CountWords(""), 0);
  EXPECT_EQ(CountWords("  He   fails. "), 2);
}

}  // namespace
}  // namespace cfscope
