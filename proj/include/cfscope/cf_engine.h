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

// Counting, enumeration, sampling and realization of valid counterfactuals.
//
// A vector is valid when
//   - a removed segment takes its whole branch with it,
//   - an included segment keeps every child it cannot lose (only coordination
//     nodes can be such children once the forest is simplified),
//   - an included coordination node keeps at least one conjunct and a removed
//     one keeps none.
// The root segment is always included and has no bit.

#ifndef CFSCOPE_CF_ENGINE_H_
#define CFSCOPE_CF_ENGINE_H_

#include <compare>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "cfscope/segmenter.h"

namespace cfscope {

inline constexpr int kDefaultEnumerationCap = 4096;
inline constexpr int kDefaultSampleSize = 512;

struct CounterfactualVector {
  std::vector<uint8_t> inclusion;  // One bit per forest.variable_ids() entry.
  std::vector<int> choice;         // 0 = original text, k = alternatives[k-1].

  // Lexicographic on inclusion bits, then on choices.
  auto operator<=>(const CounterfactualVector&) const = default;
  bool operator==(const CounterfactualVector&) const = default;

  // "0110..." in bit order.
  std::string BitString() const;
};

struct Counterfactual {
  CounterfactualVector vector;
  std::string text;
  int word_count = 0;
};

// Saturating count; `saturated` means "at least value".
struct CountResult {
  uint64_t value = 0;
  bool saturated = false;
};

enum class Force { kFree, kIncluded, kExcluded };

// Exact number of valid vectors (replacement choices multiply leaf factors).
CountResult CountValid(const SegmentForest& forest);

// Number of valid vectors that agree with `forced` (segment id -> state).
// Forcing the root to kExcluded yields 0.
CountResult CountConstrained(const SegmentForest& forest,
                             const std::map<int, Force>& forced);

// Error code InvalidVector with the violated rule in the message.
absl::Status ValidateVector(const SegmentForest& forest,
                            const CounterfactualVector& vector);

// All valid vectors in ascending order. Error code CapExceeded when the
// count is above `cap`.
absl::StatusOr<std::vector<CounterfactualVector>> EnumerateValid(
    const SegmentForest& forest, int cap = kDefaultEnumerationCap);

// Uniform draws from the valid set by top-down descent weighted with the
// counting tables. Exact for counts below 2^53.
class UniformSampler {
 public:
  explicit UniformSampler(const SegmentForest& forest);

  CounterfactualVector Draw(std::mt19937_64& rng) const;

 private:
  void DrawPresent(int id, std::mt19937_64& rng,
                   CounterfactualVector& out) const;

  const SegmentForest* forest_;
  std::map<int, double> present_ways_;
};

// `k` distinct valid vectors, uniformly drawn, deterministic in `seed`, in
// ascending order. Returns the full enumeration when k >= CountValid.
std::vector<CounterfactualVector> SampleValid(const SegmentForest& forest,
                                              int k, uint64_t seed);

// Uniform double in [0, 1) from the top 53 bits of one engine output.
double UniformUnit(std::mt19937_64& rng);

// Text of the vector: included tokens in surface order with their original
// spacing, replacements substituted verbatim, the conjunction re-inserted
// between surviving conjuncts, plus small detokenization repairs (orphaned
// commas, a/an, sentence-initial capital). Error code InvalidVector.
absl::StatusOr<Counterfactual> RealizeText(const SegmentForest& forest,
                                           const CounterfactualVector& vector);

// Vector with every segment included and original choices.
CounterfactualVector FullVector(const SegmentForest& forest);

int CountWords(absl::string_view text);

}  // namespace cfscope

#endif  // CFSCOPE_CF_ENGINE_H_
