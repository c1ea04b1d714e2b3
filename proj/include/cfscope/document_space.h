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


// Counterfactual space over a multi-sentence document.
//
// Each sentence keeps its own segment forest. Global segment ids are the
// sentence's base id plus the local id, and the vector concatenates the
// sentences' bits in ascending global id order. Frozen sentences (pinned or
// excluded by the user) contribute no bits and are always rendered verbatim.
// Text between sentences is kept byte-for-byte.

#ifndef CFSCOPE_DOCUMENT_SPACE_H_
#define CFSCOPE_DOCUMENT_SPACE_H_

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "cfscope/cf_engine.h"
#include "cfscope/segmenter.h"

namespace cfscope {

struct SpaceSentence {
  SegmentForest forest;
  bool frozen = false;
  int base_id = 0;
};

struct CharSpan {
  int start = 0;
  int end = 0;  // Exclusive, in bytes.
  bool operator==(const CharSpan&) const = default;
};

class DocumentSpace {
 public:
  struct Local {
    int sentence = 0;
    int id = 0;
  };

  DocumentSpace() = default;

  // `text` must contain each sentence's original text, in order. Error codes:
  // SentenceMismatch, OverlappingIds.
  static absl::StatusOr<DocumentSpace> Create(
      std::string text, std::vector<SpaceSentence> sentences);
  static DocumentSpace FromForest(SegmentForest forest);
  // Bases leaving room for every id of the given (fresh) forests.
  static std::vector<int> DefaultBases(const std::vector<SegmentForest>& forests);

  const std::string& text() const { return text_; }
  int sentence_count() const { return static_cast<int>(sentences_.size()); }
  const SpaceSentence& sentence(int i) const { return sentences_[i]; }
  int sentence_offset(int i) const { return offsets_[i]; }

  int dimension() const { return static_cast<int>(variable_ids_.size()); }
  const std::vector<int>& variable_ids() const { return variable_ids_; }
  // Bit of a global id, or -1 when the segment has none.
  int bit_of(int global_id) const;
  bool contains(int global_id) const { return Locate(global_id).ok(); }
  // Error code UnknownSegment.
  absl::StatusOr<Local> Locate(int global_id) const;
  // Every global id, roots and frozen sentences included, ascending.
  std::vector<int> segment_ids() const;
  const Segment& segment(int global_id) const;
  std::optional<int> parent_of(int global_id) const;
  std::vector<int> children_of(int global_id) const;
  std::string SegmentText(int global_id) const;
  // Byte spans of the segment's own tokens in text(); adjacent tokens merge.
  std::vector<CharSpan> SegmentSpans(int global_id) const;

  CountResult Count() const;
  // `forced` is keyed by global id. Forcing a segment that is always present
  // to kExcluded yields 0.
  CountResult CountConstrained(const std::map<int, Force>& forced) const;
  // Error code InvalidVector.
  absl::Status Validate(const CounterfactualVector& vector) const;
  // Ascending. Error code CapExceeded.
  absl::StatusOr<std::vector<CounterfactualVector>> Enumerate(
      int cap = kDefaultEnumerationCap) const;
  // Same contract as SampleValid; identical to it for one sentence.
  std::vector<CounterfactualVector> Sample(int k, uint64_t seed) const;
  absl::StatusOr<Counterfactual> Realize(
      const CounterfactualVector& vector) const;
  CounterfactualVector Full() const;

 private:
  CounterfactualVector Slice(const CounterfactualVector& vector,
                             int sentence) const;
  void Index();

  std::string text_;
  std::vector<SpaceSentence> sentences_;
  std::vector<int> offsets_;      // Byte offset of each sentence in text_.
  std::vector<int> bit_offsets_;  // First bit of each sentence.
  std::vector<int> variable_ids_;
};

}  // namespace cfscope

#endif  // CFSCOPE_DOCUMENT_SPACE_H_
