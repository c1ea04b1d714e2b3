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

// Segmentation of a dependency parse into interpretable components.
//
// The pipeline is: classify each token's relation to its governor, build a
// word-level tree in which every coordination cluster hangs under a dummy
// node carrying the conjunction, then collapse every unremovable word into
// its governor. What remains is a SegmentForest: a tree of segments in which
// every non-root normal segment can be dropped on its own.

#ifndef CFSCOPE_SEGMENTER_H_
#define CFSCOPE_SEGMENTER_H_

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "cfscope/conllu.h"
#include "cfscope/llm_client.h"
#include "cfscope/rule_table.h"

namespace cfscope {

enum class SegmentKind { kNormal, kDummy };
enum class Removability { kRemovable, kUnremovable };

RelationClass ClassifyRelation(absl::string_view deprel,
                               const RemovabilityRuleTable& rules);

// Word-level tree. Node i (1 <= i <= n) is token i; dummy nodes follow.
struct WordNode {
  SegmentKind kind = SegmentKind::kNormal;
  int token = 0;                 // Normal nodes only.
  std::optional<int> cc_token;   // Dummy nodes only.
  std::vector<int> connectors;   // Dummy: extra cc and commas between conjuncts.
  std::vector<int> own_tokens;   // Dummy: punctuation closing the coordination.
  int parent = -1;               // -1 for the root.
  Removability removability = Removability::kRemovable;
  std::vector<int> children;
};

struct WordTree {
  std::shared_ptr<const SentenceParse> sentence;
  std::vector<WordNode> nodes;  // nodes[0] is unused.
  int root = 0;
};

WordTree BuildParseTree(const SentenceParse& parse,
                        const RemovabilityRuleTable& rules);

struct Segment {
  int id = 0;
  SegmentKind kind = SegmentKind::kNormal;
  // Surface-ordered. For dummies: punctuation lifted to the coordination.
  std::vector<int> token_indices;
  std::optional<int> cc_token;
  std::vector<int> connectors;
  std::optional<int> parent;
  Removability removability = Removability::kUnremovable;
  std::vector<int> children;  // Surface order of their branches.
  std::vector<std::string> alternatives;
  bool merged = false;

  bool is_leaf() const { return children.empty(); }
  bool operator==(const Segment&) const = default;
};

// Snapshot taken by MergeBranch so Expand can restore the exact prior state.
struct MergeRecord {
  int segment_id = 0;
  std::vector<Segment> before;  // The merged segment followed by its branch.
  bool operator==(const MergeRecord&) const = default;
};

// Immutable segment tree over one sentence. Customization operations return
// new forests.
class SegmentForest {
 public:
  SegmentForest() = default;
  SegmentForest(std::shared_ptr<const SentenceParse> sentence,
                std::map<int, Segment> segments, int root_id,
                std::vector<MergeRecord> merge_log = {});

  const SentenceParse& sentence() const { return *sentence_; }
  const std::shared_ptr<const SentenceParse>& sentence_ptr() const {
    return sentence_;
  }
  const std::map<int, Segment>& segments() const { return segments_; }
  const Segment& segment(int id) const { return segments_.at(id); }
  bool contains(int id) const { return segments_.count(id) > 0; }
  int root_id() const { return root_id_; }
  const std::vector<MergeRecord>& merge_log() const { return merge_log_; }

  // Number of binary dimensions: every segment but the root.
  int dimension() const { return static_cast<int>(variable_ids_.size()); }
  // Ascending ids of the non-root segments; bit i of a vector refers to
  // variable_ids()[i].
  const std::vector<int>& variable_ids() const { return variable_ids_; }
  // Bit position of `segment_id`, or -1 for the root / unknown ids.
  int bit_of(int segment_id) const;
  // Segment owning `token` (1-based), including cc/connector tokens.
  int owner_of(int token) const { return token_owner_[token]; }

  // Every token (cc and connectors included) in the branch rooted at `id`.
  std::vector<int> BranchTokens(int id) const;
  // Ids in the branch below `id`, excluding `id` itself.
  std::vector<int> Descendants(int id) const;
  // Tokens joined with their original spacing; dummies render as "[and]".
  std::string SegmentText(int id) const;
  // Indented tree printout, one segment per line.
  std::string DebugString() const;

  // Structure equality (ignores the merge log).
  bool SameStructure(const SegmentForest& other) const;

 private:
  std::shared_ptr<const SentenceParse> sentence_;
  std::map<int, Segment> segments_;
  int root_id_ = 0;
  std::vector<MergeRecord> merge_log_;
  std::vector<int> variable_ids_;
  std::vector<int> token_owner_;
};

// Collapses unremovable normal nodes into their governors. Segment ids are
// assigned in pre-order with children visited in surface order, so the root
// is always id 0.
SegmentForest Simplify(const WordTree& tree);

// Re-derives the forest from its own segments: merged segments stay merged and
// alternatives are kept. Used to check idempotence.
SegmentForest Simplify(const SegmentForest& forest);

// Parse -> word tree -> forest.
SegmentForest SegmentSentence(const SentenceParse& parse,
                      const RemovabilityRuleTable& rules =
                          RemovabilityRuleTable::Default());

struct ForestUpdate {
  SegmentForest forest;
  std::vector<std::string> warnings;
};

// Absorbs the whole branch below `segment_id` into it. Error codes:
// UnknownSegment, CannotMergeDummy. Merging a leaf is a no-op with a warning.
absl::StatusOr<ForestUpdate> MergeBranch(const SegmentForest& forest,
                                         int segment_id);

// Undoes the most recent merge of `segment_id`. Error codes: UnknownSegment,
// NotMerged.
absl::StatusOr<SegmentForest> Expand(const SegmentForest& forest,
                                     int segment_id);

// Stores replacement options for a leaf. Error codes: UnknownSegment,
// NotALeaf, EmptyAlternative.
absl::StatusOr<SegmentForest> ConfigureAlternatives(
    const SegmentForest& forest, int segment_id,
    std::vector<std::string> options);

struct AlternativeSuggestions {
  std::vector<std::string> preserving;
  std::vector<std::string> altering;
};

// Asks the model for meaning-preserving and meaning-altering replacements of
// a leaf segment. At most five of each; never applied automatically. Error
// codes: UnknownSegment, NotALeaf, GatewayUnavailable, SuggestionUnparseable.
absl::StatusOr<AlternativeSuggestions> SuggestAlternatives(
    const SegmentForest& forest, int segment_id, LlmClient& llm);

// Prompt sent by SuggestAlternatives.
std::string SuggestionPrompt(const SegmentForest& forest, int segment_id);

}  // namespace cfscope

#endif  // CFSCOPE_SEGMENTER_H_
