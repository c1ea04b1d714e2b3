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

// Dependency parses in CoNLL-U form.
//
// Only ID, FORM, HEAD, DEPREL and MISC drive downstream behavior; LEMMA and
// UPOS are kept so a parse serializes back without loss of those columns.
// Multiword-token ranges ("3-4") and empty nodes ("5.1") are skipped.

#ifndef CFSCOPE_CONLLU_H_
#define CFSCOPE_CONLLU_H_

#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"

namespace cfscope {

struct Token {
  int index = 0;  // 1-based.
  std::string surface;
  std::string lemma = "_";
  std::string upos = "_";
  int head = 0;  // 0 = root.
  std::string deprel;
  bool space_after = true;
};

// A single sentence. Immutable once built; tokens are ordered by index.
class SentenceParse {
 public:
  SentenceParse() = default;
  explicit SentenceParse(std::vector<Token> tokens);

  const std::vector<Token>& tokens() const { return tokens_; }
  int size() const { return static_cast<int>(tokens_.size()); }
  // 1-based access.
  const Token& token(int index) const { return tokens_[index - 1]; }

  // Surfaces joined with a single space unless SpaceAfter=No.
  const std::string& original_text() const { return original_text_; }
  // Byte offset of token `index` within original_text().
  int char_start(int index) const { return offsets_[index - 1]; }
  int char_end(int index) const {
    return offsets_[index - 1] + static_cast<int>(token(index).surface.size());
  }

  // Index of the token whose head is 0; 0 when there is none.
  int root() const;
  // Dependents of `index` (0 for the root's pseudo-parent), in index order.
  std::vector<int> dependents(int index) const;

  bool operator==(const SentenceParse& other) const;

 private:
  std::vector<Token> tokens_;
  std::string original_text_;
  std::vector<int> offsets_;
};

// One parsed block. `parse` is an error status for blocks that could not be
// turned into a valid tree; the batch itself never aborts.
struct ConlluBlock {
  int first_line = 0;  // 1-based line number of the block's first line.
  absl::StatusOr<SentenceParse> parse;
};

// Parses a CoNLL-U document. Error codes: MalformedLine, NonContiguousIds,
// CycleDetected, MultipleRoots, NoRoot, DanglingHead, EmptySurface.
std::vector<ConlluBlock> ParseConllu(absl::string_view doc);

// Convenience wrapper returning the first failing block's error.
absl::StatusOr<std::vector<SentenceParse>> ParseConlluStrict(
    absl::string_view doc);

std::string SerializeConllu(const SentenceParse& parse);
std::string SerializeConllu(const std::vector<SentenceParse>& parses);

struct TreeDiagnostic {
  std::string code;  // MultipleRoots, NoRoot, DanglingHead, CycleDetected,
                     // Unreachable, NonContiguousIds, EmptySurface.
  int token = 0;
  std::string message;
};

// Lists every structural violation; an empty list means the tree is valid.
std::vector<TreeDiagnostic> ValidateTree(const std::vector<Token>& tokens);
inline std::vector<TreeDiagnostic> ValidateTree(const SentenceParse& parse) {
  return ValidateTree(parse.tokens());
}

}  // namespace cfscope

#endif  // CFSCOPE_CONLLU_H_
