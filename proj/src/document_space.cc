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


#include "cfscope/document_space.h"

#include <algorithm>
#include <random>
#include <set>

#include "absl/strings/str_cat.h"
#include "cfscope/status_macros.h"

namespace cfscope {
namespace {

uint64_t SatMul(uint64_t a, uint64_t b, bool& saturated) {
  uint64_t r;
  if (__builtin_mul_overflow(a, b, &r)) {
    saturated = true;
    return UINT64_MAX;
  }
  return r;
}

int MaxId(const SegmentForest& forest) {
  return forest.segments().empty() ? 0 : forest.segments().rbegin()->first;
}

}  // namespace

absl::StatusOr<DocumentSpace> DocumentSpace::Create(
    std::string text, std::vector<SpaceSentence> sentences) {
  DocumentSpace space;
  space.text_ = std::move(text);
  size_t cursor = 0;
  for (size_t s = 0; s < sentences.size(); ++s) {
    const std::string& original = sentences[s].forest.sentence().original_text();
    const size_t pos = space.text_.find(original, cursor);
    if (pos == std::string::npos) {
      return MakeError(absl::StatusCode::kInvalidArgument, "SentenceMismatch",
                       absl::StrCat("sentence ", s, " (\"", original,
                                    "\") not found in the text after byte ",
                                    cursor));
    }
    space.offsets_.push_back(static_cast<int>(pos));
    cursor = pos + original.size();
    if (s > 0 && sentences[s].base_id <=
                     sentences[s - 1].base_id + MaxId(sentences[s - 1].forest)) {
      return MakeError(absl::StatusCode::kInvalidArgument, "OverlappingIds",
                       absl::StrCat("base id of sentence ", s,
                                    " overlaps the previous sentence"));
    }
    if (sentences[s].base_id < 0) {
      return MakeError(absl::StatusCode::kInvalidArgument, "OverlappingIds",
                       "base ids must be non-negative");
    }
  }
  space.sentences_ = std::move(sentences);
  space.Index();
  return space;
}

DocumentSpace DocumentSpace::FromForest(SegmentForest forest) {
  DocumentSpace space;
  space.text_ = forest.sentence().original_text();
  space.offsets_ = {0};
  space.sentences_.push_back({std::move(forest), false, 0});
  space.Index();
  return space;
}

std::vector<int> DocumentSpace::DefaultBases(
    const std::vector<SegmentForest>& forests) {
  std::vector<int> bases;
  int next = 0;
  for (const SegmentForest& f : forests) {
    bases.push_back(next);
    next += MaxId(f) + 1;
  }
  return bases;
}

void DocumentSpace::Index() {
  variable_ids_.clear();
  bit_offsets_.clear();
  for (const SpaceSentence& s : sentences_) {
    bit_offsets_.push_back(static_cast<int>(variable_ids_.size()));
    if (s.frozen) continue;
    for (int id : s.forest.variable_ids()) {
      variable_ids_.push_back(s.base_id + id);
    }
  }
}

absl::StatusOr<DocumentSpace::Local> DocumentSpace::Locate(
    int global_id) const {
  for (int s = sentence_count() - 1; s >= 0; --s) {
    if (global_id < sentences_[s].base_id) continue;
    const int local = global_id - sentences_[s].base_id;
    if (sentences_[s].forest.contains(local)) return Local{s, local};
    break;
  }
  return MakeError(absl::StatusCode::kNotFound, "UnknownSegment",
                   absl::StrCat("no segment ", global_id));
}

int DocumentSpace::bit_of(int global_id) const {
  auto it = std::lower_bound(variable_ids_.begin(), variable_ids_.end(),
                             global_id);
  if (it == variable_ids_.end() || *it != global_id) return -1;
  return static_cast<int>(it - variable_ids_.begin());
}

std::vector<int> DocumentSpace::segment_ids() const {
  std::vector<int> out;
  for (const SpaceSentence& s : sentences_) {
    for (const auto& [id, seg] : s.forest.segments()) {
      out.push_back(s.base_id + id);
    }
  }
  return out;
}

const Segment& DocumentSpace::segment(int global_id) const {
  const Local local = *Locate(global_id);
  return sentences_[local.sentence].forest.segment(local.id);
}

std::optional<int> DocumentSpace::parent_of(int global_id) const {
  const Local local = *Locate(global_id);
  const Segment& seg = sentences_[local.sentence].forest.segment(local.id);
  if (!seg.parent) return std::nullopt;
  return *seg.parent + sentences_[local.sentence].base_id;
}

std::vector<int> DocumentSpace::children_of(int global_id) const {
  const Local local = *Locate(global_id);
  std::vector<int> out;
  for (int c : sentences_[local.sentence].forest.segment(local.id).children) {
    out.push_back(c + sentences_[local.sentence].base_id);
  }
  return out;
}

std::string DocumentSpace::SegmentText(int global_id) const {
  const Local local = *Locate(global_id);
  return sentences_[local.sentence].forest.SegmentText(local.id);
}

std::vector<CharSpan> DocumentSpace::SegmentSpans(int global_id) const {
  const Local local = *Locate(global_id);
  const SegmentForest& forest = sentences_[local.sentence].forest;
  const Segment& seg = forest.segment(local.id);
  std::vector<int> tokens = seg.token_indices;
  if (seg.cc_token) tokens.push_back(*seg.cc_token);
  tokens.insert(tokens.end(), seg.connectors.begin(), seg.connectors.end());
  std::sort(tokens.begin(), tokens.end());
  const int base = offsets_[local.sentence];
  const SentenceParse& parse = forest.sentence();
  std::vector<CharSpan> out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    const int start = base + parse.char_start(tokens[i]);
    const int end = base + parse.char_end(tokens[i]);
    if (i > 0 && tokens[i] == tokens[i - 1] + 1) {
      out.back().end = end;
    } else {
      out.push_back({start, end});
    }
  }
  return out;
}

CountResult DocumentSpace::Count() const { return CountConstrained({}); }

CountResult DocumentSpace::CountConstrained(
    const std::map<int, Force>& forced) const {
  std::vector<std::map<int, Force>> per_sentence(sentences_.size());
  for (const auto& [global_id, force] : forced) {
    auto local = Locate(global_id);
    if (!local.ok()) return {0, false};
    per_sentence[local->sentence][local->id] = force;
  }
  CountResult out{1, false};
  for (size_t s = 0; s < sentences_.size(); ++s) {
    if (sentences_[s].frozen) {
      for (const auto& [id, force] : per_sentence[s]) {
        if (force == Force::kExcluded) return {0, false};
      }
      continue;
    }
    const CountResult c =
        cfscope::CountConstrained(sentences_[s].forest, per_sentence[s]);
    if (c.value == 0) return {0, false};
    out.saturated |= c.saturated;
    out.value = SatMul(out.value, c.value, out.saturated);
  }
  return out;
}

CounterfactualVector DocumentSpace::Slice(const CounterfactualVector& vector,
                                          int sentence) const {
  const int begin = bit_offsets_[sentence];
  const int m = sentences_[sentence].frozen
                    ? 0
                    : sentences_[sentence].forest.dimension();
  CounterfactualVector out;
  out.inclusion.assign(vector.inclusion.begin() + begin,
                       vector.inclusion.begin() + begin + m);
  out.choice.assign(vector.choice.begin() + begin,
                    vector.choice.begin() + begin + m);
  return out;
}

absl::Status DocumentSpace::Validate(const CounterfactualVector& vector) const {
  if (static_cast<int>(vector.inclusion.size()) != dimension() ||
      static_cast<int>(vector.choice.size()) != dimension()) {
    return MakeError(absl::StatusCode::kInvalidArgument, "InvalidVector",
                     absl::StrCat("expected ", dimension(),
                                  " bits and choices, got ",
                                  vector.inclusion.size(), "/",
                                  vector.choice.size()));
  }
  for (int s = 0; s < sentence_count(); ++s) {
    if (sentences_[s].frozen) continue;
    RETURN_IF_ERROR(ValidateVector(sentences_[s].forest, Slice(vector, s)));
  }
  return absl::OkStatus();
}

absl::StatusOr<std::vector<CounterfactualVector>> DocumentSpace::Enumerate(
    int cap) const {
  const CountResult count = Count();
  if (count.saturated || count.value > static_cast<uint64_t>(cap)) {
    return MakeError(absl::StatusCode::kResourceExhausted, "CapExceeded",
                     absl::StrCat(count.saturated ? ">= " : "", count.value,
                                  " valid vectors exceed the cap of ", cap));
  }
  std::vector<CounterfactualVector> out = {CounterfactualVector{}};
  for (const SpaceSentence& s : sentences_) {
    if (s.frozen) continue;
    ASSIGN_OR_RETURN(std::vector<CounterfactualVector> local,
                     EnumerateValid(s.forest, cap));
    std::vector<CounterfactualVector> next;
    next.reserve(out.size() * local.size());
    for (const CounterfactualVector& prefix : out) {
      for (const CounterfactualVector& v : local) {
        CounterfactualVector joined = prefix;
        joined.inclusion.insert(joined.inclusion.end(), v.inclusion.begin(),
                                v.inclusion.end());
        joined.choice.insert(joined.choice.end(), v.choice.begin(),
                             v.choice.end());
        next.push_back(std::move(joined));
      }
    }
    out = std::move(next);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<CounterfactualVector> DocumentSpace::Sample(int k,
                                                        uint64_t seed) const {
  const CountResult count = Count();
  if (!count.saturated && static_cast<uint64_t>(k) >= count.value) {
    auto all = Enumerate(static_cast<int>(count.value));
    if (all.ok()) return *std::move(all);
  }
  std::vector<UniformSampler> samplers;
  for (const SpaceSentence& s : sentences_) {
    if (!s.frozen) samplers.emplace_back(s.forest);
  }
  std::mt19937_64 rng(seed);
  std::set<CounterfactualVector> seen;
  while (static_cast<int>(seen.size()) < k) {
    CounterfactualVector joined;
    for (const UniformSampler& sampler : samplers) {
      CounterfactualVector v = sampler.Draw(rng);
      joined.inclusion.insert(joined.inclusion.end(), v.inclusion.begin(),
                              v.inclusion.end());
      joined.choice.insert(joined.choice.end(), v.choice.begin(),
                           v.choice.end());
    }
    seen.insert(std::move(joined));
  }
  return std::vector<CounterfactualVector>(seen.begin(), seen.end());
}

absl::StatusOr<Counterfactual> DocumentSpace::Realize(
    const CounterfactualVector& vector) const {
  RETURN_IF_ERROR(Validate(vector));
  std::string text;
  size_t cursor = 0;
  for (int s = 0; s < sentence_count(); ++s) {
    const SegmentForest& forest = sentences_[s].forest;
    text.append(text_, cursor, offsets_[s] - cursor);
    if (sentences_[s].frozen) {
      text += forest.sentence().original_text();
    } else {
      ASSIGN_OR_RETURN(Counterfactual part, RealizeText(forest, Slice(vector, s)));
      text += part.text;
    }
    cursor = offsets_[s] + forest.sentence().original_text().size();
  }
  text.append(text_, cursor, std::string::npos);
  Counterfactual out;
  out.vector = vector;
  out.word_count = CountWords(text);
  out.text = std::move(text);
  return out;
}

CounterfactualVector DocumentSpace::Full() const {
  return {std::vector<uint8_t>(dimension(), 1),
          std::vector<int>(dimension(), 0)};
}

}  // namespace cfscope
