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
#include <functional>
#include <limits>
#include <set>

#include "absl/strings/ascii.h"
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

uint64_t SatAdd(uint64_t a, uint64_t b, bool& saturated) {
  uint64_t r;
  if (__builtin_add_overflow(a, b, &r)) {
    saturated = true;
    return UINT64_MAX;
  }
  return r;
}

int LeafFactor(const Segment& seg) {
  return seg.is_leaf() ? 1 + static_cast<int>(seg.alternatives.size()) : 1;
}

absl::Status Invalid(absl::string_view message) {
  return MakeError(absl::StatusCode::kInvalidArgument, "InvalidVector",
                   message);
}

}  // namespace

std::string CounterfactualVector::BitString() const {
  std::string out;
  out.reserve(inclusion.size());
  for (uint8_t b : inclusion) out += b ? '1' : '0';
  return out;
}

double UniformUnit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

CountResult CountConstrained(const SegmentForest& forest,
                             const std::map<int, Force>& forced) {
  auto force_of = [&](int id) {
    auto it = forced.find(id);
    return it == forced.end() ? Force::kFree : it->second;
  };
  bool saturated = false;
  // Returns {present ways, branch may be absent}.
  std::function<std::pair<uint64_t, bool>(int)> visit = [&](int id) {
    const Segment& seg = forest.segment(id);
    bool needs_presence = force_of(id) == Force::kIncluded;
    std::vector<std::pair<uint64_t, bool>> kids;
    for (int c : seg.children) {
      kids.push_back(visit(c));
    }
    uint64_t present = 0;
    if (force_of(id) != Force::kExcluded) {
      if (seg.kind == SegmentKind::kNormal) {
        present = static_cast<uint64_t>(LeafFactor(seg));
        for (size_t i = 0; i < kids.size(); ++i) {
          const Segment& child = forest.segment(seg.children[i]);
          const bool can_drop =
              kids[i].second && child.removability == Removability::kRemovable;
          present = SatMul(present, SatAdd(kids[i].first, can_drop ? 1 : 0,
                                           saturated),
                           saturated);
        }
      } else {
        uint64_t all = 1;
        bool all_absent_possible = true;
        for (size_t i = 0; i < kids.size(); ++i) {
          const Segment& child = forest.segment(seg.children[i]);
          const bool can_drop =
              kids[i].second && child.removability == Removability::kRemovable;
          all = SatMul(all, SatAdd(kids[i].first, can_drop ? 1 : 0, saturated),
                       saturated);
          all_absent_possible &= can_drop;
        }
        present = (all == UINT64_MAX && saturated)
                      ? all
                      : all - (all_absent_possible ? 1 : 0);
      }
    }
    bool can_be_absent = !needs_presence;
    if (can_be_absent) {
      // Absent branch: every descendant absent, so no forced inclusions below.
      for (int d : forest.Descendants(id)) {
        if (force_of(d) == Force::kIncluded) {
          can_be_absent = false;
          break;
        }
      }
    }
    return std::make_pair(present, can_be_absent);
  };
  const auto [present, absent_ok] = visit(forest.root_id());
  (void)absent_ok;
  return {present, saturated};
}

CountResult CountValid(const SegmentForest& forest) {
  return CountConstrained(forest, {});
}

absl::Status ValidateVector(const SegmentForest& forest,
                            const CounterfactualVector& vector) {
  const int m = forest.dimension();
  if (static_cast<int>(vector.inclusion.size()) != m ||
      static_cast<int>(vector.choice.size()) != m) {
    return Invalid(absl::StrCat("expected ", m, " bits and choices, got ",
                                vector.inclusion.size(), "/",
                                vector.choice.size()));
  }
  auto included = [&](int id) {
    return id == forest.root_id() || vector.inclusion[forest.bit_of(id)] != 0;
  };
  for (int i = 0; i < m; ++i) {
    const int id = forest.variable_ids()[i];
    const Segment& seg = forest.segment(id);
    const bool in = vector.inclusion[i] != 0;
    const bool parent_in = included(*seg.parent);
    if (in && !parent_in) {
      return Invalid(absl::StrCat("segment ", id,
                                  " included while its parent is removed"));
    }
    if (!in && parent_in && seg.removability == Removability::kUnremovable) {
      return Invalid(absl::StrCat("unremovable segment ", id,
                                  " removed while its parent is kept"));
    }
    const int choice = vector.choice[i];
    const int options = seg.is_leaf() ? static_cast<int>(seg.alternatives.size())
                                      : 0;
    if (choice < 0 || choice > options || (!in && choice != 0)) {
      return Invalid(absl::StrCat("choice ", choice, " not valid for segment ",
                                  id));
    }
  }
  for (const auto& [id, seg] : forest.segments()) {
    if (seg.kind != SegmentKind::kDummy || !included(id)) continue;
    const bool any = std::any_of(seg.children.begin(), seg.children.end(),
                                 [&](int c) { return included(c); });
    if (!any) {
      return Invalid(absl::StrCat("coordination segment ", id,
                                  " kept without any conjunct"));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<std::vector<CounterfactualVector>> EnumerateValid(
    const SegmentForest& forest, int cap) {
  const CountResult count = CountValid(forest);
  if (count.saturated || count.value > static_cast<uint64_t>(cap)) {
    return MakeError(absl::StatusCode::kResourceExhausted, "CapExceeded",
                     absl::StrCat(count.saturated ? ">= " : "", count.value,
                                  " valid vectors exceed the cap of ", cap));
  }
  const int m = forest.dimension();
  const std::vector<int>& ids = forest.variable_ids();
  std::vector<CounterfactualVector> out;
  out.reserve(count.value);
  CounterfactualVector cur{std::vector<uint8_t>(m, 0), std::vector<int>(m, 0)};

  // Ids are assigned in pre-order, so a parent's bit is always decided before
  // its children's. For coordination nodes, track how many conjuncts were
  // kept and how many are still open so the last one can be forced.
  std::map<int, int> kept, remaining;
  for (const auto& [id, seg] : forest.segments()) {
    if (seg.kind == SegmentKind::kDummy) {
      kept[id] = 0;
      remaining[id] = static_cast<int>(seg.children.size());
    }
  }
  auto included = [&](int id) {
    return id == forest.root_id() || cur.inclusion[forest.bit_of(id)] != 0;
  };
  std::function<void(int)> step = [&](int i) {
    if (i == m) {
      out.push_back(cur);
      return;
    }
    const int id = ids[i];
    const Segment& seg = forest.segment(id);
    const int parent = *seg.parent;
    const bool parent_in = included(parent);
    const bool parent_dummy =
        forest.segment(parent).kind == SegmentKind::kDummy;
    bool can_exclude = !parent_in || seg.removability == Removability::kRemovable;
    bool can_include = parent_in;
    if (parent_in && parent_dummy && remaining[parent] == 1 &&
        kept[parent] == 0) {
      can_exclude = false;
    }
    if (parent_dummy) --remaining[parent];
    if (can_exclude) {
      cur.inclusion[i] = 0;
      cur.choice[i] = 0;
      step(i + 1);
    }
    if (can_include) {
      cur.inclusion[i] = 1;
      if (parent_dummy) ++kept[parent];
      const int options = LeafFactor(seg);
      for (int c = 0; c < options; ++c) {
        cur.choice[i] = c;
        step(i + 1);
      }
      cur.choice[i] = 0;
      if (parent_dummy) --kept[parent];
    }
    cur.inclusion[i] = 0;
    if (parent_dummy) ++remaining[parent];
  };
  step(0);
  std::sort(out.begin(), out.end());
  return out;
}

UniformSampler::UniformSampler(const SegmentForest& forest) : forest_(&forest) {
  std::function<double(int)> visit = [&](int id) {
    const Segment& seg = forest.segment(id);
    double present;
    if (seg.kind == SegmentKind::kNormal) {
      present = LeafFactor(seg);
      for (int c : seg.children) {
        const double p = visit(c);
        present *= p + (forest.segment(c).removability ==
                                Removability::kRemovable
                            ? 1.0
                            : 0.0);
      }
    } else {
      double all = 1.0;
      bool all_absent_possible = true;
      for (int c : seg.children) {
        const bool drop = forest.segment(c).removability ==
                          Removability::kRemovable;
        all *= visit(c) + (drop ? 1.0 : 0.0);
        all_absent_possible &= drop;
      }
      present = all - (all_absent_possible ? 1.0 : 0.0);
    }
    present_ways_[id] = present;
    return present;
  };
  visit(forest.root_id());
}

CounterfactualVector UniformSampler::Draw(std::mt19937_64& rng) const {
  const int m = forest_->dimension();
  CounterfactualVector out{std::vector<uint8_t>(m, 0), std::vector<int>(m, 0)};
  DrawPresent(forest_->root_id(), rng, out);
  return out;
}

void UniformSampler::DrawPresent(int id, std::mt19937_64& rng,
                                 CounterfactualVector& out) const {
  const Segment& seg = forest_->segment(id);
  if (id != forest_->root_id()) {
    const int bit = forest_->bit_of(id);
    out.inclusion[bit] = 1;
    const int options = LeafFactor(seg);
    if (options > 1) {
      out.choice[bit] = std::min(
          options - 1, static_cast<int>(UniformUnit(rng) * options));
    }
  }
  auto droppable = [&](int c) {
    return forest_->segment(c).removability == Removability::kRemovable;
  };
  if (seg.kind == SegmentKind::kNormal) {
    for (int c : seg.children) {
      const double p = present_ways_.at(c);
      if (!droppable(c) || UniformUnit(rng) * (p + 1.0) < p) {
        DrawPresent(c, rng, out);
      }
    }
    return;
  }
  // Coordination: condition on "some conjunct kept" while none has been.
  const auto& kids = seg.children;
  std::vector<double> suffix(kids.size() + 1, 1.0);
  for (int i = static_cast<int>(kids.size()) - 1; i >= 0; --i) {
    suffix[i] = suffix[i + 1] *
                (present_ways_.at(kids[i]) + (droppable(kids[i]) ? 1.0 : 0.0));
  }
  bool any_kept = false;
  for (size_t i = 0; i < kids.size(); ++i) {
    const double p = present_ways_.at(kids[i]);
    if (!droppable(kids[i])) {
      DrawPresent(kids[i], rng, out);
      any_kept = true;
      continue;
    }
    double w_present, w_absent;
    if (any_kept) {
      w_present = p;
      w_absent = 1.0;
    } else {
      // Completions of the remaining conjuncts: any, or any but all-absent.
      bool rest_can_all_drop = true;
      for (size_t j = i + 1; j < kids.size(); ++j) {
        rest_can_all_drop &= droppable(kids[j]);
      }
      w_present = p * suffix[i + 1];
      w_absent = suffix[i + 1] - (rest_can_all_drop ? 1.0 : 0.0);
    }
    if (UniformUnit(rng) * (w_present + w_absent) < w_present) {
      DrawPresent(kids[i], rng, out);
      any_kept = true;
    }
  }
}

std::vector<CounterfactualVector> SampleValid(const SegmentForest& forest,
                                              int k, uint64_t seed) {
  const CountResult count = CountValid(forest);
  if (!count.saturated && static_cast<uint64_t>(k) >= count.value) {
    auto all = EnumerateValid(forest, static_cast<int>(count.value));
    if (all.ok()) return *std::move(all);
  }
  std::mt19937_64 rng(seed);
  UniformSampler sampler(forest);
  std::set<CounterfactualVector> seen;
  while (static_cast<int>(seen.size()) < k) {
    seen.insert(sampler.Draw(rng));
  }
  return std::vector<CounterfactualVector>(seen.begin(), seen.end());
}

CounterfactualVector FullVector(const SegmentForest& forest) {
  const int m = forest.dimension();
  return {std::vector<uint8_t>(m, 1), std::vector<int>(m, 0)};
}

int CountWords(absl::string_view text) {
  int words = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = absl::ascii_isspace(static_cast<unsigned char>(c));
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return words;
}

namespace {

enum class PieceKind { kToken, kReplacement, kSeparator };

struct Piece {
  std::string text;
  bool space_before = true;
  PieceKind kind = PieceKind::kToken;
  int token = 0;  // Original token for kToken; first replaced token otherwise.
};

bool IsPunctText(absl::string_view text) {
  return text == "," || text == ";" || text == ":" || text == "." ||
         text == "!" || text == "?";
}

bool IsClauseComma(absl::string_view text) {
  return text == "," || text == ";" || text == ":";
}

bool StartsWithVowelLetter(absl::string_view text) {
  if (text.empty()) return false;
  const char c = absl::ascii_tolower(static_cast<unsigned char>(text.front()));
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

}  // namespace

absl::StatusOr<Counterfactual> RealizeText(
    const SegmentForest& forest, const CounterfactualVector& vector) {
  RETURN_IF_ERROR(ValidateVector(forest, vector));
  const SentenceParse& sentence = forest.sentence();
  auto included = [&](int id) {
    return id == forest.root_id() || vector.inclusion[forest.bit_of(id)] != 0;
  };
  auto choice_of = [&](int id) {
    return id == forest.root_id() ? 0 : vector.choice[forest.bit_of(id)];
  };

  // First emitted token of each included branch; replacement leaves emit at
  // their first token.
  std::function<int(int)> first_emitted = [&](int id) {
    const Segment& seg = forest.segment(id);
    int lo = std::numeric_limits<int>::max();
    if (!seg.token_indices.empty()) lo = seg.token_indices.front();
    for (int c : seg.children) {
      if (included(c)) lo = std::min(lo, first_emitted(c));
    }
    return lo;
  };

  // Separators to insert before a token: outer coordinations first.
  std::map<int, std::vector<std::string>> separators_before;
  for (const auto& [id, seg] : forest.segments()) {
    if (seg.kind != SegmentKind::kDummy || !included(id)) continue;
    std::vector<int> kept;
    for (int c : seg.children) {
      if (included(c)) kept.push_back(c);
    }
    for (size_t j = 1; j < kept.size(); ++j) {
      const bool last = j + 1 == kept.size();
      std::string sep = ",";
      if (last && seg.cc_token) sep = sentence.token(*seg.cc_token).surface;
      separators_before[first_emitted(kept[j])].push_back(sep);
    }
  }

  std::vector<Piece> pieces;
  std::set<int> replaced;
  bool force_space = false;
  for (int t = 1; t <= sentence.size(); ++t) {
    const int owner = forest.owner_of(t);
    if (owner < 0 || !included(owner)) continue;
    const Segment& seg = forest.segment(owner);
    if (seg.kind == SegmentKind::kDummy &&
        ((seg.cc_token && *seg.cc_token == t) ||
         std::find(seg.connectors.begin(), seg.connectors.end(), t) !=
             seg.connectors.end())) {
      continue;
    }
    if (auto it = separators_before.find(t); it != separators_before.end()) {
      for (const std::string& sep : it->second) {
        const bool comma = sep == ",";
        pieces.push_back({sep, !comma && !pieces.empty(),
                          PieceKind::kSeparator, t});
      }
      force_space = true;
    }
    const bool spaced =
        force_space || t == 1 || sentence.token(t - 1).space_after;
    force_space = false;
    const int choice = choice_of(owner);
    if (choice > 0) {
      if (replaced.count(owner)) continue;
      replaced.insert(owner);
      pieces.push_back({seg.alternatives[choice - 1], spaced,
                        PieceKind::kReplacement, t});
      continue;
    }
    pieces.push_back({sentence.token(t).surface, spaced, PieceKind::kToken, t});
  }

  // Orphaned commas: sentence-initial, doubled, or before closing punctuation
  // or an inserted conjunction.
  std::vector<Piece> cleaned;
  for (size_t i = 0; i < pieces.size(); ++i) {
    const Piece& p = pieces[i];
    if (p.kind == PieceKind::kToken && IsClauseComma(p.text)) {
      if (cleaned.empty()) continue;
      const Piece* next = i + 1 < pieces.size() ? &pieces[i + 1] : nullptr;
      if (next == nullptr ||
          (next->kind != PieceKind::kReplacement && IsPunctText(next->text)) ||
          next->kind == PieceKind::kSeparator) {
        continue;
      }
    }
    if (p.kind == PieceKind::kSeparator && p.text == "," && !cleaned.empty() &&
        IsClauseComma(cleaned.back().text)) {
      continue;
    }
    cleaned.push_back(p);
  }
  if (!cleaned.empty()) cleaned.front().space_before = false;

  // a/an agreement where removal changed the following word.
  for (size_t i = 0; i + 1 < cleaned.size(); ++i) {
    Piece& p = cleaned[i];
    const Piece& next = cleaned[i + 1];
    if (p.kind != PieceKind::kToken) continue;
    const std::string lower = absl::AsciiStrToLower(p.text);
    if (lower != "a" && lower != "an") continue;
    const bool changed =
        next.kind != PieceKind::kToken || next.token != p.token + 1;
    if (!changed || IsPunctText(next.text)) continue;
    const bool upper = absl::ascii_isupper(static_cast<unsigned char>(p.text[0]));
    p.text = StartsWithVowelLetter(next.text) ? (upper ? "An" : "an")
                                              : (upper ? "A" : "a");
  }

  // Capitalize when the original sentence-initial word was dropped.
  if (!cleaned.empty() && !(cleaned.front().kind == PieceKind::kToken &&
                            cleaned.front().token == 1)) {
    const std::string& first = sentence.token(1).surface;
    if (!first.empty() &&
        absl::ascii_isupper(static_cast<unsigned char>(first[0]))) {
      std::string& text = cleaned.front().text;
      if (!text.empty()) {
        text[0] = absl::ascii_toupper(static_cast<unsigned char>(text[0]));
      }
    }
  }

  Counterfactual out;
  out.vector = vector;
  for (const Piece& p : cleaned) {
    if (p.space_before) out.text += ' ';
    out.text += p.text;
  }
  out.word_count = CountWords(out.text);
  return out;
}

}  // namespace cfscope
