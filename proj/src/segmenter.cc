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

#include "cfscope/segmenter.h"

#include <algorithm>
#include <functional>
#include <limits>
#include <set>

#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_replace.h"
#include "cfscope/status_macros.h"
#include "json.hpp"

namespace cfscope {
namespace {

constexpr absl::string_view kSuggestionTemplate =
#include "suggest_alternatives.inc"
    ;

constexpr int kMaxSuggestions = 5;

bool IsCc(absl::string_view deprel) {
  return absl::AsciiStrToLower(deprel) == "cc";
}

bool IsPunct(absl::string_view deprel) {
  return absl::AsciiStrToLower(deprel) == "punct";
}

Removability ToRemovability(RelationClass c) {
  return c == RelationClass::kRemovable ? Removability::kRemovable
                                        : Removability::kUnremovable;
}

}  // namespace

RelationClass ClassifyRelation(absl::string_view deprel,
                               const RemovabilityRuleTable& rules) {
  return rules.Classify(deprel);
}

WordTree BuildParseTree(const SentenceParse& parse,
                        const RemovabilityRuleTable& rules) {
  const int n = parse.size();
  WordTree tree;
  tree.sentence = std::make_shared<const SentenceParse>(parse);
  tree.nodes.resize(n + 1);
  std::vector<RelationClass> cls(n + 1, RelationClass::kUnremovable);
  for (int t = 1; t <= n; ++t) {
    const Token& tok = parse.token(t);
    WordNode& node = tree.nodes[t];
    node.token = t;
    node.parent = tok.head == 0 ? -1 : tok.head;
    cls[t] = tok.head == 0 ? RelationClass::kUnremovable
                           : ClassifyRelation(tok.deprel, rules);
    node.removability = ToRemovability(cls[t]);
  }
  tree.root = parse.root();

  // Tokens represented by a dummy node rather than by their own node.
  std::vector<bool> absorbed(n + 1, false);

  for (int h = 1; h <= n; ++h) {
    if (cls[h] == RelationClass::kConjunct) continue;
    // Cluster = h plus transitive conj dependents (spaCy chains "A, B and C"
    // as C -> B -> A; UD attaches all to A).
    std::vector<int> members = {h};
    for (size_t i = 0; i < members.size(); ++i) {
      for (int d : parse.dependents(members[i])) {
        if (cls[d] == RelationClass::kConjunct) members.push_back(d);
      }
    }
    if (members.size() < 2) continue;
    const std::set<int> member_set(members.begin(), members.end());

    std::vector<int> cc_tokens;
    std::vector<int> punct_tokens;
    for (int m : members) {
      for (int d : parse.dependents(m)) {
        // Only bare cc/punct words move to the coordination node; one with
        // dependents of its own stays an ordinary word.
        if (member_set.count(d) || !parse.dependents(d).empty()) continue;
        if (IsCc(parse.token(d).deprel)) {
          cc_tokens.push_back(d);
        } else if (IsPunct(parse.token(d).deprel)) {
          punct_tokens.push_back(d);
        }
      }
    }
    const std::set<int> skip(cc_tokens.begin(), cc_tokens.end());
    std::set<int> skip_all = skip;
    skip_all.insert(punct_tokens.begin(), punct_tokens.end());

    // Own span of each member: its subtree minus other members' subtrees and
    // the cc/punct candidates.
    struct Span {
      int member, lo, hi;
    };
    std::vector<Span> spans;
    for (int m : members) {
      int lo = m, hi = m;
      std::vector<int> stack = {m};
      while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        lo = std::min(lo, cur);
        hi = std::max(hi, cur);
        for (int d : parse.dependents(cur)) {
          if (member_set.count(d) || skip_all.count(d)) continue;
          stack.push_back(d);
        }
      }
      spans.push_back({m, lo, hi});
    }
    std::sort(spans.begin(), spans.end(),
              [](const Span& a, const Span& b) { return a.lo < b.lo; });

    WordNode dummy;
    dummy.kind = SegmentKind::kDummy;
    dummy.parent = tree.nodes[h].parent;
    dummy.removability = tree.nodes[h].removability;
    std::sort(cc_tokens.begin(), cc_tokens.end());
    if (!cc_tokens.empty()) {
      dummy.cc_token = cc_tokens.front();
      dummy.connectors.assign(cc_tokens.begin() + 1, cc_tokens.end());
    }
    for (int p : punct_tokens) {
      bool in_gap = false;
      for (size_t i = 0; i + 1 < spans.size(); ++i) {
        if (p > spans[i].hi && p < spans[i + 1].lo) in_gap = true;
      }
      if (in_gap) {
        dummy.connectors.push_back(p);
      } else if (p > spans.back().hi && parse.token(p).head == h) {
        dummy.own_tokens.push_back(p);
      } else {
        continue;
      }
      absorbed[p] = true;
    }
    for (int c : cc_tokens) absorbed[c] = true;
    std::sort(dummy.connectors.begin(), dummy.connectors.end());

    const int dummy_index = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(dummy);
    for (int m : members) {
      tree.nodes[m].parent = dummy_index;
      tree.nodes[m].removability = Removability::kRemovable;
    }
    if (tree.root == h) tree.root = dummy_index;
  }

  for (int i = 1; i < static_cast<int>(tree.nodes.size()); ++i) {
    if (i <= n && absorbed[i]) continue;
    const int parent = tree.nodes[i].parent;
    if (parent >= 0) tree.nodes[parent].children.push_back(i);
  }
  // Children in surface order of their branches.
  std::vector<int> branch_min(tree.nodes.size(), n + 1);
  std::function<int(int)> compute_min = [&](int v) {
    const WordNode& node = tree.nodes[v];
    int lo = node.kind == SegmentKind::kNormal ? node.token : n + 1;
    if (node.cc_token) lo = std::min(lo, *node.cc_token);
    for (int c : node.connectors) lo = std::min(lo, c);
    for (int c : node.own_tokens) lo = std::min(lo, c);
    for (int c : node.children) lo = std::min(lo, compute_min(c));
    branch_min[v] = lo;
    return lo;
  };
  compute_min(tree.root);
  for (WordNode& node : tree.nodes) {
    std::sort(node.children.begin(), node.children.end(),
              [&](int a, int b) { return branch_min[a] < branch_min[b]; });
  }
  return tree;
}

SegmentForest::SegmentForest(std::shared_ptr<const SentenceParse> sentence,
                             std::map<int, Segment> segments, int root_id,
                             std::vector<MergeRecord> merge_log)
    : sentence_(std::move(sentence)),
      segments_(std::move(segments)),
      root_id_(root_id),
      merge_log_(std::move(merge_log)) {
  token_owner_.assign(sentence_->size() + 1, -1);
  for (const auto& [id, seg] : segments_) {
    if (id != root_id_) variable_ids_.push_back(id);
    for (int t : seg.token_indices) token_owner_[t] = id;
    if (seg.cc_token) token_owner_[*seg.cc_token] = id;
    for (int t : seg.connectors) token_owner_[t] = id;
  }
}

int SegmentForest::bit_of(int segment_id) const {
  auto it = std::lower_bound(variable_ids_.begin(), variable_ids_.end(),
                             segment_id);
  if (it == variable_ids_.end() || *it != segment_id) return -1;
  return static_cast<int>(it - variable_ids_.begin());
}

std::vector<int> SegmentForest::Descendants(int id) const {
  std::vector<int> out;
  std::vector<int> stack(segment(id).children.rbegin(),
                         segment(id).children.rend());
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    out.push_back(cur);
    const auto& kids = segment(cur).children;
    stack.insert(stack.end(), kids.rbegin(), kids.rend());
  }
  return out;
}

std::vector<int> SegmentForest::BranchTokens(int id) const {
  std::vector<int> ids = Descendants(id);
  ids.push_back(id);
  std::vector<int> tokens;
  for (int sid : ids) {
    const Segment& seg = segment(sid);
    tokens.insert(tokens.end(), seg.token_indices.begin(),
                  seg.token_indices.end());
    if (seg.cc_token) tokens.push_back(*seg.cc_token);
    tokens.insert(tokens.end(), seg.connectors.begin(), seg.connectors.end());
  }
  std::sort(tokens.begin(), tokens.end());
  return tokens;
}

namespace {

std::string JoinTokens(const SentenceParse& sentence,
                       const std::vector<int>& tokens) {
  std::string out;
  // Same spacing rule as realization: the gap before a token follows the
  // word that originally preceded it.
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0 && sentence.token(tokens[i] - 1).space_after) out += ' ';
    out += sentence.token(tokens[i]).surface;
  }
  return out;
}

}  // namespace

std::string SegmentForest::SegmentText(int id) const {
  const Segment& seg = segment(id);
  if (seg.kind == SegmentKind::kDummy) {
    return absl::StrCat(
        "[", seg.cc_token ? sentence_->token(*seg.cc_token).surface : ",",
        "]");
  }
  return JoinTokens(*sentence_, seg.token_indices);
}

std::string SegmentForest::DebugString() const {
  std::string out;
  std::function<void(int, int)> visit = [&](int id, int depth) {
    const Segment& seg = segment(id);
    absl::StrAppend(&out, std::string(2 * depth, ' '), "#", id, " ",
                    SegmentText(id));
    std::vector<std::string> tags;
    if (id == root_id_) {
      tags.push_back("root");
    } else {
      tags.push_back(seg.removability == Removability::kRemovable
                         ? "removable"
                         : "unremovable");
    }
    if (seg.kind == SegmentKind::kDummy) tags.push_back("dummy");
    if (seg.merged) tags.push_back("merged");
    if (!seg.alternatives.empty()) {
      tags.push_back(absl::StrCat(seg.alternatives.size(), " alternatives"));
    }
    absl::StrAppend(&out, "  (", absl::StrJoin(tags, ", "), ")\n");
    for (int c : seg.children) visit(c, depth + 1);
  };
  visit(root_id_, 0);
  return out;
}

bool SegmentForest::SameStructure(const SegmentForest& other) const {
  return root_id_ == other.root_id_ && segments_ == other.segments_ &&
         *sentence_ == *other.sentence_;
}

SegmentForest Simplify(const WordTree& tree) {
  const int node_count = static_cast<int>(tree.nodes.size());
  // Representative node: the nearest ancestor-or-self that survives.
  std::vector<int> rep(node_count, -1);
  std::function<void(int)> assign = [&](int v) {
    const WordNode& node = tree.nodes[v];
    const bool survives = v == tree.root || node.kind == SegmentKind::kDummy ||
                          node.removability == Removability::kRemovable;
    rep[v] = survives ? v : rep[node.parent];
    for (int c : node.children) assign(c);
  };
  assign(tree.root);

  std::map<int, Segment> by_node;
  std::function<void(int)> collect = [&](int v) {
    const WordNode& node = tree.nodes[v];
    Segment& seg = by_node[rep[v]];
    if (rep[v] == v) {
      seg.kind = node.kind;
      seg.removability = v == tree.root ? Removability::kUnremovable
                                        : node.removability;
      seg.cc_token = node.cc_token;
      seg.connectors = node.connectors;
      seg.token_indices.insert(seg.token_indices.end(),
                               node.own_tokens.begin(), node.own_tokens.end());
    }
    if (node.kind == SegmentKind::kNormal) seg.token_indices.push_back(node.token);
    for (int c : node.children) collect(c);
  };
  collect(tree.root);

  // Surviving children of each survivor, looking through merged nodes.
  std::map<int, std::vector<int>> kids;
  std::function<void(int, int)> gather = [&](int owner, int v) {
    for (int c : tree.nodes[v].children) {
      if (rep[c] == c) {
        kids[owner].push_back(c);
        gather(c, c);
      } else {
        gather(owner, c);
      }
    }
  };
  gather(tree.root, tree.root);

  std::map<int, int> branch_min;
  std::function<int(int)> min_of = [&](int v) {
    const Segment& seg = by_node[v];
    int lo = std::numeric_limits<int>::max();
    for (int t : seg.token_indices) lo = std::min(lo, t);
    if (seg.cc_token) lo = std::min(lo, *seg.cc_token);
    for (int t : seg.connectors) lo = std::min(lo, t);
    for (int c : kids[v]) lo = std::min(lo, min_of(c));
    branch_min[v] = lo;
    return lo;
  };
  min_of(tree.root);

  // Pre-order ids with children in surface order; the root is id 0.
  std::map<int, Segment> segments;
  std::function<int(int, std::optional<int>)> number =
      [&](int v, std::optional<int> parent_id) {
        const int id = static_cast<int>(segments.size());
        Segment seg = by_node[v];
        seg.id = id;
        seg.parent = parent_id;
        std::sort(seg.token_indices.begin(), seg.token_indices.end());
        segments[id] = seg;
        std::vector<int> order = kids[v];
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return branch_min[a] < branch_min[b]; });
        std::vector<int> child_ids;
        for (int c : order) child_ids.push_back(number(c, id));
        segments[id].children = std::move(child_ids);
        return id;
      };
  number(tree.root, std::nullopt);
  return SegmentForest(tree.sentence, std::move(segments), 0);
}

SegmentForest Simplify(const SegmentForest& forest) {
  std::map<int, Segment> segments = forest.segments();
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto& [id, seg] : segments) {
      if (id == forest.root_id() || seg.kind != SegmentKind::kNormal ||
          seg.removability != Removability::kUnremovable || !seg.parent) {
        continue;
      }
      Segment& parent = segments.at(*seg.parent);
      parent.token_indices.insert(parent.token_indices.end(),
                                  seg.token_indices.begin(),
                                  seg.token_indices.end());
      std::sort(parent.token_indices.begin(), parent.token_indices.end());
      auto pos = std::find(parent.children.begin(), parent.children.end(), id);
      pos = parent.children.erase(pos);
      parent.children.insert(pos, seg.children.begin(), seg.children.end());
      for (int c : seg.children) segments.at(c).parent = parent.id;
      segments.erase(id);
      changed = true;
      break;
    }
  }
  return SegmentForest(forest.sentence_ptr(), std::move(segments),
                       forest.root_id(), forest.merge_log());
}

SegmentForest SegmentSentence(const SentenceParse& parse,
                              const RemovabilityRuleTable& rules) {
  return Simplify(BuildParseTree(parse, rules));
}

absl::StatusOr<ForestUpdate> MergeBranch(const SegmentForest& forest,
                                         int segment_id) {
  if (!forest.contains(segment_id)) {
    return MakeError(absl::StatusCode::kNotFound, "UnknownSegment",
                     absl::StrCat("no segment ", segment_id));
  }
  const Segment& target = forest.segment(segment_id);
  if (target.kind == SegmentKind::kDummy) {
    return MakeError(absl::StatusCode::kFailedPrecondition, "CannotMergeDummy",
                     absl::StrCat("segment ", segment_id,
                                  " is a coordination node; merge its parent"));
  }
  if (target.is_leaf()) {
    return ForestUpdate{
        forest, {absl::StrCat("segment ", segment_id, " is a leaf; nothing to merge")}};
  }
  std::map<int, Segment> segments = forest.segments();
  MergeRecord record;
  record.segment_id = segment_id;
  record.before.push_back(target);
  const std::vector<int> branch = forest.Descendants(segment_id);
  for (int d : branch) record.before.push_back(forest.segment(d));

  Segment merged = target;
  merged.token_indices = forest.BranchTokens(segment_id);
  merged.children.clear();
  merged.merged = true;
  for (int d : branch) segments.erase(d);
  segments[segment_id] = merged;

  std::vector<MergeRecord> log = forest.merge_log();
  log.push_back(std::move(record));
  return ForestUpdate{SegmentForest(forest.sentence_ptr(), std::move(segments),
                                    forest.root_id(), std::move(log)),
                      {}};
}

absl::StatusOr<SegmentForest> Expand(const SegmentForest& forest,
                                     int segment_id) {
  if (!forest.contains(segment_id)) {
    return MakeError(absl::StatusCode::kNotFound, "UnknownSegment",
                     absl::StrCat("no segment ", segment_id));
  }
  std::vector<MergeRecord> log = forest.merge_log();
  auto it = std::find_if(log.rbegin(), log.rend(), [&](const MergeRecord& r) {
    return r.segment_id == segment_id;
  });
  if (it == log.rend()) {
    return MakeError(absl::StatusCode::kFailedPrecondition, "NotMerged",
                     absl::StrCat("segment ", segment_id, " was not merged"));
  }
  std::map<int, Segment> segments = forest.segments();
  for (const Segment& s : it->before) segments[s.id] = s;
  log.erase(std::next(it).base());
  return SegmentForest(forest.sentence_ptr(), std::move(segments),
                       forest.root_id(), std::move(log));
}

absl::StatusOr<SegmentForest> ConfigureAlternatives(
    const SegmentForest& forest, int segment_id,
    std::vector<std::string> options) {
  if (!forest.contains(segment_id)) {
    return MakeError(absl::StatusCode::kNotFound, "UnknownSegment",
                     absl::StrCat("no segment ", segment_id));
  }
  const Segment& seg = forest.segment(segment_id);
  if (!seg.is_leaf() || seg.kind != SegmentKind::kNormal ||
      segment_id == forest.root_id()) {
    return MakeError(absl::StatusCode::kFailedPrecondition, "NotALeaf",
                     absl::StrCat("segment ", segment_id,
                                  " is not a variable leaf segment"));
  }
  for (const std::string& option : options) {
    if (absl::StripAsciiWhitespace(option).empty()) {
      return MakeError(absl::StatusCode::kInvalidArgument, "EmptyAlternative",
                       "replacement text must not be empty");
    }
  }
  std::map<int, Segment> segments = forest.segments();
  segments[segment_id].alternatives = std::move(options);
  return SegmentForest(forest.sentence_ptr(), std::move(segments),
                       forest.root_id(), forest.merge_log());
}

std::string SuggestionPrompt(const SegmentForest& forest, int segment_id) {
  return absl::StrReplaceAll(
      kSuggestionTemplate,
      {{"{sentence}", forest.sentence().original_text()},
       {"{segment}", forest.SegmentText(segment_id)}});
}

absl::StatusOr<AlternativeSuggestions> SuggestAlternatives(
    const SegmentForest& forest, int segment_id, LlmClient& llm) {
  if (!forest.contains(segment_id)) {
    return MakeError(absl::StatusCode::kNotFound, "UnknownSegment",
                     absl::StrCat("no segment ", segment_id));
  }
  if (!forest.segment(segment_id).is_leaf() ||
      forest.segment(segment_id).kind != SegmentKind::kNormal) {
    return MakeError(absl::StatusCode::kFailedPrecondition, "NotALeaf",
                     absl::StrCat("segment ", segment_id, " is not a leaf"));
  }
  CompletionRequest request;
  request.prompt = SuggestionPrompt(forest, segment_id);
  absl::StatusOr<std::string> reply = llm.Complete(request);
  if (!reply.ok()) {
    return MakeError(absl::StatusCode::kUnavailable, "GatewayUnavailable",
                     reply.status().message());
  }
  const size_t open = reply->find('{');
  const size_t close = reply->rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    return MakeError(absl::StatusCode::kDataLoss, "SuggestionUnparseable",
                     "reply contains no JSON object");
  }
  nlohmann::json doc = nlohmann::json::parse(
      reply->substr(open, close - open + 1), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    return MakeError(absl::StatusCode::kDataLoss, "SuggestionUnparseable",
                     "reply JSON is malformed");
  }
  const std::string original = forest.SegmentText(segment_id);
  auto read_list = [&](const char* key, const std::set<std::string>& exclude) {
    std::vector<std::string> out;
    if (!doc.contains(key) || !doc[key].is_array()) return out;
    for (const auto& item : doc[key]) {
      if (!item.is_string()) continue;
      std::string text(absl::StripAsciiWhitespace(item.get<std::string>()));
      if (text.empty() || text == original || exclude.count(text) ||
          std::find(out.begin(), out.end(), text) != out.end()) {
        continue;
      }
      out.push_back(std::move(text));
      if (static_cast<int>(out.size()) == kMaxSuggestions) break;
    }
    return out;
  };
  AlternativeSuggestions result;
  result.preserving = read_list("preserving", {});
  result.altering = read_list(
      "altering",
      std::set<std::string>(result.preserving.begin(), result.preserving.end()));
  return result;
}

}  // namespace cfscope
