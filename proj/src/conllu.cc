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

#include "cfscope/conllu.h"

#include <algorithm>
#include <charconv>
#include <set>
#include <string>
#include <vector>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "cfscope/status_macros.h"

namespace cfscope {

SentenceParse::SentenceParse(std::vector<Token> tokens)
    : tokens_(std::move(tokens)) {
  offsets_.reserve(tokens_.size());
  for (size_t i = 0; i < tokens_.size(); ++i) {
    offsets_.push_back(static_cast<int>(original_text_.size()));
    original_text_ += tokens_[i].surface;
    if (i + 1 < tokens_.size() && tokens_[i].space_after) {
      original_text_ += ' ';
    }
  }
}

int SentenceParse::root() const {
  for (const Token& t : tokens_) {
    if (t.head == 0) return t.index;
  }
  return 0;
}

std::vector<int> SentenceParse::dependents(int index) const {
  std::vector<int> out;
  for (const Token& t : tokens_) {
    if (t.head == index) out.push_back(t.index);
  }
  return out;
}

bool SentenceParse::operator==(const SentenceParse& other) const {
  if (tokens_.size() != other.tokens_.size()) return false;
  for (size_t i = 0; i < tokens_.size(); ++i) {
    const Token& a = tokens_[i];
    const Token& b = other.tokens_[i];
    if (a.index != b.index || a.surface != b.surface || a.lemma != b.lemma ||
        a.upos != b.upos || a.head != b.head || a.deprel != b.deprel ||
        a.space_after != b.space_after) {
      return false;
    }
  }
  return true;
}

std::vector<TreeDiagnostic> ValidateTree(const std::vector<Token>& tokens) {
  std::vector<TreeDiagnostic> out;
  const int n = static_cast<int>(tokens.size());
  if (n == 0) {
    out.push_back({"NoRoot", 0, "sentence has no tokens"});
    return out;
  }
  for (int i = 0; i < n; ++i) {
    if (tokens[i].index != i + 1) {
      out.push_back({"NonContiguousIds", tokens[i].index,
                     absl::StrCat("expected id ", i + 1, ", found ",
                                  tokens[i].index)});
      // Head links are meaningless once ids are off.
      return out;
    }
  }
  std::vector<int> roots;
  for (const Token& t : tokens) {
    if (t.surface.empty()) {
      out.push_back({"EmptySurface", t.index, "token has an empty FORM"});
    }
    if (t.head < 0 || t.head > n || t.head == t.index) {
      out.push_back({"DanglingHead", t.index,
                     absl::StrCat("head ", t.head, " out of range")});
    } else if (t.head == 0) {
      roots.push_back(t.index);
    }
  }
  if (roots.empty()) {
    out.push_back({"NoRoot", 0, "no token has head 0"});
  } else if (roots.size() > 1) {
    out.push_back({"MultipleRoots", roots[1],
                   absl::StrCat(roots.size(), " tokens have head 0")});
  }

  // 0 = unvisited, 1 = on current path, 2 = reaches the root, 3 = does not.
  // Slot n + 1 stands in for every dangling head.
  std::vector<int> state(n + 2, 0);
  std::set<int> in_cycle;
  state[0] = 2;
  state[n + 1] = 3;
  auto next = [&](int cur) {
    const Token& t = tokens[cur - 1];
    return (t.head < 0 || t.head > n || t.head == t.index) ? n + 1 : t.head;
  };
  for (int start = 1; start <= n; ++start) {
    std::vector<int> path;
    int cur = start;
    while (state[cur] == 0) {
      state[cur] = 1;
      path.push_back(cur);
      cur = next(cur);
    }
    if (state[cur] == 1) {
      for (auto it = std::find(path.begin(), path.end(), cur); it != path.end();
           ++it) {
        in_cycle.insert(*it);
      }
    }
    const int final_state = (state[cur] == 2) ? 2 : 3;
    for (int p : path) state[p] = final_state;
  }
  if (!in_cycle.empty()) {
    out.push_back({"CycleDetected", *in_cycle.begin(),
                   absl::StrCat("head links form a cycle through tokens ",
                                absl::StrJoin(in_cycle, ","))});
  }
  for (int i = 1; i <= n; ++i) {
    if (state[i] == 3 && !in_cycle.count(i) && next(i) != n + 1) {
      out.push_back({"Unreachable", i, "token is not reachable from the root"});
    }
  }
  return out;
}

namespace {

bool ParseInt(absl::string_view s, int& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

absl::Status DiagnosticsToStatus(const std::vector<TreeDiagnostic>& diags) {
  static constexpr const char* kPriority[] = {
      "NonContiguousIds", "DanglingHead",  "CycleDetected", "MultipleRoots",
      "NoRoot",           "EmptySurface", "Unreachable"};
  std::string code = diags.front().code;
  for (const char* candidate : kPriority) {
    if (std::any_of(diags.begin(), diags.end(),
                    [&](const TreeDiagnostic& d) { return d.code == candidate; })) {
      code = candidate;
      break;
    }
  }
  std::vector<std::string> parts;
  for (const TreeDiagnostic& d : diags) {
    parts.push_back(absl::StrCat(d.code, "@", d.token, ": ", d.message));
  }
  return MakeError(absl::StatusCode::kInvalidArgument, code,
                   absl::StrJoin(parts, "; "));
}

absl::StatusOr<SentenceParse> ParseBlock(
    const std::vector<std::pair<int, absl::string_view>>& lines) {
  std::vector<Token> tokens;
  for (const auto& [line_no, line] : lines) {
    if (line.empty() || line.front() == '#') continue;
    std::vector<absl::string_view> cols = absl::StrSplit(line, '\t');
    if (cols.size() != 10) {
      return MakeError(absl::StatusCode::kInvalidArgument, "MalformedLine",
                       absl::StrCat("line ", line_no, ": expected 10 columns, ",
                                    "found ", cols.size()));
    }
    // Multiword-token ranges and empty nodes.
    if (cols[0].find('-') != absl::string_view::npos ||
        cols[0].find('.') != absl::string_view::npos) {
      continue;
    }
    Token t;
    if (!ParseInt(cols[0], t.index)) {
      return MakeError(absl::StatusCode::kInvalidArgument, "MalformedLine",
                       absl::StrCat("line ", line_no, ": bad ID '", cols[0],
                                    "'"));
    }
    if (!ParseInt(cols[6], t.head)) {
      return MakeError(absl::StatusCode::kInvalidArgument, "MalformedLine",
                       absl::StrCat("line ", line_no, ": bad HEAD '", cols[6],
                                    "'"));
    }
    t.surface = std::string(cols[1]);
    t.lemma = std::string(cols[2]);
    t.upos = std::string(cols[3]);
    t.deprel = std::string(cols[7]);
    for (absl::string_view item : absl::StrSplit(cols[9], '|')) {
      if (item == "SpaceAfter=No") t.space_after = false;
    }
    tokens.push_back(std::move(t));
  }
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].index != static_cast<int>(i) + 1) {
      return MakeError(absl::StatusCode::kInvalidArgument, "NonContiguousIds",
                       absl::StrCat("expected id ", i + 1, ", found ",
                                    tokens[i].index));
    }
  }
  const std::vector<TreeDiagnostic> diags = ValidateTree(tokens);
  if (!diags.empty()) return DiagnosticsToStatus(diags);
  return SentenceParse(std::move(tokens));
}

}  // namespace

std::vector<ConlluBlock> ParseConllu(absl::string_view doc) {
  std::vector<ConlluBlock> blocks;
  std::vector<std::pair<int, absl::string_view>> current;
  int first_line = 0;
  int line_no = 0;
  auto flush = [&]() {
    const bool has_tokens =
        std::any_of(current.begin(), current.end(), [](const auto& l) {
          return !l.second.empty() && l.second.front() != '#';
        });
    if (has_tokens) blocks.push_back({first_line, ParseBlock(current)});
    current.clear();
  };
  for (absl::string_view line : absl::StrSplit(doc, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == absl::string_view::npos) {
      flush();
      continue;
    }
    if (current.empty()) first_line = line_no;
    current.emplace_back(line_no, line);
  }
  flush();
  return blocks;
}

absl::StatusOr<std::vector<SentenceParse>> ParseConlluStrict(
    absl::string_view doc) {
  std::vector<SentenceParse> out;
  for (ConlluBlock& block : ParseConllu(doc)) {
    if (!block.parse.ok()) {
      return absl::Status(block.parse.status().code(),
                          absl::StrCat(block.parse.status().message(),
                                       " (block at line ", block.first_line,
                                       ")"));
    }
    out.push_back(*std::move(block.parse));
  }
  return out;
}

std::string SerializeConllu(const SentenceParse& parse) {
  std::string out = absl::StrCat("# text = ", parse.original_text(), "\n");
  for (const Token& t : parse.tokens()) {
    absl::StrAppend(&out, t.index, "\t", t.surface, "\t", t.lemma, "\t",
                    t.upos, "\t_\t_\t", t.head, "\t", t.deprel, "\t_\t",
                    t.space_after ? "_" : "SpaceAfter=No", "\n");
  }
  return out;
}

std::string SerializeConllu(const std::vector<SentenceParse>& parses) {
  std::string out;
  for (const SentenceParse& p : parses) {
    absl::StrAppend(&out, SerializeConllu(p), "\n");
  }
  return out;
}

}  // namespace cfscope
