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

#include "cfscope/rule_table.h"

#include <fstream>
#include <sstream>

#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "cfscope/status_macros.h"

namespace cfscope {
namespace {

// Generated from config/removability_rules.conf.
constexpr absl::string_view kDefaultRules =
#include "default_rules.inc"
    ;

}  // namespace

absl::string_view RelationClassName(RelationClass c) {
  switch (c) {
    case RelationClass::kRemovable:
      return "removable";
    case RelationClass::kUnremovable:
      return "unremovable";
    case RelationClass::kConjunct:
      return "conjunct";
  }
  return "unremovable";
}

absl::string_view RemovabilityRuleTable::DefaultText() { return kDefaultRules; }

const RemovabilityRuleTable& RemovabilityRuleTable::Default() {
  static const RemovabilityRuleTable* table = [] {
    auto parsed = Parse(kDefaultRules);
    return new RemovabilityRuleTable(*std::move(parsed));
  }();
  return *table;
}

absl::StatusOr<RemovabilityRuleTable> RemovabilityRuleTable::Parse(
    absl::string_view text) {
  RemovabilityRuleTable table;
  bool has_default = false;
  int line_no = 0;
  for (absl::string_view line : absl::StrSplit(text, '\n')) {
    ++line_no;
    if (const size_t hash = line.find('#'); hash != absl::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = absl::StripAsciiWhitespace(line);
    if (line.empty()) continue;
    std::vector<absl::string_view> kv = absl::StrSplit(line, '=');
    if (kv.size() != 2) {
      return MakeError(absl::StatusCode::kInvalidArgument, "RuleSyntax",
                       absl::StrCat("line ", line_no, ": expected 'label = class'"));
    }
    const std::string label =
        absl::AsciiStrToLower(absl::StripAsciiWhitespace(kv[0]));
    const std::string value =
        absl::AsciiStrToLower(absl::StripAsciiWhitespace(kv[1]));
    RelationClass cls;
    if (value == "removable") {
      cls = RelationClass::kRemovable;
    } else if (value == "unremovable") {
      cls = RelationClass::kUnremovable;
    } else if (value == "conjunct") {
      cls = RelationClass::kConjunct;
    } else {
      return MakeError(absl::StatusCode::kInvalidArgument, "UnknownClass",
                       absl::StrCat("line ", line_no, ": unknown class '",
                                    value, "'"));
    }
    if (label.empty()) {
      return MakeError(absl::StatusCode::kInvalidArgument, "RuleSyntax",
                       absl::StrCat("line ", line_no, ": empty label"));
    }
    if (label == "default") {
      table.default_class_ = cls;
      has_default = true;
    } else {
      table.entries_[label] = cls;
    }
  }
  if (!has_default) {
    return MakeError(absl::StatusCode::kInvalidArgument, "MissingDefault",
                     "rule table needs a 'default = ...' entry");
  }
  auto conj = table.entries_.find("conj");
  if (conj == table.entries_.end()) {
    table.entries_["conj"] = RelationClass::kConjunct;
  } else if (conj->second != RelationClass::kConjunct) {
    return MakeError(absl::StatusCode::kInvalidArgument, "ConjMustBeConjunct",
                     "'conj' must map to conjunct");
  }
  return table;
}

absl::StatusOr<RemovabilityRuleTable> RemovabilityRuleTable::Load(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    return MakeError(absl::StatusCode::kNotFound, "FileNotFound",
                     absl::StrCat("cannot open rule table ", path));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return Parse(buffer.str());
}

RelationClass RemovabilityRuleTable::Classify(absl::string_view deprel) const {
  const std::string label = absl::AsciiStrToLower(deprel);
  if (auto it = entries_.find(label); it != entries_.end()) return it->second;
  if (const size_t colon = label.find(':'); colon != std::string::npos) {
    if (auto it = entries_.find(label.substr(0, colon)); it != entries_.end()) {
      return it->second;
    }
  }
  return default_class_;
}

}  // namespace cfscope
