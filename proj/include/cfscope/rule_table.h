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

#ifndef CFSCOPE_RULE_TABLE_H_
#define CFSCOPE_RULE_TABLE_H_

#include <map>
#include <string>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"

namespace cfscope {

enum class RelationClass { kRemovable, kUnremovable, kConjunct };

absl::string_view RelationClassName(RelationClass c);

// Maps dependency labels to whether dropping the dependent keeps the sentence
// grammatical. Lookup is case-insensitive; a subtyped UD label such as
// "obl:tmod" falls back to its base label when it has no entry of its own.
//
// File format, one entry per line:
//   # comment
//   amod = removable
//   default = unremovable
class RemovabilityRuleTable {
 public:
  // The shipped table (same content as config/removability_rules.conf).
  static const RemovabilityRuleTable& Default();
  static absl::string_view DefaultText();

  // Error codes: RuleSyntax, UnknownClass, MissingDefault, ConjMustBeConjunct.
  static absl::StatusOr<RemovabilityRuleTable> Parse(absl::string_view text);
  static absl::StatusOr<RemovabilityRuleTable> Load(const std::string& path);

  RelationClass Classify(absl::string_view deprel) const;
  RelationClass default_class() const { return default_class_; }
  const std::map<std::string, RelationClass>& entries() const {
    return entries_;
  }

  bool operator==(const RemovabilityRuleTable& other) const = default;

 private:
  std::map<std::string, RelationClass> entries_;
  RelationClass default_class_ = RelationClass::kUnremovable;
};

}  // namespace cfscope

#endif  // CFSCOPE_RULE_TABLE_H_
