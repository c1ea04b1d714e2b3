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


// In-process server speaking the LanguageTool /v2/check protocol with a small
// hand-written rule set. Used where no real checker is available.

#ifndef CFSCOPE_TESTS_TESTING_MOCK_LANGUAGETOOL_H_
#define CFSCOPE_TESTS_TESTING_MOCK_LANGUAGETOOL_H_

#include <atomic>
#include <string>
#include <thread>
#include <vector>

#include "absl/strings/string_view.h"
#include "httplib.h"

namespace cfscope::testing {

// Rule ids for `text`, in order of position:
//   UPPERCASE_SENTENCE_START      first letter is lower case
//   EN_A_VS_AN                    "a" before a vowel letter, "an" before a
//                                 consonant letter
//   COMMA_PARENTHESIS_WHITESPACE  space before , . ; : ? !
//   DOUBLE_PUNCTUATION            ",," or ", ," or ",." and similar
//   PUNCTUATION_PARAGRAPH_START   text starts with punctuation
//   ENGLISH_WORD_REPEAT_RULE      the same word twice in a row
//   DANGLING_CONJUNCTION          "and"/"or" directly before . , or the end
std::vector<std::string> MockGrammarRules(absl::string_view text);

class MockLanguageTool {
 public:
  MockLanguageTool();
  ~MockLanguageTool();

  std::string base_url() const;
  int requests() const { return requests_.load(); }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
};

}  // namespace cfscope::testing

#endif  // CFSCOPE_TESTS_TESTING_MOCK_LANGUAGETOOL_H_
