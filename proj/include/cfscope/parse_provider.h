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


// Client for an external parser service: POST {base}/parse with
// {"text": ...}, answered with CoNLL-U.

#ifndef CFSCOPE_PARSE_PROVIDER_H_
#define CFSCOPE_PARSE_PROVIDER_H_

#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "cfscope/conllu.h"

namespace cfscope {

// Error codes: ParseProviderUnavailable, InvalidConfig, plus the CoNLL-U
// errors of ParseConlluStrict.
absl::StatusOr<std::vector<SentenceParse>> ParseWithProvider(
    absl::string_view base_url, absl::string_view text, int timeout_s = 30);

}  // namespace cfscope

#endif  // CFSCOPE_PARSE_PROVIDER_H_
