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

#include "cfscope/status_macros.h"

#include "absl/strings/str_cat.h"

namespace cfscope {

absl::Status MakeError(absl::StatusCode status_code, absl::string_view code,
                       absl::string_view message) {
  return absl::Status(status_code, absl::StrCat("[", code, "] ", message));
}

std::string ErrorCode(const absl::Status& status) {
  absl::string_view message = status.message();
  if (!message.empty() && message.front() == '[') {
    const size_t close = message.find(']');
    if (close != absl::string_view::npos) {
      return std::string(message.substr(1, close - 1));
    }
  }
  return absl::StatusCodeToString(status.code());
}

}  // namespace cfscope
