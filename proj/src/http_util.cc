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


#include "cfscope/http_util.h"

#include "absl/strings/match.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/strip.h"
#include "cfscope/status_macros.h"

namespace cfscope {

absl::StatusOr<HttpEndpoint> ParseBaseUrl(absl::string_view url) {
  const size_t scheme_end = url.find("://");
  const absl::string_view scheme =
      scheme_end == absl::string_view::npos ? "" : url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    return MakeError(absl::StatusCode::kInvalidArgument, "InvalidConfig",
                     absl::StrCat("base URL must start with http:// or "
                                  "https://: \"", url, "\""));
  }
  const size_t path_start = url.find('/', scheme_end + 3);
  HttpEndpoint out;
  out.origin = std::string(url.substr(0, path_start));
  if (out.origin.size() == scheme_end + 3) {
    return MakeError(absl::StatusCode::kInvalidArgument, "InvalidConfig",
                     absl::StrCat("base URL has no host: \"", url, "\""));
  }
  if (path_start != absl::string_view::npos) {
    absl::string_view path = url.substr(path_start);
    while (absl::ConsumeSuffix(&path, "/")) {
    }
    out.path_prefix = std::string(path);
  }
  return out;
}

}  // namespace cfscope
