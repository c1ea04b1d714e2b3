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


#include "cfscope/parse_provider.h"

#include "absl/strings/str_cat.h"
#include "cfscope/http_util.h"
#include "cfscope/status_macros.h"
#include "httplib.h"
#include "json.hpp"

namespace cfscope {

absl::StatusOr<std::vector<SentenceParse>> ParseWithProvider(
    absl::string_view base_url, absl::string_view text, int timeout_s) {
  ASSIGN_OR_RETURN(const HttpEndpoint endpoint, ParseBaseUrl(base_url));
  httplib::Client client(endpoint.origin);
  client.set_connection_timeout(timeout_s);
  client.set_read_timeout(timeout_s);
  const nlohmann::json body = {{"text", text}};
  const httplib::Result res = client.Post(endpoint.path_prefix + "/parse",
                                          body.dump(), "application/json");
  if (!res) {
    return MakeError(absl::StatusCode::kUnavailable, "ParseProviderUnavailable",
                     httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    return MakeError(absl::StatusCode::kUnavailable, "ParseProviderUnavailable",
                     absl::StrCat("HTTP ", res->status));
  }
  return ParseConlluStrict(res->body);
}

}  // namespace cfscope
