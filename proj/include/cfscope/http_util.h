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


#ifndef CFSCOPE_HTTP_UTIL_H_
#define CFSCOPE_HTTP_UTIL_H_

#include <string>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"

namespace cfscope {

// "http://host:8080/v1/" -> origin "http://host:8080", path_prefix "/v1".
struct HttpEndpoint {
  std::string origin;
  std::string path_prefix;  // No trailing slash; empty for the root.
};

// Error code InvalidConfig.
absl::StatusOr<HttpEndpoint> ParseBaseUrl(absl::string_view url);

}  // namespace cfscope

#endif  // CFSCOPE_HTTP_UTIL_H_
