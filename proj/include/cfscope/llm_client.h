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

#ifndef CFSCOPE_LLM_CLIENT_H_
#define CFSCOPE_LLM_CLIENT_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"

namespace cfscope {

struct CompletionRequest {
  std::string prompt;
  // Distinguishes repeated draws of the same prompt; part of the cache key.
  int sample_index = 0;
  // Overrides the client's configured temperature (judge calls use 0).
  std::optional<double> temperature;
};

// Text-completion backend. Implementations must be thread-safe.
class LlmClient {
 public:
  virtual ~LlmClient() = default;

  virtual absl::StatusOr<std::string> Complete(
      const CompletionRequest& request) = 0;

  // Results are positionally aligned with `requests`. Per-item failures do not
  // fail the batch. The default runs the requests one after another.
  virtual std::vector<absl::StatusOr<std::string>> BatchComplete(
      std::span<const CompletionRequest> requests);
};

}  // namespace cfscope

#endif  // CFSCOPE_LLM_CLIENT_H_
