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

#ifndef CFSCOPE_STATUS_MACROS_H_
#define CFSCOPE_STATUS_MACROS_H_

#include <string>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"

#define CFSCOPE_CONCAT_INNER(a, b) a##b
#define CFSCOPE_CONCAT(a, b) CFSCOPE_CONCAT_INNER(a, b)

#define RETURN_IF_ERROR(expr)            \
  do {                                   \
    const absl::Status _status = (expr); \
    if (!_status.ok()) return _status;   \
  } while (0)

#define ASSIGN_OR_RETURN_IMPL(statusor, lhs, rexpr) \
  auto statusor = (rexpr);                          \
  if (!statusor.ok()) return statusor.status();     \
  lhs = std::move(statusor).value()

#define ASSIGN_OR_RETURN(lhs, rexpr) \
  ASSIGN_OR_RETURN_IMPL(CFSCOPE_CONCAT(_statusor_, __LINE__), lhs, rexpr)

namespace cfscope {

// Builds a status whose message is "[code] message". `code` is the
// machine-readable error name (e.g. "CycleDetected") that the REST layer
// forwards as the `code` field.
absl::Status MakeError(absl::StatusCode status_code, absl::string_view code,
                       absl::string_view message);

// Returns the code attached by MakeError, or the canonical status code name
// when the status was built some other way.
std::string ErrorCode(const absl::Status& status);

}  // namespace cfscope

#endif  // CFSCOPE_STATUS_MACROS_H_
