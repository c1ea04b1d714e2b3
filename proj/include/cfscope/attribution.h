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


// KernelSHAP over the valid counterfactual set.
//
// Rows are (inclusion bits, outcome). Columns that never vary are dropped and
// reported as not identifiable. The empty and full coalitions of the varying
// columns have infinite kernel weight; when observed they enter as equality
// constraints (phi0 = f(empty), phi0 + sum(phi) = f(full)) and the rest is a
// weighted least-squares fit over the interior rows, solved in closed form
// with a tolerance-truncated pseudoinverse.

#ifndef CFSCOPE_ATTRIBUTION_H_
#define CFSCOPE_ATTRIBUTION_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "Eigen/Dense"
#include "absl/status/statusor.h"

namespace cfscope {

// Singular values below this fraction of the largest are treated as zero.
inline constexpr double kPinvRelativeTolerance = 1e-10;

// (m - 1) / (C(m, s) * s * (m - s)). Error code DegenerateCoalition for
// s in {0, m}; InvalidArgument for m < 2 or s outside [0, m].
absl::StatusOr<double> KernelWeight(int m, int s);

struct ShapRecord {
  std::vector<uint8_t> bits;
  double outcome = 0.0;
};

struct ShapProblem {
  int m = 0;                           // Original column count.
  std::vector<int> active_columns;     // Columns that vary, ascending.
  std::vector<int> constant_columns;   // Never vary; not identifiable.
  Eigen::MatrixXd x;                   // Interior rows over active columns.
  Eigen::VectorXd y;
  Eigen::VectorXd w;
  std::optional<double> f_empty;       // No active column set.
  std::optional<double> f_full;        // Every active column set.
  int distinct_rows = 0;
};

// Averages duplicate rows, sets the endpoints aside and weights the rest.
// Error codes: InsufficientRows (fewer than two distinct rows), InvalidRecord
// (wrong width, non-binary bit, outcome not finite).
absl::StatusOr<ShapProblem> BuildProblem(const std::vector<ShapRecord>& records,
                                         int m);

struct ShapResult {
  double phi0 = 0.0;
  std::vector<double> phi;           // One per original column.
  std::vector<int> segment_ids;      // Filled by callers that know them.
  std::vector<int> non_identifiable; // Column indices (or segment ids).
  double condition_estimate = 0.0;
  double residual_norm = 0.0;
  int rows = 0;
};

// Error code NumericalFailure when the solution is not finite.
absl::StatusOr<ShapResult> Solve(const ShapProblem& problem);

// BuildProblem + Solve, with column indices mapped to `segment_ids`.
absl::StatusOr<ShapResult> ComputeShap(const std::vector<ShapRecord>& records,
                                       const std::vector<int>& segment_ids);

// Moore-Penrose pseudoinverse by SVD with relative tolerance.
Eigen::MatrixXd PseudoInverse(const Eigen::MatrixXd& a,
                              double relative_tolerance = kPinvRelativeTolerance);

}  // namespace cfscope

#endif  // CFSCOPE_ATTRIBUTION_H_
