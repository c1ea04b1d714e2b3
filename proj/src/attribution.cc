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


#include "cfscope/attribution.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "absl/strings/str_cat.h"
#include "cfscope/status_macros.h"

namespace cfscope {
namespace {

// C(m, s) computed from the smaller side so C(m, s) == C(m, m - s) exactly.
double Binomial(int m, int s) {
  const int k = std::min(s, m - s);
  double out = 1.0;
  for (int i = 1; i <= k; ++i) out = out * (m - k + i) / i;
  return std::round(out);
}

}  // namespace

absl::StatusOr<double> KernelWeight(int m, int s) {
  if (m < 2 || s < 0 || s > m) {
    return absl::InvalidArgumentError(
        absl::StrCat("kernel weight undefined for M=", m, ", s=", s));
  }
  if (s == 0 || s == m) {
    return MakeError(absl::StatusCode::kInvalidArgument, "DegenerateCoalition",
                     absl::StrCat("infinite weight at s=", s, " of ", m));
  }
  return (m - 1) / (Binomial(m, s) * s * (m - s));
}

Eigen::MatrixXd PseudoInverse(const Eigen::MatrixXd& a,
                              double relative_tolerance) {
  if (a.size() == 0) return Eigen::MatrixXd::Zero(a.cols(), a.rows());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double cutoff = relative_tolerance * sigma.maxCoeff();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sigma.size());
  for (int i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > cutoff && sigma(i) > 0.0) inv(i) = 1.0 / sigma(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

absl::StatusOr<ShapProblem> BuildProblem(const std::vector<ShapRecord>& records,
                                         int m) {
  std::map<std::vector<uint8_t>, std::pair<double, int>> rows;
  for (const ShapRecord& r : records) {
    if (static_cast<int>(r.bits.size()) != m) {
      return MakeError(absl::StatusCode::kInvalidArgument, "InvalidRecord",
                       absl::StrCat("row has ", r.bits.size(), " bits, want ",
                                    m));
    }
    if (std::any_of(r.bits.begin(), r.bits.end(),
                    [](uint8_t b) { return b > 1; }) ||
        !std::isfinite(r.outcome)) {
      return MakeError(absl::StatusCode::kInvalidArgument, "InvalidRecord",
                       "bits must be 0/1 and outcomes finite");
    }
    auto& slot = rows[r.bits];
    slot.first += r.outcome;
    slot.second += 1;
  }
  if (rows.size() < 2) {
    return MakeError(absl::StatusCode::kFailedPrecondition, "InsufficientRows",
                     absl::StrCat(rows.size(),
                                  " distinct rows; at least 2 are needed"));
  }

  ShapProblem p;
  p.m = m;
  p.distinct_rows = static_cast<int>(rows.size());
  const std::vector<uint8_t>& first = rows.begin()->first;
  for (int c = 0; c < m; ++c) {
    const bool varies = std::any_of(rows.begin(), rows.end(), [&](const auto& r) {
      return r.first[c] != first[c];
    });
    (varies ? p.active_columns : p.constant_columns).push_back(c);
  }
  const int k = static_cast<int>(p.active_columns.size());

  std::vector<std::pair<std::vector<double>, double>> interior;
  std::vector<double> weights;
  for (const auto& [bits, acc] : rows) {
    const double mean = acc.first / acc.second;
    int s = 0;
    std::vector<double> z(k);
    for (int j = 0; j < k; ++j) {
      z[j] = bits[p.active_columns[j]];
      s += bits[p.active_columns[j]];
    }
    if (s == 0) {
      p.f_empty = mean;
    } else if (s == k) {
      p.f_full = mean;
    } else {
      ASSIGN_OR_RETURN(const double w, KernelWeight(k, s));
      interior.emplace_back(std::move(z), mean);
      weights.push_back(w);
    }
  }
  const int n = static_cast<int>(interior.size());
  p.x.resize(n, k);
  p.y.resize(n);
  p.w.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) p.x(i, j) = interior[i].first[j];
    p.y(i) = interior[i].second;
    p.w(i) = weights[i];
  }
  return p;
}

absl::StatusOr<ShapResult> Solve(const ShapProblem& problem) {
  const int k = static_cast<int>(problem.active_columns.size());
  const int n = static_cast<int>(problem.x.rows());
  const int dim = k + 1;

  // Design matrix with the intercept column.
  Eigen::MatrixXd d(n, dim);
  if (n > 0) {
    d.col(0).setOnes();
    d.rightCols(k) = problem.x;
  }

  // Equality constraints from the observed endpoints.
  std::vector<std::pair<Eigen::RowVectorXd, double>> rows;
  if (problem.f_empty) {
    Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(dim);
    e(0) = 1.0;
    rows.emplace_back(e, *problem.f_empty);
  }
  if (problem.f_full) {
    rows.emplace_back(Eigen::RowVectorXd::Ones(dim), *problem.f_full);
  }
  Eigen::VectorXd v_p = Eigen::VectorXd::Zero(dim);
  Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(dim, dim);
  if (!rows.empty()) {
    Eigen::MatrixXd c(rows.size(), dim);
    Eigen::VectorXd rhs(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      c.row(i) = rows[i].first;
      rhs(i) = rows[i].second;
    }
    const Eigen::MatrixXd c_pinv = PseudoInverse(c);
    v_p = c_pinv * rhs;
    proj -= c_pinv * c;
  }

  Eigen::VectorXd v = v_p;
  double condition = 1.0;
  if (n > 0) {
    const Eigen::MatrixXd dtw = d.transpose() * problem.w.asDiagonal();
    const Eigen::MatrixXd a = proj * dtw * d * proj;
    const Eigen::VectorXd b = proj * dtw * (problem.y - d * v_p);
    v += PseudoInverse(a) * b;

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const Eigen::VectorXd& sigma = svd.singularValues();
    const double cutoff = kPinvRelativeTolerance * sigma.maxCoeff();
    double smallest = 0.0;
    for (int i = 0; i < sigma.size(); ++i) {
      if (sigma(i) > cutoff) smallest = sigma(i);
    }
    condition = smallest > 0.0 ? sigma.maxCoeff() / smallest : 0.0;
  }
  if (!v.allFinite()) {
    return MakeError(absl::StatusCode::kInternal, "NumericalFailure",
                     "attribution solve produced non-finite values");
  }

  ShapResult result;
  result.phi0 = v(0);
  result.phi.assign(problem.m, 0.0);
  for (int j = 0; j < k; ++j) result.phi[problem.active_columns[j]] = v(j + 1);
  result.non_identifiable = problem.constant_columns;
  result.condition_estimate = condition;
  if (n > 0) {
    const Eigen::VectorXd r = d * v - problem.y;
    result.residual_norm = std::sqrt((problem.w.array() * r.array().square()).sum());
  }
  result.rows = problem.distinct_rows;
  return result;
}

absl::StatusOr<ShapResult> ComputeShap(const std::vector<ShapRecord>& records,
                                       const std::vector<int>& segment_ids) {
  ASSIGN_OR_RETURN(ShapProblem problem,
                   BuildProblem(records, static_cast<int>(segment_ids.size())));
  ASSIGN_OR_RETURN(ShapResult result, Solve(problem));
  result.segment_ids = segment_ids;
  for (int& c : result.non_identifiable) c = segment_ids[c];
  return result;
}

}  // namespace cfscope
