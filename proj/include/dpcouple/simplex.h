// Copyright 2026 The DP Coupling Workbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPCOUPLE_SIMPLEX_H_
#define DPCOUPLE_SIMPLEX_H_

#include <vector>

#include "absl/status/statusor.h"

namespace dpcouple {

// Dense two-phase simplex with Bland's rule for
//   minimize c^T x  s.t.  A x = b, x >= 0.
// Rows with negative b are negated internally.
struct LinearProgram {
  std::vector<std::vector<double>> a;
  std::vector<double> b;
  std::vector<double> c;
};

struct LpSolution {
  enum class Status { kOptimal, kInfeasible, kUnbounded };
  Status status = Status::kInfeasible;
  double objective = 0.0;
  std::vector<double> x;
  int pivots = 0;
};

absl::StatusOr<LpSolution> SolveLinearProgram(const LinearProgram& lp,
                                              double tolerance = 1e-12,
                                              int max_pivots = 200000);

}  // namespace dpcouple

#endif  // DPCOUPLE_SIMPLEX_H_
