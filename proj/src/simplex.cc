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

#include "dpcouple/simplex.h"

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "absl/strings/str_cat.h"
#include "dpcouple/status.h"

namespace dpcouple {
namespace {

class Tableau {
 public:
  Tableau(size_t rows, size_t cols)
      : rows_(rows), cols_(cols), data_((rows + 1) * (cols + 1), 0.0) {}

  double& at(size_t r, size_t c) { return data_[r * (cols_ + 1) + c]; }
  double& rhs(size_t r) { return at(r, cols_); }
  // Row `rows_` is the objective (reduced costs); its rhs is -objective.
  double& cost(size_t c) { return at(rows_, c); }

  void Pivot(size_t pr, size_t pc) {
    const double inv = 1.0 / at(pr, pc);
    for (size_t c = 0; c <= cols_; ++c) at(pr, c) *= inv;
    at(pr, pc) = 1.0;
    for (size_t r = 0; r <= rows_; ++r) {
      if (r == pr) continue;
      const double factor = at(r, pc);
      if (factor == 0.0) continue;
      double* row = &data_[r * (cols_ + 1)];
      const double* prow = &data_[pr * (cols_ + 1)];
      for (size_t c = 0; c <= cols_; ++c) row[c] -= factor * prow[c];
      row[pc] = 0.0;
    }
  }

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }

 private:
  size_t rows_;
  size_t cols_;
  std::vector<double> data_;
};

// Runs Bland's rule on the tableau restricted to columns with allowed[c].
// Returns false on unboundedness.
absl::StatusOr<bool> RunSimplex(Tableau& t, std::vector<size_t>& basis,
                                const std::vector<bool>& allowed, double tol,
                                int max_pivots, int& pivots) {
  while (true) {
    size_t enter = t.cols();
    for (size_t c = 0; c < t.cols(); ++c) {
      if (allowed[c] && t.cost(c) < -tol) {
        enter = c;
        break;
      }
    }
    if (enter == t.cols()) return true;
    size_t leave = t.rows();
    double best_ratio = std::numeric_limits<double>::infinity();
    for (size_t r = 0; r < t.rows(); ++r) {
      const double coef = t.at(r, enter);
      if (coef <= tol) continue;
      const double ratio = t.rhs(r) / coef;
      if (ratio < best_ratio - tol ||
          (std::fabs(ratio - best_ratio) <= tol && leave < t.rows() &&
           basis[r] < basis[leave])) {
        best_ratio = ratio;
        leave = r;
      }
    }
    if (leave == t.rows()) return false;
    t.Pivot(leave, enter);
    basis[leave] = enter;
    if (++pivots > max_pivots) {
      return MakeError(ErrorKind::kProblemTooLarge,
                       absl::StrCat("simplex exceeded ", max_pivots,
                                    " pivots"));
    }
  }
}

}  // namespace

absl::StatusOr<LpSolution> SolveLinearProgram(const LinearProgram& lp,
                                              double tolerance,
                                              int max_pivots) {
  const size_t m = lp.b.size();
  const size_t n = lp.c.size();
  if (lp.a.size() != m) {
    return MakeError(ErrorKind::kInvalidArgument, "row count mismatch");
  }
  for (const auto& row : lp.a) {
    if (row.size() != n) {
      return MakeError(ErrorKind::kInvalidArgument, "column count mismatch");
    }
  }
  // Columns: n structural, then m artificials.
  Tableau t(m, n + m);
  std::vector<size_t> basis(m);
  for (size_t r = 0; r < m; ++r) {
    const double sign = lp.b[r] < 0 ? -1.0 : 1.0;
    for (size_t c = 0; c < n; ++c) t.at(r, c) = sign * lp.a[r][c];
    t.at(r, n + r) = 1.0;
    t.rhs(r) = sign * lp.b[r];
    basis[r] = n + r;
  }
  // Phase I objective: sum of artificials, expressed in reduced form.
  for (size_t c = 0; c <= n + m; ++c) {
    double s = 0.0;
    if (c < n || c == n + m) {
      for (size_t r = 0; r < m; ++r) s += t.at(r, c);
      t.at(m, c) = -s;
    }
  }
  LpSolution sol;
  std::vector<bool> allowed(n + m, true);
  DPC_ASSIGN_OR_RETURN(bool bounded,
                       RunSimplex(t, basis, allowed, tolerance, max_pivots,
                                  sol.pivots));
  (void)bounded;
  const double phase1 = -t.rhs(m);
  if (phase1 > 1e-9) {
    sol.status = LpSolution::Status::kInfeasible;
    sol.objective = phase1;
    return sol;
  }
  // Drive remaining artificials out of the basis where possible.
  for (size_t r = 0; r < m; ++r) {
    if (basis[r] < n) continue;
    for (size_t c = 0; c < n; ++c) {
      if (std::fabs(t.at(r, c)) > 1e-9) {
        t.Pivot(r, c);
        basis[r] = c;
        break;
      }
    }
  }
  for (size_t c = n; c < n + m; ++c) allowed[c] = false;
  // Phase II reduced costs.
  for (size_t c = 0; c <= n + m; ++c) t.at(m, c) = c < n ? lp.c[c] : 0.0;
  for (size_t r = 0; r < m; ++r) {
    const size_t bc = basis[r];
    const double cb = bc < n ? lp.c[bc] : 0.0;
    if (cb == 0.0) continue;
    for (size_t c = 0; c <= n + m; ++c) t.at(m, c) -= cb * t.at(r, c);
  }
  DPC_ASSIGN_OR_RETURN(bounded, RunSimplex(t, basis, allowed, tolerance,
                                           max_pivots, sol.pivots));
  if (!bounded) {
    sol.status = LpSolution::Status::kUnbounded;
    return sol;
  }
  sol.status = LpSolution::Status::kOptimal;
  sol.x.assign(n, 0.0);
  for (size_t r = 0; r < m; ++r) {
    if (basis[r] < n) sol.x[basis[r]] = std::max(0.0, t.rhs(r));
  }
  double obj = 0.0;
  for (size_t c = 0; c < n; ++c) obj += lp.c[c] * sol.x[c];
  sol.objective = obj;
  return sol;
}

}  // namespace dpcouple
