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

#include "dpcouple/composition.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "absl/strings/str_cat.h"
#include "dpcouple/status.h"

namespace dpcouple {

Budget SeqBudget(const std::vector<Budget>& steps) {
  Budget total;
  for (const Budget& b : steps) {
    total.eps += b.eps;
    total.delta += b.delta;
  }
  return total;
}

absl::StatusOr<Budget> AdvBudget(int n, double eps, double delta,
                                 double omega) {
  if (!(omega > 0.0 && omega <= 1.0)) {
    return MakeError(ErrorKind::kBadOmega, absl::StrCat("omega = ", omega));
  }
  if (n < 1 || eps < 0.0 || delta < 0.0) {
    return MakeError(ErrorKind::kOutOfRange,
                     absl::StrCat("n = ", n, ", eps = ", eps,
                                  ", delta = ", delta));
  }
  Budget out;
  out.eps = std::sqrt(2.0 * n * std::log(1.0 / omega)) * eps +
            n * eps * std::expm1(eps);
  out.delta = n * delta + omega;
  return out;
}

absl::StatusOr<double> AdvTargetEpsilon(double eps_prime, int n,
                                        double omega) {
  if (!(eps_prime > 0.0 && eps_prime < 1.0) || n < 1 ||
      !(omega > 0.0 && omega < 0.5)) {
    return MakeError(ErrorKind::kOutOfRange,
                     absl::StrCat("eps' = ", eps_prime, ", n = ", n,
                                  ", omega = ", omega));
  }
  return eps_prime / (2.0 * std::sqrt(2.0 * n * std::log(1.0 / omega)));
}

absl::StatusOr<Budget> SequentialCombiner::Combine(
    const std::vector<Budget>& steps) const {
  return SeqBudget(steps);
}

absl::StatusOr<Budget> AdvancedCombiner::Combine(
    const std::vector<Budget>& steps) const {
  if (steps.empty()) return Budget{0.0, 0.0};
  Budget worst;
  for (const Budget& b : steps) {
    worst.eps = std::max(worst.eps, b.eps);
    worst.delta = std::max(worst.delta, b.delta);
  }
  return AdvBudget(static_cast<int>(steps.size()), worst.eps, worst.delta,
                   omega_);
}

absl::StatusOr<Distr> ComposeKernels(const std::vector<Kernel>& fs,
                                     const Value& a,
                                     const std::optional<Value>& secret) {
  Distr current = Unit(a);
  for (size_t i = 0; i < fs.size(); ++i) {
    DPC_ASSIGN_OR_RETURN(
        current,
        current.Bind<Value>([&](const Value& v) -> absl::StatusOr<Distr> {
          DPC_ASSIGN_OR_RETURN(Distr next, fs[i](v, secret));
          for (const auto& [u, w] : next.entries()) {
            if (u.kind() != a.kind()) {
              return MakeError(ErrorKind::kTypeMismatch,
                               absl::StrCat("kernel ", i, " maps ",
                                            v.ToString(), " to ",
                                            u.ToString()));
            }
          }
          return next;
        }));
  }
  return current;
}

absl::StatusOr<AdvCompositionReport> ValidateAdvCompositionDistance(
    const std::vector<Kernel>& fs, const std::vector<Kernel>& gs, int n,
    double eps, double delta, double omega,
    const std::vector<Value>& state_space, PremiseDirection direction,
    double tolerance) {
  if (n < 1 || static_cast<size_t>(n) > fs.size() ||
      static_cast<size_t>(n) > gs.size()) {
    return MakeError(ErrorKind::kInvalidArgument,
                     absl::StrCat("n = ", n, " exceeds the kernel count"));
  }
  AdvCompositionReport report;
  DPC_ASSIGN_OR_RETURN(report.target, AdvBudget(n, eps, delta, omega));
  for (int i = 0; i < n; ++i) {
    for (const Value& a : state_space) {
      DPC_ASSIGN_OR_RETURN(Distr f, fs[i](a, std::nullopt));
      DPC_ASSIGN_OR_RETURN(Distr g, gs[i](a, std::nullopt));
      DPC_ASSIGN_OR_RETURN(double d, DpDivergence(f, g, eps));
      if (direction == PremiseDirection::kBoth) {
        DPC_ASSIGN_OR_RETURN(double back, DpDivergence(g, f, eps));
        d = std::max(d, back);
      }
      report.worst_premise = std::max(report.worst_premise, d);
      if (d > delta + tolerance) {
        return MakeError(ErrorKind::kPremiseViolated,
                         absl::StrCat("step ", i, " at ", a.ToString(),
                                      ": divergence ", d, " > ", delta));
      }
    }
  }
  const std::vector<Kernel> fn(fs.begin(), fs.begin() + n);
  const std::vector<Kernel> gn(gs.begin(), gs.begin() + n);
  report.ok = true;
  report.worst_gap = -report.target.delta;
  for (const Value& a : state_space) {
    DPC_ASSIGN_OR_RETURN(Distr f, ComposeKernels(fn, a));
    DPC_ASSIGN_OR_RETURN(Distr g, ComposeKernels(gn, a));
    DPC_ASSIGN_OR_RETURN(double d, DpDivergence(f, g, report.target.eps));
    AdvCompositionCase c{a, d, d <= report.target.delta + tolerance};
    report.ok = report.ok && c.ok;
    report.worst_gap = std::max(report.worst_gap, d - report.target.delta);
    report.cases.push_back(std::move(c));
  }
  return report;
}

}  // namespace dpcouple
