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

#ifndef DPCOUPLE_COMPOSITION_H_
#define DPCOUPLE_COMPOSITION_H_

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dpcouple/distribution.h"
#include "dpcouple/value.h"

namespace dpcouple {

struct Budget {
  double eps = 0.0;
  double delta = 0.0;
};

Budget SeqBudget(const std::vector<Budget>& steps);

// eps* = sqrt(2 n ln(1/omega)) eps + n eps (e^eps - 1), delta* = n delta +
// omega.
absl::StatusOr<Budget> AdvBudget(int n, double eps, double delta,
                                 double omega);

// eps' / (2 sqrt(2 n ln(1/omega))).
absl::StatusOr<double> AdvTargetEpsilon(double eps_prime, int n,
                                        double omega);

// Extension point for alternative composition theorems.
class BudgetCombiner {
 public:
  virtual ~BudgetCombiner() = default;
  virtual std::string Name() const = 0;
  virtual absl::StatusOr<Budget> Combine(
      const std::vector<Budget>& steps) const = 0;
};

class SequentialCombiner : public BudgetCombiner {
 public:
  std::string Name() const override { return "sequential"; }
  absl::StatusOr<Budget> Combine(
      const std::vector<Budget>& steps) const override;
};

// Uses the largest per-step (eps, delta) as the uniform step budget.
class AdvancedCombiner : public BudgetCombiner {
 public:
  explicit AdvancedCombiner(double omega) : omega_(omega) {}
  std::string Name() const override { return "advanced"; }
  absl::StatusOr<Budget> Combine(
      const std::vector<Budget>& steps) const override;

 private:
  double omega_;
};

using Kernel = std::function<absl::StatusOr<Distr>(
    const Value& a, const std::optional<Value>& secret)>;

// f^0 = unit(a); f^k = bind(f^{k-1}, f_k(-, secret)).
absl::StatusOr<Distr> ComposeKernels(const std::vector<Kernel>& fs,
                                     const Value& a,
                                     const std::optional<Value>& secret = {});

enum class PremiseDirection {
  // Delta_eps(f_i(a), g_i(a)) <= delta and Delta_eps(g_i(a), f_i(a)) <= delta.
  kBoth,
  // Only Delta_eps(f_i(a), g_i(a)) <= delta.
  kForwardOnly,
};

struct AdvCompositionCase {
  Value start;
  double divergence = 0.0;  // Delta_{eps*}(f^n(a), g^n(a))
  bool ok = false;
};

struct AdvCompositionReport {
  bool ok = false;
  Budget target;
  double worst_premise = 0.0;
  double worst_gap = 0.0;  // max over starts of divergence - delta*
  std::vector<AdvCompositionCase> cases;
};

absl::StatusOr<AdvCompositionReport> ValidateAdvCompositionDistance(
    const std::vector<Kernel>& fs, const std::vector<Kernel>& gs, int n,
    double eps, double delta, double omega,
    const std::vector<Value>& state_space,
    PremiseDirection direction = PremiseDirection::kBoth,
    double tolerance = 1e-9);

}  // namespace dpcouple

#endif  // DPCOUPLE_COMPOSITION_H_
