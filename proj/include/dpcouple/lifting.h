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

#ifndef DPCOUPLE_LIFTING_H_
#define DPCOUPLE_LIFTING_H_

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "dpcouple/distribution.h"
#include "dpcouple/value.h"

namespace dpcouple {

// Witness distributions over pairs (2-element list values).
struct WitnessPair {
  Distr mu_l;
  Distr mu_r;
};

// A binary relation together with optional explicit universes. Empty
// universes mean "the union of the supports of the distributions at hand".
struct Relation {
  std::function<bool(const Value&, const Value&)> holds;
  std::vector<Value> universe1;
  std::vector<Value> universe2;

  static Relation Equality();
};

struct WitnessReport {
  bool ok = false;
  // Clause 1: max key-wise error of pi1(mu_l) vs mu1 and pi2(mu_r) vs mu2.
  double marginal1_error = 0.0;
  double marginal2_error = 0.0;
  bool marginals_ok = false;
  // Clause 2.
  bool support_ok = false;
  std::string support_violation;
  // Clause 3: Delta_eps(mu_l, mu_r) and delta - Delta_eps.
  double divergence = 0.0;
  double divergence_slack = 0.0;
  bool divergence_ok = false;

  std::string Summary() const;
};

WitnessReport CheckWitnesses(const Distr& mu1, const Distr& mu2,
                             const Relation& psi, double eps, double delta,
                             const WitnessPair& w);

struct SubsetCoupling {
  WitnessPair witnesses;
  double alpha = 1.0;
};

// Explicit witnesses for y1 in P <-> y2 in Q with Q a subset of P. The
// element x0 outside P is the least element of `universe` \ P; with no
// universe it is drawn from supp(mu).
absl::StatusOr<SubsetCoupling> OptimalSubsetCoupling(
    const Distr& mu, const std::vector<Value>& p, const std::vector<Value>& q,
    const std::vector<Value>& universe = {});

// The relation y1 in P <-> y2 in Q.
Relation SubsetRelation(std::vector<Value> p, std::vector<Value> q);

struct LiftingOptions {
  double tolerance = 1e-9;
  size_t max_pairs = 400;
};

struct LiftingResult {
  bool feasible = false;
  // Smallest delta admitting witnesses at the given eps (infinity when the
  // support constraints alone are unsatisfiable).
  double delta_min = 0.0;
  std::optional<WitnessPair> witnesses;
  // Support points with no admissible partner, if any.
  std::string obstruction;
};

absl::StatusOr<LiftingResult> LiftingExists(
    const Distr& mu1, const Distr& mu2, const Relation& psi, double eps,
    double delta, const LiftingOptions& options = {});

// Checks mu1(E1) <= e^eps mu2(E2) + delta once the witnesses are validated
// for the relation x1 in E1 => x2 in E2.
absl::StatusOr<bool> FundamentalLemmaCheck(const Distr& mu1, const Distr& mu2,
                                           const std::vector<Value>& e1,
                                           const std::vector<Value>& e2,
                                           double eps, double delta,
                                           const WitnessPair& w);

using ValueFn = std::function<Value(const Value&)>;

WitnessPair TransportForward(const WitnessPair& w, const ValueFn& f);

// Pulls witnesses over B x B back to A x A. `universe_a` is the domain of f;
// its image must cover every B value used by nu.
absl::StatusOr<WitnessPair> TransportBackward(
    const WitnessPair& nu, const ValueFn& f, const Distr& mu1,
    const Distr& mu2, const std::vector<Value>& universe_a);

using WitnessKernel = std::function<absl::StatusOr<WitnessPair>(const Value&,
                                                                const Value&)>;

// n-fold composition of left and right step witnesses from start pair
// (a1, a2). When `phi` is set, every intermediate pair must satisfy it.
absl::StatusOr<WitnessPair> ComposeLiftingWitnesses(
    const std::vector<WitnessKernel>& kernels, int n, const Value& a1,
    const Value& a2,
    const std::function<bool(const Value&, const Value&)>& phi = nullptr);

}  // namespace dpcouple

#endif  // DPCOUPLE_LIFTING_H_
