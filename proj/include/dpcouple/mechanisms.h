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

// Example mechanisms: parameter calculators, program builders with their
// proof documents, toy database spaces and an adversary battery.

#ifndef DPCOUPLE_MECHANISMS_H_
#define DPCOUPLE_MECHANISMS_H_

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "dpcouple/aprhl.h"
#include "dpcouple/ast.h"
#include "dpcouple/interp.h"
#include "dpcouple/proof_context.h"
#include "dpcouple/value.h"

namespace dpcouple {

// Fixed-length integer vectors; adjacent when exactly one coordinate
// differs, by at most 1.
struct ToyDatabaseSpace {
  int rows = 3;
  int64_t lo = 0;
  int64_t hi = 1;

  std::vector<Value> All() const;
  // Ordered pairs (d, d') with d adjacent to d'.
  std::vector<std::pair<Value, Value>> AdjacentPairs() const;
  std::string TypeText() const;  // "list<int[lo,hi]>[len rows]"
};

struct AsvbtParams {
  double eps_prime = 0.0;
  double gamma = 0.0;
  // (6 / eps') ln(4 / eps'), the part of gamma covering the inner tests.
  double sigma = 0.0;
};

// eps' = eps / (4 sqrt(2 M ln(2/delta))), gamma = sigma + (4/eps) ln(2/delta).
absl::StatusOr<AsvbtParams> ComputeAsvbtParams(double eps, double delta,
                                               int64_t M);

// exp(2x/3) / (1 - exp(-sigma x / 6)) <= exp(x), evaluated in log space.
// Returns the slack ln(rhs) - ln(lhs).
double InnerTestSlack(double x, double sigma);

struct BuiltMechanism {
  std::string program_text;
  std::shared_ptr<const Program> program;
  // Proof document ({} when no proof is attached).
  Json proof;
  Budget target;
  // Named quantities computed while building (thresholds, eps', ...).
  std::vector<std::pair<std::string, double>> values;
};

struct PtrConfig {
  double eps = 1.0;
  double delta = 0.1;
  ToyDatabaseSpace space;
  // Bodies of f(x) and dist_to_inst(x) in the expression language.
  std::string f = "sum(x) >= 2 ? 1 : 0";
  std::string dist_to_inst = "sum(x) >= 2 ? sum(x) - 1 : 2 - sum(x)";
  int64_t bot = -1;
  std::string comment;
};

// Checks the two instability properties on every adjacent pair of the
// space, then emits the program and its up-to-bad derivation.
absl::StatusOr<BuiltMechanism> BuildPtr(const PtrConfig& config);

struct QuerySpec {
  std::string name;
  std::string body;  // over parameter x
};

struct AsvbtConfig {
  double eps = 1.0;
  double delta = 0.5;
  int64_t M = 1;
  int64_t N = 2;
  int64_t a = 0;
  int64_t b = 137;
  ToyDatabaseSpace space{2, 0, 3};
  std::vector<QuerySpec> queries = {{"q_first", "x[0]"},
                                    {"q_second", "x[1]"},
                                    {"q_total", "x[0] + x[1]"}};
  int64_t adversary_states = 8;
  // Half-widths of the declared domains around the noise means; 0 picks
  // 1.25 * the default truncation radius for u and 200 for S.
  int64_t u_margin = 0;
  int64_t s_margin = 0;
  // Transformed variant only: attach the derivation (requires b - a >=
  // gamma).
  bool with_proof = true;
};

enum class AsvbtVariant { kOriginal, kTransformed };

absl::StatusOr<BuiltMechanism> BuildAsvbt(const AsvbtConfig& config,
                                          AsvbtVariant variant);

// Adversary battery for every adversary declared in `p`. Each strategy
// returns a query from the program's table and never calls an oracle.
//   fixed_sequence: cycles through the table, one step per call
//   greedy: repeats a query until the answer list grows
//   length_switcher: first query while nothing is answered, last after
//   marker: picks the query from the most recent answer
std::vector<NamedAdversaries> AdversaryBattery(const Program& p);

}  // namespace dpcouple

#endif  // DPCOUPLE_MECHANISMS_H_
