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

// Approximate relational Hoare logic: judgments c1 ~(eps, delta) c2 :
// Phi => Psi, a checker for proof documents and an empirical validator
// that interprets both programs and asks for an approximate lifting of Psi.

#ifndef DPCOUPLE_APRHL_H_
#define DPCOUPLE_APRHL_H_

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dpcouple/ast.h"
#include "dpcouple/composition.h"
#include "dpcouple/interp.h"
#include "dpcouple/lifting.h"
#include "dpcouple/proof_context.h"
#include "dpcouple/status.h"

namespace dpcouple {

struct RelJudgment {
  CmdPtr c1;
  CmdPtr c2;
  ExprPtr pre;
  ExprPtr post;
  Budget budget;
};

absl::StatusOr<RelJudgment> ParseRelConclusion(ProofContext& ctx,
                                               const Json& conclusion);

// Verifies the subtree at `node` and returns its conclusion.
absl::StatusOr<RelJudgment> CheckRelNode(ProofContext& ctx, const Json& node,
                                         const std::string& path);

struct DerivationReport {
  bool ok = false;
  Budget budget;
  ErrorKind kind = ErrorKind::kNone;
  std::string message;
  std::string failed_path;
  std::string counterexample;
  std::vector<NodeRecord> nodes;
  std::optional<RelJudgment> root;
  uint64_t implication_steps = 0;
  // Keeps the program alive for `root`.
  std::shared_ptr<const Program> program;
};

// Checks a proof document ({"fragments", "lemmas", "root"}) against `p`.
// Rule failures are reported in the result; only malformed documents and
// resource exhaustion produce an error status.
absl::StatusOr<DerivationReport> CheckDerivation(
    std::shared_ptr<const Program> p, const Json& doc);

// Loads the program named in the document header (relative to the proof
// file) with the header's constants, then `overrides` on top.
absl::StatusOr<std::shared_ptr<const Program>> LoadProofProgram(
    const std::string& proof_path, const Json& doc,
    const std::map<std::string, Value>& overrides = {});

absl::StatusOr<DerivationReport> CheckProofFile(
    const std::string& path, const std::map<std::string, Value>& overrides = {});

// Validity of a -> b over the declared domains.
absl::StatusOr<ImplicationOutcome> CheckImplication(const Program& p,
                                                    const ExprPtr& a,
                                                    const ExprPtr& b);

struct NamedAdversaries {
  std::string name;
  AdversaryMap impls;
};

struct ValidationOptions {
  InterpOptions interp;
  // Each entry is one instantiation of the program's adversaries; empty
  // means a single run without adversaries.
  std::vector<NamedAdversaries> battery;
  LiftingOptions lifting;
  // Memory pairs beyond this count are an error (SpaceTooLarge).
  uint64_t max_pairs = 0;  // 0 = MaxStates()
};

struct ValidationCase {
  Memory m1;
  Memory m2;
  std::string adversary;
  double needed_delta = 0.0;  // delta_min, or Delta_eps on the fast path
  double slack = 0.0;
  bool ok = true;
  std::string detail;
};

struct JudgmentValidation {
  bool ok = true;
  size_t pairs = 0;
  size_t runs = 0;
  bool equality_fast_path = false;
  double worst_needed_delta = 0.0;
  double worst_slack = 0.0;
  // max over runs of needed_delta - delta - slack
  double worst_margin = -1.0;
  std::vector<ValidationCase> failures;
};

// For every memory pair satisfying `pre` and every battery entry,
// interprets both commands and checks that the output distributions admit
// an (eps, delta + slack) lifting of `post`, with slack the solver
// tolerance plus the truncation bounds t1 + e^eps t2.
absl::StatusOr<JudgmentValidation> ValidateJudgmentEmpirical(
    const Program& p, const RelJudgment& j,
    const ValidationOptions& options = {});

}  // namespace dpcouple

#endif  // DPCOUPLE_APRHL_H_
