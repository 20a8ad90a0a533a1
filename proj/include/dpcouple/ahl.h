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

// Union-bound logic: judgments |-_beta c : Phi => Psi, meaning that from any
// memory satisfying Phi the probability that Psi fails is at most beta.

#ifndef DPCOUPLE_AHL_H_
#define DPCOUPLE_AHL_H_

#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dpcouple/ast.h"
#include "dpcouple/eval.h"
#include "dpcouple/interp.h"
#include "dpcouple/proof_context.h"

namespace dpcouple {

struct AhlJudgment {
  CmdPtr c;
  ExprPtr pre;
  ExprPtr post;
  double beta = 0.0;
};

// Rules: LapAcc, Skip, Assn, Wp, Seq, Cond, While, Conseq, Frame, True,
// Case, Absurd. Returns the verified conclusion of `node`.
absl::StatusOr<AhlJudgment> CheckAhlNode(ProofContext& ctx, const Json& node,
                                         const std::string& path);

absl::StatusOr<AhlJudgment> ParseAhlConclusion(ProofContext& ctx,
                                               const Json& conclusion);

struct AhlCase {
  Memory m;
  double failure = 0.0;  // Pr[not post], truncated semantics
  double slack = 0.0;    // truncation mass
  bool ok = true;
};

struct AhlValidation {
  bool ok = true;
  size_t memories = 0;
  double worst_failure = 0.0;
  double worst_margin = 0.0;  // max over memories of failure - beta - slack
  std::vector<AhlCase> failures;
};

// Enumerates every memory satisfying `pre` over the variables of `pre` and
// `c`, interprets `c` and checks Pr[not post] <= beta + slack.
absl::StatusOr<AhlValidation> ValidateAhlEmpirical(
    const Program& p, const CmdPtr& c, const ExprPtr& pre,
    const ExprPtr& post, double beta, const InterpOptions& options = {});

}  // namespace dpcouple

#endif  // DPCOUPLE_AHL_H_
