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

#ifndef DPCOUPLE_EVAL_H_
#define DPCOUPLE_EVAL_H_

#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dpcouple/ast.h"
#include "dpcouple/value.h"

namespace dpcouple {

// Slot-indexed variable store; slot i holds program.vars[i].
using Memory = std::vector<Value>;

// Builtin functions resolved at parse time (stored in Expr::index of kCall).
enum class Builtin {
  kUser = 0,  // Expr::slot is the index into Program::funs
  kAbs, kMin, kMax, kLen, kSum, kExp, kLn, kSqrt, kFloor, kCeil,
  kEvalQ, kAdj, kHead, kTail,
};

// Returns false when `name` is not a builtin.
bool LookupBuiltin(const std::string& name, Builtin* out);

// Evaluates with tag 1 (and untagged variables) read from m1 and tag 2 from
// m2. Either memory may be null when the expression does not need it.
absl::StatusOr<Value> Eval(const ExprPtr& e, const Program& p,
                           const Memory* m1, const Memory* m2 = nullptr);
absl::StatusOr<bool> EvalBool(const ExprPtr& e, const Program& p,
                              const Memory* m1, const Memory* m2 = nullptr);

// Evaluation that may not touch any memory (constants, noise parameters).
absl::StatusOr<Value> EvalConst(const ExprPtr& e, const Program& p);

// Differ in exactly one coordinate, by at most 1.
bool Adjacent(const Value& d1, const Value& d2);

std::string MemoryToString(const Program& p, const Memory& m);

}  // namespace dpcouple

#endif  // DPCOUPLE_EVAL_H_
