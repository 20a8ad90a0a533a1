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

#ifndef DPCOUPLE_TYPECHECK_H_
#define DPCOUPLE_TYPECHECK_H_

#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dpcouple/ast.h"

namespace dpcouple {

// An assignment whose inferred range is not contained in the target's
// declared domain. Such writes fail at run time with DomainEscape.
struct DomainRisk {
  std::string var;
  std::string expr;
  std::string inferred;
  std::string declared;
  int line = 0;
  int col = 0;
};

struct TypeReport {
  std::vector<DomainRisk> risks;
};

// Checks every command and oracle body. With `strict`, the first domain
// risk is an error (DomainOverflowRisk) instead of a report entry.
absl::StatusOr<TypeReport> Typecheck(const Program& p, bool strict = false);

// Interval type of an expression; program variables take their declared
// types and tagged variables are typed like untagged ones.
absl::StatusOr<Type> TypeOf(const ExprPtr& e, const Program& p);

// Checks an assertion is boolean.
absl::Status CheckAssertionType(const ExprPtr& e, const Program& p);

}  // namespace dpcouple

#endif  // DPCOUPLE_TYPECHECK_H_
