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

#ifndef DPCOUPLE_PARSER_H_
#define DPCOUPLE_PARSER_H_

#include <map>
#include <string>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "dpcouple/ast.h"

namespace dpcouple {

// Parses a whole program: an optional `decls { ... }` preamble, statements,
// and an optional `return x;`. Names are resolved against the declarations;
// constant declarations listed in `overrides` take the override value.
absl::StatusOr<Program> ParseProgram(
    absl::string_view text, const std::map<std::string, Value>& overrides = {});

// Statements only, resolved against an existing program's declarations.
absl::StatusOr<CmdPtr> ParseCommand(absl::string_view text, const Program& p);

enum class AssertionMode {
  kUnary,       // untagged variables of a single memory
  kRelational,  // every program variable carries <1> or <2>
};

absl::StatusOr<ExprPtr> ParseAssertion(absl::string_view text,
                                       const Program& p, AssertionMode mode);

// Untagged program expression (budget expressions, parameters).
absl::StatusOr<ExprPtr> ParseExpression(absl::string_view text,
                                        const Program& p);

}  // namespace dpcouple

#endif  // DPCOUPLE_PARSER_H_
