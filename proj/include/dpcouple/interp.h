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

#ifndef DPCOUPLE_INTERP_H_
#define DPCOUPLE_INTERP_H_

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dpcouple/ast.h"
#include "dpcouple/distribution.h"
#include "dpcouple/eval.h"

namespace dpcouple {

using MemDistr = Distribution<Memory>;

// One move of a deterministic adversary: either query an oracle or return
// values for the call's targets. `state` is the new adversary state.
struct AdvAction {
  enum class Kind { kQuery, kReturn };
  Kind kind = Kind::kReturn;
  std::string oracle;
  std::vector<Value> values;  // oracle arguments or returned values
  Value state;
};

struct AdversaryImpl {
  std::string name;
  // `observed` holds the call arguments on the first step of a call and the
  // oracle's answer on later steps.
  std::function<AdvAction(const Value& state, const std::vector<Value>& observed)>
      step;
  // Moves allowed within a single adversary call.
  int64_t max_steps = 64;
};

using AdversaryMap = std::map<std::string, AdversaryImpl>;

struct InterpOptions {
  // Laplace truncation radius; 0 means ceil(60 / eps) per sampling node.
  int64_t lap_radius = 0;
  const AdversaryMap* adversaries = nullptr;
  // Largest number of distinct memories held at once.
  size_t max_support = 4000000;
};

struct InterpResult {
  MemDistr out;
  // Sum over executed sampling nodes of Pr[reach] * untruncated tail mass:
  // a total-variation bound between `out` and the exact semantics.
  double truncation_slack = 0.0;
  int64_t laplace_nodes = 0;
};

// Exact output distribution of `c` started in `m`.
absl::StatusOr<InterpResult> Interpret(const Program& p, const CmdPtr& c,
                                       const Memory& m,
                                       const InterpOptions& options = {});

// Same, from an input distribution.
absl::StatusOr<InterpResult> InterpretDistr(const Program& p, const CmdPtr& c,
                                            const MemDistr& in,
                                            const InterpOptions& options = {});

// Every variable at the least value of its domain.
Memory DefaultMemory(const Program& p);

// Parses "x=1, l=[0,1], b=true, q=#0" over the program's variables; unnamed
// variables keep their default.
absl::StatusOr<Memory> ParseMemory(const Program& p, const std::string& text);

// Enumeration cap: WORKBENCH_MAX_STATES when set, otherwise 10^6.
uint64_t MaxStates();

// All memories that vary `vars` over their domains (others at default), in
// lexicographic order with earlier-declared variables varying slowest.
absl::StatusOr<std::vector<Memory>> EnumerateMemories(
    const Program& p, const std::vector<std::string>& vars,
    uint64_t cap = MaxStates());

}  // namespace dpcouple

#endif  // DPCOUPLE_INTERP_H_
