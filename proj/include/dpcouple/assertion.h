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

// Assertions over one memory (unary) or a memory pair (relational):
// evaluation, substitution, weakest preconditions of deterministic code, and
// validity checking of implications by search over the declared domains.

#ifndef DPCOUPLE_ASSERTION_H_
#define DPCOUPLE_ASSERTION_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "dpcouple/ast.h"
#include "dpcouple/eval.h"

namespace dpcouple {

// Evaluates a relational assertion with x<1> read from m1 and x<2> from m2.
absl::StatusOr<bool> EvalRelAssertion(const ExprPtr& a, const Program& p,
                                      const Memory& m1, const Memory& m2);

// Tags every program variable of a program expression with `tag`.
ExprPtr Retag(const ExprPtr& e, int tag);

// Replaces the variable `slot` carrying `tag` by `replacement`. Bound
// variables use de Bruijn indices and program expressions are closed, so no
// capture can happen.
ExprPtr Substitute(const ExprPtr& e, int slot, int tag,
                   const ExprPtr& replacement);

// True when the command is loop-free and contains no sampling, adversary or
// oracle call.
bool IsDeterministic(const CmdPtr& c);

// Weakest precondition of a deterministic command run on side `tag` (0 for
// unary assertions).
absl::StatusOr<ExprPtr> Wp(const CmdPtr& c, int tag, const ExprPtr& post);

// A variable of an assertion: slot and side (1 or 2; unary uses 1).
using VarKey = std::pair<int, int>;
std::set<VarKey> AssertionVars(const ExprPtr& e);

// Tagged variables an assertion mentions that a pair of commands may write.
std::vector<std::string> FrameConflicts(const ExprPtr& theta,
                                        const std::vector<std::string>& mv1,
                                        const std::vector<std::string>& mv2);

// Variables whose initial value can influence the final values of
// `live_out` (upward-exposed reads).
std::set<std::string> LiveVars(const CmdPtr& c, const Program& p,
                               std::set<std::string> live_out);

struct Counterexample {
  Memory m1;
  Memory m2;
  std::string goal;  // the conjunct that failed
};

struct ImplicationOutcome {
  bool valid = true;
  std::optional<Counterexample> counterexample;
};

// Decides |= A -> B by exhaustive search over the declared domains, split
// per goal conjunct and restricted to the antecedent conjuncts connected to
// it. Results are cached by canonical text.
class ImplicationEngine {
 public:
  // `step_cap` bounds the number of candidate values tried per query;
  // 0 means 64 * MaxStates().
  explicit ImplicationEngine(const Program& p, uint64_t step_cap = 0);

  absl::StatusOr<ImplicationOutcome> Implies(const ExprPtr& antecedent,
                                             const ExprPtr& goal);

  // Finds a pair of memories satisfying `a`.
  absl::StatusOr<std::optional<std::pair<Memory, Memory>>> Satisfying(
      const ExprPtr& a);

  // Calls `visit` on every assignment of `vars` (plus the variables of `a`)
  // that satisfies `a`; other slots keep their default values.
  absl::Status ForEachModel(
      const ExprPtr& a, const std::set<VarKey>& vars,
      const std::function<absl::Status(const Memory&, const Memory&)>& visit);

  uint64_t steps() const { return total_steps_; }
  std::string DescribeMemory(const Memory& m) const;

 private:
  struct Atom {
    ExprPtr e;
    bool negated = false;
    std::vector<int> vars;  // dense indices into keys_
  };
  struct Problem {
    std::vector<Atom> atoms;
    std::vector<int> vars;
  };
  using Visit = std::function<bool(const Memory&, const Memory&)>;

  int KeyIndex(const VarKey& k);
  Atom MakeAtom(const ExprPtr& e, bool negated);
  // Returns true when a model was found (and `visit` returned true).
  absl::StatusOr<bool> Search(const Problem& prob, const Visit& visit);
  absl::StatusOr<bool> ComponentSatisfiable(const std::vector<Atom>& comp,
                                            Memory* m1, Memory* m2);
  absl::StatusOr<ImplicationOutcome> CheckGoal(std::vector<ExprPtr> ants,
                                               const ExprPtr& goal);

  const Program& p_;
  uint64_t step_cap_;
  uint64_t total_steps_ = 0;
  Memory default_;
  std::vector<VarKey> keys_;
  std::map<VarKey, int> key_index_;
  std::vector<std::vector<Value>> domains_;
  std::map<std::string, ImplicationOutcome> cache_;
  std::map<std::string, std::optional<std::pair<Memory, Memory>>> sat_cache_;
};

}  // namespace dpcouple

#endif  // DPCOUPLE_ASSERTION_H_
