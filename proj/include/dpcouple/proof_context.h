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

// Shared state for checking proof documents: the program, named command
// fragments and lemmas, parse caches, the implication engine and the
// per-node ledger.

#ifndef DPCOUPLE_PROOF_CONTEXT_H_
#define DPCOUPLE_PROOF_CONTEXT_H_

#include <any>
#include <map>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpcouple/assertion.h"
#include "dpcouple/ast.h"
#include "json.hpp"

namespace dpcouple {

using Json = nlohmann::json;

struct NodeRecord {
  std::string path;
  std::string logic;  // "aprhl" or "ahl"
  std::string rule;
  double eps = 0.0;   // beta for aHL nodes
  double delta = 0.0;
  std::string note;
};

class ProofContext {
 public:
  explicit ProofContext(const Program& p);

  const Program& program() const { return p_; }
  ImplicationEngine& engine() { return engine_; }

  // Fragments are command texts referenced as "@frag:NAME".
  absl::Status AddFragment(const std::string& name, const std::string& text);
  void AddLemma(const std::string& name, Json node);
  const Json* Lemma(const std::string& name) const;

  // "@main", "@frag:NAME", "@oracle:NAME" or literal command text.
  absl::StatusOr<CmdPtr> Command(const Json& ref);
  absl::StatusOr<ExprPtr> Rel(const std::string& text);
  absl::StatusOr<ExprPtr> Unary(const std::string& text);
  // A JSON number or a constant expression over the program's constants.
  absl::StatusOr<double> Number(const Json& v);

  // Fails with SideConditionFailed (and a counterexample) when A -> B is
  // not valid over the declared domains.
  absl::Status Require(const ExprPtr& a, const ExprPtr& b,
                       const std::string& what);
  absl::Status RequireUnsat(const ExprPtr& a, const std::string& what);

  double tolerance() const { return tolerance_; }
  std::vector<NodeRecord>& records() { return records_; }
  const std::string& counterexample() const { return counterexample_; }
  // Records the first failing node and returns `s` annotated with `where`.
  absl::Status Fail(const absl::Status& s, const std::string& path,
                    const std::string& rule);
  const std::string& failed_path() const { return failed_path_; }
  // Verified lemma conclusions, keyed by lemma name.
  std::map<std::string, std::any>& lemma_cache() { return lemma_cache_; }

 private:
  const Program& p_;
  ImplicationEngine engine_;
  std::map<std::string, CmdPtr> fragments_;
  std::map<std::string, Json> lemmas_;
  std::map<std::string, ExprPtr> rel_cache_;
  std::map<std::string, ExprPtr> unary_cache_;
  std::map<std::string, CmdPtr> cmd_cache_;
  std::vector<NodeRecord> records_;
  std::string counterexample_;
  std::string failed_path_;
  std::map<std::string, std::any> lemma_cache_;
  double tolerance_ = 1e-9;
};

// Text of an expression that the parser reads back as the same tree.
std::string Text(const ExprPtr& e);
std::string Number17(double x);

}  // namespace dpcouple

#endif  // DPCOUPLE_PROOF_CONTEXT_H_
