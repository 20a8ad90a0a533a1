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

#include "dpcouple/proof_context.h"

#include "absl/strings/match.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dpcouple/eval.h"
#include "dpcouple/parser.h"
#include "dpcouple/status.h"

namespace dpcouple {

std::string Text(const ExprPtr& e) { return ToString(e); }

std::string Number17(double x) { return absl::StrFormat("%.17g", x); }

ProofContext::ProofContext(const Program& p) : p_(p), engine_(p) {}

absl::Status ProofContext::AddFragment(const std::string& name,
                                       const std::string& text) {
  DPC_ASSIGN_OR_RETURN(CmdPtr c, ParseCommand(text, p_));
  fragments_[name] = c;
  return absl::OkStatus();
}

void ProofContext::AddLemma(const std::string& name, Json node) {
  lemmas_[name] = std::move(node);
}

const Json* ProofContext::Lemma(const std::string& name) const {
  auto it = lemmas_.find(name);
  return it == lemmas_.end() ? nullptr : &it->second;
}

absl::StatusOr<CmdPtr> ProofContext::Command(const Json& ref) {
  if (!ref.is_string()) {
    return MakeError(ErrorKind::kSyntaxError, "command reference must be a string");
  }
  const std::string s = ref.get<std::string>();
  if (s == "@main") return p_.body;
  if (absl::StartsWith(s, "@frag:")) {
    auto it = fragments_.find(s.substr(6));
    if (it == fragments_.end()) {
      return MakeError(ErrorKind::kSyntaxError, absl::StrCat("unknown fragment ", s));
    }
    return it->second;
  }
  if (absl::StartsWith(s, "@oracle:")) {
    const OracleDecl* o = p_.Oracle(s.substr(8));
    if (!o) {
      return MakeError(ErrorKind::kSyntaxError, absl::StrCat("unknown oracle ", s));
    }
    return o->body;
  }
  auto it = cmd_cache_.find(s);
  if (it != cmd_cache_.end()) return it->second;
  DPC_ASSIGN_OR_RETURN(CmdPtr c, ParseCommand(s, p_));
  cmd_cache_[s] = c;
  return c;
}

absl::StatusOr<ExprPtr> ProofContext::Rel(const std::string& text) {
  auto it = rel_cache_.find(text);
  if (it != rel_cache_.end()) return it->second;
  DPC_ASSIGN_OR_RETURN(ExprPtr e,
                       ParseAssertion(text, p_, AssertionMode::kRelational));
  rel_cache_[text] = e;
  return e;
}

absl::StatusOr<ExprPtr> ProofContext::Unary(const std::string& text) {
  auto it = unary_cache_.find(text);
  if (it != unary_cache_.end()) return it->second;
  DPC_ASSIGN_OR_RETURN(ExprPtr e,
                       ParseAssertion(text, p_, AssertionMode::kUnary));
  unary_cache_[text] = e;
  return e;
}

absl::StatusOr<double> ProofContext::Number(const Json& v) {
  if (v.is_number()) return v.get<double>();
  if (!v.is_string()) {
    return MakeError(ErrorKind::kSyntaxError, absl::StrCat("expected a number, got ", v.dump()));
  }
  DPC_ASSIGN_OR_RETURN(ExprPtr e, ParseExpression(v.get<std::string>(), p_));
  DPC_ASSIGN_OR_RETURN(Value x, EvalConst(e, p_));
  if (!x.is_numeric()) {
    return MakeError(ErrorKind::kTypeError, absl::StrCat("not numeric: ", v.dump()));
  }
  return x.as_real();
}

absl::Status ProofContext::Require(const ExprPtr& a, const ExprPtr& b,
                                   const std::string& what) {
  DPC_ASSIGN_OR_RETURN(ImplicationOutcome r, engine_.Implies(a, b));
  if (r.valid) return absl::OkStatus();
  const Counterexample& c = *r.counterexample;
  counterexample_ = absl::StrCat("<1>: ", engine_.DescribeMemory(c.m1),
                                 " | <2>: ", engine_.DescribeMemory(c.m2));
  return MakeError(ErrorKind::kSideConditionFailed,
                   absl::StrCat(what, ": '", c.goal, "' fails at ",
                                counterexample_));
}

absl::Status ProofContext::RequireUnsat(const ExprPtr& a,
                                        const std::string& what) {
  return Require(a, False(), what);
}

absl::Status ProofContext::Fail(const absl::Status& s, const std::string& path,
                                const std::string& rule) {
  if (failed_path_.empty()) failed_path_ = path;
  return AnnotateError(s, absl::StrCat(path, " [", rule, "]"));
}

}  // namespace dpcouple
