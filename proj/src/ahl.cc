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

#include "dpcouple/ahl.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "absl/strings/str_cat.h"
#include "dpcouple/assertion.h"
#include "dpcouple/laplace.h"
#include "dpcouple/status.h"

namespace dpcouple {
namespace {

absl::Status Schema(const std::string& msg) {
  return MakeError(ErrorKind::kRuleSchemaMismatch, msg);
}

ExprPtr And(ExprPtr a, ExprPtr b) { return MakeBinary(Op::kAnd, a, b); }
ExprPtr Not(ExprPtr a) { return MakeUnary(Op::kNot, a); }
ExprPtr Cmp(Op op, ExprPtr a, int64_t k) {
  return MakeBinary(op, a, MakeLit(Value::Int(k)));
}

CmdPtr ElseBranch(const CmdPtr& c) {
  return c->body.size() > 1 && c->body[1] ? c->body[1] : MakeSkip();
}

absl::Status SameCmd(const CmdPtr& want, const CmdPtr& got,
                     const std::string& what) {
  if (SameCommand(want, got)) return absl::OkStatus();
  return Schema(absl::StrCat(what, ": expected command\n", ToString(want),
                             "\ngot\n", ToString(got)));
}

CmdPtr Single(const CmdPtr& c) {
  std::vector<CmdPtr> l = FlatList(c);
  return l.size() == 1 ? l[0] : nullptr;
}

// Conjuncts of `pre` that do not mention any of `vars` (slot, side).
ExprPtr FrameOf(const ExprPtr& pre, const std::set<VarKey>& vars) {
  std::vector<ExprPtr> keep;
  for (const ExprPtr& c : Conjuncts(pre)) {
    bool clash = false;
    for (const VarKey& k : AssertionVars(c)) clash |= vars.count(k) > 0;
    if (!clash) keep.push_back(c);
  }
  return MakeAnd(keep);
}

absl::StatusOr<int64_t> IntParam(ProofContext& ctx, const Json& params,
                                 const char* name) {
  if (!params.contains(name)) {
    return Schema(absl::StrCat("missing parameter '", name, "'"));
  }
  DPC_ASSIGN_OR_RETURN(double v, ctx.Number(params[name]));
  if (v != std::floor(v)) {
    return Schema(absl::StrCat("parameter '", name, "' must be an integer"));
  }
  return static_cast<int64_t>(v);
}

absl::StatusOr<std::string> StrParam(const Json& params, const char* name) {
  if (!params.contains(name) || !params[name].is_string()) {
    return Schema(absl::StrCat("missing parameter '", name, "'"));
  }
  return params[name].get<std::string>();
}

// Computes the beta of an aHL rule application from verified children.
absl::StatusOr<double> AhlRule(ProofContext& ctx, const std::string& rule,
                               const Json& params, const AhlJudgment& j,
                               const std::vector<AhlJudgment>& kids,
                               std::string* note) {
  const Program& p = ctx.program();
  auto need_kids = [&](size_t n) -> absl::Status {
    if (kids.size() != n) {
      return Schema(absl::StrCat(rule, " expects ", n, " premise(s), got ",
                                 kids.size()));
    }
    return absl::OkStatus();
  };
  if (rule == "LapAcc") {
    DPC_RETURN_IF_ERROR(need_kids(0));
    const CmdPtr s = Single(j.c);
    if (!s || s->kind != CmdKind::kSample) {
      return Schema("LapAcc applies to a single sampling command");
    }
    const std::string& y = s->targets[0];
    const std::vector<std::string> fv = FreeVars(s->e);
    if (std::find(fv.begin(), fv.end(), y) != fv.end()) {
      return MakeError(ErrorKind::kFreshnessViolation,
                       absl::StrCat(y, " occurs in its own mean"));
    }
    const double eps = s->eps_value;
    double bound, beta;
    if (params.contains("bound")) {
      DPC_ASSIGN_OR_RETURN(bound, ctx.Number(params["bound"]));
      if (bound < 0) return Schema("LapAcc bound must be nonnegative");
      beta = LaplaceExactTail(eps, bound);
    } else {
      if (!params.contains("beta")) {
        return Schema("LapAcc needs parameter 'beta' or 'bound'");
      }
      DPC_ASSIGN_OR_RETURN(beta, ctx.Number(params["beta"]));
      DPC_ASSIGN_OR_RETURN(bound, LaplaceAccuracyBound(eps, beta));
      const double tail = LaplaceExactTail(eps, bound);
      if (tail > beta + 1e-12) {
        return MakeError(
            ErrorKind::kSideConditionFailed,
            absl::StrCat("exact tail Pr[|y - e| > ", bound, "] = ", tail,
                         " exceeds beta = ", beta));
      }
    }
    *note = absl::StrCat("bound ", Number17(bound));
    DPC_ASSIGN_OR_RETURN(
        ExprPtr acc,
        ctx.Unary(absl::StrCat("abs(", y, " - (", Text(s->e), ")) <= ",
                               Number17(bound))));
    const ExprPtr frame = FrameOf(j.pre, {{s->target_slots[0], 1}});
    DPC_RETURN_IF_ERROR(ctx.Require(And(acc, frame), j.post, "LapAcc post"));
    return beta;
  }
  if (rule == "Skip") {
    DPC_RETURN_IF_ERROR(need_kids(0));
    if (!FlatList(j.c).empty()) return Schema("Skip applies to skip");
    DPC_RETURN_IF_ERROR(ctx.Require(j.pre, j.post, "Skip"));
    return 0.0;
  }
  if (rule == "Assn" || rule == "Wp") {
    DPC_RETURN_IF_ERROR(need_kids(0));
    if (!IsDeterministic(j.c)) {
      return Schema(absl::StrCat(rule, " needs loop-free deterministic code"));
    }
    if (rule == "Assn") {
      for (const CmdPtr& x : FlatList(j.c)) {
        if (x->kind != CmdKind::kAssign) return Schema("Assn takes assignments");
      }
    }
    DPC_ASSIGN_OR_RETURN(ExprPtr wp, Wp(j.c, 0, j.post));
    DPC_RETURN_IF_ERROR(ctx.Require(j.pre, wp, "weakest precondition"));
    return 0.0;
  }
  if (rule == "Seq") {
    if (kids.empty()) return Schema("Seq needs premises");
    std::vector<CmdPtr> parts;
    for (const AhlJudgment& k : kids) {
      for (const CmdPtr& x : FlatList(k.c)) parts.push_back(x);
    }
    DPC_RETURN_IF_ERROR(SameCmd(j.c, MakeSeq(parts), "Seq"));
    DPC_RETURN_IF_ERROR(ctx.Require(j.pre, kids.front().pre, "Seq pre"));
    for (size_t i = 0; i + 1 < kids.size(); ++i) {
      DPC_RETURN_IF_ERROR(ctx.Require(kids[i].post, kids[i + 1].pre,
                                      absl::StrCat("Seq link ", i)));
    }
    DPC_RETURN_IF_ERROR(ctx.Require(kids.back().post, j.post, "Seq post"));
    double beta = 0;
    for (const AhlJudgment& k : kids) beta += k.beta;
    return beta;
  }
  if (rule == "Cond") {
    DPC_RETURN_IF_ERROR(need_kids(2));
    const CmdPtr s = Single(j.c);
    if (!s || s->kind != CmdKind::kIf) return Schema("Cond applies to if");
    DPC_RETURN_IF_ERROR(SameCmd(s->body[0], kids[0].c, "Cond then"));
    DPC_RETURN_IF_ERROR(SameCmd(ElseBranch(s), kids[1].c, "Cond else"));
    DPC_RETURN_IF_ERROR(ctx.Require(And(j.pre, s->e), kids[0].pre, "Cond then pre"));
    DPC_RETURN_IF_ERROR(ctx.Require(And(j.pre, Not(s->e)), kids[1].pre, "Cond else pre"));
    DPC_RETURN_IF_ERROR(ctx.Require(kids[0].post, j.post, "Cond then post"));
    DPC_RETURN_IF_ERROR(ctx.Require(kids[1].post, j.post, "Cond else post"));
    return std::max(kids[0].beta, kids[1].beta);
  }
  if (rule == "While") {
    const CmdPtr s = Single(j.c);
    if (!s || s->kind != CmdKind::kWhile) return Schema("While applies to while");
    DPC_ASSIGN_OR_RETURN(std::string theta_t, StrParam(params, "theta"));
    DPC_ASSIGN_OR_RETURN(std::string var_t, StrParam(params, "variant"));
    DPC_ASSIGN_OR_RETURN(ExprPtr theta, ctx.Unary(theta_t));
    DPC_ASSIGN_OR_RETURN(ExprPtr e, ctx.Unary(var_t));
    DPC_ASSIGN_OR_RETURN(int64_t n, IntParam(ctx, params, "n"));
    if (n < 0) return Schema("n must be nonnegative");
    if (n > s->cap) {
      return Schema(absl::StrCat("n = ", n, " exceeds the loop cap ", s->cap));
    }
    DPC_RETURN_IF_ERROR(need_kids(static_cast<size_t>(n)));
    const ExprPtr b = s->e;
    DPC_RETURN_IF_ERROR(ctx.Require(And(theta, Cmp(Op::kLe, e, 0)), Not(b),
                                    "While variant side condition"));
    double beta = 0;
    for (int64_t k = 1; k <= n; ++k) {
      const AhlJudgment& kid = kids[k - 1];
      const std::string tag = absl::StrCat("While k=", k);
      DPC_RETURN_IF_ERROR(SameCmd(s->body[0], kid.c, tag));
      DPC_RETURN_IF_ERROR(ctx.Require(And(And(theta, b), Cmp(Op::kEq, e, k)),
                                      kid.pre, tag + " pre"));
      DPC_RETURN_IF_ERROR(ctx.Require(
          kid.post, And(theta, Cmp(Op::kLt, e, k)), tag + " post"));
      beta += kid.beta;
    }
    DPC_RETURN_IF_ERROR(
        ctx.Require(j.pre, And(theta, Cmp(Op::kLe, e, n)), "While pre"));
    DPC_RETURN_IF_ERROR(ctx.Require(And(theta, Not(b)), j.post, "While post"));
    return beta;
  }
  if (rule == "Conseq") {
    DPC_RETURN_IF_ERROR(need_kids(1));
    DPC_RETURN_IF_ERROR(SameCmd(j.c, kids[0].c, "Conseq"));
    DPC_RETURN_IF_ERROR(ctx.Require(j.pre, kids[0].pre, "Conseq pre"));
    DPC_RETURN_IF_ERROR(ctx.Require(kids[0].post, j.post, "Conseq post"));
    if (kids[0].beta > j.beta + ctx.tolerance()) {
      return MakeError(ErrorKind::kBudgetMismatch,
                       absl::StrCat("Conseq lowers beta from ", kids[0].beta,
                                    " to ", j.beta));
    }
    return j.beta;
  }
  if (rule == "Frame") {
    DPC_RETURN_IF_ERROR(need_kids(1));
    DPC_RETURN_IF_ERROR(SameCmd(j.c, kids[0].c, "Frame"));
    DPC_ASSIGN_OR_RETURN(std::string theta_t, StrParam(params, "theta"));
    DPC_ASSIGN_OR_RETURN(ExprPtr theta, ctx.Unary(theta_t));
    const std::vector<std::string> clash =
        FrameConflicts(theta, ModifiedVars(j.c, &p), {});
    if (!clash.empty()) {
      return MakeError(ErrorKind::kSideConditionFailed,
                       absl::StrCat("Frame: ", clash[0], " is modified"));
    }
    DPC_RETURN_IF_ERROR(ctx.Require(j.pre, And(kids[0].pre, theta), "Frame pre"));
    DPC_RETURN_IF_ERROR(ctx.Require(And(kids[0].post, theta), j.post, "Frame post"));
    return kids[0].beta;
  }
  if (rule == "True") {
    DPC_RETURN_IF_ERROR(need_kids(0));
    DPC_RETURN_IF_ERROR(ctx.Require(True(), j.post, "True post"));
    return 0.0;
  }
  if (rule == "Case") {
    DPC_RETURN_IF_ERROR(need_kids(2));
    DPC_ASSIGN_OR_RETURN(std::string cond_t, StrParam(params, "cond"));
    DPC_ASSIGN_OR_RETURN(ExprPtr cond, ctx.Unary(cond_t));
    for (int i = 0; i < 2; ++i) {
      DPC_RETURN_IF_ERROR(SameCmd(j.c, kids[i].c, "Case"));
      DPC_RETURN_IF_ERROR(ctx.Require(And(j.pre, i == 0 ? cond : Not(cond)),
                                      kids[i].pre, "Case pre"));
      DPC_RETURN_IF_ERROR(ctx.Require(kids[i].post, j.post, "Case post"));
    }
    return std::max(kids[0].beta, kids[1].beta);
  }
  if (rule == "Absurd") {
    DPC_RETURN_IF_ERROR(need_kids(0));
    DPC_RETURN_IF_ERROR(ctx.RequireUnsat(j.pre, "Absurd pre"));
    return 0.0;
  }
  return MakeError(ErrorKind::kUnknownRule,
                   absl::StrCat("unknown aHL rule '", rule, "'"));
}

}  // namespace

absl::StatusOr<AhlJudgment> ParseAhlConclusion(ProofContext& ctx,
                                               const Json& concl) {
  if (!concl.is_object()) {
    return MakeError(ErrorKind::kSyntaxError, "aHL node without conclusion");
  }
  AhlJudgment j;
  DPC_ASSIGN_OR_RETURN(j.c, ctx.Command(concl.value("c", Json("skip;"))));
  DPC_ASSIGN_OR_RETURN(j.pre, ctx.Unary(concl.value("pre", "true")));
  DPC_ASSIGN_OR_RETURN(j.post, ctx.Unary(concl.value("post", "true")));
  DPC_ASSIGN_OR_RETURN(j.beta, ctx.Number(concl.value("beta", Json(0.0))));
  if (!(j.beta >= 0.0 && j.beta <= 1.0)) {
    return MakeError(ErrorKind::kOutOfRange,
                     absl::StrCat("beta = ", j.beta, " outside [0, 1]"));
  }
  return j;
}

absl::StatusOr<AhlJudgment> CheckAhlNode(ProofContext& ctx, const Json& node,
                                         const std::string& path) {
  if (node.contains("lemma")) {
    const std::string name = node["lemma"].get<std::string>();
    auto hit = ctx.lemma_cache().find("ahl:" + name);
    if (hit != ctx.lemma_cache().end()) {
      return std::any_cast<AhlJudgment>(hit->second);
    }
    const Json* lemma = ctx.Lemma(name);
    if (!lemma) {
      return ctx.Fail(MakeError(ErrorKind::kSyntaxError,
                                absl::StrCat("unknown lemma ", name)),
                      path, "lemma");
    }
    DPC_ASSIGN_OR_RETURN(AhlJudgment j,
                         CheckAhlNode(ctx, *lemma, "lemma:" + name));
    ctx.lemma_cache()["ahl:" + name] = j;
    return j;
  }
  const std::string rule = node.value("rule", "");
  const Json params = node.value("params", Json::object());
  std::vector<AhlJudgment> kids;
  const Json children = node.value("children", Json::array());
  for (size_t i = 0; i < children.size(); ++i) {
    const Json& ch = children[i];
    if (ch.value("logic", "ahl") != "ahl" && !ch.contains("lemma")) {
      return ctx.Fail(MakeError(ErrorKind::kRuleSchemaMismatch,
                                "aHL rule with a non-aHL premise"),
                      path, rule);
    }
    DPC_ASSIGN_OR_RETURN(AhlJudgment k,
                         CheckAhlNode(ctx, ch, absl::StrCat(path, "/", i)));
    kids.push_back(std::move(k));
  }
  absl::StatusOr<AhlJudgment> j =
      ParseAhlConclusion(ctx, node.value("conclusion", Json()));
  if (!j.ok()) return ctx.Fail(j.status(), path, rule);
  std::string note;
  absl::StatusOr<double> beta = AhlRule(ctx, rule, params, *j, kids, &note);
  if (!beta.ok()) {
    return ctx.Fail(beta.status(), path, rule);
  }
  if (std::fabs(*beta - j->beta) > ctx.tolerance()) {
    return ctx.Fail(MakeError(ErrorKind::kBudgetMismatch,
                              absl::StrCat("computed beta ", *beta,
                                           ", declared ", j->beta)),
                    path, rule);
  }
  ctx.records().push_back({path, "ahl", rule, j->beta, 0.0, note});
  return *j;
}

absl::StatusOr<AhlValidation> ValidateAhlEmpirical(
    const Program& p, const CmdPtr& c, const ExprPtr& pre,
    const ExprPtr& post, double beta, const InterpOptions& options) {
  std::set<std::string> live_out;
  for (const std::string& v : FreeVars(post)) live_out.insert(v);
  std::set<std::string> live = LiveVars(c, p, live_out);
  for (const std::string& v : FreeVars(pre)) live.insert(v);
  std::set<VarKey> vars;
  for (const std::string& v : live) vars.insert({p.Slot(v), 1});
  ImplicationEngine engine(p);
  AhlValidation report;
  report.worst_margin = -beta;
  DPC_RETURN_IF_ERROR(engine.ForEachModel(
      pre, vars, [&](const Memory& m, const Memory&) -> absl::Status {
        if (++report.memories > MaxStates()) {
          return MakeError(ErrorKind::kSpaceTooLarge,
                           "too many initial memories");
        }
        DPC_ASSIGN_OR_RETURN(InterpResult r, Interpret(p, c, m, options));
        double fail = 0.0;
        for (const auto& [out, w] : r.out.entries()) {
          DPC_ASSIGN_OR_RETURN(bool ok, EvalBool(post, p, &out, &out));
          if (!ok) fail += w;
        }
        AhlCase cs{m, fail, r.truncation_slack, true};
        cs.ok = fail <= beta + r.truncation_slack + 1e-12;
        report.worst_failure = std::max(report.worst_failure, fail);
        report.worst_margin =
            std::max(report.worst_margin, fail - beta - r.truncation_slack);
        if (!cs.ok) {
          report.ok = false;
          report.failures.push_back(std::move(cs));
        }
        return absl::OkStatus();
      }));
  return report;
}

}  // namespace dpcouple
