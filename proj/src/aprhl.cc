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

#include "dpcouple/aprhl.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "dpcouple/ahl.h"
#include "dpcouple/assertion.h"
#include "dpcouple/parser.h"
#include "dpcouple/typecheck.h"

namespace dpcouple {
namespace {

absl::Status Schema(const std::string& msg) {
  return MakeError(ErrorKind::kRuleSchemaMismatch, msg);
}

ExprPtr And(ExprPtr a, ExprPtr b) { return MakeBinary(Op::kAnd, a, b); }
ExprPtr Not(ExprPtr a) { return MakeUnary(Op::kNot, a); }
ExprPtr Iff(ExprPtr a, ExprPtr b) { return MakeBinary(Op::kIff, a, b); }
ExprPtr Implies(ExprPtr a, ExprPtr b) {
  return MakeBinary(Op::kImplies, a, b);
}
ExprPtr Cmp(Op op, ExprPtr a, int64_t k) {
  return MakeBinary(op, a, MakeLit(Value::Int(k)));
}

CmdPtr Single(const CmdPtr& c) {
  std::vector<CmdPtr> l = FlatList(c);
  return l.size() == 1 ? l[0] : nullptr;
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

ExprPtr Var(const Program& p, const std::string& name, int tag) {
  return MakeVar(name, tag, p.Slot(name));
}

// x<1> = x<2> for every listed variable.
ExprPtr TupleEq(const Program& p, const std::vector<std::string>& names) {
  std::vector<ExprPtr> out;
  for (const std::string& n : names) {
    out.push_back(MakeBinary(Op::kEq, Var(p, n, 1), Var(p, n, 2)));
  }
  return MakeAnd(out);
}

ExprPtr TupleEqExprs(const std::vector<ExprPtr>& es) {
  std::vector<ExprPtr> out;
  for (const ExprPtr& e : es) {
    out.push_back(MakeBinary(Op::kEq, Retag(e, 1), Retag(e, 2)));
  }
  return MakeAnd(out);
}

ExprPtr FrameOf(const ExprPtr& pre, const std::set<VarKey>& vars) {
  std::vector<ExprPtr> keep;
  for (const ExprPtr& c : Conjuncts(pre)) {
    bool clash = false;
    for (const VarKey& k : AssertionVars(c)) clash |= vars.count(k) > 0;
    if (!clash) keep.push_back(c);
  }
  return MakeAnd(keep);
}

absl::StatusOr<std::string> StrParam(const Json& params, const char* name) {
  if (!params.contains(name) || !params[name].is_string()) {
    return Schema(absl::StrCat("missing parameter '", name, "'"));
  }
  return params[name].get<std::string>();
}

absl::StatusOr<double> NumParam(ProofContext& ctx, const Json& params,
                                const char* name) {
  if (!params.contains(name)) {
    return Schema(absl::StrCat("missing parameter '", name, "'"));
  }
  return ctx.Number(params[name]);
}

absl::StatusOr<int64_t> IntParam(ProofContext& ctx, const Json& params,
                                 const char* name) {
  DPC_ASSIGN_OR_RETURN(double v, NumParam(ctx, params, name));
  if (v != std::floor(v) || std::fabs(v) > 1e15) {
    return Schema(absl::StrCat("parameter '", name, "' must be an integer"));
  }
  return static_cast<int64_t>(v);
}

absl::StatusOr<std::vector<std::string>> VarsParam(const Program& p,
                                                   const Json& params) {
  if (!params.contains("vars") || !params["vars"].is_array() ||
      params["vars"].empty()) {
    return Schema("missing parameter 'vars'");
  }
  std::vector<std::string> out;
  for (const Json& v : params["vars"]) {
    const std::string name = v.get<std::string>();
    if (!p.Var(name)) {
      return MakeError(ErrorKind::kUnboundVariable, name);
    }
    out.push_back(name);
  }
  return out;
}

bool BudgetLe(const Budget& a, const Budget& b, double tol) {
  return a.eps <= b.eps + tol && a.delta <= b.delta + tol;
}

std::string BudgetText(const Budget& b) {
  return absl::StrCat("(", Number17(b.eps), ", ", Number17(b.delta), ")");
}

struct Premise {
  bool ahl = false;
  RelJudgment rel;
  AhlJudgment un;
};

absl::StatusOr<Premise> CheckPremise(ProofContext& ctx, const Json& node,
                                     const std::string& path) {
  Premise out;
  std::string logic = node.value("logic", "aprhl");
  if (node.contains("lemma")) {
    const Json* lemma = ctx.Lemma(node["lemma"].get<std::string>());
    if (lemma) logic = lemma->value("logic", "aprhl");
  }
  if (logic == "ahl") {
    out.ahl = true;
    DPC_ASSIGN_OR_RETURN(out.un, CheckAhlNode(ctx, node, path));
  } else {
    DPC_ASSIGN_OR_RETURN(out.rel, CheckRelNode(ctx, node, path));
  }
  return out;
}

// Sampling pair of a Laplace rule: both sides single samples at the same
// noise parameter.
struct SamplePair {
  CmdPtr s1;
  CmdPtr s2;
  ExprPtr e1;  // mean, tagged <1>
  ExprPtr e2;  // mean, tagged <2>
  ExprPtr y1;
  ExprPtr y2;
  double eps = 0.0;
};

absl::StatusOr<SamplePair> Samples(const Program& p, const RelJudgment& j,
                                   const std::string& rule) {
  SamplePair sp;
  sp.s1 = Single(j.c1);
  sp.s2 = Single(j.c2);
  if (!sp.s1 || !sp.s2 || sp.s1->kind != CmdKind::kSample ||
      sp.s2->kind != CmdKind::kSample) {
    return Schema(absl::StrCat(rule, " relates two sampling commands"));
  }
  if (std::fabs(sp.s1->eps_value - sp.s2->eps_value) > 1e-12) {
    return Schema(absl::StrCat(rule, " needs the same noise parameter"));
  }
  sp.eps = sp.s1->eps_value;
  sp.e1 = Retag(sp.s1->e, 1);
  sp.e2 = Retag(sp.s2->e, 2);
  sp.y1 = Var(p, sp.s1->targets[0], 1);
  sp.y2 = Var(p, sp.s2->targets[0], 2);
  for (int side = 1; side <= 2; ++side) {
    const CmdPtr& s = side == 1 ? sp.s1 : sp.s2;
    const std::vector<std::string> fv = FreeVars(s->e);
    if (std::find(fv.begin(), fv.end(), s->targets[0]) != fv.end()) {
      return MakeError(ErrorKind::kFreshnessViolation,
                       absl::StrCat(s->targets[0], "<", side,
                                    "> occurs in its own mean"));
    }
  }
  return sp;
}

std::set<VarKey> SampleTargets(const SamplePair& sp) {
  return {{sp.s1->target_slots[0], 1}, {sp.s2->target_slots[0], 2}};
}

// Shared premise layout of [While] and [AC-While]; returns the children.
absl::Status CheckLoop(ProofContext& ctx, const Json& params,
                       const RelJudgment& j, const std::vector<Premise>& kids,
                       const std::string& rule, int64_t* n_out) {
  const CmdPtr w1 = Single(j.c1);
  const CmdPtr w2 = Single(j.c2);
  if (!w1 || !w2 || w1->kind != CmdKind::kWhile ||
      w2->kind != CmdKind::kWhile) {
    return Schema(absl::StrCat(rule, " relates two loops"));
  }
  DPC_ASSIGN_OR_RETURN(std::string theta_t, StrParam(params, "theta"));
  DPC_ASSIGN_OR_RETURN(std::string var_t, StrParam(params, "variant"));
  DPC_ASSIGN_OR_RETURN(ExprPtr theta, ctx.Rel(theta_t));
  DPC_ASSIGN_OR_RETURN(ExprPtr e, ctx.Rel(var_t));
  DPC_ASSIGN_OR_RETURN(int64_t n, IntParam(ctx, params, "n"));
  for (const auto& [name, tag] : FreeTaggedVars(e)) {
    if (tag != 1) return Schema("the variant reads only <1> variables");
  }
  if (n < 0) return Schema("n must be nonnegative");
  if (n > w1->cap || n > w2->cap) {
    return Schema(absl::StrCat("n = ", n, " exceeds a loop cap (", w1->cap,
                               ", ", w2->cap, ")"));
  }
  if (kids.size() != static_cast<size_t>(n)) {
    return Schema(absl::StrCat(rule, " expects ", n, " premises, got ",
                               kids.size()));
  }
  const ExprPtr b1 = Retag(w1->e, 1);
  const ExprPtr b2 = Retag(w2->e, 2);
  DPC_RETURN_IF_ERROR(ctx.Require(And(theta, Cmp(Op::kLe, e, 0)), Not(b1),
                                  "variant side condition"));
  for (int64_t k = 1; k <= n; ++k) {
    const Premise& kid = kids[k - 1];
    const std::string tag = absl::StrCat("iteration k=", k);
    if (kid.ahl) return Schema(tag + " must be an apRHL premise");
    DPC_RETURN_IF_ERROR(SameCmd(w1->body[0], kid.rel.c1, tag + " <1>"));
    DPC_RETURN_IF_ERROR(SameCmd(w2->body[0], kid.rel.c2, tag + " <2>"));
    DPC_RETURN_IF_ERROR(
        ctx.Require(And(And(And(theta, b1), b2), Cmp(Op::kEq, e, k)),
                    kid.rel.pre, tag + " pre"));
    DPC_RETURN_IF_ERROR(ctx.Require(
        kid.rel.post, And(And(theta, Iff(b1, b2)), Cmp(Op::kLt, e, k)),
        tag + " post"));
  }
  DPC_RETURN_IF_ERROR(ctx.Require(
      j.pre, And(And(theta, Iff(b1, b2)), Cmp(Op::kLe, e, n)), "loop pre"));
  DPC_RETURN_IF_ERROR(
      ctx.Require(And(And(theta, Not(b1)), Not(b2)), j.post, "loop post"));
  *n_out = n;
  return absl::OkStatus();
}

absl::StatusOr<Budget> RelRule(ProofContext& ctx, const std::string& rule,
                               const Json& params, const RelJudgment& j,
                               const std::vector<Premise>& kids,
                               std::string* note) {
  const Program& p = ctx.program();
  const double tol = ctx.tolerance();
  auto need_kids = [&](size_t n) -> absl::Status {
    if (kids.size() != n) {
      return Schema(absl::StrCat(rule, " expects ", n, " premise(s), got ",
                                 kids.size()));
    }
    return absl::OkStatus();
  };
  auto need_rel = [&](size_t i) -> absl::Status {
    if (kids[i].ahl) return Schema(absl::StrCat("premise ", i, " must be apRHL"));
    return absl::OkStatus();
  };
  auto need_ahl = [&](size_t i) -> absl::Status {
    if (!kids[i].ahl) return Schema(absl::StrCat("premise ", i, " must be aHL"));
    return absl::OkStatus();
  };
  auto same_cmds = [&](const RelJudgment& k, const std::string& what) {
    absl::Status s = SameCmd(j.c1, k.c1, what + " <1>");
    if (!s.ok()) return s;
    return SameCmd(j.c2, k.c2, what + " <2>");
  };
  const Budget zero{0.0, 0.0};

  if (rule == "Skip") {
    DPC_RETURN_IF_ERROR(need_kids(0));
    if (!FlatList(j.c1).empty() || !FlatList(j.c2).empty()) {
      return Schema("Skip relates skip with skip");
    }
    DPC_RETURN_IF_ERROR(ctx.Require(j.pre, j.post, "Skip"));
    return zero;
  }
  if (rule == "Assn" || rule == "Wp") {
    DPC_RETURN_IF_ERROR(need_kids(0));
    for (const CmdPtr& c : {j.c1, j.c2}) {
      if (!IsDeterministic(c)) {
        return Schema(absl::StrCat(rule, " needs loop-free deterministic code"));
      }
      if (rule == "Assn") {
        for (const CmdPtr& x : FlatList(c)) {
          if (x->kind != CmdKind::kAssign) return Schema("Assn takes assignments");
        }
      }
    }
    DPC_ASSIGN_OR_RETURN(ExprPtr w2, Wp(j.c2, 2, j.post));
    DPC_ASSIGN_OR_RETURN(ExprPtr w, Wp(j.c1, 1, w2));
    DPC_RETURN_IF_ERROR(ctx.Require(j.pre, w, "weakest precondition"));
    return zero;
  }
  if (rule == "Seq") {
    if (kids.empty()) return Schema("Seq needs premises");
    std::vector<CmdPtr> l1, l2;
    Budget total;
    for (size_t i = 0; i < kids.size(); ++i) {
      DPC_RETURN_IF_ERROR(need_rel(i));
      for (const CmdPtr& x : FlatList(kids[i].rel.c1)) l1.push_back(x);
      for (const CmdPtr& x : FlatList(kids[i].rel.c2)) l2.push_back(x);
      total.eps += kids[i].rel.budget.eps;
      total.delta += kids[i].rel.budget.delta;
    }
    DPC_RETURN_IF_ERROR(SameCmd(j.c1, MakeSeq(l1), "Seq <1>"));
    DPC_RETURN_IF_ERROR(SameCmd(j.c2, MakeSeq(l2), "Seq <2>"));
    DPC_RETURN_IF_ERROR(ctx.Require(j.pre, kids.front().rel.pre, "Seq pre"));
    for (size_t i = 0; i + 1 < kids.size(); ++i) {
      DPC_RETURN_IF_ERROR(ctx.Require(kids[i].rel.post, kids[i + 1].rel.pre,
                                      absl::StrCat("Seq link ", i)));
    }
    DPC_RETURN_IF_ERROR(ctx.Require(kids.back().rel.post, j.post, "Seq post"));
    return total;
  }
  if (rule == "Cond" || rule == "Cond-L" || rule == "Cond-R") {
    DPC_RETURN_IF_ERROR(need_kids(2));
    DPC_RETURN_IF_ERROR(need_rel(0));
    DPC_RETURN_IF_ERROR(need_rel(1));
    const bool left = rule != "Cond-R";
    const bool right = rule != "Cond-L";
    const CmdPtr i1 = left ? Single(j.c1) : nullptr;
    const CmdPtr i2 = right ? Single(j.c2) : nullptr;
    if ((left && (!i1 || i1->kind != CmdKind::kIf)) ||
        (right && (!i2 || i2->kind != CmdKind::kIf))) {
      return Schema(absl::StrCat(rule, " needs a conditional on each branching side"));
    }
    ExprPtr guard_t = True(), guard_f = True();
    if (left) {
      const ExprPtr b1 = Retag(i1->e, 1);
      guard_t = And(guard_t, b1);
      guard_f = And(guard_f, Not(b1));
    }
    if (right) {
      const ExprPtr b2 = Retag(i2->e, 2);
      guard_t = And(guard_t, b2);
      guard_f = And(guard_f, Not(b2));
    }
    if (left && right) {
      DPC_RETURN_IF_ERROR(ctx.Require(
          j.pre, Iff(Retag(i1->e, 1), Retag(i2->e, 2)), "Cond guards agree"));
    }
    for (int br = 0; br < 2; ++br) {
      const RelJudgment& k = kids[br].rel;
      const std::string what = br == 0 ? "then" : "else";
      DPC_RETURN_IF_ERROR(SameCmd(
          left ? (br == 0 ? i1->body[0] : ElseBranch(i1)) : j.c1, k.c1,
          absl::StrCat(rule, " ", what, " <1>")));
      DPC_RETURN_IF_ERROR(SameCmd(
          right ? (br == 0 ? i2->body[0] : ElseBranch(i2)) : j.c2, k.c2,
          absl::StrCat(rule, " ", what, " <2>")));
      DPC_RETURN_IF_ERROR(ctx.Require(And(j.pre, br == 0 ? guard_t : guard_f),
                                      k.pre, absl::StrCat(what, " pre")));
      DPC_RETURN_IF_ERROR(
          ctx.Require(k.post, j.post, absl::StrCat(what, " post")));
    }
    return Budget{std::max(kids[0].rel.budget.eps, kids[1].rel.budget.eps),
                  std::max(kids[0].rel.budget.delta, kids[1].rel.budget.delta)};
  }
  if (rule == "While" || rule == "AC-While") {
    int64_t n = 0;
    DPC_RETURN_IF_ERROR(CheckLoop(ctx, params, j, kids, rule, &n));
    if (rule == "While") {
      Budget total;
      for (const Premise& k : kids) {
        total.eps += k.rel.budget.eps;
        total.delta += k.rel.budget.delta;
      }
      return total;
    }
    DPC_ASSIGN_OR_RETURN(double eps, NumParam(ctx, params, "eps"));
    DPC_ASSIGN_OR_RETURN(double delta, NumParam(ctx, params, "delta"));
    DPC_ASSIGN_OR_RETURN(double omega, NumParam(ctx, params, "omega"));
    for (size_t i = 0; i < kids.size(); ++i) {
      if (!BudgetLe(kids[i].rel.budget, {eps, delta}, tol)) {
        return MakeError(
            ErrorKind::kBudgetMismatch,
            absl::StrCat("iteration ", i + 1, " costs ",
                         BudgetText(kids[i].rel.budget),
                         ", above the uniform ", BudgetText({eps, delta})));
      }
    }
    if (n == 0) return zero;
    *note = absl::StrCat("n=", n, " eps=", Number17(eps), " delta=",
                         Number17(delta), " omega=", Number17(omega));
    return AdvBudget(static_cast<int>(n), eps, delta, omega);
  }
  if (rule == "LapNull") {
    DPC_RETURN_IF_ERROR(need_kids(0));
    DPC_ASSIGN_OR_RETURN(SamplePair sp, Samples(p, j, rule));
    const ExprPtr rel = MakeBinary(Op::kEq, MakeBinary(Op::kSub, sp.y1, sp.y2),
                                   MakeBinary(Op::kSub, sp.e1, sp.e2));
    const ExprPtr frame = FrameOf(j.pre, SampleTargets(sp));
    DPC_RETURN_IF_ERROR(ctx.Require(And(rel, frame), j.post, "LapNull post"));
    return zero;
  }
  if (rule == "LapGen") {
    DPC_RETURN_IF_ERROR(need_kids(0));
    DPC_ASSIGN_OR_RETURN(SamplePair sp, Samples(p, j, rule));
    DPC_ASSIGN_OR_RETURN(int64_t k, IntParam(ctx, params, "k"));
    DPC_ASSIGN_OR_RETURN(double kp, NumParam(ctx, params, "kprime"));
    if (kp < 0) return Schema("kprime must be nonnegative");
    DPC_ASSIGN_OR_RETURN(
        ExprPtr side, ctx.Rel(absl::StrCat("abs(", k, " + (", Text(sp.e1),
                                           ") - (", Text(sp.e2), ")) <= ",
                                           Number17(kp))));
    DPC_RETURN_IF_ERROR(ctx.Require(j.pre, side, "LapGen shift"));
    const ExprPtr rel = MakeBinary(
        Op::kEq, MakeBinary(Op::kAdd, sp.y1, MakeLit(Value::Int(k))), sp.y2);
    const ExprPtr frame = FrameOf(j.pre, SampleTargets(sp));
    DPC_RETURN_IF_ERROR(ctx.Require(And(rel, frame), j.post, "LapGen post"));
    *note = absl::StrCat("k=", k, " k'=", Number17(kp));
    return Budget{kp * sp.eps, 0.0};
  }
  if (rule == "LapInt") {
    DPC_RETURN_IF_ERROR(need_kids(0));
    DPC_ASSIGN_OR_RETURN(SamplePair sp, Samples(p, j, rule));
    std::map<std::string, ExprPtr> ends;
    for (const char* name : {"p", "q", "r", "s"}) {
      DPC_ASSIGN_OR_RETURN(std::string t, StrParam(params, name));
      DPC_ASSIGN_OR_RETURN(ExprPtr e, ctx.Rel(t));
      for (const VarKey& v : AssertionVars(e)) {
        if (SampleTargets(sp).count(v)) {
          return MakeError(ErrorKind::kFreshnessViolation,
                           absl::StrCat("endpoint ", name, " mentions a sample"));
        }
      }
      ends[name] = e;
    }
    DPC_ASSIGN_OR_RETURN(int64_t k, IntParam(ctx, params, "k"));
    DPC_ASSIGN_OR_RETURN(double eta, NumParam(ctx, params, "eta"));
    DPC_ASSIGN_OR_RETURN(double sigma, NumParam(ctx, params, "sigma"));
    if (!(sigma > 0.0)) {
      return MakeError(ErrorKind::kSideConditionFailed, "sigma must be positive");
    }
    const std::string P = Text(ends["p"]), Q = Text(ends["q"]),
                      R = Text(ends["r"]), S = Text(ends["s"]);
    const std::vector<std::pair<std::string, std::string>> sides = {
        {"mean shift", absl::StrCat("abs((", Text(sp.e1), ") - (",
                                    Text(sp.e2), ")) <= ", k)},
        {"p + k <= r", absl::StrCat("(", P, ") + ", k, " <= ", R)},
        {"r < s", absl::StrCat(R, " < ", S)},
        {"s <= q - k", absl::StrCat(S, " <= (", Q, ") - ", k)},
        {"width gap <= eta", absl::StrCat("((", Q, ") - (", P, ")) - ((", S,
                                          ") - (", R, ")) <= ",
                                          Number17(eta))},
        {"sigma <= (s - r) + 2", absl::StrCat(Number17(sigma), " <= ((", S,
                                              ") - (", R, ")) + 2")},
    };
    for (const auto& [what, text] : sides) {
      DPC_ASSIGN_OR_RETURN(ExprPtr cond, ctx.Rel(text));
      DPC_RETURN_IF_ERROR(ctx.Require(j.pre, cond, "LapInt " + what));
    }
    DPC_ASSIGN_OR_RETURN(
        ExprPtr rel,
        ctx.Rel(absl::StrCat("((", P, ") <= ", Text(sp.y1), " && ",
                             Text(sp.y1), " <= (", Q, ")) <-> ((", R,
                             ") <= ", Text(sp.y2), " && ", Text(sp.y2),
                             " <= (", S, "))")));
    const ExprPtr frame = FrameOf(j.pre, SampleTargets(sp));
    DPC_RETURN_IF_ERROR(ctx.Require(And(rel, frame), j.post, "LapInt post"));
    const double cost =
        eta * sp.eps - std::log1p(-std::exp(-sigma * sp.eps / 2.0));
    *note = absl::StrCat("eta=", Number17(eta), " sigma=", Number17(sigma),
                         " eps'=", Number17(cost));
    return Budget{cost, 0.0};
  }
  if (rule == "Conseq") {
    DPC_RETURN_IF_ERROR(need_kids(1));
    DPC_RETURN_IF_ERROR(need_rel(0));
    const RelJudgment& k = kids[0].rel;
    DPC_RETURN_IF_ERROR(same_cmds(k, "Conseq"));
    DPC_RETURN_IF_ERROR(ctx.Require(j.pre, k.pre, "Conseq pre"));
    DPC_RETURN_IF_ERROR(ctx.Require(k.post, j.post, "Conseq post"));
    if (!BudgetLe(k.budget, j.budget, tol)) {
      return MakeError(ErrorKind::kBudgetMismatch,
                       absl::StrCat("Conseq cannot lower ", BudgetText(k.budget),
                                    " to ", BudgetText(j.budget)));
    }
    return j.budget;
  }
  if (rule == "Frame") {
    DPC_RETURN_IF_ERROR(need_kids(1));
    DPC_RETURN_IF_ERROR(need_rel(0));
    const RelJudgment& k = kids[0].rel;
    DPC_RETURN_IF_ERROR(same_cmds(k, "Frame"));
    DPC_ASSIGN_OR_RETURN(std::string theta_t, StrParam(params, "theta"));
    DPC_ASSIGN_OR_RETURN(ExprPtr theta, ctx.Rel(theta_t));
    const std::vector<std::string> clash = FrameConflicts(
        theta, ModifiedVars(j.c1, &p), ModifiedVars(j.c2, &p));
    if (!clash.empty()) {
      return MakeError(ErrorKind::kSideConditionFailed,
                       absl::StrCat("Frame: ", absl::StrJoin(clash, ", "),
                                    " modified by the commands"));
    }
    DPC_RETURN_IF_ERROR(ctx.Require(j.pre, And(k.pre, theta), "Frame pre"));
    DPC_RETURN_IF_ERROR(ctx.Require(And(k.post, theta), j.post, "Frame post"));
    return k.budget;
  }
  if (rule == "PW-Eq") {
    DPC_ASSIGN_OR_RETURN(std::vector<std::string> vars, VarsParam(p, params));
    std::vector<std::vector<Value>> doms;
    uint64_t count = 1;
    for (const std::string& v : vars) {
      const Type& t = p.Var(v)->type;
      if (t.DomainSize() > 4096 || count * t.DomainSize() > 4096) {
        return MakeError(ErrorKind::kSpaceTooLarge,
                         "PW-Eq index set larger than 4096");
      }
      count *= t.DomainSize();
      doms.push_back(t.Enumerate());
    }
    DPC_RETURN_IF_ERROR(need_kids(count));
    Budget total;
    std::vector<size_t> idx(vars.size(), 0);
    for (uint64_t i = 0; i < count; ++i) {
      DPC_RETURN_IF_ERROR(need_rel(i));
      const RelJudgment& k = kids[i].rel;
      std::vector<ExprPtr> lhs, rhs;
      std::string label;
      for (size_t v = 0; v < vars.size(); ++v) {
        const ExprPtr lit = MakeLit(doms[v][idx[v]]);
        lhs.push_back(MakeBinary(Op::kEq, Var(p, vars[v], 1), lit));
        rhs.push_back(MakeBinary(Op::kEq, Var(p, vars[v], 2), lit));
        absl::StrAppend(&label, v ? "," : "", doms[v][idx[v]].ToString());
      }
      const std::string what = absl::StrCat("PW-Eq index (", label, ")");
      DPC_RETURN_IF_ERROR(same_cmds(k, what));
      DPC_RETURN_IF_ERROR(ctx.Require(j.pre, k.pre, what + " pre"));
      DPC_RETURN_IF_ERROR(ctx.Require(
          k.post, Implies(MakeAnd(lhs), MakeAnd(rhs)), what + " post"));
      total.eps = std::max(total.eps, k.budget.eps);
      total.delta += k.budget.delta;
      for (size_t v = vars.size(); v-- > 0;) {
        if (++idx[v] < doms[v].size()) break;
        idx[v] = 0;
      }
    }
    DPC_RETURN_IF_ERROR(ctx.Require(TupleEq(p, vars), j.post, "PW-Eq post"));
    return total;
  }
  if (rule == "UtB-L" || rule == "UtB-R") {
    DPC_RETURN_IF_ERROR(need_kids(2));
    DPC_RETURN_IF_ERROR(need_rel(0));
    DPC_RETURN_IF_ERROR(need_ahl(1));
    const int side = rule == "UtB-L" ? 1 : 2;
    const RelJudgment& k = kids[0].rel;
    const AhlJudgment& bad = kids[1].un;
    DPC_ASSIGN_OR_RETURN(std::string theta_t, StrParam(params, "theta"));
    DPC_ASSIGN_OR_RETURN(std::string e_t, StrParam(params, "e"));
    DPC_ASSIGN_OR_RETURN(ExprPtr theta, ctx.Unary(theta_t));
    DPC_ASSIGN_OR_RETURN(ExprPtr e, ctx.Unary(e_t));
    DPC_RETURN_IF_ERROR(same_cmds(k, rule));
    DPC_RETURN_IF_ERROR(
        SameCmd(side == 1 ? j.c1 : j.c2, bad.c, rule + " aHL command"));
    const ExprPtr eq = MakeBinary(Op::kEq, Retag(e, 1), Retag(e, 2));
    DPC_RETURN_IF_ERROR(ctx.Require(j.pre, k.pre, rule + " pre"));
    DPC_RETURN_IF_ERROR(ctx.Require(j.pre, Retag(bad.pre, side),
                                    rule + " aHL pre"));
    DPC_RETURN_IF_ERROR(ctx.Require(k.post, Implies(Retag(theta, side), eq),
                                    rule + " conditional post"));
    DPC_RETURN_IF_ERROR(ctx.Require(bad.post, theta, rule + " bad event"));
    DPC_RETURN_IF_ERROR(ctx.Require(eq, j.post, rule + " post"));
    const double factor = side == 1 ? 1.0 : std::exp(k.budget.eps);
    *note = absl::StrCat("beta=", Number17(bad.beta));
    return Budget{k.budget.eps, k.budget.delta + factor * bad.beta};
  }
  if (rule == "Adv") {
    const CmdPtr c = Single(j.c1);
    if (!c || c->kind != CmdKind::kAdvCall) {
      return Schema("Adv applies to an adversary call");
    }
    DPC_RETURN_IF_ERROR(SameCmd(j.c1, j.c2, "Adv sides"));
    const AdversaryDecl* adv = p.Adversary(c->callee);
    if (!adv) return MakeError(ErrorKind::kMissingAdversary, c->callee);
    ExprPtr phi = True();
    if (params.contains("phi")) {
      DPC_ASSIGN_OR_RETURN(phi, ctx.Rel(params["phi"].get<std::string>()));
    }
    std::set<std::string> banned(c->targets.begin(), c->targets.end());
    for (const AdversaryDecl& a : p.adversaries) banned.insert(a.name);
    for (const std::string& v : FreeVars(phi)) {
      if (banned.count(v)) {
        return MakeError(ErrorKind::kSideConditionFailed,
                         absl::StrCat("Adv: invariant mentions ", v));
      }
    }
    DPC_RETURN_IF_ERROR(need_kids(adv->oracle_caps.size()));
    const ExprPtr state_eq = TupleEq(p, {adv->name});
    DPC_RETURN_IF_ERROR(ctx.Require(
        j.pre, And(And(TupleEqExprs(c->args), state_eq), phi), "Adv pre"));
    DPC_RETURN_IF_ERROR(ctx.Require(
        And(And(TupleEq(p, c->targets), state_eq), phi), j.post, "Adv post"));
    Budget total;
    for (size_t i = 0; i < adv->oracle_caps.size(); ++i) {
      DPC_RETURN_IF_ERROR(need_rel(i));
      const auto& [oname, cap] = adv->oracle_caps[i];
      const OracleDecl* o = p.Oracle(oname);
      if (!o) return MakeError(ErrorKind::kUnboundVariable, oname);
      const RelJudgment& k = kids[i].rel;
      const std::string what = "Adv oracle " + oname;
      DPC_RETURN_IF_ERROR(SameCmd(o->body, k.c1, what + " <1>"));
      DPC_RETURN_IF_ERROR(SameCmd(o->body, k.c2, what + " <2>"));
      DPC_RETURN_IF_ERROR(
          ctx.Require(And(TupleEq(p, o->params), phi), k.pre, what + " pre"));
      DPC_RETURN_IF_ERROR(ctx.Require(
          k.post, And(TupleEq(p, {o->result}), phi), what + " post"));
      total.eps += static_cast<double>(cap) * k.budget.eps;
      total.delta += static_cast<double>(cap) * k.budget.delta;
    }
    return total;
  }
  if (rule == "Case") {
    DPC_RETURN_IF_ERROR(need_kids(2));
    DPC_ASSIGN_OR_RETURN(std::string cond_t, StrParam(params, "cond"));
    DPC_ASSIGN_OR_RETURN(ExprPtr cond, ctx.Rel(cond_t));
    Budget out;
    for (int i = 0; i < 2; ++i) {
      DPC_RETURN_IF_ERROR(need_rel(i));
      const RelJudgment& k = kids[i].rel;
      DPC_RETURN_IF_ERROR(same_cmds(k, "Case"));
      DPC_RETURN_IF_ERROR(ctx.Require(And(j.pre, i == 0 ? cond : Not(cond)),
                                      k.pre, "Case pre"));
      DPC_RETURN_IF_ERROR(ctx.Require(k.post, j.post, "Case post"));
      out.eps = std::max(out.eps, k.budget.eps);
      out.delta = std::max(out.delta, k.budget.delta);
    }
    return out;
  }
  if (rule == "True") {
    DPC_RETURN_IF_ERROR(need_kids(0));
    DPC_RETURN_IF_ERROR(ctx.Require(True(), j.post, "True post"));
    return zero;
  }
  if (rule == "Absurd") {
    DPC_RETURN_IF_ERROR(need_kids(0));
    DPC_RETURN_IF_ERROR(ctx.RequireUnsat(j.pre, "Absurd pre"));
    return zero;
  }
  if (rule == "Indep") {
    DPC_RETURN_IF_ERROR(need_kids(2));
    DPC_RETURN_IF_ERROR(need_ahl(0));
    DPC_RETURN_IF_ERROR(need_ahl(1));
    const AhlJudgment& a1 = kids[0].un;
    const AhlJudgment& a2 = kids[1].un;
    DPC_RETURN_IF_ERROR(SameCmd(j.c1, a1.c, "Indep <1>"));
    DPC_RETURN_IF_ERROR(SameCmd(j.c2, a2.c, "Indep <2>"));
    if (a1.beta > tol || a2.beta > tol) {
      return MakeError(ErrorKind::kBudgetMismatch,
                       "Indep needs almost-sure side judgments (beta = 0)");
    }
    DPC_RETURN_IF_ERROR(ctx.Require(
        j.pre, And(Retag(a1.pre, 1), Retag(a2.pre, 2)), "Indep pre"));
    DPC_RETURN_IF_ERROR(ctx.Require(
        And(Retag(a1.post, 1), Retag(a2.post, 2)), j.post, "Indep post"));
    return zero;
  }
  if (rule == "EqInv") {
    DPC_RETURN_IF_ERROR(need_kids(3));
    DPC_RETURN_IF_ERROR(need_rel(0));
    DPC_RETURN_IF_ERROR(need_ahl(1));
    DPC_RETURN_IF_ERROR(need_ahl(2));
    DPC_ASSIGN_OR_RETURN(std::vector<std::string> vars, VarsParam(p, params));
    DPC_ASSIGN_OR_RETURN(std::string inv_t, StrParam(params, "inv"));
    DPC_ASSIGN_OR_RETURN(ExprPtr inv, ctx.Unary(inv_t));
    for (const std::string& v : FreeVars(inv)) {
      if (std::find(vars.begin(), vars.end(), v) == vars.end()) {
        return MakeError(ErrorKind::kSideConditionFailed,
                         absl::StrCat("EqInv: invariant reads ", v,
                                      " outside the equated variables"));
      }
    }
    const RelJudgment& k = kids[0].rel;
    const AhlJudgment& a1 = kids[1].un;
    const AhlJudgment& a2 = kids[2].un;
    DPC_RETURN_IF_ERROR(same_cmds(k, "EqInv"));
    DPC_RETURN_IF_ERROR(SameCmd(j.c1, a1.c, "EqInv aHL <1>"));
    DPC_RETURN_IF_ERROR(SameCmd(j.c2, a2.c, "EqInv aHL <2>"));
    if (a1.beta > tol || a2.beta > tol) {
      return MakeError(ErrorKind::kBudgetMismatch,
                       "EqInv needs almost-sure side judgments (beta = 0)");
    }
    const ExprPtr eq = TupleEq(p, vars);
    DPC_RETURN_IF_ERROR(ctx.Require(j.pre, k.pre, "EqInv pre"));
    DPC_RETURN_IF_ERROR(ctx.Require(j.pre, Retag(a1.pre, 1), "EqInv aHL pre <1>"));
    DPC_RETURN_IF_ERROR(ctx.Require(j.pre, Retag(a2.pre, 2), "EqInv aHL pre <2>"));
    DPC_RETURN_IF_ERROR(ctx.Require(k.post, eq, "EqInv equality"));
    DPC_RETURN_IF_ERROR(ctx.Require(a1.post, inv, "EqInv invariant <1>"));
    DPC_RETURN_IF_ERROR(ctx.Require(a2.post, inv, "EqInv invariant <2>"));
    DPC_RETURN_IF_ERROR(ctx.Require(
        And(eq, And(Retag(inv, 1), Retag(inv, 2))), j.post, "EqInv post"));
    return k.budget;
  }
  return MakeError(ErrorKind::kUnknownRule,
                   absl::StrCat("unknown apRHL rule '", rule, "'"));
}

}  // namespace

absl::StatusOr<RelJudgment> ParseRelConclusion(ProofContext& ctx,
                                               const Json& concl) {
  if (!concl.is_object()) {
    return MakeError(ErrorKind::kSyntaxError, "node without conclusion");
  }
  RelJudgment j;
  DPC_ASSIGN_OR_RETURN(j.c1, ctx.Command(concl.value("c1", Json("skip;"))));
  DPC_ASSIGN_OR_RETURN(j.c2, ctx.Command(concl.value("c2", Json("skip;"))));
  DPC_ASSIGN_OR_RETURN(j.pre, ctx.Rel(concl.value("pre", "true")));
  DPC_ASSIGN_OR_RETURN(j.post, ctx.Rel(concl.value("post", "true")));
  DPC_ASSIGN_OR_RETURN(j.budget.eps, ctx.Number(concl.value("eps", Json(0.0))));
  DPC_ASSIGN_OR_RETURN(j.budget.delta,
                       ctx.Number(concl.value("delta", Json(0.0))));
  if (!(j.budget.eps >= 0.0) || !(j.budget.delta >= 0.0)) {
    return MakeError(ErrorKind::kOutOfRange,
                     absl::StrCat("negative budget ", BudgetText(j.budget)));
  }
  return j;
}

absl::StatusOr<RelJudgment> CheckRelNode(ProofContext& ctx, const Json& node,
                                         const std::string& path) {
  if (!node.is_object()) {
    return ctx.Fail(MakeError(ErrorKind::kSyntaxError, "node is not an object"),
                    path, "?");
  }
  if (node.contains("lemma")) {
    const std::string name = node["lemma"].get<std::string>();
    auto hit = ctx.lemma_cache().find("rel:" + name);
    if (hit != ctx.lemma_cache().end()) {
      return std::any_cast<RelJudgment>(hit->second);
    }
    const Json* lemma = ctx.Lemma(name);
    if (!lemma) {
      return ctx.Fail(MakeError(ErrorKind::kSyntaxError,
                                absl::StrCat("unknown lemma ", name)),
                      path, "lemma");
    }
    DPC_ASSIGN_OR_RETURN(RelJudgment j,
                         CheckRelNode(ctx, *lemma, "lemma:" + name));
    ctx.lemma_cache()["rel:" + name] = j;
    return j;
  }
  if (node.value("logic", "aprhl") != "aprhl") {
    return ctx.Fail(Schema("expected an apRHL node"), path, "?");
  }
  const std::string rule = node.value("rule", "");
  const Json params = node.value("params", Json::object());
  const Json children = node.value("children", Json::array());
  std::vector<Premise> kids;
  for (size_t i = 0; i < children.size(); ++i) {
    DPC_ASSIGN_OR_RETURN(
        Premise k, CheckPremise(ctx, children[i], absl::StrCat(path, "/", i)));
    kids.push_back(std::move(k));
  }
  absl::StatusOr<RelJudgment> j =
      ParseRelConclusion(ctx, node.value("conclusion", Json()));
  if (!j.ok()) return ctx.Fail(j.status(), path, rule);
  std::string note;
  absl::StatusOr<Budget> b = RelRule(ctx, rule, params, *j, kids, &note);
  if (!b.ok()) return ctx.Fail(b.status(), path, rule);
  if (std::fabs(b->eps - j->budget.eps) > ctx.tolerance() ||
      std::fabs(b->delta - j->budget.delta) > ctx.tolerance()) {
    return ctx.Fail(
        MakeError(ErrorKind::kBudgetMismatch,
                  absl::StrCat("computed ", BudgetText(*b), ", declared ",
                               BudgetText(j->budget))),
        path, rule);
  }
  ctx.records().push_back(
      {path, "aprhl", rule, j->budget.eps, j->budget.delta, note});
  return *j;
}

absl::StatusOr<DerivationReport> CheckDerivation(
    std::shared_ptr<const Program> p, const Json& doc) {
  if (!doc.is_object() || !doc.contains("root")) {
    return MakeError(ErrorKind::kSyntaxError, "proof document without root");
  }
  ProofContext ctx(*p);
  const Json fragments = doc.value("fragments", Json::object());
  const Json lemmas = doc.value("lemmas", Json::object());
  for (const auto& [name, text] : fragments.items()) {
    DPC_RETURN_IF_ERROR(AnnotateError(
        ctx.AddFragment(name, text.get<std::string>()), "fragment " + name));
  }
  for (const auto& [name, node] : lemmas.items()) {
    ctx.AddLemma(name, node);
  }
  DerivationReport report;
  report.program = p;
  absl::StatusOr<RelJudgment> root = CheckRelNode(ctx, doc["root"], "root");
  report.nodes = ctx.records();
  report.implication_steps = ctx.engine().steps();
  if (!root.ok()) {
    const ErrorKind kind = ErrorKindOf(root.status());
    if (kind == ErrorKind::kSpaceTooLarge) return root.status();
    report.kind = kind;
    report.message = std::string(root.status().message());
    report.failed_path = ctx.failed_path();
    if (kind == ErrorKind::kSideConditionFailed) {
      report.counterexample = ctx.counterexample();
    }
    return report;
  }
  report.ok = true;
  report.budget = root->budget;
  report.root = *root;
  return report;
}

absl::StatusOr<std::shared_ptr<const Program>> LoadProofProgram(
    const std::string& proof_path, const Json& doc,
    const std::map<std::string, Value>& overrides) {
  const Json header = doc.value("header", Json::object());
  if (!header.contains("program")) {
    return MakeError(ErrorKind::kSyntaxError, "header.program missing");
  }
  std::string dir = proof_path;
  const size_t slash = dir.find_last_of('/');
  dir = slash == std::string::npos ? "." : dir.substr(0, slash);
  const std::string prog_path =
      absl::StrCat(dir, "/", header["program"].get<std::string>());
  std::ifstream in(prog_path);
  if (!in) return MakeError(ErrorKind::kIoError, "cannot read " + prog_path);
  std::stringstream text;
  text << in.rdbuf();
  std::map<std::string, Value> consts;
  const Json constants = header.value("constants", Json::object());
  for (const auto& [name, v] : constants.items()) {
    if (v.is_number_integer()) {
      consts[name] = Value::Int(v.get<int64_t>());
    } else if (v.is_number()) {
      consts[name] = Value::Real(v.get<double>());
    } else {
      return MakeError(ErrorKind::kSyntaxError,
                       absl::StrCat("constant ", name, " must be a number"));
    }
  }
  for (const auto& [name, v] : overrides) consts[name] = v;
  DPC_ASSIGN_OR_RETURN(Program prog, ParseProgram(text.str(), consts));
  DPC_RETURN_IF_ERROR(Typecheck(prog).status());
  return std::make_shared<const Program>(std::move(prog));
}

absl::StatusOr<DerivationReport> CheckProofFile(
    const std::string& path, const std::map<std::string, Value>& overrides) {
  std::ifstream in(path);
  if (!in) return MakeError(ErrorKind::kIoError, "cannot read " + path);
  Json doc = Json::parse(in, nullptr, false);
  if (doc.is_discarded()) {
    return MakeError(ErrorKind::kSyntaxError, path + " is not valid JSON");
  }
  DPC_ASSIGN_OR_RETURN(std::shared_ptr<const Program> p,
                       LoadProofProgram(path, doc, overrides));
  return CheckDerivation(p, doc);
}

absl::StatusOr<ImplicationOutcome> CheckImplication(const Program& p,
                                                    const ExprPtr& a,
                                                    const ExprPtr& b) {
  ImplicationEngine engine(p);
  return engine.Implies(a, b);
}

namespace {

// Slots of the post-condition on one side, in slot order.
std::vector<int> PostSlots(const ExprPtr& post, int side) {
  std::vector<int> out;
  for (const VarKey& k : AssertionVars(post)) {
    if (k.second == side) out.push_back(k.first);
  }
  return out;
}

// The post is a conjunction of x<1> = x<2> over the same variables on both
// sides, so an equality lifting check applies.
bool IsTupleEquality(const ExprPtr& post) {
  std::set<int> s1, s2;
  for (const ExprPtr& c : Conjuncts(post)) {
    if (c->kind != ExprKind::kBinary || c->op != Op::kEq) return false;
    const ExprPtr& a = c->args[0];
    const ExprPtr& b = c->args[1];
    if (a->kind != ExprKind::kVar || b->kind != ExprKind::kVar ||
        a->slot != b->slot || a->tag == b->tag) {
      return false;
    }
    s1.insert(a->slot);
  }
  return !s1.empty();
}

Distr Project(const MemDistr& d, const std::vector<int>& slots) {
  return d.Pushforward<Value>([&](const Memory& m) {
    std::vector<Value> vs;
    vs.reserve(slots.size());
    for (int s : slots) vs.push_back(m[s]);
    return Value::List(std::move(vs));
  });
}

Memory Embed(const Memory& base, const std::vector<int>& slots,
             const Value& v) {
  Memory m = base;
  for (size_t i = 0; i < slots.size(); ++i) m[slots[i]] = v.as_list()[i];
  return m;
}

}  // namespace

absl::StatusOr<JudgmentValidation> ValidateJudgmentEmpirical(
    const Program& p, const RelJudgment& j, const ValidationOptions& options) {
  std::set<std::string> out1, out2;
  for (const auto& [name, tag] : FreeTaggedVars(j.post)) {
    (tag == 2 ? out2 : out1).insert(name);
  }
  std::set<VarKey> vars;
  for (const std::string& v : LiveVars(j.c1, p, out1)) vars.insert({p.Slot(v), 1});
  for (const std::string& v : LiveVars(j.c2, p, out2)) vars.insert({p.Slot(v), 2});
  // Both sides project onto the same slots so that values from either
  // support are comparable.
  std::vector<int> slots1 = PostSlots(j.post, 1);
  for (int s : PostSlots(j.post, 2)) {
    if (std::find(slots1.begin(), slots1.end(), s) == slots1.end()) {
      slots1.push_back(s);
    }
  }
  std::sort(slots1.begin(), slots1.end());
  const std::vector<int>& slots2 = slots1;
  const bool fast = IsTupleEquality(j.post);
  const uint64_t max_pairs = options.max_pairs ? options.max_pairs : MaxStates();

  std::vector<NamedAdversaries> battery = options.battery;
  if (battery.empty()) battery.push_back({"none", {}});

  ImplicationEngine engine(p);
  JudgmentValidation report;
  report.equality_fast_path = fast;
  report.worst_margin = -std::numeric_limits<double>::infinity();
  const Memory defaults = DefaultMemory(p);

  DPC_RETURN_IF_ERROR(engine.ForEachModel(
      j.pre, vars, [&](const Memory& m1, const Memory& m2) -> absl::Status {
        if (++report.pairs > max_pairs) {
          return MakeError(ErrorKind::kSpaceTooLarge,
                           absl::StrCat("more than ", max_pairs,
                                        " memory pairs satisfy the pre"));
        }
        for (const NamedAdversaries& adv : battery) {
          InterpOptions io = options.interp;
          if (!adv.impls.empty()) io.adversaries = &adv.impls;
          DPC_ASSIGN_OR_RETURN(InterpResult r1, Interpret(p, j.c1, m1, io));
          DPC_ASSIGN_OR_RETURN(InterpResult r2, Interpret(p, j.c2, m2, io));
          ++report.runs;
          const Distr d1 = Project(r1.out, slots1);
          const Distr d2 = Project(r2.out, slots2);
          ValidationCase cs;
          cs.m1 = m1;
          cs.m2 = m2;
          cs.adversary = adv.name;
          cs.slack = options.lifting.tolerance + r1.truncation_slack +
                     std::exp(j.budget.eps) * r2.truncation_slack;
          if (fast) {
            DPC_ASSIGN_OR_RETURN(cs.needed_delta,
                                 DpDivergence(d1, d2, j.budget.eps));
          } else {
            Relation rel;
            absl::Status eval_error;
            rel.holds = [&](const Value& a, const Value& b) {
              absl::StatusOr<bool> ok =
                  EvalRelAssertion(j.post, p, Embed(defaults, slots1, a),
                                   Embed(defaults, slots2, b));
              if (!ok.ok()) {
                eval_error = ok.status();
                return false;
              }
              return *ok;
            };
            DPC_ASSIGN_OR_RETURN(
                LiftingResult lr,
                LiftingExists(d1, d2, rel, j.budget.eps,
                              j.budget.delta + cs.slack, options.lifting));
            DPC_RETURN_IF_ERROR(eval_error);
            cs.needed_delta = lr.delta_min;
            cs.detail = lr.obstruction;
          }
          const double margin = cs.needed_delta - j.budget.delta - cs.slack;
          cs.ok = margin <= 0.0;
          report.worst_needed_delta =
              std::max(report.worst_needed_delta, cs.needed_delta);
          report.worst_slack = std::max(report.worst_slack, cs.slack);
          report.worst_margin = std::max(report.worst_margin, margin);
          if (!cs.ok) {
            report.ok = false;
            if (report.failures.size() < 16) report.failures.push_back(cs);
          }
        }
        return absl::OkStatus();
      }));
  return report;
}

}  // namespace dpcouple
