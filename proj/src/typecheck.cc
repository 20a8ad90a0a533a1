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

#include "dpcouple/typecheck.h"

#include <algorithm>
#include <cmath>

#include "absl/strings/str_cat.h"
#include "dpcouple/eval.h"
#include "dpcouple/status.h"

namespace dpcouple {
namespace {

constexpr int64_t kBig = int64_t{1} << 60;

int64_t Clamp(__int128 v) {
  if (v > kBig) return kBig;
  if (v < -kBig) return -kBig;
  return static_cast<int64_t>(v);
}

Type IntT(__int128 lo, __int128 hi) { return Type::Int(Clamp(lo), Clamp(hi)); }

absl::Status Mismatch(const ExprPtr& e, absl::string_view what) {
  return MakeError(ErrorKind::kTypeError,
                   absl::StrCat("line ", e->line, ", col ", e->col, ": ", what,
                                " in ", ToString(e)));
}

Type Join(const Type& a, const Type& b) {
  if (a.kind == TypeKind::kInt && b.kind == TypeKind::kInt) {
    return Type::Int(std::min(a.lo, b.lo), std::max(a.hi, b.hi));
  }
  if (a.kind == TypeKind::kList && b.kind == TypeKind::kList) {
    if (!a.elem) return b;
    if (!b.elem) return a;
    return Type::List(Join(*a.elem, *b.elem), std::max(a.max_len, b.max_len),
                      a.exact_len && b.exact_len && a.max_len == b.max_len);
  }
  if (a.kind == TypeKind::kQuery) {
    return Type::Query(std::max(a.queries, b.queries));
  }
  return a;
}

bool Numeric(const Type& t) {
  return t.kind == TypeKind::kInt || t.kind == TypeKind::kReal;
}

class Typer {
 public:
  explicit Typer(const Program& p) : p_(p) {}

  absl::StatusOr<Type> Of(const ExprPtr& e) {
    switch (e->kind) {
      case ExprKind::kLit:
        return OfValue(e->lit);
      case ExprKind::kVar:
        if (e->slot < 0) return Mismatch(e, "unresolved variable");
        return p_.vars[e->slot].type;
      case ExprKind::kLocal:
        if (e->index >= static_cast<int>(env_.size())) {
          return Mismatch(e, "unbound local");
        }
        return env_[env_.size() - 1 - e->index];
      case ExprKind::kUnary: {
        DPC_ASSIGN_OR_RETURN(Type a, Of(e->args[0]));
        if (e->op == Op::kNot) {
          if (a.kind != TypeKind::kBool) return Mismatch(e, "'!' on a non-boolean");
          return a;
        }
        if (a.kind == TypeKind::kReal) return a;
        if (a.kind != TypeKind::kInt) return Mismatch(e, "negating a non-number");
        return IntT(-static_cast<__int128>(a.hi), -static_cast<__int128>(a.lo));
      }
      case ExprKind::kBinary:
        return Binary(e);
      case ExprKind::kCond: {
        DPC_ASSIGN_OR_RETURN(Type c, Of(e->args[0]));
        if (c.kind != TypeKind::kBool) return Mismatch(e, "non-boolean condition");
        DPC_ASSIGN_OR_RETURN(Type a, Of(e->args[1]));
        DPC_ASSIGN_OR_RETURN(Type b, Of(e->args[2]));
        if (Numeric(a) && Numeric(b) && a.kind != b.kind) return Type::Real();
        if (!SameShape(a, b)) return Mismatch(e, "branches of different types");
        return Join(a, b);
      }
      case ExprKind::kCall:
        return Call(e);
      case ExprKind::kList: {
        Type elem;
        bool first = true;
        for (const ExprPtr& a : e->args) {
          DPC_ASSIGN_OR_RETURN(Type t, Of(a));
          if (!first && !SameShape(elem, t)) return Mismatch(e, "mixed list");
          elem = first ? t : Join(elem, t);
          first = false;
        }
        if (first) return EmptyList();
        return Type::List(elem, static_cast<int64_t>(e->args.size()), true);
      }
      case ExprKind::kIndex: {
        DPC_ASSIGN_OR_RETURN(Type l, Of(e->args[0]));
        DPC_ASSIGN_OR_RETURN(Type i, Of(e->args[1]));
        if (l.kind != TypeKind::kList || i.kind != TypeKind::kInt) {
          return Mismatch(e, "bad indexing");
        }
        if (!l.elem) return Mismatch(e, "indexing an empty list");
        return *l.elem;
      }
      case ExprKind::kQuant: {
        DPC_ASSIGN_OR_RETURN(Type lo, Of(e->args[0]));
        DPC_ASSIGN_OR_RETURN(Type hi, Of(e->args[1]));
        if (lo.kind != TypeKind::kInt || hi.kind != TypeKind::kInt) {
          return Mismatch(e, "quantifier bounds must be integers");
        }
        env_.push_back(Type::Int(lo.lo, hi.hi));
        absl::StatusOr<Type> body = Of(e->args[2]);
        env_.pop_back();
        DPC_RETURN_IF_ERROR(body.status());
        if (body->kind != TypeKind::kBool) return Mismatch(e, "quantifier body must be boolean");
        return Type::Bool();
      }
    }
    return Mismatch(e, "unknown expression");
  }

 private:
  static Type EmptyList() {
    Type t;
    t.kind = TypeKind::kList;
    t.max_len = 0;
    t.exact_len = true;
    return t;
  }

  Type OfValue(const Value& v) {
    switch (v.kind()) {
      case Value::Kind::kBool: return Type::Bool();
      case Value::Kind::kInt: return Type::Int(v.as_int(), v.as_int());
      case Value::Kind::kReal: return Type::Real();
      case Value::Kind::kQuery:
        return Type::Query(static_cast<int64_t>(p_.queries.size()));
      case Value::Kind::kList: {
        if (v.as_list().empty()) return EmptyList();
        Type elem = OfValue(v.as_list()[0]);
        for (const Value& x : v.as_list()) elem = Join(elem, OfValue(x));
        return Type::List(elem, static_cast<int64_t>(v.as_list().size()), true);
      }
    }
    return Type::Bool();
  }

  absl::StatusOr<Type> Binary(const ExprPtr& e) {
    DPC_ASSIGN_OR_RETURN(Type a, Of(e->args[0]));
    DPC_ASSIGN_OR_RETURN(Type b, Of(e->args[1]));
    switch (e->op) {
      case Op::kAnd: case Op::kOr: case Op::kImplies: case Op::kIff:
        if (a.kind != TypeKind::kBool || b.kind != TypeKind::kBool) {
          return Mismatch(e, "connective on non-booleans");
        }
        return Type::Bool();
      case Op::kEq: case Op::kNe:
        if (!(Numeric(a) && Numeric(b)) && !SameShape(a, b)) {
          return Mismatch(e, "comparing different types");
        }
        return Type::Bool();
      case Op::kLt: case Op::kLe: case Op::kGt: case Op::kGe:
        if (!Numeric(a) || !Numeric(b)) return Mismatch(e, "ordering on non-numbers");
        return Type::Bool();
      case Op::kCons: {
        if (b.kind != TypeKind::kList) return Mismatch(e, "cons onto a non-list");
        if (b.elem && !SameShape(a, *b.elem)) return Mismatch(e, "cons of the wrong element type");
        Type elem = b.elem ? Join(*b.elem, a) : a;
        return Type::List(elem, b.max_len + 1, b.exact_len);
      }
      default:
        break;
    }
    if (!Numeric(a) || !Numeric(b)) return Mismatch(e, "arithmetic on non-numbers");
    if (e->op == Op::kDiv || a.kind == TypeKind::kReal || b.kind == TypeKind::kReal) {
      if (e->op == Op::kMod) return Mismatch(e, "modulo on reals");
      return Type::Real();
    }
    const __int128 al = a.lo, ah = a.hi, bl = b.lo, bh = b.hi;
    switch (e->op) {
      case Op::kAdd: return IntT(al + bl, ah + bh);
      case Op::kSub: return IntT(al - bh, ah - bl);
      case Op::kMul: {
        const __int128 c[] = {al * bl, al * bh, ah * bl, ah * bh};
        return IntT(*std::min_element(c, c + 4), *std::max_element(c, c + 4));
      }
      case Op::kMod: {
        const __int128 m = std::max<__int128>(bh > 0 ? bh : -bl, 1);
        if (bl > 0 && al >= 0 && ah < bl) return Type::Int(a.lo, a.hi);
        return IntT(bl > 0 ? 0 : -(m - 1), m - 1);
      }
      default:
        return Mismatch(e, "bad operator");
    }
  }

  absl::StatusOr<Type> Call(const ExprPtr& e) {
    std::vector<Type> args;
    for (const ExprPtr& a : e->args) {
      DPC_ASSIGN_OR_RETURN(Type t, Of(a));
      args.push_back(std::move(t));
    }
    auto need = [&](size_t n) -> absl::Status {
      if (args.size() != n) return Mismatch(e, absl::StrCat("expected ", n, " arguments"));
      return absl::OkStatus();
    };
    switch (static_cast<Builtin>(e->index)) {
      case Builtin::kUser: {
        const FunDecl& f = p_.funs[e->slot];
        DPC_RETURN_IF_ERROR(need(f.params.size()));
        if (++depth_ > 32) return Mismatch(e, "recursive function");
        std::vector<Type> saved = std::move(env_);
        env_ = args;
        absl::StatusOr<Type> out = Of(f.body);
        env_ = std::move(saved);
        --depth_;
        return out;
      }
      case Builtin::kAbs: {
        DPC_RETURN_IF_ERROR(need(1));
        if (args[0].kind == TypeKind::kReal) return args[0];
        if (args[0].kind != TypeKind::kInt) return Mismatch(e, "abs of a non-number");
        const int64_t lo = args[0].lo, hi = args[0].hi;
        if (lo >= 0) return args[0];
        if (hi <= 0) return IntT(-static_cast<__int128>(hi), -static_cast<__int128>(lo));
        return IntT(0, std::max<__int128>(-static_cast<__int128>(lo), hi));
      }
      case Builtin::kMin:
      case Builtin::kMax: {
        std::vector<Type> xs = args;
        if (args.size() == 1) {
          if (args[0].kind != TypeKind::kList || !args[0].elem) {
            return Mismatch(e, "min/max of a non-list");
          }
          xs = {*args[0].elem};
        }
        if (xs.empty()) return Mismatch(e, "min/max of nothing");
        bool real = false;
        for (const Type& t : xs) {
          if (!Numeric(t)) return Mismatch(e, "min/max of non-numbers");
          real = real || t.kind == TypeKind::kReal;
        }
        if (real) return Type::Real();
        const bool is_min = static_cast<Builtin>(e->index) == Builtin::kMin;
        Type out = xs[0];
        for (const Type& t : xs) {
          out = is_min ? Type::Int(std::min(out.lo, t.lo), std::min(out.hi, t.hi))
                       : Type::Int(std::max(out.lo, t.lo), std::max(out.hi, t.hi));
        }
        return out;
      }
      case Builtin::kLen:
        DPC_RETURN_IF_ERROR(need(1));
        if (args[0].kind != TypeKind::kList) return Mismatch(e, "len of a non-list");
        return Type::Int(args[0].exact_len ? args[0].max_len : 0, args[0].max_len);
      case Builtin::kSum: {
        DPC_RETURN_IF_ERROR(need(1));
        if (args[0].kind != TypeKind::kList) return Mismatch(e, "sum of a non-list");
        if (!args[0].elem) return Type::Int(0, 0);
        const Type& el = *args[0].elem;
        if (el.kind == TypeKind::kReal) return el;
        if (el.kind != TypeKind::kInt) return Mismatch(e, "sum of non-numbers");
        const __int128 n = args[0].max_len;
        const __int128 lo_n = args[0].exact_len ? n : 0;
        return IntT(std::min(el.lo * n, el.lo * lo_n), std::max(el.hi * n, el.hi * lo_n));
      }
      case Builtin::kExp: case Builtin::kLn: case Builtin::kSqrt:
        DPC_RETURN_IF_ERROR(need(1));
        if (!Numeric(args[0])) return Mismatch(e, "expected a number");
        return Type::Real();
      case Builtin::kFloor: case Builtin::kCeil:
        DPC_RETURN_IF_ERROR(need(1));
        if (!Numeric(args[0])) return Mismatch(e, "expected a number");
        if (args[0].kind == TypeKind::kInt) return args[0];
        return Type::Int(-kBig, kBig);
      case Builtin::kEvalQ: {
        DPC_RETURN_IF_ERROR(need(2));
        if (args[0].kind != TypeKind::kQuery) return Mismatch(e, "evalQ expects a query");
        if (p_.queries.empty()) return Mismatch(e, "no queries declared");
        std::vector<Type> saved = std::move(env_);
        Type out;
        bool first = true;
        for (const QueryDecl& q : p_.queries) {
          env_ = {args[1]};
          absl::StatusOr<Type> t = Of(q.body);
          if (!t.ok()) {
            env_ = std::move(saved);
            return t.status();
          }
          if (!first && !SameShape(out, *t)) {
            env_ = std::move(saved);
            return Mismatch(e, "queries of different types");
          }
          out = first ? *t : Join(out, *t);
          first = false;
        }
        env_ = std::move(saved);
        return out;
      }
      case Builtin::kAdj:
        DPC_RETURN_IF_ERROR(need(2));
        if (args[0].kind != TypeKind::kList || args[1].kind != TypeKind::kList) {
          return Mismatch(e, "adj expects lists");
        }
        return Type::Bool();
      case Builtin::kHead:
        DPC_RETURN_IF_ERROR(need(1));
        if (args[0].kind != TypeKind::kList || !args[0].elem) {
          return Mismatch(e, "head of a non-list");
        }
        return *args[0].elem;
      case Builtin::kTail:
        DPC_RETURN_IF_ERROR(need(1));
        if (args[0].kind != TypeKind::kList) return Mismatch(e, "tail of a non-list");
        return Type::List(args[0].elem ? *args[0].elem : Type::Int(0, 0),
                          std::max<int64_t>(args[0].max_len - 1, 0), args[0].exact_len);
    }
    return Mismatch(e, "unknown function");
  }

  const Program& p_;
  std::vector<Type> env_;
  int depth_ = 0;
};

// Whether every value of `have` fits `want`.
bool Fits(const Type& have, const Type& want) {
  switch (want.kind) {
    case TypeKind::kInt:
      return have.kind == TypeKind::kInt && have.lo >= want.lo && have.hi <= want.hi;
    case TypeKind::kList: {
      if (have.kind != TypeKind::kList) return false;
      if (have.max_len > want.max_len) return false;
      if (want.exact_len && !(have.exact_len && have.max_len == want.max_len)) {
        return false;
      }
      return !have.elem || Fits(*have.elem, *want.elem);
    }
    default:
      return SameShape(have, want);
  }
}

class CommandChecker {
 public:
  CommandChecker(const Program& p, bool strict) : p_(p), strict_(strict) {}

  absl::Status Check(const CmdPtr& c) {
    Typer typer(p_);
    auto where = [&c]() { return absl::StrCat("line ", c->line, ", col ", c->col, ": "); };
    switch (c->kind) {
      case CmdKind::kSkip:
        return absl::OkStatus();
      case CmdKind::kSeq:
        for (const CmdPtr& x : c->body) DPC_RETURN_IF_ERROR(Check(x));
        return absl::OkStatus();
      case CmdKind::kAssign: {
        DPC_ASSIGN_OR_RETURN(Type t, typer.Of(c->e));
        return Store(c, c->target_slots[0], t, ToString(c->e));
      }
      case CmdKind::kSample: {
        DPC_ASSIGN_OR_RETURN(Type t, typer.Of(c->e));
        if (t.kind != TypeKind::kInt) {
          return MakeError(ErrorKind::kTypeError,
                           absl::StrCat(where(), "Laplace mean must be an integer"));
        }
        if (p_.vars[c->target_slots[0]].type.kind != TypeKind::kInt) {
          return MakeError(ErrorKind::kTypeError,
                           absl::StrCat(where(), "Laplace samples need an int variable"));
        }
        return absl::OkStatus();
      }
      case CmdKind::kIf:
      case CmdKind::kWhile: {
        DPC_ASSIGN_OR_RETURN(Type g, typer.Of(c->e));
        if (g.kind != TypeKind::kBool) {
          return MakeError(ErrorKind::kTypeError,
                           absl::StrCat(where(), "guard must be boolean"));
        }
        for (const CmdPtr& x : c->body) DPC_RETURN_IF_ERROR(Check(x));
        return absl::OkStatus();
      }
      case CmdKind::kAdvCall:
        for (const ExprPtr& a : c->args) DPC_RETURN_IF_ERROR(typer.Of(a).status());
        return absl::OkStatus();
      case CmdKind::kCall: {
        const OracleDecl* o = p_.Oracle(c->callee);
        for (size_t i = 0; i < c->args.size(); ++i) {
          DPC_ASSIGN_OR_RETURN(Type t, typer.Of(c->args[i]));
          DPC_RETURN_IF_ERROR(Store(c, p_.Slot(o->params[i]), t, ToString(c->args[i])));
        }
        return Store(c, c->target_slots[0], p_.Var(o->result)->type, o->result);
      }
    }
    return absl::OkStatus();
  }

  TypeReport report;

 private:
  absl::Status Store(const CmdPtr& c, int slot, const Type& t, const std::string& text) {
    const VarDecl& v = p_.vars[slot];
    if (!SameShape(t, v.type)) {
      return MakeError(ErrorKind::kTypeError,
                       absl::StrCat("line ", c->line, ", col ", c->col, ": cannot store ",
                                    t.ToString(), " in ", v.name, " : ",
                                    v.type.ToString()));
    }
    if (!Fits(t, v.type)) {
      DomainRisk r{v.name, text, t.ToString(), v.type.ToString(), c->line, c->col};
      if (strict_) {
        return MakeError(ErrorKind::kDomainOverflowRisk,
                         absl::StrCat("line ", c->line, ", col ", c->col, ": ", text,
                                      " has range ", r.inferred, " outside ",
                                      v.name, " : ", r.declared));
      }
      report.risks.push_back(std::move(r));
    }
    return absl::OkStatus();
  }

  const Program& p_;
  bool strict_;
};

}  // namespace

absl::StatusOr<TypeReport> Typecheck(const Program& p, bool strict) {
  CommandChecker checker(p, strict);
  for (const OracleDecl& o : p.oracles) DPC_RETURN_IF_ERROR(checker.Check(o.body));
  DPC_RETURN_IF_ERROR(checker.Check(p.body));
  return checker.report;
}

absl::StatusOr<Type> TypeOf(const ExprPtr& e, const Program& p) {
  Typer typer(p);
  return typer.Of(e);
}

absl::Status CheckAssertionType(const ExprPtr& e, const Program& p) {
  DPC_ASSIGN_OR_RETURN(Type t, TypeOf(e, p));
  if (t.kind != TypeKind::kBool) {
    return MakeError(ErrorKind::kTypeError,
                     absl::StrCat("assertion is not boolean: ", ToString(e)));
  }
  return absl::OkStatus();
}

}  // namespace dpcouple
