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

#include "dpcouple/eval.h"

#include <cmath>
#include <map>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "dpcouple/status.h"

namespace dpcouple {
namespace {

struct Ctx {
  const Program& p;
  const Memory* m1;
  const Memory* m2;
  std::vector<Value> env;
  int depth = 0;
};

absl::Status TypeErr(const ExprPtr& e, absl::string_view what) {
  return MakeError(ErrorKind::kTypeError,
                   absl::StrCat(what, " in ", ToString(e)));
}

absl::StatusOr<Value> Ev(const ExprPtr& e, Ctx& c);

absl::StatusOr<bool> EvB(const ExprPtr& e, Ctx& c) {
  DPC_ASSIGN_OR_RETURN(Value v, Ev(e, c));
  if (!v.is_bool()) return TypeErr(e, "expected a boolean");
  return v.as_bool();
}

absl::StatusOr<Value> Arith(const ExprPtr& e, Op op, const Value& a,
                            const Value& b) {
  if (!a.is_numeric() || !b.is_numeric()) {
    return TypeErr(e, "arithmetic on non-numbers");
  }
  if (op == Op::kDiv) {
    if (b.as_real() == 0.0) {
      return MakeError(ErrorKind::kInvalidArgument,
                       absl::StrCat("division by zero in ", ToString(e)));
    }
    return Value::Real(a.as_real() / b.as_real());
  }
  if (a.is_int() && b.is_int()) {
    const int64_t x = a.as_int(), y = b.as_int();
    switch (op) {
      case Op::kAdd: return Value::Int(x + y);
      case Op::kSub: return Value::Int(x - y);
      case Op::kMul: return Value::Int(x * y);
      case Op::kMod: {
        if (y == 0) {
          return MakeError(ErrorKind::kInvalidArgument,
                           absl::StrCat("modulo by zero in ", ToString(e)));
        }
        int64_t r = x % y;
        if (r != 0 && ((r < 0) != (y < 0))) r += y;
        return Value::Int(r);
      }
      default: break;
    }
  }
  const double x = a.as_real(), y = b.as_real();
  switch (op) {
    case Op::kAdd: return Value::Real(x + y);
    case Op::kSub: return Value::Real(x - y);
    case Op::kMul: return Value::Real(x * y);
    case Op::kMod: return TypeErr(e, "modulo on reals");
    default: break;
  }
  return TypeErr(e, "bad arithmetic operator");
}

absl::StatusOr<bool> CompareValues(const ExprPtr& e, Op op, const Value& a,
                                   const Value& b) {
  int cmp;
  if (a.is_numeric() && b.is_numeric()) {
    if (a.is_int() && b.is_int()) {
      cmp = a.as_int() < b.as_int() ? -1 : (a.as_int() > b.as_int() ? 1 : 0);
    } else {
      const double x = a.as_real(), y = b.as_real();
      cmp = x < y ? -1 : (x > y ? 1 : 0);
    }
  } else {
    if (a.kind() != b.kind()) return TypeErr(e, "comparing different types");
    if (op != Op::kEq && op != Op::kNe && !a.is_int()) {
      return TypeErr(e, "ordering on non-numbers");
    }
    cmp = Compare(a, b);
  }
  switch (op) {
    case Op::kEq: return cmp == 0;
    case Op::kNe: return cmp != 0;
    case Op::kLt: return cmp < 0;
    case Op::kLe: return cmp <= 0;
    case Op::kGt: return cmp > 0;
    case Op::kGe: return cmp >= 0;
    default: return TypeErr(e, "bad comparison");
  }
}

absl::StatusOr<Value> Call(const ExprPtr& e, Ctx& c) {
  std::vector<Value> args;
  args.reserve(e->args.size());
  for (const ExprPtr& a : e->args) {
    DPC_ASSIGN_OR_RETURN(Value v, Ev(a, c));
    args.push_back(std::move(v));
  }
  auto need = [&](size_t n) -> absl::Status {
    if (args.size() != n) {
      return TypeErr(e, absl::StrCat("expected ", n, " arguments"));
    }
    return absl::OkStatus();
  };
  auto num = [&](size_t i) -> absl::Status {
    if (!args[i].is_numeric()) return TypeErr(e, "expected a number");
    return absl::OkStatus();
  };
  auto list = [&](size_t i) -> absl::Status {
    if (!args[i].is_list()) return TypeErr(e, "expected a list");
    return absl::OkStatus();
  };
  switch (static_cast<Builtin>(e->index)) {
    case Builtin::kUser: {
      const FunDecl& f = c.p.funs[e->slot];
      DPC_RETURN_IF_ERROR(need(f.params.size()));
      if (++c.depth > 64) {
        return MakeError(ErrorKind::kInvalidArgument,
                         absl::StrCat("recursion too deep in ", f.name));
      }
      Ctx inner{c.p, nullptr, nullptr, std::move(args), c.depth};
      absl::StatusOr<Value> out = Ev(f.body, inner);
      --c.depth;
      return out;
    }
    case Builtin::kAbs:
      DPC_RETURN_IF_ERROR(need(1));
      DPC_RETURN_IF_ERROR(num(0));
      if (args[0].is_int()) return Value::Int(std::llabs(args[0].as_int()));
      return Value::Real(std::fabs(args[0].as_real()));
    case Builtin::kMin:
    case Builtin::kMax: {
      const bool is_min = static_cast<Builtin>(e->index) == Builtin::kMin;
      std::vector<Value> xs = args;
      if (args.size() == 1) {
        DPC_RETURN_IF_ERROR(list(0));
        xs = args[0].as_list();
      }
      if (xs.empty()) return TypeErr(e, "min/max of nothing");
      Value best = xs[0];
      for (const Value& x : xs) {
        if (!x.is_numeric()) return TypeErr(e, "expected numbers");
        const bool better =
            is_min ? x.as_real() < best.as_real() : x.as_real() > best.as_real();
        if (better) best = x;
      }
      return best;
    }
    case Builtin::kLen:
      DPC_RETURN_IF_ERROR(need(1));
      DPC_RETURN_IF_ERROR(list(0));
      return Value::Int(static_cast<int64_t>(args[0].as_list().size()));
    case Builtin::kSum: {
      DPC_RETURN_IF_ERROR(need(1));
      DPC_RETURN_IF_ERROR(list(0));
      bool all_int = true;
      int64_t si = 0;
      double sr = 0.0;
      for (const Value& x : args[0].as_list()) {
        if (!x.is_numeric()) return TypeErr(e, "sum of non-numbers");
        all_int = all_int && x.is_int();
        si += x.is_int() ? x.as_int() : 0;
        sr += x.as_real();
      }
      return all_int ? Value::Int(si) : Value::Real(sr);
    }
    case Builtin::kExp:
    case Builtin::kLn:
    case Builtin::kSqrt: {
      DPC_RETURN_IF_ERROR(need(1));
      DPC_RETURN_IF_ERROR(num(0));
      const double x = args[0].as_real();
      const Builtin b = static_cast<Builtin>(e->index);
      if (b == Builtin::kExp) return Value::Real(std::exp(x));
      if (x < 0.0 || (b == Builtin::kLn && x == 0.0)) {
        return MakeError(ErrorKind::kInvalidArgument,
                         absl::StrCat("argument out of range in ", ToString(e)));
      }
      return Value::Real(b == Builtin::kLn ? std::log(x) : std::sqrt(x));
    }
    case Builtin::kFloor:
    case Builtin::kCeil: {
      DPC_RETURN_IF_ERROR(need(1));
      DPC_RETURN_IF_ERROR(num(0));
      const double x = args[0].as_real();
      const double r = static_cast<Builtin>(e->index) == Builtin::kFloor
                           ? std::floor(x)
                           : std::ceil(x);
      return Value::Int(static_cast<int64_t>(r));
    }
    case Builtin::kEvalQ: {
      DPC_RETURN_IF_ERROR(need(2));
      if (!args[0].is_query()) return TypeErr(e, "evalQ expects a query");
      const int64_t q = args[0].as_query();
      if (q < 0 || q >= static_cast<int64_t>(c.p.queries.size())) {
        return MakeError(ErrorKind::kDomainEscape,
                         absl::StrCat("unknown query #", q));
      }
      Ctx inner{c.p, nullptr, nullptr, {args[1]}, c.depth};
      return Ev(c.p.queries[q].body, inner);
    }
    case Builtin::kAdj:
      DPC_RETURN_IF_ERROR(need(2));
      DPC_RETURN_IF_ERROR(list(0));
      DPC_RETURN_IF_ERROR(list(1));
      return Value::Bool(Adjacent(args[0], args[1]));
    case Builtin::kHead:
    case Builtin::kTail: {
      DPC_RETURN_IF_ERROR(need(1));
      DPC_RETURN_IF_ERROR(list(0));
      const auto& l = args[0].as_list();
      if (l.empty()) {
        return MakeError(ErrorKind::kDomainEscape,
                         absl::StrCat("empty list in ", ToString(e)));
      }
      if (static_cast<Builtin>(e->index) == Builtin::kHead) return l[0];
      return Value::List(std::vector<Value>(l.begin() + 1, l.end()));
    }
  }
  return TypeErr(e, "unknown function");
}

absl::StatusOr<Value> Ev(const ExprPtr& e, Ctx& c) {
  switch (e->kind) {
    case ExprKind::kLit:
      return e->lit;
    case ExprKind::kVar: {
      const Memory* m = e->tag == 2 ? c.m2 : c.m1;
      if (e->slot < 0 || m == nullptr ||
          e->slot >= static_cast<int>(m->size())) {
        return MakeError(ErrorKind::kUnboundVariable,
                         absl::StrCat("variable ", ToString(e)));
      }
      return (*m)[e->slot];
    }
    case ExprKind::kLocal: {
      if (e->index >= static_cast<int>(c.env.size())) {
        return MakeError(ErrorKind::kUnboundVariable,
                         absl::StrCat("bound variable ", e->name));
      }
      return c.env[c.env.size() - 1 - e->index];
    }
    case ExprKind::kUnary: {
      DPC_ASSIGN_OR_RETURN(Value a, Ev(e->args[0], c));
      if (e->op == Op::kNot) {
        if (!a.is_bool()) return TypeErr(e, "negating a non-boolean");
        return Value::Bool(!a.as_bool());
      }
      if (a.is_int()) return Value::Int(-a.as_int());
      if (a.is_real()) return Value::Real(-a.as_real());
      return TypeErr(e, "negating a non-number");
    }
    case ExprKind::kBinary: {
      switch (e->op) {
        case Op::kAnd: {
          DPC_ASSIGN_OR_RETURN(bool a, EvB(e->args[0], c));
          if (!a) return Value::Bool(false);
          DPC_ASSIGN_OR_RETURN(bool b, EvB(e->args[1], c));
          return Value::Bool(b);
        }
        case Op::kOr: {
          DPC_ASSIGN_OR_RETURN(bool a, EvB(e->args[0], c));
          if (a) return Value::Bool(true);
          DPC_ASSIGN_OR_RETURN(bool b, EvB(e->args[1], c));
          return Value::Bool(b);
        }
        case Op::kImplies: {
          DPC_ASSIGN_OR_RETURN(bool a, EvB(e->args[0], c));
          if (!a) return Value::Bool(true);
          DPC_ASSIGN_OR_RETURN(bool b, EvB(e->args[1], c));
          return Value::Bool(b);
        }
        case Op::kIff: {
          DPC_ASSIGN_OR_RETURN(bool a, EvB(e->args[0], c));
          DPC_ASSIGN_OR_RETURN(bool b, EvB(e->args[1], c));
          return Value::Bool(a == b);
        }
        default:
          break;
      }
      DPC_ASSIGN_OR_RETURN(Value a, Ev(e->args[0], c));
      DPC_ASSIGN_OR_RETURN(Value b, Ev(e->args[1], c));
      switch (e->op) {
        case Op::kEq: case Op::kNe: case Op::kLt:
        case Op::kLe: case Op::kGt: case Op::kGe: {
          DPC_ASSIGN_OR_RETURN(bool r, CompareValues(e, e->op, a, b));
          return Value::Bool(r);
        }
        case Op::kCons: {
          if (!b.is_list()) return TypeErr(e, "cons onto a non-list");
          std::vector<Value> l;
          l.reserve(b.as_list().size() + 1);
          l.push_back(std::move(a));
          l.insert(l.end(), b.as_list().begin(), b.as_list().end());
          return Value::List(std::move(l));
        }
        default:
          return Arith(e, e->op, a, b);
      }
    }
    case ExprKind::kCond: {
      DPC_ASSIGN_OR_RETURN(bool g, EvB(e->args[0], c));
      return Ev(e->args[g ? 1 : 2], c);
    }
    case ExprKind::kCall:
      return Call(e, c);
    case ExprKind::kList: {
      std::vector<Value> l;
      for (const ExprPtr& a : e->args) {
        DPC_ASSIGN_OR_RETURN(Value v, Ev(a, c));
        l.push_back(std::move(v));
      }
      return Value::List(std::move(l));
    }
    case ExprKind::kIndex: {
      DPC_ASSIGN_OR_RETURN(Value l, Ev(e->args[0], c));
      DPC_ASSIGN_OR_RETURN(Value i, Ev(e->args[1], c));
      if (!l.is_list() || !i.is_int()) return TypeErr(e, "bad indexing");
      if (i.as_int() < 0 ||
          i.as_int() >= static_cast<int64_t>(l.as_list().size())) {
        return MakeError(ErrorKind::kDomainEscape,
                         absl::StrCat("index ", i.as_int(), " out of range in ",
                                      ToString(e)));
      }
      return l.as_list()[i.as_int()];
    }
    case ExprKind::kQuant: {
      DPC_ASSIGN_OR_RETURN(Value lo, Ev(e->args[0], c));
      DPC_ASSIGN_OR_RETURN(Value hi, Ev(e->args[1], c));
      if (!lo.is_int() || !hi.is_int()) {
        return TypeErr(e, "quantifier bounds must be integers");
      }
      for (int64_t k = lo.as_int(); k <= hi.as_int(); ++k) {
        c.env.push_back(Value::Int(k));
        absl::StatusOr<bool> b = EvB(e->args[2], c);
        c.env.pop_back();
        if (!b.ok()) return b.status();
        if (*b != e->forall) return Value::Bool(*b);
      }
      return Value::Bool(e->forall);
    }
  }
  return TypeErr(e, "unknown expression");
}

}  // namespace

bool LookupBuiltin(const std::string& name, Builtin* out) {
  static const std::map<std::string, Builtin> kTable = {
      {"abs", Builtin::kAbs},     {"min", Builtin::kMin},
      {"max", Builtin::kMax},     {"len", Builtin::kLen},
      {"sum", Builtin::kSum},     {"exp", Builtin::kExp},
      {"ln", Builtin::kLn},       {"log", Builtin::kLn},
      {"sqrt", Builtin::kSqrt},   {"floor", Builtin::kFloor},
      {"ceil", Builtin::kCeil},   {"evalQ", Builtin::kEvalQ},
      {"adj", Builtin::kAdj},     {"head", Builtin::kHead},
      {"tail", Builtin::kTail},
  };
  auto it = kTable.find(name);
  if (it == kTable.end()) return false;
  *out = it->second;
  return true;
}

absl::StatusOr<Value> Eval(const ExprPtr& e, const Program& p,
                           const Memory* m1, const Memory* m2) {
  Ctx c{p, m1, m2, {}, 0};
  return Ev(e, c);
}

absl::StatusOr<bool> EvalBool(const ExprPtr& e, const Program& p,
                              const Memory* m1, const Memory* m2) {
  Ctx c{p, m1, m2, {}, 0};
  return EvB(e, c);
}

absl::StatusOr<Value> EvalConst(const ExprPtr& e, const Program& p) {
  Ctx c{p, nullptr, nullptr, {}, 0};
  return Ev(e, c);
}

bool Adjacent(const Value& d1, const Value& d2) {
  if (!d1.is_list() || !d2.is_list()) return false;
  const auto& a = d1.as_list();
  const auto& b = d2.as_list();
  if (a.size() != b.size()) return false;
  int differing = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) continue;
    if (!a[i].is_int() || !b[i].is_int() ||
        std::llabs(a[i].as_int() - b[i].as_int()) > 1) {
      return false;
    }
    ++differing;
  }
  return differing == 1;
}

std::string MemoryToString(const Program& p, const Memory& m) {
  std::vector<std::string> parts;
  for (size_t i = 0; i < m.size() && i < p.vars.size(); ++i) {
    parts.push_back(absl::StrCat(p.vars[i].name, "=", m[i].ToString()));
  }
  return absl::StrCat("{", absl::StrJoin(parts, ", "), "}");
}

}  // namespace dpcouple
