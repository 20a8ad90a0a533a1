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

#include "dpcouple/ast.h"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <set>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"

namespace dpcouple {
namespace {

constexpr uint64_t kSaturated = UINT64_MAX / 2;

uint64_t SatMul(uint64_t a, uint64_t b) {
  if (a == 0 || b == 0) return 0;
  if (a > kSaturated / b) return kSaturated;
  return a * b;
}

uint64_t SatAdd(uint64_t a, uint64_t b) {
  return std::min<uint64_t>(kSaturated, a + b);
}

std::string LitToString(const Value& v) {
  switch (v.kind()) {
    case Value::Kind::kReal: {
      std::string s = v.ToString();
      if (s.find_first_of(".eEni") == std::string::npos) s += ".0";
      return s;
    }
    case Value::Kind::kList: {
      std::vector<std::string> parts;
      for (const Value& x : v.as_list()) parts.push_back(LitToString(x));
      return absl::StrCat("[", absl::StrJoin(parts, ", "), "]");
    }
    default:
      return v.ToString();
  }
}

}  // namespace

Type Type::Bool() {
  Type t;
  t.kind = TypeKind::kBool;
  t.lo = 0;
  t.hi = 1;
  return t;
}

Type Type::Int(int64_t lo, int64_t hi) {
  Type t;
  t.kind = TypeKind::kInt;
  t.lo = lo;
  t.hi = hi;
  return t;
}

Type Type::Real() {
  Type t;
  t.kind = TypeKind::kReal;
  return t;
}

Type Type::List(Type elem, int64_t max_len, bool exact) {
  Type t;
  t.kind = TypeKind::kList;
  t.elem = std::make_shared<const Type>(std::move(elem));
  t.max_len = max_len;
  t.exact_len = exact;
  return t;
}

Type Type::Query(int64_t n) {
  Type t;
  t.kind = TypeKind::kQuery;
  t.queries = n;
  return t;
}

uint64_t Type::DomainSize() const {
  switch (kind) {
    case TypeKind::kBool:
      return 2;
    case TypeKind::kInt:
      return hi < lo ? 0 : static_cast<uint64_t>(hi - lo) + 1;
    case TypeKind::kReal:
      return kSaturated;
    case TypeKind::kQuery:
      return static_cast<uint64_t>(std::max<int64_t>(queries, 0));
    case TypeKind::kList: {
      const uint64_t e = elem->DomainSize();
      uint64_t total = 0, power = 1;
      for (int64_t n = 0; n <= max_len; ++n) {
        if (!exact_len || n == max_len) total = SatAdd(total, power);
        power = SatMul(power, e);
      }
      return total;
    }
  }
  return 0;
}

std::vector<Value> Type::Enumerate() const {
  std::vector<Value> out;
  switch (kind) {
    case TypeKind::kBool:
      out = {Value::Bool(false), Value::Bool(true)};
      break;
    case TypeKind::kInt:
      for (int64_t i = lo; i <= hi; ++i) out.push_back(Value::Int(i));
      break;
    case TypeKind::kQuery:
      for (int64_t i = 0; i < queries; ++i) out.push_back(Value::Query(i));
      break;
    case TypeKind::kReal:
      break;
    case TypeKind::kList: {
      const std::vector<Value> elems = elem->Enumerate();
      std::vector<std::vector<Value>> level = {{}};
      for (int64_t n = 0; n <= max_len; ++n) {
        if (!exact_len || n == max_len) {
          for (const auto& l : level) out.push_back(Value::List(l));
        }
        if (n == max_len) break;
        std::vector<std::vector<Value>> next;
        for (const auto& l : level) {
          for (const Value& v : elems) {
            next.push_back(l);
            next.back().push_back(v);
          }
        }
        level = std::move(next);
      }
      break;
    }
  }
  return out;
}

bool Type::Contains(const Value& v) const {
  switch (kind) {
    case TypeKind::kBool:
      return v.is_bool();
    case TypeKind::kInt:
      return v.is_int() && v.as_int() >= lo && v.as_int() <= hi;
    case TypeKind::kReal:
      return v.is_numeric();
    case TypeKind::kQuery:
      return v.is_query() && v.as_query() >= 0 && v.as_query() < queries;
    case TypeKind::kList: {
      if (!v.is_list()) return false;
      const int64_t n = static_cast<int64_t>(v.as_list().size());
      if (n > max_len || (exact_len && n != max_len)) return false;
      for (const Value& x : v.as_list()) {
        if (!elem->Contains(x)) return false;
      }
      return true;
    }
  }
  return false;
}

std::string Type::ToString() const {
  switch (kind) {
    case TypeKind::kBool:
      return "bool";
    case TypeKind::kInt:
      return absl::StrCat("int[", lo, ",", hi, "]");
    case TypeKind::kReal:
      return "real";
    case TypeKind::kQuery:
      return "query";
    case TypeKind::kList:
      return absl::StrCat("list<", elem->ToString(), ">[",
                          exact_len ? "len " : "max ", max_len, "]");
  }
  return "?";
}

bool SameShape(const Type& a, const Type& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == TypeKind::kList) {
    if (!a.elem || !b.elem) return true;  // empty list literal
    return SameShape(*a.elem, *b.elem);
  }
  return true;
}

const char* OpSymbol(Op op) {
  switch (op) {
    case Op::kNot: return "!";
    case Op::kNeg: return "-";
    case Op::kAnd: return "&&";
    case Op::kOr: return "||";
    case Op::kImplies: return "->";
    case Op::kIff: return "<->";
    case Op::kEq: return "==";
    case Op::kNe: return "!=";
    case Op::kLt: return "<";
    case Op::kLe: return "<=";
    case Op::kGt: return ">";
    case Op::kGe: return ">=";
    case Op::kAdd: return "+";
    case Op::kSub: return "-";
    case Op::kMul: return "*";
    case Op::kDiv: return "/";
    case Op::kMod: return "%";
    case Op::kCons: return "::";
  }
  return "?";
}

ExprPtr MakeLit(Value v) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::kLit;
  e->lit = std::move(v);
  return e;
}

ExprPtr MakeVar(std::string name, int tag, int slot) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::kVar;
  e->name = std::move(name);
  e->tag = tag;
  e->slot = slot;
  return e;
}

ExprPtr MakeUnary(Op op, ExprPtr a) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::kUnary;
  e->op = op;
  e->args = {std::move(a)};
  return e;
}

ExprPtr MakeBinary(Op op, ExprPtr a, ExprPtr b) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::kBinary;
  e->op = op;
  e->args = {std::move(a), std::move(b)};
  return e;
}

ExprPtr MakeCond(ExprPtr c, ExprPtr a, ExprPtr b) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::kCond;
  e->args = {std::move(c), std::move(a), std::move(b)};
  return e;
}

ExprPtr MakeCall(std::string name, std::vector<ExprPtr> args) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::kCall;
  e->name = std::move(name);
  e->args = std::move(args);
  return e;
}

ExprPtr True() {
  static const ExprPtr t = MakeLit(Value::Bool(true));
  return t;
}

ExprPtr False() {
  static const ExprPtr f = MakeLit(Value::Bool(false));
  return f;
}

ExprPtr MakeAnd(const std::vector<ExprPtr>& conjuncts) {
  ExprPtr out;
  for (const ExprPtr& c : conjuncts) {
    out = out ? MakeBinary(Op::kAnd, out, c) : c;
  }
  return out ? out : True();
}

std::string ToString(const ExprPtr& e) {
  if (!e) return "<null>";
  switch (e->kind) {
    case ExprKind::kLit:
      return LitToString(e->lit);
    case ExprKind::kVar:
      return e->tag == 0 ? e->name : absl::StrCat(e->name, "<", e->tag, ">");
    case ExprKind::kLocal:
      return e->name;
    case ExprKind::kUnary:
      return absl::StrCat("(", OpSymbol(e->op), ToString(e->args[0]), ")");
    case ExprKind::kBinary:
      return absl::StrCat("(", ToString(e->args[0]), " ", OpSymbol(e->op), " ",
                          ToString(e->args[1]), ")");
    case ExprKind::kCond:
      return absl::StrCat("(", ToString(e->args[0]), " ? ",
                          ToString(e->args[1]), " : ", ToString(e->args[2]),
                          ")");
    case ExprKind::kCall:
    case ExprKind::kList: {
      std::vector<std::string> parts;
      for (const ExprPtr& a : e->args) parts.push_back(ToString(a));
      if (e->kind == ExprKind::kList) {
        return absl::StrCat("[", absl::StrJoin(parts, ", "), "]");
      }
      return absl::StrCat(e->name, "(", absl::StrJoin(parts, ", "), ")");
    }
    case ExprKind::kIndex:
      return absl::StrCat(ToString(e->args[0]), "[", ToString(e->args[1]), "]");
    case ExprKind::kQuant:
      return absl::StrCat("(", e->forall ? "forall " : "exists ", e->name,
                          " in [", ToString(e->args[0]), ", ",
                          ToString(e->args[1]), "] : ", ToString(e->args[2]),
                          ")");
  }
  return "?";
}

std::vector<ExprPtr> Conjuncts(const ExprPtr& e) {
  std::vector<ExprPtr> out;
  std::function<void(const ExprPtr&)> walk = [&](const ExprPtr& x) {
    if (x->kind == ExprKind::kBinary && x->op == Op::kAnd) {
      walk(x->args[0]);
      walk(x->args[1]);
    } else if (!(x->kind == ExprKind::kLit && x->lit.is_bool() &&
                 x->lit.as_bool())) {
      out.push_back(x);
    }
  };
  walk(e);
  return out;
}

CmdPtr MakeSkip() {
  static const CmdPtr skip = std::make_shared<Command>();
  return skip;
}

CmdPtr MakeSeq(std::vector<CmdPtr> cmds) {
  auto c = std::make_shared<Command>();
  c->kind = CmdKind::kSeq;
  c->body = std::move(cmds);
  return c;
}

std::vector<CmdPtr> FlatList(const CmdPtr& c) {
  std::vector<CmdPtr> out;
  std::function<void(const CmdPtr&)> walk = [&](const CmdPtr& x) {
    if (x->kind == CmdKind::kSeq) {
      for (const CmdPtr& y : x->body) walk(y);
    } else if (x->kind != CmdKind::kSkip) {
      out.push_back(x);
    }
  };
  walk(c);
  return out;
}

CmdPtr Flatten(const CmdPtr& c) {
  std::vector<CmdPtr> list = FlatList(c);
  if (list.empty()) return MakeSkip();
  if (list.size() == 1) return list[0];
  return MakeSeq(std::move(list));
}

std::string ToString(const CmdPtr& c, int indent) {
  const std::string pad(indent * 2, ' ');
  auto args = [](const std::vector<ExprPtr>& xs) {
    std::vector<std::string> parts;
    for (const ExprPtr& a : xs) parts.push_back(ToString(a));
    return absl::StrJoin(parts, ", ");
  };
  switch (c->kind) {
    case CmdKind::kSkip:
      return pad + "skip;\n";
    case CmdKind::kSeq: {
      std::string out;
      for (const CmdPtr& x : c->body) out += ToString(x, indent);
      return out.empty() ? pad + "skip;\n" : out;
    }
    case CmdKind::kAssign:
      return absl::StrCat(pad, c->targets[0], " := ", ToString(c->e), ";\n");
    case CmdKind::kSample:
      return absl::StrCat(pad, c->targets[0], " <-$ lap(", ToString(c->eps),
                          ", ", ToString(c->e), ");\n");
    case CmdKind::kIf:
      return absl::StrCat(pad, "if ", ToString(c->e), " then {\n",
                          ToString(c->body[0], indent + 1), pad, "} else {\n",
                          ToString(c->body[1], indent + 1), pad, "}\n");
    case CmdKind::kWhile:
      return absl::StrCat(pad, "while ", ToString(c->e), " cap ", c->cap,
                          " {\n", ToString(c->body[0], indent + 1), pad,
                          "}\n");
    case CmdKind::kAdvCall:
      return absl::StrCat(pad, absl::StrJoin(c->targets, ", "), " <- adv ",
                          c->callee, "(", args(c->args), ");\n");
    case CmdKind::kCall:
      return absl::StrCat(pad, c->targets[0], " <- call ", c->callee, "(",
                          args(c->args), ");\n");
  }
  return "?";
}

namespace {

// Canonical text with nested blocks flattened as well.
std::string CanonicalText(const CmdPtr& c) {
  std::string out;
  for (const CmdPtr& x : FlatList(c)) {
    if (x->kind == CmdKind::kIf) {
      absl::StrAppend(&out, "if ", ToString(x->e), " {", CanonicalText(x->body[0]),
                      "} {", CanonicalText(x->body[1]), "}");
    } else if (x->kind == CmdKind::kWhile) {
      absl::StrAppend(&out, "while ", ToString(x->e), " cap ", x->cap, " {",
                      CanonicalText(x->body[0]), "}");
    } else if (x->kind == CmdKind::kSample) {
      // Noise parameters compare by value: `lap(eps, e)` and `lap(1.0, e)`
      // are the same command when eps = 1.
      absl::StrAppend(&out, x->targets[0], " <-$ lap(",
                      absl::StrFormat("%.17g", x->eps_value), ", ",
                      ToString(x->e), ");");
    } else {
      absl::StrAppend(&out, ToString(x, 0));
    }
  }
  return out;
}

}  // namespace

bool SameCommand(const CmdPtr& a, const CmdPtr& b) {
  return CanonicalText(a) == CanonicalText(b);
}

std::vector<std::string> ModifiedVars(const CmdPtr& c, const Program* program) {
  std::set<std::string> out;
  std::set<std::string> visited_oracles;
  std::function<void(const CmdPtr&)> walk;
  auto oracle = [&](const std::string& name) {
    if (!program || !visited_oracles.insert(name).second) return;
    const OracleDecl* o = program->Oracle(name);
    if (!o) return;
    for (const std::string& p : o->params) out.insert(p);
    out.insert(o->result);
    walk(o->body);
  };
  walk = [&](const CmdPtr& x) {
    for (const std::string& t : x->targets) out.insert(t);
    for (const CmdPtr& b : x->body) walk(b);
    if (x->kind == CmdKind::kAdvCall) {
      out.insert(x->callee);
      if (program) {
        if (const AdversaryDecl* a = program->Adversary(x->callee)) {
          for (const auto& [o, cap] : a->oracle_caps) oracle(o);
        }
      }
    } else if (x->kind == CmdKind::kCall) {
      oracle(x->callee);
    }
  };
  walk(c);
  return {out.begin(), out.end()};
}

namespace {

void CollectVars(const ExprPtr& e, std::set<std::pair<std::string, int>>* out) {
  if (e->kind == ExprKind::kVar) out->insert({e->name, e->tag});
  for (const ExprPtr& a : e->args) CollectVars(a, out);
}

}  // namespace

std::vector<std::string> FreeVars(const ExprPtr& e) {
  std::set<std::pair<std::string, int>> tagged;
  CollectVars(e, &tagged);
  std::set<std::string> names;
  for (const auto& [n, t] : tagged) names.insert(n);
  return {names.begin(), names.end()};
}

std::vector<std::pair<std::string, int>> FreeTaggedVars(const ExprPtr& e) {
  std::set<std::pair<std::string, int>> tagged;
  CollectVars(e, &tagged);
  return {tagged.begin(), tagged.end()};
}

int Program::Slot(const std::string& name) const {
  for (size_t i = 0; i < vars.size(); ++i) {
    if (vars[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

const VarDecl* Program::Var(const std::string& name) const {
  const int s = Slot(name);
  return s < 0 ? nullptr : &vars[s];
}

const OracleDecl* Program::Oracle(const std::string& name) const {
  for (const OracleDecl& o : oracles) {
    if (o.name == name) return &o;
  }
  return nullptr;
}

const AdversaryDecl* Program::Adversary(const std::string& name) const {
  for (const AdversaryDecl& a : adversaries) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

int Program::QueryIndex(const std::string& name) const {
  for (size_t i = 0; i < queries.size(); ++i) {
    if (queries[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace dpcouple
