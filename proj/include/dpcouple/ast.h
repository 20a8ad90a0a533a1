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

#ifndef DPCOUPLE_AST_H_
#define DPCOUPLE_AST_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dpcouple/value.h"

namespace dpcouple {

// ---------------------------------------------------------------------------
// Types and finite domains.

enum class TypeKind { kBool, kInt, kReal, kList, kQuery };

struct Type {
  TypeKind kind = TypeKind::kInt;
  // Integer range (kInt). For expression types these are interval bounds.
  int64_t lo = 0;
  int64_t hi = 0;
  // kList: element type and length bound.
  std::shared_ptr<const Type> elem;
  int64_t max_len = 0;
  bool exact_len = false;
  // kQuery: number of entries in the query table.
  int64_t queries = 0;

  static Type Bool();
  static Type Int(int64_t lo, int64_t hi);
  static Type Real();
  static Type List(Type elem, int64_t max_len, bool exact);
  static Type Query(int64_t n);

  // Number of values; saturates at UINT64_MAX/2.
  uint64_t DomainSize() const;
  // All values in canonical order. Callers check DomainSize first.
  std::vector<Value> Enumerate() const;
  bool Contains(const Value& v) const;
  std::string ToString() const;
};

// Same shape (ignoring bounds); ints and reals are mutually compatible only
// where the caller allows it.
bool SameShape(const Type& a, const Type& b);

// ---------------------------------------------------------------------------
// Expressions. Immutable and freely shared.

enum class Op {
  kNot, kNeg,
  kAnd, kOr, kImplies, kIff,
  kEq, kNe, kLt, kLe, kGt, kGe,
  kAdd, kSub, kMul, kDiv, kMod,
  kCons,
};

const char* OpSymbol(Op op);

enum class ExprKind {
  kLit,      // lit
  kVar,      // program variable: name, tag (0 untagged, 1, 2), slot
  kLocal,    // bound variable: name, index (de Bruijn, 0 = innermost)
  kUnary,    // op, args[0]
  kBinary,   // op, args[0..1]
  kCond,     // args[0] ? args[1] : args[2]
  kCall,     // name(args); builtins and queries after resolution
  kList,     // [args...]
  kIndex,    // args[0][args[1]]
  kQuant,    // forall/exists name in [args[0], args[1]] : args[2]
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  ExprKind kind = ExprKind::kLit;
  Value lit;
  std::string name;
  int tag = 0;
  int slot = -1;
  int index = 0;
  Op op = Op::kAdd;
  bool forall = true;
  std::vector<ExprPtr> args;
  int line = 0;
  int col = 0;
};

ExprPtr MakeLit(Value v);
ExprPtr MakeVar(std::string name, int tag = 0, int slot = -1);
ExprPtr MakeUnary(Op op, ExprPtr a);
ExprPtr MakeBinary(Op op, ExprPtr a, ExprPtr b);
ExprPtr MakeCond(ExprPtr c, ExprPtr a, ExprPtr b);
ExprPtr MakeCall(std::string name, std::vector<ExprPtr> args);
ExprPtr MakeAnd(const std::vector<ExprPtr>& conjuncts);
ExprPtr True();
ExprPtr False();

// Canonical, fully parenthesized rendering. Reals use %.17g so the text
// round-trips; equal strings mean structurally equal expressions.
std::string ToString(const ExprPtr& e);

// Flattens nested conjunctions; `true` conjuncts are dropped.
std::vector<ExprPtr> Conjuncts(const ExprPtr& e);

// ---------------------------------------------------------------------------
// Commands.

enum class CmdKind {
  kSkip,
  kSeq,       // body
  kAssign,    // targets[0] := e
  kSample,    // targets[0] <-$ lap(eps, e)
  kIf,        // if e then body[0] else body[1]
  kWhile,     // while e cap `cap` body[0]
  kAdvCall,   // targets <- adv callee(args)
  kCall,      // targets[0] <- call callee(args)
};

struct Command;
using CmdPtr = std::shared_ptr<const Command>;

struct Command {
  CmdKind kind = CmdKind::kSkip;
  std::vector<std::string> targets;
  std::vector<int> target_slots;
  ExprPtr e;
  ExprPtr eps;
  double eps_value = 0.0;  // resolved Laplace parameter
  std::vector<CmdPtr> body;
  int64_t cap = 0;
  std::string callee;
  std::vector<ExprPtr> args;
  int line = 0;
  int col = 0;
};

CmdPtr MakeSkip();
CmdPtr MakeSeq(std::vector<CmdPtr> cmds);

// Sequence with nested sequences flattened and skips removed; a lone
// command stays unwrapped and the empty program is skip.
CmdPtr Flatten(const CmdPtr& c);
std::vector<CmdPtr> FlatList(const CmdPtr& c);

// Program text of a command in the concrete syntax, one statement per line.
std::string ToString(const CmdPtr& c, int indent = 0);

// Structural equality after flattening.
bool SameCommand(const CmdPtr& a, const CmdPtr& b);

// Variables written by a command (including adversary state and oracle
// writes when `program` is given).
struct Program;
std::vector<std::string> ModifiedVars(const CmdPtr& c,
                                      const Program* program = nullptr);
// Free program variables of an expression (names, all tags collapsed).
std::vector<std::string> FreeVars(const ExprPtr& e);
// Free tagged variables as (name, tag).
std::vector<std::pair<std::string, int>> FreeTaggedVars(const ExprPtr& e);

// ---------------------------------------------------------------------------
// Declarations and whole programs.

struct VarDecl {
  std::string name;
  Type type;
  bool adversary_state = false;
};

struct FunDecl {
  std::string name;
  std::vector<std::string> params;
  ExprPtr body;  // params appear as kLocal
};

struct QueryDecl {
  std::string name;
  std::string param;
  ExprPtr body;  // param is local 0
};

struct OracleDecl {
  std::string name;
  std::vector<std::string> params;  // declared variables
  std::string result;               // declared variable
  CmdPtr body;
};

struct AdversaryDecl {
  std::string name;  // also the name of its state variable
  std::vector<std::pair<std::string, int64_t>> oracle_caps;
};

struct Program {
  std::vector<VarDecl> vars;  // slot = position
  std::map<std::string, Value> consts;
  std::vector<FunDecl> funs;
  std::vector<QueryDecl> queries;
  std::vector<OracleDecl> oracles;
  std::vector<AdversaryDecl> adversaries;
  CmdPtr body;
  std::string ret;  // empty when the program has no return

  int Slot(const std::string& name) const;
  const VarDecl* Var(const std::string& name) const;
  const OracleDecl* Oracle(const std::string& name) const;
  const AdversaryDecl* Adversary(const std::string& name) const;
  int QueryIndex(const std::string& name) const;
};

}  // namespace dpcouple

#endif  // DPCOUPLE_AST_H_
