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

#include "dpcouple/parser.h"

#include <cctype>
#include <cstdlib>
#include <set>
#include <utility>
#include <vector>

#include "absl/strings/str_cat.h"
#include "dpcouple/eval.h"
#include "dpcouple/status.h"

namespace dpcouple {
namespace {

enum class Tok { kIdent, kInt, kReal, kQuery, kSym, kEnd };

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;
  int tag = 0;
  int64_t ival = 0;
  double rval = 0.0;
  int line = 1;
  int col = 1;
};

absl::StatusOr<std::vector<Token>> Lex(absl::string_view s) {
  static const char* kSyms[] = {"<->", "<-$", ":=", "<-", "->", "==", "!=",
                                "<=",  ">=",  "&&", "||", "::", "<",  ">",
                                "+",   "-",   "*",  "/",  "%",  "!",  "(",
                                ")",   "[",   "]",  "{",  "}",  ",",  ";",
                                ":",   "?",   "="};
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n; ++k, ++i) {
      if (s[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < s.size()) {
    const char ch = s[i];
    if (std::isspace(static_cast<unsigned char>(ch))) {
      advance(1);
      continue;
    }
    if (s.substr(i, 2) == "//") {
      while (i < s.size() && s[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.col = col;
    if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) ||
                              s[j] == '_' || s[j] == '\'')) {
        ++j;
      }
      t.kind = Tok::kIdent;
      t.text = std::string(s.substr(i, j - i));
      advance(j - i);
      if (s.substr(i, 3) == "<1>" || s.substr(i, 3) == "<2>") {
        t.tag = s[i + 1] - '0';
        advance(3);
      }
      out.push_back(std::move(t));
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '#') {
      size_t j = i + (ch == '#' ? 1 : 0);
      bool real = false;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      if (ch != '#' && j < s.size() && s[j] == '.' && j + 1 < s.size() &&
          std::isdigit(static_cast<unsigned char>(s[j + 1]))) {
        real = true;
        ++j;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      }
      if (ch != '#' && j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
        size_t k = j + 1;
        if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
        if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
          real = true;
          j = k;
          while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
        }
      }
      std::string text(s.substr(i, j - i));
      if (ch == '#') {
        if (text.size() == 1) {
          return MakeError(ErrorKind::kSyntaxError,
                           absl::StrCat("line ", line, ", col ", col,
                                        ": '#' must be followed by digits"));
        }
        t.kind = Tok::kQuery;
        t.ival = std::strtoll(text.c_str() + 1, nullptr, 10);
      } else if (real) {
        t.kind = Tok::kReal;
        t.rval = std::strtod(text.c_str(), nullptr);
      } else {
        t.kind = Tok::kInt;
        t.ival = std::strtoll(text.c_str(), nullptr, 10);
      }
      t.text = text;
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    bool matched = false;
    for (const char* sym : kSyms) {
      const size_t n = std::char_traits<char>::length(sym);
      if (s.substr(i, n) == sym) {
        t.kind = Tok::kSym;
        t.text = sym;
        advance(n);
        out.push_back(std::move(t));
        matched = true;
        break;
      }
    }
    if (!matched) {
      return MakeError(ErrorKind::kSyntaxError,
                       absl::StrCat("line ", line, ", col ", col,
                                    ": unexpected character '",
                                    std::string(1, ch), "'"));
    }
  }
  Token end;
  end.line = line;
  end.col = col;
  out.push_back(end);
  return out;
}

enum class Mode { kProgram, kUnary, kRelational };

const std::set<std::string>& Keywords() {
  static const std::set<std::string> k = {
      "decls", "const", "int",  "bool",   "list",   "query", "fun",
      "oracle", "adversary", "oracles", "cap", "skip", "if", "then",
      "else", "while", "return", "lap", "adv", "call", "true", "false",
      "forall", "exists", "in"};
  return k;
}

class Parser {
 public:
  Parser(std::vector<Token> toks, Program* p, Mode mode)
      : toks_(std::move(toks)), p_(p), mode_(mode) {}

  absl::Status ParseProgramText(const std::map<std::string, Value>& overrides) {
    overrides_ = &overrides;
    if (PeekIdent("decls")) {
      Next();
      DPC_RETURN_IF_ERROR(Expect("{"));
      while (!PeekSym("}")) {
        DPC_RETURN_IF_ERROR(ParseDecl());
      }
      Next();
    }
    DPC_ASSIGN_OR_RETURN(p_->body, ParseStatements());
    if (PeekIdent("return")) {
      Next();
      if (Peek().kind != Tok::kIdent || p_->Slot(Peek().text) < 0) {
        return Err(ErrorKind::kUnboundVariable, "return needs a declared variable");
      }
      p_->ret = Next().text;
      if (PeekSym(";")) Next();
    }
    return ExpectEnd();
  }

  absl::StatusOr<CmdPtr> ParseCommandText() {
    DPC_ASSIGN_OR_RETURN(CmdPtr c, ParseStatements());
    DPC_RETURN_IF_ERROR(ExpectEnd());
    return c;
  }

  absl::StatusOr<ExprPtr> ParseExprText() {
    DPC_ASSIGN_OR_RETURN(ExprPtr e, ParseExpr());
    DPC_RETURN_IF_ERROR(ExpectEnd());
    return e;
  }

 private:
  const Token& Peek(size_t k = 0) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  const Token& Next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool PeekSym(absl::string_view s, size_t k = 0) const {
    return Peek(k).kind == Tok::kSym && Peek(k).text == s;
  }
  bool PeekIdent(absl::string_view s, size_t k = 0) const {
    return Peek(k).kind == Tok::kIdent && Peek(k).text == s && Peek(k).tag == 0;
  }

  absl::Status Err(ErrorKind kind, absl::string_view msg) const {
    const Token& t = Peek();
    const std::string near =
        t.kind == Tok::kEnd ? "end of input" : absl::StrCat("'", t.text, "'");
    return MakeError(kind, absl::StrCat("line ", t.line, ", col ", t.col,
                                        " near ", near, ": ", msg));
  }
  absl::Status Expect(absl::string_view sym) {
    if (!PeekSym(sym)) return Err(ErrorKind::kSyntaxError, absl::StrCat("expected '", sym, "'"));
    Next();
    return absl::OkStatus();
  }
  absl::Status ExpectKeyword(absl::string_view kw) {
    if (!PeekIdent(kw)) return Err(ErrorKind::kSyntaxError, absl::StrCat("expected '", kw, "'"));
    Next();
    return absl::OkStatus();
  }
  absl::Status ExpectEnd() {
    if (Peek().kind != Tok::kEnd) return Err(ErrorKind::kSyntaxError, "unexpected trailing input");
    return absl::OkStatus();
  }
  absl::StatusOr<std::string> ExpectName() {
    const Token& t = Peek();
    if (t.kind != Tok::kIdent || t.tag != 0 || Keywords().count(t.text)) {
      return Err(ErrorKind::kSyntaxError, "expected a name");
    }
    return Next().text;
  }
  absl::Status CheckFresh(const std::string& name) {
    if (p_->Slot(name) >= 0 || p_->consts.count(name) ||
        p_->QueryIndex(name) >= 0 || p_->Oracle(name)) {
      return Err(ErrorKind::kSyntaxError, absl::StrCat("'", name, "' is already declared"));
    }
    for (const FunDecl& f : p_->funs) {
      if (f.name == name) return Err(ErrorKind::kSyntaxError, absl::StrCat("'", name, "' is already declared"));
    }
    return absl::OkStatus();
  }

  absl::StatusOr<int64_t> ConstInt() {
    DPC_ASSIGN_OR_RETURN(ExprPtr e, ParseTernary());
    absl::StatusOr<Value> v = EvalConst(e, *p_);
    if (!v.ok() || !v->is_int()) {
      return Err(ErrorKind::kTypeError, "expected a constant integer");
    }
    return v->as_int();
  }

  // ---- declarations -------------------------------------------------------

  absl::StatusOr<Type> ParseType() {
    if (PeekIdent("bool")) {
      Next();
      return Type::Bool();
    }
    if (PeekIdent("query")) {
      Next();
      return Type::Query(static_cast<int64_t>(p_->queries.size()));
    }
    if (PeekIdent("int")) {
      Next();
      DPC_RETURN_IF_ERROR(Expect("["));
      DPC_ASSIGN_OR_RETURN(int64_t lo, ConstInt());
      DPC_RETURN_IF_ERROR(Expect(","));
      DPC_ASSIGN_OR_RETURN(int64_t hi, ConstInt());
      DPC_RETURN_IF_ERROR(Expect("]"));
      if (hi < lo) return Err(ErrorKind::kTypeError, "empty integer range");
      return Type::Int(lo, hi);
    }
    if (PeekIdent("list")) {
      Next();
      DPC_RETURN_IF_ERROR(Expect("<"));
      DPC_ASSIGN_OR_RETURN(Type elem, ParseType());
      DPC_RETURN_IF_ERROR(Expect(">"));
      DPC_RETURN_IF_ERROR(Expect("["));
      bool exact;
      if (PeekIdent("max")) {
        exact = false;
      } else if (PeekIdent("len")) {
        exact = true;
      } else {
        return Err(ErrorKind::kSyntaxError, "expected 'max' or 'len'");
      }
      Next();
      DPC_ASSIGN_OR_RETURN(int64_t n, ConstInt());
      DPC_RETURN_IF_ERROR(Expect("]"));
      if (n < 0) return Err(ErrorKind::kTypeError, "negative list bound");
      return Type::List(std::move(elem), n, exact);
    }
    return Err(ErrorKind::kSyntaxError, "expected a type");
  }

  absl::Status ParseDecl() {
    if (PeekIdent("const")) {
      Next();
      DPC_ASSIGN_OR_RETURN(std::string name, ExpectName());
      DPC_RETURN_IF_ERROR(CheckFresh(name));
      DPC_RETURN_IF_ERROR(Expect("="));
      DPC_ASSIGN_OR_RETURN(ExprPtr e, ParseExpr());
      absl::StatusOr<Value> v = EvalConst(e, *p_);
      if (!v.ok()) return Err(ErrorKind::kTypeError, absl::StrCat("constant '", name, "' is not constant"));
      p_->consts[name] = *v;
      if (overrides_ && overrides_->count(name)) {
        p_->consts[name] = overrides_->at(name);
      }
      return Expect(";");
    }
    if (PeekIdent("fun")) {
      Next();
      FunDecl f;
      DPC_ASSIGN_OR_RETURN(f.name, ExpectName());
      DPC_RETURN_IF_ERROR(CheckFresh(f.name));
      DPC_RETURN_IF_ERROR(Expect("("));
      while (!PeekSym(")")) {
        DPC_ASSIGN_OR_RETURN(std::string param, ExpectName());
        f.params.push_back(param);
        if (!PeekSym(")")) DPC_RETURN_IF_ERROR(Expect(","));
      }
      Next();
      DPC_RETURN_IF_ERROR(Expect("="));
      const auto saved = locals_;
      const bool saved_closed = closed_;
      locals_ = f.params;
      closed_ = true;
      absl::StatusOr<ExprPtr> body = ParseExpr();
      locals_ = saved;
      closed_ = saved_closed;
      DPC_RETURN_IF_ERROR(body.status());
      f.body = *body;
      p_->funs.push_back(std::move(f));
      return Expect(";");
    }
    if (PeekIdent("query")) {
      Next();
      QueryDecl q;
      DPC_ASSIGN_OR_RETURN(q.name, ExpectName());
      DPC_RETURN_IF_ERROR(CheckFresh(q.name));
      DPC_RETURN_IF_ERROR(Expect("("));
      DPC_ASSIGN_OR_RETURN(q.param, ExpectName());
      DPC_RETURN_IF_ERROR(Expect(")"));
      DPC_RETURN_IF_ERROR(Expect("="));
      const auto saved = locals_;
      const bool saved_closed = closed_;
      locals_ = {q.param};
      closed_ = true;
      absl::StatusOr<ExprPtr> body = ParseExpr();
      locals_ = saved;
      closed_ = saved_closed;
      DPC_RETURN_IF_ERROR(body.status());
      q.body = *body;
      p_->queries.push_back(std::move(q));
      // Query-typed variables declared earlier must see the new table size.
      for (VarDecl& v : p_->vars) {
        if (v.type.kind == TypeKind::kQuery) {
          v.type.queries = static_cast<int64_t>(p_->queries.size());
        }
      }
      return Expect(";");
    }
    if (PeekIdent("adversary")) {
      Next();
      AdversaryDecl a;
      DPC_ASSIGN_OR_RETURN(a.name, ExpectName());
      DPC_RETURN_IF_ERROR(CheckFresh(a.name));
      DPC_RETURN_IF_ERROR(Expect(":"));
      DPC_ASSIGN_OR_RETURN(Type t, ParseType());
      if (PeekIdent("oracles")) {
        Next();
        while (true) {
          DPC_ASSIGN_OR_RETURN(std::string o, ExpectName());
          DPC_RETURN_IF_ERROR(ExpectKeyword("cap"));
          DPC_ASSIGN_OR_RETURN(int64_t cap, ConstInt());
          if (cap < 0) return Err(ErrorKind::kTypeError, "negative query cap");
          a.oracle_caps.emplace_back(o, cap);
          if (!PeekSym(",")) break;
          Next();
        }
      }
      p_->vars.push_back(VarDecl{a.name, t, true});
      p_->adversaries.push_back(std::move(a));
      return Expect(";");
    }
    if (PeekIdent("oracle")) {
      Next();
      OracleDecl o;
      DPC_ASSIGN_OR_RETURN(o.name, ExpectName());
      DPC_RETURN_IF_ERROR(CheckFresh(o.name));
      DPC_RETURN_IF_ERROR(Expect("("));
      while (!PeekSym(")")) {
        DPC_ASSIGN_OR_RETURN(std::string param, ExpectName());
        if (p_->Slot(param) < 0) {
          return Err(ErrorKind::kUnboundVariable, absl::StrCat("oracle parameter '", param, "' is not declared"));
        }
        o.params.push_back(param);
        if (!PeekSym(")")) DPC_RETURN_IF_ERROR(Expect(","));
      }
      Next();
      DPC_RETURN_IF_ERROR(Expect("->"));
      DPC_ASSIGN_OR_RETURN(o.result, ExpectName());
      if (p_->Slot(o.result) < 0) {
        return Err(ErrorKind::kUnboundVariable, absl::StrCat("oracle result '", o.result, "' is not declared"));
      }
      DPC_ASSIGN_OR_RETURN(o.body, ParseBlock());
      p_->oracles.push_back(std::move(o));
      if (PeekSym(";")) Next();
      return absl::OkStatus();
    }
    std::vector<std::string> names;
    while (true) {
      DPC_ASSIGN_OR_RETURN(std::string name, ExpectName());
      DPC_RETURN_IF_ERROR(CheckFresh(name));
      names.push_back(name);
      if (!PeekSym(",")) break;
      Next();
    }
    DPC_RETURN_IF_ERROR(Expect(":"));
    DPC_ASSIGN_OR_RETURN(Type t, ParseType());
    for (const std::string& n : names) p_->vars.push_back(VarDecl{n, t, false});
    return Expect(";");
  }

  // ---- statements ---------------------------------------------------------

  absl::StatusOr<CmdPtr> ParseStatements() {
    std::vector<CmdPtr> cmds;
    while (Peek().kind != Tok::kEnd && !PeekSym("}") && !PeekIdent("return")) {
      DPC_ASSIGN_OR_RETURN(CmdPtr c, ParseStatement());
      cmds.push_back(std::move(c));
    }
    if (cmds.size() == 1) return cmds[0];
    if (cmds.empty()) return MakeSkip();
    return MakeSeq(std::move(cmds));
  }

  absl::StatusOr<CmdPtr> ParseBlock() {
    if (!PeekSym("{")) return ParseStatement();
    Next();
    DPC_ASSIGN_OR_RETURN(CmdPtr c, ParseStatements());
    DPC_RETURN_IF_ERROR(Expect("}"));
    if (PeekSym(";")) Next();
    return c;
  }

  absl::StatusOr<int> Target(const std::string& name) {
    const int slot = p_->Slot(name);
    if (slot < 0) {
      return Err(ErrorKind::kUnboundVariable, absl::StrCat("assignment to undeclared '", name, "'"));
    }
    if (p_->vars[slot].adversary_state) {
      return Err(ErrorKind::kTypeError, absl::StrCat("'", name, "' is adversary state"));
    }
    return slot;
  }

  absl::StatusOr<std::vector<ExprPtr>> CallArgs() {
    DPC_RETURN_IF_ERROR(Expect("("));
    std::vector<ExprPtr> args;
    while (!PeekSym(")")) {
      DPC_ASSIGN_OR_RETURN(ExprPtr a, ParseExpr());
      args.push_back(std::move(a));
      if (!PeekSym(")")) DPC_RETURN_IF_ERROR(Expect(","));
    }
    Next();
    return args;
  }

  absl::StatusOr<CmdPtr> ParseStatement() {
    auto c = std::make_shared<Command>();
    c->line = Peek().line;
    c->col = Peek().col;
    if (PeekIdent("skip")) {
      Next();
      DPC_RETURN_IF_ERROR(Expect(";"));
      return MakeSkip();
    }
    if (PeekIdent("if")) {
      Next();
      c->kind = CmdKind::kIf;
      DPC_ASSIGN_OR_RETURN(c->e, ParseExpr());
      DPC_RETURN_IF_ERROR(ExpectKeyword("then"));
      DPC_ASSIGN_OR_RETURN(CmdPtr then_c, ParseBlock());
      CmdPtr else_c = MakeSkip();
      if (PeekIdent("else")) {
        Next();
        DPC_ASSIGN_OR_RETURN(else_c, ParseBlock());
      }
      c->body = {then_c, else_c};
      return CmdPtr(c);
    }
    if (PeekIdent("while")) {
      Next();
      c->kind = CmdKind::kWhile;
      DPC_ASSIGN_OR_RETURN(c->e, ParseExpr());
      if (!PeekIdent("cap")) {
        return Err(ErrorKind::kSyntaxError, "while loops need an iteration cap ('cap N')");
      }
      Next();
      DPC_ASSIGN_OR_RETURN(c->cap, ConstInt());
      if (c->cap < 0) return Err(ErrorKind::kTypeError, "negative loop cap");
      DPC_ASSIGN_OR_RETURN(CmdPtr body, ParseBlock());
      c->body = {body};
      return CmdPtr(c);
    }
    // Assignment-like statements start with target names.
    bool paren = false;
    if (PeekSym("(")) {
      paren = true;
      Next();
    }
    while (true) {
      DPC_ASSIGN_OR_RETURN(std::string t, ExpectName());
      c->targets.push_back(t);
      if (!PeekSym(",")) break;
      Next();
    }
    if (paren) DPC_RETURN_IF_ERROR(Expect(")"));
    for (const std::string& t : c->targets) {
      DPC_ASSIGN_OR_RETURN(int slot, Target(t));
      c->target_slots.push_back(slot);
    }
    if (PeekSym(":=")) {
      Next();
      if (c->targets.size() != 1) return Err(ErrorKind::kSyntaxError, "':=' takes one target");
      c->kind = CmdKind::kAssign;
      DPC_ASSIGN_OR_RETURN(c->e, ParseExpr());
    } else if (PeekSym("<-$")) {
      Next();
      if (c->targets.size() != 1) return Err(ErrorKind::kSyntaxError, "'<-$' takes one target");
      c->kind = CmdKind::kSample;
      DPC_RETURN_IF_ERROR(ExpectKeyword("lap"));
      DPC_RETURN_IF_ERROR(Expect("("));
      DPC_ASSIGN_OR_RETURN(c->eps, ParseExpr());
      absl::StatusOr<Value> eps = EvalConst(c->eps, *p_);
      if (!eps.ok() || !eps->is_numeric() || !(eps->as_real() > 0.0)) {
        return Err(ErrorKind::kTypeError, "Laplace parameter must be a positive constant");
      }
      c->eps_value = eps->as_real();
      DPC_RETURN_IF_ERROR(Expect(","));
      DPC_ASSIGN_OR_RETURN(c->e, ParseExpr());
      DPC_RETURN_IF_ERROR(Expect(")"));
    } else if (PeekSym("<-")) {
      Next();
      if (PeekIdent("adv")) {
        Next();
        c->kind = CmdKind::kAdvCall;
        DPC_ASSIGN_OR_RETURN(c->callee, ExpectName());
        if (!p_->Adversary(c->callee)) {
          return Err(ErrorKind::kUnboundVariable, absl::StrCat("unknown adversary '", c->callee, "'"));
        }
      } else if (PeekIdent("call")) {
        Next();
        c->kind = CmdKind::kCall;
        DPC_ASSIGN_OR_RETURN(c->callee, ExpectName());
        const OracleDecl* o = p_->Oracle(c->callee);
        if (!o) return Err(ErrorKind::kUnboundVariable, absl::StrCat("unknown oracle '", c->callee, "'"));
        if (c->targets.size() != 1) return Err(ErrorKind::kSyntaxError, "oracle calls take one target");
      } else {
        return Err(ErrorKind::kSyntaxError, "expected 'adv' or 'call'");
      }
      DPC_ASSIGN_OR_RETURN(c->args, CallArgs());
      if (c->kind == CmdKind::kCall &&
          c->args.size() != p_->Oracle(c->callee)->params.size()) {
        return Err(ErrorKind::kTypeError, "wrong number of oracle arguments");
      }
    } else {
      return Err(ErrorKind::kSyntaxError, "expected ':=', '<-$' or '<-'");
    }
    DPC_RETURN_IF_ERROR(Expect(";"));
    return CmdPtr(c);
  }

  // ---- expressions --------------------------------------------------------

  ExprPtr At(std::shared_ptr<Expr> e, const Token& t) {
    e->line = t.line;
    e->col = t.col;
    return e;
  }

  // Folds closed subexpressions to literals.
  ExprPtr Fold(ExprPtr e) {
    if (e->kind == ExprKind::kLit || e->kind == ExprKind::kVar ||
        e->kind == ExprKind::kLocal || e->kind == ExprKind::kQuant) {
      return e;
    }
    for (const ExprPtr& a : e->args) {
      if (a->kind != ExprKind::kLit) return e;
    }
    absl::StatusOr<Value> v = EvalConst(e, *p_);
    if (!v.ok()) return e;
    auto lit = std::make_shared<Expr>();
    lit->kind = ExprKind::kLit;
    lit->lit = *v;
    lit->line = e->line;
    lit->col = e->col;
    return lit;
  }

  absl::StatusOr<ExprPtr> ParseExpr() {
    if (PeekIdent("forall") || PeekIdent("exists")) {
      const Token t = Next();
      auto e = std::make_shared<Expr>();
      e->kind = ExprKind::kQuant;
      e->forall = t.text == "forall";
      DPC_ASSIGN_OR_RETURN(e->name, ExpectName());
      DPC_RETURN_IF_ERROR(ExpectKeyword("in"));
      DPC_RETURN_IF_ERROR(Expect("["));
      DPC_ASSIGN_OR_RETURN(ExprPtr lo, ParseExpr());
      DPC_RETURN_IF_ERROR(Expect(","));
      DPC_ASSIGN_OR_RETURN(ExprPtr hi, ParseExpr());
      DPC_RETURN_IF_ERROR(Expect("]"));
      DPC_RETURN_IF_ERROR(Expect(":"));
      locals_.push_back(e->name);
      absl::StatusOr<ExprPtr> body = ParseExpr();
      locals_.pop_back();
      DPC_RETURN_IF_ERROR(body.status());
      e->args = {lo, hi, *body};
      return At(e, t);
    }
    return ParseTernary();
  }

  absl::StatusOr<ExprPtr> ParseTernary() {
    DPC_ASSIGN_OR_RETURN(ExprPtr c, ParseIff());
    if (!PeekSym("?")) return c;
    const Token t = Next();
    DPC_ASSIGN_OR_RETURN(ExprPtr a, ParseExpr());
    DPC_RETURN_IF_ERROR(Expect(":"));
    DPC_ASSIGN_OR_RETURN(ExprPtr b, ParseExpr());
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::kCond;
    e->args = {c, a, b};
    return Fold(At(e, t));
  }

  ExprPtr Bin(Op op, ExprPtr a, ExprPtr b, const Token& t) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::kBinary;
    e->op = op;
    e->args = {std::move(a), std::move(b)};
    return Fold(At(e, t));
  }

  absl::StatusOr<ExprPtr> ParseIff() {
    DPC_ASSIGN_OR_RETURN(ExprPtr a, ParseImplies());
    while (PeekSym("<->")) {
      const Token t = Next();
      DPC_ASSIGN_OR_RETURN(ExprPtr b, ParseImplies());
      a = Bin(Op::kIff, a, b, t);
    }
    return a;
  }

  absl::StatusOr<ExprPtr> ParseImplies() {
    DPC_ASSIGN_OR_RETURN(ExprPtr a, ParseOr());
    if (!PeekSym("->")) return a;
    const Token t = Next();
    ExprPtr b;
    if (PeekIdent("forall") || PeekIdent("exists")) {
      DPC_ASSIGN_OR_RETURN(b, ParseExpr());
    } else {
      DPC_ASSIGN_OR_RETURN(b, ParseImplies());
    }
    return Bin(Op::kImplies, a, b, t);
  }

  absl::StatusOr<ExprPtr> ParseOr() {
    DPC_ASSIGN_OR_RETURN(ExprPtr a, ParseAnd());
    while (PeekSym("||")) {
      const Token t = Next();
      DPC_ASSIGN_OR_RETURN(ExprPtr b, ParseAnd());
      a = Bin(Op::kOr, a, b, t);
    }
    return a;
  }

  absl::StatusOr<ExprPtr> ParseAnd() {
    DPC_ASSIGN_OR_RETURN(ExprPtr a, ParseCmp());
    while (PeekSym("&&")) {
      const Token t = Next();
      DPC_ASSIGN_OR_RETURN(ExprPtr b, ParseCmp());
      a = Bin(Op::kAnd, a, b, t);
    }
    return a;
  }

  absl::StatusOr<ExprPtr> ParseCmp() {
    DPC_ASSIGN_OR_RETURN(ExprPtr a, ParseCons());
    static const std::pair<const char*, Op> kOps[] = {
        {"==", Op::kEq}, {"!=", Op::kNe}, {"<=", Op::kLe},
        {">=", Op::kGe}, {"<", Op::kLt},  {">", Op::kGt}};
    for (const auto& [sym, op] : kOps) {
      if (PeekSym(sym)) {
        const Token t = Next();
        DPC_ASSIGN_OR_RETURN(ExprPtr b, ParseCons());
        return Bin(op, a, b, t);
      }
    }
    // Assertions also accept a single '=' for equality.
    if (mode_ != Mode::kProgram && PeekSym("=")) {
      const Token t = Next();
      DPC_ASSIGN_OR_RETURN(ExprPtr b, ParseCons());
      return Bin(Op::kEq, a, b, t);
    }
    if (PeekIdent("in")) {
      const Token t = Next();
      DPC_RETURN_IF_ERROR(Expect("["));
      DPC_ASSIGN_OR_RETURN(ExprPtr lo, ParseCons());
      DPC_RETURN_IF_ERROR(Expect(","));
      DPC_ASSIGN_OR_RETURN(ExprPtr hi, ParseCons());
      DPC_RETURN_IF_ERROR(Expect("]"));
      return Bin(Op::kAnd, Bin(Op::kLe, lo, a, t), Bin(Op::kLe, a, hi, t), t);
    }
    return a;
  }

  absl::StatusOr<ExprPtr> ParseCons() {
    DPC_ASSIGN_OR_RETURN(ExprPtr a, ParseAdd());
    if (!PeekSym("::")) return a;
    const Token t = Next();
    DPC_ASSIGN_OR_RETURN(ExprPtr b, ParseCons());
    return Bin(Op::kCons, a, b, t);
  }

  absl::StatusOr<ExprPtr> ParseAdd() {
    DPC_ASSIGN_OR_RETURN(ExprPtr a, ParseMul());
    while (PeekSym("+") || PeekSym("-")) {
      const Token t = Next();
      DPC_ASSIGN_OR_RETURN(ExprPtr b, ParseMul());
      a = Bin(t.text == "+" ? Op::kAdd : Op::kSub, a, b, t);
    }
    return a;
  }

  absl::StatusOr<ExprPtr> ParseMul() {
    DPC_ASSIGN_OR_RETURN(ExprPtr a, ParseUnary());
    while (PeekSym("*") || PeekSym("/") || PeekSym("%")) {
      const Token t = Next();
      DPC_ASSIGN_OR_RETURN(ExprPtr b, ParseUnary());
      const Op op = t.text == "*" ? Op::kMul : (t.text == "/" ? Op::kDiv : Op::kMod);
      a = Bin(op, a, b, t);
    }
    return a;
  }

  absl::StatusOr<ExprPtr> ParseUnary() {
    if (PeekSym("!") || PeekSym("-")) {
      const Token t = Next();
      DPC_ASSIGN_OR_RETURN(ExprPtr a, ParseUnary());
      auto e = std::make_shared<Expr>();
      e->kind = ExprKind::kUnary;
      e->op = t.text == "!" ? Op::kNot : Op::kNeg;
      e->args = {a};
      return Fold(At(e, t));
    }
    return ParsePostfix();
  }

  absl::StatusOr<ExprPtr> ParsePostfix() {
    DPC_ASSIGN_OR_RETURN(ExprPtr a, ParsePrimary());
    while (PeekSym("[")) {
      const Token t = Next();
      DPC_ASSIGN_OR_RETURN(ExprPtr i, ParseExpr());
      DPC_RETURN_IF_ERROR(Expect("]"));
      auto e = std::make_shared<Expr>();
      e->kind = ExprKind::kIndex;
      e->args = {a, i};
      a = Fold(At(e, t));
    }
    return a;
  }

  absl::StatusOr<ExprPtr> ParsePrimary() {
    const Token t = Peek();
    switch (t.kind) {
      case Tok::kInt:
        Next();
        return At(std::make_shared<Expr>(*MakeLit(Value::Int(t.ival))), t);
      case Tok::kReal:
        Next();
        return At(std::make_shared<Expr>(*MakeLit(Value::Real(t.rval))), t);
      case Tok::kQuery:
        Next();
        if (t.ival >= static_cast<int64_t>(p_->queries.size())) {
          return Err(ErrorKind::kUnboundVariable, absl::StrCat("unknown query #", t.ival));
        }
        return At(std::make_shared<Expr>(*MakeLit(Value::Query(t.ival))), t);
      case Tok::kSym:
        if (t.text == "(") {
          Next();
          DPC_ASSIGN_OR_RETURN(ExprPtr e, ParseExpr());
          DPC_RETURN_IF_ERROR(Expect(")"));
          return e;
        }
        if (t.text == "[") {
          Next();
          auto e = std::make_shared<Expr>();
          e->kind = ExprKind::kList;
          while (!PeekSym("]")) {
            DPC_ASSIGN_OR_RETURN(ExprPtr a, ParseExpr());
            e->args.push_back(a);
            if (!PeekSym("]")) DPC_RETURN_IF_ERROR(Expect(","));
          }
          Next();
          return Fold(At(e, t));
        }
        return Err(ErrorKind::kSyntaxError, "expected an expression");
      case Tok::kEnd:
        return Err(ErrorKind::kSyntaxError, "unexpected end of input");
      case Tok::kIdent:
        break;
    }
    Next();
    if (t.tag == 0 && (t.text == "true" || t.text == "false")) {
      return At(std::make_shared<Expr>(*MakeLit(Value::Bool(t.text == "true"))), t);
    }
    if (PeekSym("(") && t.tag == 0) {
      DPC_ASSIGN_OR_RETURN(std::vector<ExprPtr> args, CallArgs());
      auto e = std::make_shared<Expr>();
      e->kind = ExprKind::kCall;
      e->name = t.text;
      e->args = std::move(args);
      Builtin b;
      if (LookupBuiltin(t.text, &b)) {
        e->index = static_cast<int>(b);
      } else {
        int found = -1;
        for (size_t i = 0; i < p_->funs.size(); ++i) {
          if (p_->funs[i].name == t.text) found = static_cast<int>(i);
        }
        if (found < 0) {
          return MakeError(ErrorKind::kUnboundVariable,
                           absl::StrCat("line ", t.line, ", col ", t.col,
                                        ": unknown function '", t.text, "'"));
        }
        if (e->args.size() != p_->funs[found].params.size()) {
          return MakeError(ErrorKind::kTypeError,
                           absl::StrCat("line ", t.line, ", col ", t.col,
                                        ": wrong number of arguments to '",
                                        t.text, "'"));
        }
        e->index = static_cast<int>(Builtin::kUser);
        e->slot = found;
      }
      return Fold(At(e, t));
    }
    return Name(t);
  }

  absl::StatusOr<ExprPtr> Name(const Token& t) {
    auto where = [&t]() { return absl::StrCat("line ", t.line, ", col ", t.col, ": "); };
    for (size_t k = locals_.size(); k-- > 0;) {
      if (locals_[k] == t.text) {
        if (t.tag != 0) {
          return MakeError(ErrorKind::kSyntaxError,
                           absl::StrCat(where(), "bound variable '", t.text, "' cannot be tagged"));
        }
        auto e = std::make_shared<Expr>();
        e->kind = ExprKind::kLocal;
        e->name = t.text;
        e->index = static_cast<int>(locals_.size() - 1 - k);
        return At(e, t);
      }
    }
    const int slot = p_->Slot(t.text);
    if (slot >= 0) {
      if (closed_) {
        return MakeError(ErrorKind::kUnboundVariable,
                         absl::StrCat(where(), "'", t.text,
                                      "' is a program variable; function bodies see only parameters"));
      }
      if (mode_ == Mode::kRelational && t.tag == 0) {
        return MakeError(ErrorKind::kTypeError,
                         absl::StrCat(where(), "'", t.text, "' needs a <1> or <2> tag"));
      }
      if (mode_ != Mode::kRelational && t.tag != 0) {
        return MakeError(ErrorKind::kTypeError,
                         absl::StrCat(where(), "tags are only allowed in relational assertions"));
      }
      auto e = std::make_shared<Expr>(*MakeVar(t.text, t.tag, slot));
      return At(e, t);
    }
    if (t.tag != 0) {
      return MakeError(ErrorKind::kUnboundVariable,
                       absl::StrCat(where(), "unknown variable '", t.text, "'"));
    }
    auto c = p_->consts.find(t.text);
    if (c != p_->consts.end()) {
      return At(std::make_shared<Expr>(*MakeLit(c->second)), t);
    }
    const int q = p_->QueryIndex(t.text);
    if (q >= 0) return At(std::make_shared<Expr>(*MakeLit(Value::Query(q))), t);
    return MakeError(ErrorKind::kUnboundVariable,
                     absl::StrCat(where(), "unknown name '", t.text, "'"));
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
  Program* p_;
  Mode mode_;
  std::vector<std::string> locals_;
  bool closed_ = false;
  const std::map<std::string, Value>* overrides_ = nullptr;
};

}  // namespace

absl::StatusOr<Program> ParseProgram(absl::string_view text,
                                     const std::map<std::string, Value>& overrides) {
  DPC_ASSIGN_OR_RETURN(std::vector<Token> toks, Lex(text));
  Program p;
  Parser parser(std::move(toks), &p, Mode::kProgram);
  DPC_RETURN_IF_ERROR(parser.ParseProgramText(overrides));
  return p;
}

absl::StatusOr<CmdPtr> ParseCommand(absl::string_view text, const Program& p) {
  DPC_ASSIGN_OR_RETURN(std::vector<Token> toks, Lex(text));
  Program copy = p;
  Parser parser(std::move(toks), &copy, Mode::kProgram);
  return parser.ParseCommandText();
}

absl::StatusOr<ExprPtr> ParseAssertion(absl::string_view text, const Program& p,
                                       AssertionMode mode) {
  DPC_ASSIGN_OR_RETURN(std::vector<Token> toks, Lex(text));
  Program copy = p;
  Parser parser(std::move(toks), &copy,
                mode == AssertionMode::kRelational ? Mode::kRelational
                                                   : Mode::kUnary);
  return parser.ParseExprText();
}

absl::StatusOr<ExprPtr> ParseExpression(absl::string_view text, const Program& p) {
  DPC_ASSIGN_OR_RETURN(std::vector<Token> toks, Lex(text));
  Program copy = p;
  Parser parser(std::move(toks), &copy, Mode::kProgram);
  return parser.ParseExprText();
}

}  // namespace dpcouple
