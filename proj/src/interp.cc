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

#include "dpcouple/interp.h"

#include <cstdlib>
#include <map>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "dpcouple/laplace.h"
#include "dpcouple/parser.h"
#include "dpcouple/status.h"

namespace dpcouple {
namespace {

using Weighted = std::map<Memory, double>;

class Interpreter {
 public:
  Interpreter(const Program& p, const InterpOptions& o) : p_(p), o_(o) {}

  absl::StatusOr<Weighted> Run(const CmdPtr& c, Weighted in) {
    if (in.empty()) return in;
    switch (c->kind) {
      case CmdKind::kSkip:
        return in;
      case CmdKind::kSeq:
        for (const CmdPtr& x : c->body) {
          DPC_ASSIGN_OR_RETURN(in, Run(x, std::move(in)));
        }
        return in;
      case CmdKind::kAssign: {
        Weighted out;
        for (auto& [m, w] : in) {
          DPC_ASSIGN_OR_RETURN(Value v, Eval(c->e, p_, &m));
          Memory n = m;
          DPC_RETURN_IF_ERROR(Store(&n, c->target_slots[0], std::move(v)));
          out[std::move(n)] += w;
        }
        return out;
      }
      case CmdKind::kSample:
        return Sample(c, in);
      case CmdKind::kIf: {
        Weighted yes, no;
        for (auto& [m, w] : in) {
          DPC_ASSIGN_OR_RETURN(bool g, EvalBool(c->e, p_, &m));
          (g ? yes : no)[m] += w;
        }
        DPC_ASSIGN_OR_RETURN(yes, Run(c->body[0], std::move(yes)));
        DPC_ASSIGN_OR_RETURN(no, Run(c->body[1], std::move(no)));
        for (auto& [m, w] : no) yes[m] += w;
        return yes;
      }
      case CmdKind::kWhile: {
        Weighted done;
        for (int64_t iter = 0;; ++iter) {
          Weighted go;
          for (auto& [m, w] : in) {
            DPC_ASSIGN_OR_RETURN(bool g, EvalBool(c->e, p_, &m));
            (g ? go : done)[m] += w;
          }
          if (go.empty()) break;
          if (iter >= c->cap) {
            return MakeError(ErrorKind::kLoopCapExceeded,
                             absl::StrCat("line ", c->line, ", col ", c->col,
                                          ": loop still running after cap ",
                                          c->cap, " in state ",
                                          MemoryToString(p_, go.begin()->first)));
          }
          DPC_ASSIGN_OR_RETURN(in, Run(c->body[0], std::move(go)));
        }
        return done;
      }
      case CmdKind::kAdvCall: {
        Weighted out;
        for (auto& [m, w] : in) {
          std::vector<Value> args;
          for (const ExprPtr& a : c->args) {
            DPC_ASSIGN_OR_RETURN(Value v, Eval(a, p_, &m));
            args.push_back(std::move(v));
          }
          DPC_ASSIGN_OR_RETURN(Weighted r, Adversary(c, m, std::move(args), 0));
          for (auto& [n, v] : r) out[n] += w * v;
        }
        return out;
      }
      case CmdKind::kCall: {
        Weighted out;
        for (auto& [m, w] : in) {
          std::vector<Value> args;
          for (const ExprPtr& a : c->args) {
            DPC_ASSIGN_OR_RETURN(Value v, Eval(a, p_, &m));
            args.push_back(std::move(v));
          }
          DPC_ASSIGN_OR_RETURN(Weighted r, OracleCall(c->callee, m, args));
          const OracleDecl* o = p_.Oracle(c->callee);
          const int res = p_.Slot(o->result);
          for (auto& [n, v] : r) {
            Memory k = n;
            DPC_RETURN_IF_ERROR(Store(&k, c->target_slots[0], n[res]));
            out[std::move(k)] += w * v;
          }
        }
        return out;
      }
    }
    return in;
  }

  double slack = 0.0;
  int64_t nodes = 0;

 private:
  absl::Status Store(Memory* m, int slot, Value v) {
    const VarDecl& d = p_.vars[slot];
    if (!d.type.Contains(v)) {
      return MakeError(ErrorKind::kDomainEscape,
                       absl::StrCat("value ", v.ToString(), " escapes ", d.name,
                                    " : ", d.type.ToString()));
    }
    (*m)[slot] = std::move(v);
    return absl::OkStatus();
  }

  absl::Status CheckSize(const Weighted& w) {
    if (w.size() > o_.max_support) {
      return MakeError(ErrorKind::kSpaceTooLarge,
                       absl::StrCat("more than ", o_.max_support,
                                    " reachable memories"));
    }
    return absl::OkStatus();
  }

  absl::StatusOr<Weighted> Sample(const CmdPtr& c, const Weighted& in) {
    const double eps = c->eps_value;
    const int64_t radius =
        o_.lap_radius > 0 ? o_.lap_radius : DefaultLaplaceRadius(eps);
    const std::vector<double> weights = TruncatedLaplaceWeights(eps, radius);
    const double tail = LaplaceTailMass(eps, radius);
    const int slot = c->target_slots[0];
    Weighted out;
    for (const auto& [m, w] : in) {
      DPC_ASSIGN_OR_RETURN(Value mean, Eval(c->e, p_, &m));
      if (!mean.is_int()) {
        return MakeError(ErrorKind::kTypeError, "Laplace mean is not an integer");
      }
      for (size_t i = 0; i < weights.size(); ++i) {
        Memory n = m;
        DPC_RETURN_IF_ERROR(Store(
            &n, slot,
            Value::Int(mean.as_int() + static_cast<int64_t>(i) - radius)));
        out[std::move(n)] += w * weights[i];
      }
      slack += w * tail;
      DPC_RETURN_IF_ERROR(CheckSize(out));
    }
    ++nodes;
    return out;
  }

  absl::StatusOr<Weighted> OracleCall(const std::string& name, const Memory& m,
                                      const std::vector<Value>& args) {
    const OracleDecl* o = p_.Oracle(name);
    if (!o) {
      return MakeError(ErrorKind::kUnboundVariable,
                       absl::StrCat("unknown oracle ", name));
    }
    if (args.size() != o->params.size()) {
      return MakeError(ErrorKind::kTypeError,
                       absl::StrCat("oracle ", name, " takes ",
                                    o->params.size(), " arguments"));
    }
    Memory n = m;
    for (size_t i = 0; i < args.size(); ++i) {
      DPC_RETURN_IF_ERROR(Store(&n, p_.Slot(o->params[i]), args[i]));
    }
    return Run(o->body, Weighted{{std::move(n), 1.0}});
  }

  // Runs adversary moves from memory m until it returns.
  absl::StatusOr<Weighted> Adversary(const CmdPtr& c, const Memory& m,
                                     std::vector<Value> observed, int64_t step) {
    if (!o_.adversaries || !o_.adversaries->count(c->callee)) {
      return MakeError(ErrorKind::kMissingAdversary,
                       absl::StrCat("no implementation for adversary ", c->callee));
    }
    const AdversaryImpl& impl = o_.adversaries->at(c->callee);
    const AdversaryDecl* decl = p_.Adversary(c->callee);
    const int state_slot = p_.Slot(c->callee);
    if (step >= impl.max_steps) {
      return MakeError(ErrorKind::kLoopCapExceeded,
                       absl::StrCat("adversary ", impl.name, " exceeded ",
                                    impl.max_steps, " moves"));
    }
    AdvAction a = impl.step(m[state_slot], observed);
    Memory n = m;
    DPC_RETURN_IF_ERROR(Store(&n, state_slot, a.state));
    if (a.kind == AdvAction::Kind::kReturn) {
      if (a.values.size() != c->target_slots.size()) {
        return MakeError(ErrorKind::kTypeError,
                         absl::StrCat("adversary ", impl.name, " returned ",
                                      a.values.size(), " values for ",
                                      c->target_slots.size(), " targets"));
      }
      for (size_t i = 0; i < a.values.size(); ++i) {
        DPC_RETURN_IF_ERROR(Store(&n, c->target_slots[i], a.values[i]));
      }
      return Weighted{{std::move(n), 1.0}};
    }
    int64_t cap = -1;
    for (const auto& [o, q] : decl->oracle_caps) {
      if (o == a.oracle) cap = q;
    }
    if (cap < 0) {
      return MakeError(ErrorKind::kTypeError,
                       absl::StrCat("adversary ", impl.name,
                                    " queried undeclared oracle ", a.oracle));
    }
    const int64_t used = ++queries_[a.oracle];
    struct Restore {
      std::map<std::string, int64_t>& q;
      std::string o;
      ~Restore() { --q[o]; }
    } restore{queries_, a.oracle};
    if (used > cap) {
      return MakeError(ErrorKind::kLoopCapExceeded,
                       absl::StrCat("adversary ", impl.name, " made more than ",
                                    cap, " queries to ", a.oracle));
    }
    DPC_ASSIGN_OR_RETURN(Weighted answers, OracleCall(a.oracle, n, a.values));
    const int res = p_.Slot(p_.Oracle(a.oracle)->result);
    Weighted out;
    for (auto& [k, w] : answers) {
      DPC_ASSIGN_OR_RETURN(Weighted r, Adversary(c, k, {k[res]}, step + 1));
      for (auto& [x, v] : r) out[x] += w * v;
    }
    return out;
  }

  const Program& p_;
  const InterpOptions& o_;
  std::map<std::string, int64_t> queries_;
};

}  // namespace

absl::StatusOr<InterpResult> InterpretDistr(const Program& p, const CmdPtr& c,
                                            const MemDistr& in,
                                            const InterpOptions& options) {
  Interpreter interp(p, options);
  DPC_ASSIGN_OR_RETURN(Weighted out, interp.Run(c, in.entries()));
  InterpResult r;
  r.out = MemDistr::FromMapUnchecked(std::move(out));
  r.truncation_slack = interp.slack;
  r.laplace_nodes = interp.nodes;
  return r;
}

absl::StatusOr<InterpResult> Interpret(const Program& p, const CmdPtr& c,
                                       const Memory& m,
                                       const InterpOptions& options) {
  if (m.size() != p.vars.size()) {
    return MakeError(ErrorKind::kInvalidArgument,
                     absl::StrCat("memory has ", m.size(), " slots, program has ",
                                  p.vars.size(), " variables"));
  }
  return InterpretDistr(p, c, MemDistr::Unit(m), options);
}

Memory DefaultMemory(const Program& p) {
  Memory m;
  for (const VarDecl& v : p.vars) {
    const Type& t = v.type;
    if (t.kind == TypeKind::kList) {
      std::vector<Value> elems;
      if (t.exact_len) {
        Type e = *t.elem;
        Value first = e.kind == TypeKind::kInt ? Value::Int(e.lo)
                      : e.kind == TypeKind::kBool ? Value::Bool(false)
                                                  : Value::Query(0);
        elems.assign(t.max_len, first);
      }
      m.push_back(Value::List(std::move(elems)));
    } else if (t.kind == TypeKind::kInt) {
      m.push_back(Value::Int(t.lo));
    } else if (t.kind == TypeKind::kBool) {
      m.push_back(Value::Bool(false));
    } else {
      m.push_back(Value::Query(0));
    }
  }
  return m;
}

absl::StatusOr<Memory> ParseMemory(const Program& p, const std::string& text) {
  Memory m = DefaultMemory(p);
  std::vector<std::string> items;
  int depth = 0;
  std::string cur;
  for (char ch : text) {
    if (ch == '[' || ch == '(') ++depth;
    if (ch == ']' || ch == ')') --depth;
    if ((ch == ',' || ch == ';') && depth == 0) {
      items.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  items.push_back(cur);
  for (const std::string& raw : items) {
    absl::string_view item = absl::StripAsciiWhitespace(raw);
    if (item.empty()) continue;
    const size_t eq = item.find('=');
    if (eq == absl::string_view::npos) {
      return MakeError(ErrorKind::kSyntaxError,
                       absl::StrCat("expected name=value, got '", item, "'"));
    }
    const std::string name(absl::StripAsciiWhitespace(item.substr(0, eq)));
    const int slot = p.Slot(name);
    if (slot < 0) {
      return MakeError(ErrorKind::kUnboundVariable,
                       absl::StrCat("unknown variable ", name));
    }
    DPC_ASSIGN_OR_RETURN(ExprPtr e, ParseExpression(item.substr(eq + 1), p));
    DPC_ASSIGN_OR_RETURN(Value v, EvalConst(e, p));
    if (!p.vars[slot].type.Contains(v)) {
      return MakeError(ErrorKind::kDomainEscape,
                       absl::StrCat(v.ToString(), " is outside ", name, " : ",
                                    p.vars[slot].type.ToString()));
    }
    m[slot] = v;
  }
  return m;
}

uint64_t MaxStates() {
  const char* env = std::getenv("WORKBENCH_MAX_STATES");
  if (env != nullptr) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && v > 0) return v;
  }
  return 1000000;
}

absl::StatusOr<std::vector<Memory>> EnumerateMemories(
    const Program& p, const std::vector<std::string>& vars, uint64_t cap) {
  std::vector<int> slots;
  for (const VarDecl& v : p.vars) {
    for (const std::string& name : vars) {
      if (name == v.name) {
        slots.push_back(p.Slot(name));
        break;
      }
    }
  }
  for (const std::string& name : vars) {
    if (p.Slot(name) < 0) {
      return MakeError(ErrorKind::kUnboundVariable,
                       absl::StrCat("unknown variable ", name));
    }
  }
  uint64_t total = 1;
  for (int s : slots) {
    const uint64_t n = p.vars[s].type.DomainSize();
    if (n == 0) return std::vector<Memory>{};
    if (total > cap / n + 1 || total * n > cap) {
      return MakeError(ErrorKind::kSpaceTooLarge,
                       absl::StrCat("memory space exceeds the cap of ", cap));
    }
    total *= n;
  }
  std::vector<std::vector<Value>> domains;
  for (int s : slots) domains.push_back(p.vars[s].type.Enumerate());
  std::vector<Memory> out;
  out.reserve(total);
  Memory m = DefaultMemory(p);
  std::vector<size_t> idx(slots.size(), 0);
  for (size_t k = 0; k < slots.size(); ++k) m[slots[k]] = domains[k][0];
  while (true) {
    out.push_back(m);
    size_t k = slots.size();
    while (k > 0) {
      --k;
      if (++idx[k] < domains[k].size()) {
        m[slots[k]] = domains[k][idx[k]];
        break;
      }
      idx[k] = 0;
      m[slots[k]] = domains[k][0];
      if (k == 0) return out;
    }
    if (slots.empty()) return out;
  }
}

}  // namespace dpcouple
