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

#include "dpcouple/assertion.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "dpcouple/interp.h"
#include "dpcouple/status.h"

namespace dpcouple {

absl::StatusOr<bool> EvalRelAssertion(const ExprPtr& a, const Program& p,
                                      const Memory& m1, const Memory& m2) {
  return EvalBool(a, p, &m1, &m2);
}

namespace {

ExprPtr MapExpr(const ExprPtr& e,
                const std::function<ExprPtr(const ExprPtr&)>& leaf) {
  if (ExprPtr r = leaf(e)) return r;
  if (e->args.empty()) return e;
  auto out = std::make_shared<Expr>(*e);
  bool changed = false;
  for (ExprPtr& a : out->args) {
    ExprPtr b = MapExpr(a, leaf);
    changed |= b != a;
    a = std::move(b);
  }
  return changed ? ExprPtr(out) : e;
}

bool HasVar(const ExprPtr& e, int slot, int side) {
  if (e->kind == ExprKind::kVar) {
    return e->slot == slot && std::max(e->tag, 1) == side;
  }
  for (const ExprPtr& a : e->args) {
    if (HasVar(a, slot, side)) return true;
  }
  return false;
}

bool IsVar(const ExprPtr& e, int slot, int side) {
  return e->kind == ExprKind::kVar && e->slot == slot &&
         std::max(e->tag, 1) == side;
}

// Syntactic affinity in one variable: sums, negation and scaling by
// subexpressions free of the variable.
bool Affine(const ExprPtr& e, int slot, int side) {
  if (!HasVar(e, slot, side)) return true;
  if (IsVar(e, slot, side)) return true;
  if (e->kind == ExprKind::kUnary && e->op == Op::kNeg) {
    return Affine(e->args[0], slot, side);
  }
  if (e->kind != ExprKind::kBinary) return false;
  const ExprPtr& a = e->args[0];
  const ExprPtr& b = e->args[1];
  switch (e->op) {
    case Op::kAdd:
    case Op::kSub:
      return Affine(a, slot, side) && Affine(b, slot, side);
    case Op::kMul:
      return (!HasVar(a, slot, side) && Affine(b, slot, side)) ||
             (!HasVar(b, slot, side) && Affine(a, slot, side));
    case Op::kDiv:
      return !HasVar(b, slot, side) && Affine(a, slot, side);
    default:
      return false;
  }
}

bool IsComparison(Op op) {
  return op == Op::kEq || op == Op::kLt || op == Op::kLe || op == Op::kGt ||
         op == Op::kGe;
}

std::vector<ExprPtr> Flatten(const ExprPtr& e) { return Conjuncts(e); }

}  // namespace

ExprPtr Retag(const ExprPtr& e, int tag) {
  return MapExpr(e, [tag](const ExprPtr& x) -> ExprPtr {
    if (x->kind != ExprKind::kVar) return nullptr;
    if (x->tag == tag) return x;
    auto v = std::make_shared<Expr>(*x);
    v->tag = tag;
    return v;
  });
}

ExprPtr Substitute(const ExprPtr& e, int slot, int tag,
                   const ExprPtr& replacement) {
  return MapExpr(e, [&](const ExprPtr& x) -> ExprPtr {
    if (x->kind == ExprKind::kVar && x->slot == slot && x->tag == tag) {
      return replacement;
    }
    return nullptr;
  });
}

bool IsDeterministic(const CmdPtr& c) {
  switch (c->kind) {
    case CmdKind::kSkip:
    case CmdKind::kAssign:
      return true;
    case CmdKind::kSeq:
    case CmdKind::kIf:
      for (const CmdPtr& b : c->body) {
        if (b && !IsDeterministic(b)) return false;
      }
      return true;
    default:
      return false;
  }
}

absl::StatusOr<ExprPtr> Wp(const CmdPtr& c, int tag, const ExprPtr& post) {
  switch (c->kind) {
    case CmdKind::kSkip:
      return post;
    case CmdKind::kSeq: {
      ExprPtr q = post;
      for (auto it = c->body.rbegin(); it != c->body.rend(); ++it) {
        DPC_ASSIGN_OR_RETURN(q, Wp(*it, tag, q));
      }
      return q;
    }
    case CmdKind::kAssign:
      return Substitute(post, c->target_slots[0], tag, Retag(c->e, tag));
    case CmdKind::kIf: {
      DPC_ASSIGN_OR_RETURN(ExprPtr t, Wp(c->body[0], tag, post));
      ExprPtr f = post;
      if (c->body.size() > 1 && c->body[1]) {
        DPC_ASSIGN_OR_RETURN(f, Wp(c->body[1], tag, post));
      }
      const ExprPtr b = Retag(c->e, tag);
      return MakeBinary(Op::kAnd, MakeBinary(Op::kImplies, b, t),
                        MakeBinary(Op::kImplies, MakeUnary(Op::kNot, b), f));
    }
    default:
      return MakeError(ErrorKind::kRuleSchemaMismatch,
                       absl::StrCat("no weakest precondition for ",
                                    ToString(c)));
  }
}

std::set<VarKey> AssertionVars(const ExprPtr& e) {
  std::set<VarKey> out;
  std::function<void(const ExprPtr&)> walk = [&](const ExprPtr& x) {
    if (x->kind == ExprKind::kVar) out.insert({x->slot, std::max(x->tag, 1)});
    for (const ExprPtr& a : x->args) walk(a);
  };
  walk(e);
  return out;
}

std::vector<std::string> FrameConflicts(const ExprPtr& theta,
                                        const std::vector<std::string>& mv1,
                                        const std::vector<std::string>& mv2) {
  std::vector<std::string> out;
  for (const auto& [name, tag] : FreeTaggedVars(theta)) {
    const auto& mv = tag == 2 ? mv2 : mv1;
    if (std::find(mv.begin(), mv.end(), name) != mv.end()) {
      out.push_back(tag == 0 ? name : absl::StrCat(name, "<", tag, ">"));
    }
  }
  return out;
}

std::set<std::string> LiveVars(const CmdPtr& c, const Program& p,
                               std::set<std::string> live) {
  auto reads = [](const ExprPtr& e, std::set<std::string>* out) {
    if (!e) return;
    for (const std::string& v : FreeVars(e)) out->insert(v);
  };
  switch (c->kind) {
    case CmdKind::kSkip:
      return live;
    case CmdKind::kSeq:
      for (auto it = c->body.rbegin(); it != c->body.rend(); ++it) {
        live = LiveVars(*it, p, std::move(live));
      }
      return live;
    case CmdKind::kAssign:
    case CmdKind::kSample:
      live.erase(c->targets[0]);
      reads(c->e, &live);
      return live;
    case CmdKind::kIf: {
      std::set<std::string> out = LiveVars(c->body[0], p, live);
      if (c->body.size() > 1 && c->body[1]) {
        std::set<std::string> e = LiveVars(c->body[1], p, live);
        out.insert(e.begin(), e.end());
      } else {
        out.insert(live.begin(), live.end());
      }
      reads(c->e, &out);
      return out;
    }
    case CmdKind::kWhile: {
      std::set<std::string> cur = live;
      reads(c->e, &cur);
      for (;;) {
        std::set<std::string> next = LiveVars(c->body[0], p, cur);
        next.insert(cur.begin(), cur.end());
        if (next == cur) return cur;
        cur = std::move(next);
      }
    }
    case CmdKind::kAdvCall:
    case CmdKind::kCall: {
      for (const std::string& t : c->targets) live.erase(t);
      for (const ExprPtr& a : c->args) reads(a, &live);
      std::vector<std::string> oracles;
      if (c->kind == CmdKind::kAdvCall) {
        live.insert(c->callee);
        if (const AdversaryDecl* a = p.Adversary(c->callee)) {
          for (const auto& [o, cap] : a->oracle_caps) oracles.push_back(o);
        }
      } else {
        oracles.push_back(c->callee);
      }
      for (const std::string& name : oracles) {
        const OracleDecl* o = p.Oracle(name);
        if (!o) continue;
        std::set<std::string> out = live;
        out.insert(o->result);
        std::set<std::string> in = LiveVars(o->body, p, out);
        for (const std::string& param : o->params) in.erase(param);
        live.insert(in.begin(), in.end());
      }
      return live;
    }
  }
  return live;
}

// ---- implication engine ---------------------------------------------------

ImplicationEngine::ImplicationEngine(const Program& p, uint64_t step_cap)
    : p_(p),
      step_cap_(step_cap ? step_cap : 64 * MaxStates()),
      default_(DefaultMemory(p)) {}

std::string ImplicationEngine::DescribeMemory(const Memory& m) const {
  return MemoryToString(p_, m);
}

int ImplicationEngine::KeyIndex(const VarKey& k) {
  auto it = key_index_.find(k);
  if (it != key_index_.end()) return it->second;
  const int idx = static_cast<int>(keys_.size());
  keys_.push_back(k);
  key_index_[k] = idx;
  const Type& t = p_.vars[k.first].type;
  domains_.push_back(t.DomainSize() <= 10000000 ? t.Enumerate()
                                                : std::vector<Value>{});
  return idx;
}

ImplicationEngine::Atom ImplicationEngine::MakeAtom(const ExprPtr& e,
                                                    bool negated) {
  Atom a;
  a.e = e;
  a.negated = negated;
  for (const VarKey& k : AssertionVars(e)) a.vars.push_back(KeyIndex(k));
  return a;
}

namespace {

struct Plan {
  int var = -1;
  int solve_atom = -1;             // propagation source, or -1 to scan
  std::vector<int> check;          // atoms fully assigned at this depth
  std::vector<int> narrow;         // affine comparisons usable for bounds
};

}  // namespace

absl::StatusOr<bool> ImplicationEngine::Search(const Problem& prob,
                                               const Visit& visit) {
  const int nv = static_cast<int>(prob.vars.size());
  const int na = static_cast<int>(prob.atoms.size());
  for (int v : prob.vars) {
    if (domains_[v].empty()) {
      return MakeError(ErrorKind::kSpaceTooLarge,
                       absl::StrCat("domain of ",
                                    p_.vars[keys_[v].first].name,
                                    " is too large to enumerate"));
    }
  }
  // Greedy static order.
  std::vector<char> assigned(keys_.size(), 0);
  std::vector<int> remaining_unassigned(na);
  for (int i = 0; i < na; ++i) {
    remaining_unassigned[i] = static_cast<int>(prob.atoms[i].vars.size());
  }
  std::vector<Plan> plans;
  std::vector<char> done(na, 0);
  std::vector<int> pre_check;
  for (int i = 0; i < na; ++i) {
    if (prob.atoms[i].vars.empty()) {
      pre_check.push_back(i);
      done[i] = 1;
    }
  }
  std::vector<int> todo = prob.vars;
  while (!todo.empty()) {
    Plan plan;
    // Propagation through an equality with a single unassigned variable.
    for (int i = 0; i < na && plan.var < 0; ++i) {
      const Atom& a = prob.atoms[i];
      if (done[i] || remaining_unassigned[i] != 1) continue;
      int v = -1;
      for (int x : a.vars) {
        if (!assigned[x]) v = x;
      }
      const auto [slot, side] = keys_[v];
      const bool is_int = p_.vars[slot].type.kind == TypeKind::kInt;
      const ExprPtr& e = a.e;
      bool ok = false;
      if (!a.negated && e->kind == ExprKind::kBinary && e->op == Op::kEq) {
        if (is_int) {
          ok = Affine(e->args[0], slot, side) && Affine(e->args[1], slot, side);
        } else {
          ok = (IsVar(e->args[0], slot, side) &&
                !HasVar(e->args[1], slot, side)) ||
               (IsVar(e->args[1], slot, side) &&
                !HasVar(e->args[0], slot, side));
        }
      } else if (!a.negated && p_.vars[slot].type.kind == TypeKind::kBool) {
        ok = IsVar(e, slot, side) ||
             (e->kind == ExprKind::kUnary && e->op == Op::kNot &&
              IsVar(e->args[0], slot, side));
      }
      if (ok) {
        plan.var = v;
        plan.solve_atom = i;
      }
    }
    if (plan.var < 0) {
      size_t best = SIZE_MAX;
      int best_links = -1;
      for (int v : todo) {
        int links = 0;
        for (int i = 0; i < na; ++i) {
          const auto& vs = prob.atoms[i].vars;
          if (std::find(vs.begin(), vs.end(), v) == vs.end()) continue;
          for (int x : vs) links += assigned[x] ? 1 : 0;
        }
        const size_t size = domains_[v].size();
        if (size < best || (size == best && links > best_links)) {
          best = size;
          best_links = links;
          plan.var = v;
        }
      }
    }
    assigned[plan.var] = 1;
    todo.erase(std::find(todo.begin(), todo.end(), plan.var));
    for (int i = 0; i < na; ++i) {
      const auto& vs = prob.atoms[i].vars;
      if (std::find(vs.begin(), vs.end(), plan.var) != vs.end()) {
        --remaining_unassigned[i];
      }
      if (!done[i] && remaining_unassigned[i] == 0) {
        done[i] = 1;
        plan.check.push_back(i);
        const Atom& a = prob.atoms[i];
        const auto [slot, side] = keys_[plan.var];
        if (plan.solve_atom < 0 && domains_[plan.var].size() > 16 &&
            p_.vars[slot].type.kind == TypeKind::kInt &&
            a.e->kind == ExprKind::kBinary && IsComparison(a.e->op) &&
            !(a.negated && a.e->op == Op::kEq) &&
            Affine(a.e->args[0], slot, side) &&
            Affine(a.e->args[1], slot, side)) {
          plan.narrow.push_back(i);
        }
      }
    }
    plans.push_back(std::move(plan));
  }

  Memory m1 = default_, m2 = default_;
  auto mem = [&](int v) -> Value& {
    const auto [slot, side] = keys_[v];
    return side == 2 ? m2[slot] : m1[slot];
  };
  auto holds = [&](int i) -> bool {
    const Atom& a = prob.atoms[i];
    absl::StatusOr<bool> r = EvalBool(a.e, p_, &m1, &m2);
    // Evaluation errors count as the atom failing; for a negated goal this
    // reports the memory as a counterexample.
    if (!r.ok()) return a.negated;
    return *r != a.negated;
  };
  auto diff = [&](const ExprPtr& cmp) -> absl::StatusOr<double> {
    DPC_ASSIGN_OR_RETURN(Value l, Eval(cmp->args[0], p_, &m1, &m2));
    DPC_ASSIGN_OR_RETURN(Value r, Eval(cmp->args[1], p_, &m1, &m2));
    if (!l.is_numeric() || !r.is_numeric()) {
      return MakeError(ErrorKind::kTypeError, "non-numeric comparison");
    }
    return l.as_real() - r.as_real();
  };

  for (int i : pre_check) {
    if (!holds(i)) return false;
  }

  bool found = false;
  absl::Status error;
  std::function<bool(int)> rec = [&](int depth) -> bool {
    if (depth == nv) {
      if (visit(m1, m2)) {
        found = true;
        return true;
      }
      return false;
    }
    const Plan& plan = plans[depth];
    const std::vector<Value>& dom = domains_[plan.var];
    Value& slot_ref = mem(plan.var);
    const Value saved = slot_ref;
    auto try_value = [&](const Value& v) -> bool {
      if (++total_steps_ > step_cap_) {
        error = MakeError(ErrorKind::kSpaceTooLarge,
                          absl::StrCat("implication search exceeded ",
                                       step_cap_, " steps"));
        return true;
      }
      slot_ref = v;
      for (int i : plan.check) {
        if (!holds(i)) return false;
      }
      return rec(depth + 1);
    };
    const Type& type = p_.vars[keys_[plan.var].first].type;
    bool stop = false;
    if (plan.solve_atom >= 0) {
      const Atom& a = prob.atoms[plan.solve_atom];
      const int slot = keys_[plan.var].first, side = keys_[plan.var].second;
      std::optional<Value> candidate;
      bool scan = false;
      if (type.kind == TypeKind::kInt) {
        slot_ref = Value::Int(type.lo);
        absl::StatusOr<double> f0 = diff(a.e);
        slot_ref = Value::Int(type.lo + 1);
        absl::StatusOr<double> f1 = diff(a.e);
        if (f0.ok() && f1.ok()) {
          const double s = *f1 - *f0;
          if (std::fabs(s) < 1e-12) {
            scan = std::fabs(*f0) < 1e-9;
          } else {
            const double x = type.lo - *f0 / s;
            const double r = std::round(x);
            if (std::fabs(x - r) < 1e-7 && r >= type.lo && r <= type.hi) {
              candidate = Value::Int(static_cast<int64_t>(r));
            }
          }
        }
      } else if (type.kind == TypeKind::kBool && !(a.e->kind == ExprKind::kBinary)) {
        candidate = Value::Bool(a.e->kind == ExprKind::kVar);
      } else {
        const ExprPtr& other =
            IsVar(a.e->args[0], slot, side) ? a.e->args[1] : a.e->args[0];
        absl::StatusOr<Value> v = Eval(other, p_, &m1, &m2);
        if (v.ok() && type.Contains(*v)) candidate = *v;
      }
      if (scan) {
        for (const Value& v : dom) {
          if ((stop = try_value(v))) break;
        }
      } else if (candidate) {
        stop = try_value(*candidate);
      }
    } else {
      size_t lo = 0, hi = dom.size();
      if (!plan.narrow.empty()) {
        double xlo = static_cast<double>(type.lo);
        double xhi = static_cast<double>(type.hi);
        for (int i : plan.narrow) {
          const Atom& a = prob.atoms[i];
          slot_ref = Value::Int(type.lo);
          absl::StatusOr<double> f0 = diff(a.e);
          slot_ref = Value::Int(type.lo + 1);
          absl::StatusOr<double> f1 = diff(a.e);
          if (!f0.ok() || !f1.ok()) continue;
          const double s = *f1 - *f0;
          Op op = a.e->op;
          if (a.negated) {
            op = op == Op::kLt ? Op::kGe
                 : op == Op::kLe ? Op::kGt
                 : op == Op::kGt ? Op::kLe
                                 : Op::kLt;
          }
          // f(x) = f0 + s (x - lo)  op  0
          if (std::fabs(s) < 1e-12) continue;
          const double root = type.lo - *f0 / s;
          const bool want_pos = op == Op::kGt || op == Op::kGe;
          const bool want_neg = op == Op::kLt || op == Op::kLe;
          if (op == Op::kEq) {
            xlo = std::max(xlo, root - 1);
            xhi = std::min(xhi, root + 1);
          } else if ((want_pos && s > 0) || (want_neg && s < 0)) {
            xlo = std::max(xlo, root - 1);
          } else {
            xhi = std::min(xhi, root + 1);
          }
        }
        if (xlo > xhi) {
          slot_ref = saved;
          return false;
        }
        lo = static_cast<size_t>(std::max(0.0, std::floor(xlo) - type.lo));
        hi = static_cast<size_t>(
            std::min<double>(dom.size(), std::ceil(xhi) - type.lo + 1));
      }
      for (size_t k = lo; k < hi; ++k) {
        if ((stop = try_value(dom[k]))) break;
      }
    }
    slot_ref = saved;
    return stop;
  };
  rec(0);
  if (!error.ok()) return error;
  return found;
}

absl::StatusOr<bool> ImplicationEngine::ComponentSatisfiable(
    const std::vector<Atom>& comp, Memory* m1, Memory* m2) {
  std::vector<std::string> texts;
  std::set<int> vars;
  for (const Atom& a : comp) {
    texts.push_back(ToString(a.e));
    vars.insert(a.vars.begin(), a.vars.end());
  }
  std::sort(texts.begin(), texts.end());
  const std::string key = absl::StrJoin(texts, " && ");
  auto it = sat_cache_.find(key);
  if (it == sat_cache_.end()) {
    Problem prob{comp, {vars.begin(), vars.end()}};
    std::optional<std::pair<Memory, Memory>> model;
    DPC_ASSIGN_OR_RETURN(bool found,
                         Search(prob, [&](const Memory& a, const Memory& b) {
                           model = std::make_pair(a, b);
                           return true;
                         }));
    (void)found;
    it = sat_cache_.emplace(key, std::move(model)).first;
  }
  if (!it->second) return false;
  for (int v : vars) {
    const auto [slot, side] = keys_[v];
    if (side == 2) {
      (*m2)[slot] = it->second->second[slot];
    } else {
      (*m1)[slot] = it->second->first[slot];
    }
  }
  return true;
}

absl::StatusOr<ImplicationOutcome> ImplicationEngine::CheckGoal(
    std::vector<ExprPtr> ants, const ExprPtr& goal) {
  ImplicationOutcome valid;
  const std::string goal_text = ToString(goal);
  if (goal->kind == ExprKind::kLit && goal->lit.is_bool() &&
      goal->lit.as_bool()) {
    return valid;
  }
  std::vector<std::string> ant_texts;
  for (const ExprPtr& a : ants) {
    ant_texts.push_back(ToString(a));
    if (ant_texts.back() == goal_text) return valid;
  }

  // Components of the antecedent by shared variables.
  std::vector<Atom> atoms;
  std::vector<std::string> atom_texts;
  for (size_t i = 0; i < ants.size(); ++i) {
    Atom a = MakeAtom(ants[i], false);
    if (a.vars.empty()) {
      absl::StatusOr<bool> r = EvalBool(a.e, p_, &default_, &default_);
      if (!r.ok() || !*r) return valid;  // antecedent is false
      continue;
    }
    atoms.push_back(std::move(a));
    atom_texts.push_back(ant_texts[i]);
  }
  Atom neg = MakeAtom(goal, true);
  std::vector<int> parent(keys_.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };
  for (const Atom& a : atoms) {
    for (size_t j = 1; j < a.vars.size(); ++j) {
      parent[find(a.vars[j])] = find(a.vars[0]);
    }
  }
  std::set<int> goal_roots;
  for (int v : neg.vars) goal_roots.insert(find(v));

  Problem relevant;
  std::map<int, std::vector<Atom>> others;
  std::vector<std::string> rel_texts;
  for (size_t i = 0; i < atoms.size(); ++i) {
    const int root = find(atoms[i].vars[0]);
    if (goal_roots.count(root)) {
      relevant.atoms.push_back(atoms[i]);
      rel_texts.push_back(atom_texts[i]);
    } else {
      others[root].push_back(atoms[i]);
    }
  }
  relevant.atoms.push_back(neg);
  std::set<int> rel_vars;
  for (const Atom& a : relevant.atoms) {
    rel_vars.insert(a.vars.begin(), a.vars.end());
  }
  relevant.vars.assign(rel_vars.begin(), rel_vars.end());
  std::sort(rel_texts.begin(), rel_texts.end());
  const std::string key =
      absl::StrCat(absl::StrJoin(rel_texts, " && "), " |- ", goal_text);

  auto it = cache_.find(key);
  if (it == cache_.end()) {
    ImplicationOutcome out;
    DPC_ASSIGN_OR_RETURN(
        bool found, Search(relevant, [&](const Memory& a, const Memory& b) {
          out.counterexample = Counterexample{a, b, goal_text};
          return true;
        }));
    out.valid = !found;
    it = cache_.emplace(key, std::move(out)).first;
  }
  if (it->second.valid) return valid;

  ImplicationOutcome out = it->second;
  for (auto& [root, comp] : others) {
    DPC_ASSIGN_OR_RETURN(bool sat,
                         ComponentSatisfiable(comp, &out.counterexample->m1,
                                              &out.counterexample->m2));
    if (!sat) return valid;
  }
  return out;
}

absl::StatusOr<ImplicationOutcome> ImplicationEngine::Implies(
    const ExprPtr& antecedent, const ExprPtr& goal) {
  std::function<absl::StatusOr<ImplicationOutcome>(std::vector<ExprPtr>,
                                                   const ExprPtr&)>
      process = [&](std::vector<ExprPtr> ants, const ExprPtr& g)
      -> absl::StatusOr<ImplicationOutcome> {
    for (const ExprPtr& gi : Flatten(g)) {
      ImplicationOutcome r;
      if (gi->kind == ExprKind::kBinary && gi->op == Op::kImplies) {
        std::vector<ExprPtr> more = ants;
        for (const ExprPtr& x : Flatten(gi->args[0])) more.push_back(x);
        DPC_ASSIGN_OR_RETURN(r, process(std::move(more), gi->args[1]));
      } else if (gi->kind == ExprKind::kBinary && gi->op == Op::kIff) {
        for (int dir = 0; dir < 2 && r.valid; ++dir) {
          std::vector<ExprPtr> more = ants;
          for (const ExprPtr& x : Flatten(gi->args[dir])) more.push_back(x);
          DPC_ASSIGN_OR_RETURN(r, process(std::move(more), gi->args[1 - dir]));
        }
      } else {
        DPC_ASSIGN_OR_RETURN(r, CheckGoal(ants, gi));
      }
      if (!r.valid) return r;
    }
    return ImplicationOutcome{};
  };
  return process(Flatten(antecedent), goal);
}

absl::StatusOr<std::optional<std::pair<Memory, Memory>>>
ImplicationEngine::Satisfying(const ExprPtr& a) {
  DPC_ASSIGN_OR_RETURN(ImplicationOutcome r, Implies(a, False()));
  if (r.valid) return std::optional<std::pair<Memory, Memory>>();
  return std::make_optional(
      std::make_pair(r.counterexample->m1, r.counterexample->m2));
}

absl::Status ImplicationEngine::ForEachModel(
    const ExprPtr& a, const std::set<VarKey>& vars,
    const std::function<absl::Status(const Memory&, const Memory&)>& visit) {
  Problem prob;
  std::set<int> all;
  for (const ExprPtr& c : Flatten(a)) {
    prob.atoms.push_back(MakeAtom(c, false));
    all.insert(prob.atoms.back().vars.begin(), prob.atoms.back().vars.end());
  }
  for (const VarKey& k : vars) all.insert(KeyIndex(k));
  prob.vars.assign(all.begin(), all.end());
  absl::Status status;
  DPC_ASSIGN_OR_RETURN(bool stopped,
                       Search(prob, [&](const Memory& m1, const Memory& m2) {
                         status = visit(m1, m2);
                         return !status.ok();
                       }));
  (void)stopped;
  return status;
}

}  // namespace dpcouple
