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

// Acceptance runner. Prints one line per criterion and exits nonzero when
// any selected criterion fails. Usage: acceptance [N ...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "dpcouple/aprhl.h"
#include "dpcouple/composition.h"
#include "dpcouple/interp.h"
#include "dpcouple/laplace.h"
#include "dpcouple/lifting.h"
#include "dpcouple/mechanisms.h"
#include "dpcouple/parser.h"
#include "dpcouple/status.h"
#include "test_util.h"

namespace dpcouple {
namespace {

using testing::IntRange;
using testing::RandomDistr;

struct Outcome {
  bool pass = true;
  std::string detail;

  // Records a failed check; keeps the first few messages.
  void Fail(const std::string& why) {
    if (pass || failures < 4) {
      detail += (detail.empty() ? "" : "; ") + why;
    }
    pass = false;
    ++failures;
  }
  int failures = 0;
};

std::string Src(const std::string& rel) {
  return std::string(DPCOUPLE_SOURCE_DIR) + "/" + rel;
}

std::string Num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

// 1. Divergence oracle equivalence.
Outcome Divergence() {
  Outcome o;
  std::mt19937 rng(101);
  std::uniform_int_distribution<int> size(1, 12);
  std::uniform_real_distribution<double> ueps(0.0, 2.0);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const int s1 = size(rng);
    const int s2 = std::uniform_int_distribution<int>(1, 12)(rng);
    const int off = std::uniform_int_distribution<int>(0, 12 - s2)(rng);
    Distr a = RandomDistr(rng, s1);
    Distr b = RandomDistr(rng, s2, off);
    const double eps = ueps(rng);
    const double fast = *DpDivergence(a, b, eps);
    absl::StatusOr<double> brute = DpDivergenceBruteforce(a, b, eps);
    if (!brute.ok()) {
      o.Fail(brute.status().ToString());
      continue;
    }
    worst = std::max(worst, std::fabs(fast - *brute));
    if (std::fabs(fast - *brute) > 1e-12) o.Fail(absl::StrCat("trial ", trial));
  }
  o.detail = absl::StrCat("500 instances, max |fast - brute| = ", Num(worst),
                          o.detail.empty() ? "" : "; ", o.detail);
  return o;
}

// 2. Laplace closed forms and the accuracy tail on the grid.
Outcome LaplaceForms() {
  Outcome o;
  auto [d, spec] = *TruncatedLaplace(std::log(2.0), 0, 60);
  const double p0 = d.Prob(Value::Int(0)), p1 = d.Prob(Value::Int(1)),
               pm1 = d.Prob(Value::Int(-1));
  if (std::fabs(p0 - 1.0 / 3) > 1e-12 || std::fabs(p1 - 1.0 / 6) > 1e-12 ||
      std::fabs(pm1 - 1.0 / 6) > 1e-12) {
    o.Fail(absl::StrCat("ln2 masses ", p0, " ", p1, " ", pm1));
  }
  std::vector<std::string> over;
  for (double eps : {0.1, 0.5, 1.0}) {
    for (double beta : {0.5, 0.1, 0.01}) {
      const double bound = *LaplaceAccuracyBound(eps, beta);
      // Tail of the radius-2000 truncation summed directly, plus its own
      // truncated remainder.
      auto [lap, ls] = *TruncatedLaplace(eps, 0, 2000);
      double outside = 0.0;
      for (const auto& [v, w] : lap.entries()) {
        if (std::fabs(static_cast<double>(v.as_int())) > bound) outside += w;
      }
      const double tail = outside * (1.0 - ls.tail_mass) + ls.tail_mass;
      if (std::fabs(tail - LaplaceExactTail(eps, bound)) > 1e-12) {
        o.Fail(absl::StrCat("tail oracle mismatch at ", eps, "/", beta));
      }
      if (tail > beta) over.push_back(absl::StrCat("(", eps, ",", beta, "): ", Num(tail)));
    }
  }
  o.detail = "ln2 masses 1/3, 1/6, 1/6";
  if (!over.empty()) {
    o.pass = false;
    o.detail += absl::StrCat("; Pr[|nu| > ln(1/beta)/eps] exceeds beta at ",
                             over.size(), " of 9 grid points ",
                             absl::StrJoin(over, " "));
  } else {
    o.detail += "; tail <= beta on all 9 grid points";
  }
  return o;
}

Distr RandomOnUniverse(std::mt19937& rng, int n) {
  return RandomDistr(rng, n, 0, 0.15);
}

// 3. Optimal subset coupling.
Outcome SubsetCouplings() {
  Outcome o;
  std::mt19937 rng(303);
  std::bernoulli_distribution coin(0.5);
  const std::vector<Value> universe = IntRange(0, 8);
  int strict = 0, done = 0, clamped = 0;
  while (done < 200) {
    Distr mu = RandomOnUniverse(rng, 8);  // support within 0..7
    std::vector<Value> p, q;
    for (int i = 0; i < 8; ++i) {
      if (coin(rng)) {
        p.push_back(Value::Int(i));
        if (coin(rng)) q.push_back(Value::Int(i));
      }
    }
    double mp = 0.0, mq = 0.0;
    for (const Value& v : p) mp += mu.Prob(v);
    for (const Value& v : q) mq += mu.Prob(v);
    if (q.empty() || mq == 0.0) continue;
    ++done;
    absl::StatusOr<SubsetCoupling> sc = OptimalSubsetCoupling(mu, p, q, universe);
    if (!sc.ok()) {
      o.Fail(sc.status().ToString());
      continue;
    }
    const double eps = std::log(mp / mq);
    Relation rel = SubsetRelation(p, q);
    rel.universe1 = rel.universe2 = universe;
    WitnessReport rep = CheckWitnesses(mu, mu, rel, std::max(eps, 0.0), 0.0,
                                       sc->witnesses);
    if (!rep.ok || rep.marginal1_error > 1e-9 || rep.marginal2_error > 1e-9 ||
        rep.divergence > 1e-9) {
      o.Fail(absl::StrCat("witnesses: ", rep.Summary()));
    }
    if (mp - mq > 0.0) {
      ++strict;
      double below = eps - 0.01;
      if (below < 0.0) {
        // Feasibility is monotone in eps; eps = 0 is the smallest test point.
        below = 0.0;
        ++clamped;
      }
      absl::StatusOr<LiftingResult> lr = LiftingExists(mu, mu, rel, below, 0.0);
      if (!lr.ok()) {
        o.Fail(lr.status().ToString());
      } else if (lr->feasible) {
        o.Fail(absl::StrCat("feasible below ln alpha (", eps, ")"));
      }
    }
  }
  o.detail = absl::StrCat("200 instances, ", strict,
                          " with mu(P\\Q) > 0 infeasible at ln alpha - 0.01",
                          clamped ? absl::StrCat(" (", clamped, " tested at eps 0)") : "",
                          o.detail.empty() ? "" : "; ", o.detail);
  return o;
}

// 4. Equality lifting versus the forward divergence criterion.
Outcome LiftFund() {
  Outcome o;
  std::mt19937 rng(404);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int explained = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Distr mu1 = RandomDistr(rng, 1 + trial % 8);
    Distr mu2 = RandomDistr(rng, 1 + (trial * 3) % 8);
    const double eps = 0.6 * u(rng), delta = 0.3 * u(rng);
    const double fwd = *DpDivergence(mu1, mu2, eps);
    const double bwd = *DpDivergence(mu2, mu1, eps);
    absl::StatusOr<LiftingResult> r =
        LiftingExists(mu1, mu2, Relation::Equality(), eps, delta);
    if (!r.ok()) {
      o.Fail(r.status().ToString());
      continue;
    }
    if (std::fabs(fwd - delta) < 1e-9) continue;  // on the boundary
    if (r->feasible != (fwd <= delta)) {
      o.Fail(absl::StrCat("trial ", trial, " forward ", fwd, " delta ", delta));
    }
    const bool both = fwd <= delta && bwd <= delta;
    if (both != r->feasible) {
      if (bwd > delta) {
        ++explained;
      } else {
        o.Fail(absl::StrCat("trial ", trial, " unexplained"));
      }
    }
  }
  o.detail = absl::StrCat("200 pairs agree with Delta_eps(mu1, mu2) <= delta; ",
                          explained,
                          " differ from the two-sided reading, all with reverse divergence > delta",
                          o.detail.empty() ? "" : "; ", o.detail);
  return o;
}

// 5. Backward transport round trip.
Outcome LiftEr() {
  Outcome o;
  std::mt19937 rng(505);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int na = 4 + trial % 4, nb = 2 + trial % 3;
    std::vector<int> table;
    for (int b = 0; b < nb; ++b) table.push_back(b);
    while (static_cast<int>(table.size()) < na) {
      table.push_back(std::uniform_int_distribution<int>(0, nb - 1)(rng));
    }
    std::shuffle(table.begin(), table.end(), rng);
    ValueFn f = [table](const Value& v) { return Value::Int(table[v.as_int()]); };
    Distr mu1 = RandomDistr(rng, na), mu2 = RandomDistr(rng, na);
    Distr b1 = mu1.Pushforward<Value>(f), b2 = mu2.Pushforward<Value>(f);
    std::set<std::pair<int64_t, int64_t>> edges;
    for (int a = 0; a < nb; ++a) {
      edges.insert({a, a});
      for (int b = 0; b < nb; ++b) {
        if (u(rng) < 0.3) edges.insert({a, b});
      }
    }
    Relation rb;
    rb.holds = [edges](const Value& a, const Value& b) {
      return edges.count({a.as_int(), b.as_int()}) > 0;
    };
    rb.universe1 = rb.universe2 = IntRange(0, nb - 1);
    const double eps = u(rng);
    LiftingResult nu = *LiftingExists(b1, b2, rb, eps, 1.0);
    if (!nu.feasible) {
      o.Fail(absl::StrCat("trial ", trial, " no witnesses on B"));
      continue;
    }
    absl::StatusOr<WitnessPair> back =
        TransportBackward(*nu.witnesses, f, mu1, mu2, IntRange(0, na - 1));
    if (!back.ok()) {
      o.Fail(back.status().ToString());
      continue;
    }
    Relation pulled;
    pulled.holds = [&](const Value& a, const Value& b) { return rb.holds(f(a), f(b)); };
    WitnessReport rep = CheckWitnesses(mu1, mu2, pulled, eps, nu.delta_min, *back);
    if (!rep.ok) o.Fail(absl::StrCat("trial ", trial, ": ", rep.Summary()));
  }
  o.detail = absl::StrCat("100 surjective instances", o.detail.empty() ? "" : "; ",
                          o.detail);
  return o;
}

// 6. Advanced composition.
Outcome Advanced() {
  Outcome o;
  const double got = AdvBudget(16, 0.1, 0.0, std::exp(-2.0))->eps;
  const double want = 0.8 + 1.6 * std::expm1(0.1);
  if (std::fabs(got - want) > 1e-9) o.Fail(absl::StrCat("adv_budget ", got));
  for (double ep : {0.1, 0.5, 0.99}) {
    for (int n : {1, 10, 100}) {
      for (double w : {0.01, 0.49}) {
        const double e = *AdvTargetEpsilon(ep, n, w);
        if (AdvBudget(n, e, 0.0, w)->eps > ep) {
          o.Fail(absl::StrCat("target eps at ", ep, "/", n, "/", w));
        }
      }
    }
  }
  // Random two-sided kernels: g reweights f by factors within e^{+-eps/2}.
  std::mt19937 rng(606);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int instances = 0;
  for (int states = 2; states <= 6; ++states) {
    for (int n = 1; n <= 6; ++n) {
      for (int rep = 0; rep < 2; ++rep) {
        const double eps = 0.05 + 0.3 * u(rng);
        std::vector<Kernel> fs, gs;
        for (int i = 0; i < n; ++i) {
          std::vector<Distr> f_rows, g_rows;
          for (int a = 0; a < states; ++a) {
            Distr f = RandomDistr(rng, states, 0, 0.0);
            std::vector<std::pair<Value, double>> g;
            double total = 0.0;
            for (const auto& [v, w] : f.entries()) {
              const double scaled = w * std::exp(eps * (u(rng) - 0.5));
              g.emplace_back(v, scaled);
              total += scaled;
            }
            for (auto& e : g) e.second /= total;
            f_rows.push_back(f);
            g_rows.push_back(*Distr::Make(g));
          }
          fs.push_back([f_rows](const Value& a, const std::optional<Value>&) {
            return absl::StatusOr<Distr>(f_rows[a.as_int()]);
          });
          gs.push_back([g_rows](const Value& a, const std::optional<Value>&) {
            return absl::StatusOr<Distr>(g_rows[a.as_int()]);
          });
        }
        const double omega = 0.05 + 0.4 * u(rng);
        absl::StatusOr<AdvCompositionReport> r = ValidateAdvCompositionDistance(
            fs, gs, n, eps, 0.0, omega, IntRange(0, states - 1));
        ++instances;
        if (!r.ok()) {
          o.Fail(r.status().ToString());
        } else if (!r->ok) {
          o.Fail(absl::StrCat("states ", states, " n ", n, " gap ", r->worst_gap));
        }
      }
    }
  }
  o.detail = absl::StrCat("adv_budget(16, 0.1, 0, e^-2).eps = ", Num(got),
                          "; target-eps grid of 18 points; ", instances,
                          " kernel instances", o.detail.empty() ? "" : "; ", o.detail);
  return o;
}

// 7. Interval mass inequality.
Outcome LapIntLemma() {
  Outcome o;
  auto alpha = [](double eps, int a, int b, int ap, int bp) {
    const int eta = (bp - ap) - (b - a);
    return std::exp(eta * eps) / (1.0 - std::exp(-(b - a + 2) * eps / 2.0));
  };
  // e^2 / (1 - e^-3), evaluated in long double.
  const double example = alpha(1.0, -2, 2, -3, 3);
  const long double oracle = std::exp(2.0L) / (1.0L - std::exp(-3.0L));
  if (std::fabs(example - static_cast<double>(oracle)) > 1e-12 ||
      std::fabs(example - 7.7762108396) > 1e-9) {
    o.Fail(absl::StrCat("alpha ", example));
  }
  size_t cases = 0;
  double tightest = INFINITY;
  for (double eps : {0.1, 0.5, 1.0}) {
    for (int ap = -20; ap <= 20; ++ap) {
      for (int bp = ap + 1; bp <= 20; ++bp) {
        const double outer = *LapIntervalMass(eps, ap, bp);
        for (int a = ap; a <= bp; ++a) {
          for (int b = a + 1; b <= bp; ++b) {
            const double inner = *LapIntervalMass(eps, a, b);
            const double rhs = alpha(eps, a, b, ap, bp) * inner;
            ++cases;
            tightest = std::min(tightest, rhs / outer);
            if (outer > rhs) {
              o.Fail(absl::StrCat("eps ", eps, " [", a, ",", b, "] in [", ap, ",", bp, "]"));
            }
          }
        }
      }
    }
  }
  o.detail = absl::StrCat("alpha(-2,2,-3,3,1) = ", Num(example), "; ", cases,
                          " nested interval pairs, min rhs/lhs = ", absl::StrFormat("%.9f", tightest),
                          o.detail.empty() ? "" : "; ", o.detail);
  return o;
}

// 8. PTR end to end.
Outcome Ptr() {
  Outcome o;
  absl::StatusOr<DerivationReport> r = CheckProofFile(Src("examples/ptr.proof.json"));
  if (!r.ok() || !r->ok) {
    o.Fail(r.ok() ? r->message : r.status().ToString());
    return o;
  }
  if (std::fabs(r->budget.eps - 1.0) > 1e-9 || std::fabs(r->budget.delta - 0.1) > 1e-9) {
    o.Fail(absl::StrCat("budget ", r->budget.eps, ", ", r->budget.delta));
  }
  ValidationOptions opts;
  opts.interp.lap_radius = DefaultLaplaceRadius(1.0);
  absl::StatusOr<JudgmentValidation> v =
      ValidateJudgmentEmpirical(*r->program, *r->root, opts);
  if (!v.ok()) {
    o.Fail(v.status().ToString());
    return o;
  }
  if (!v->ok) o.Fail(absl::StrCat("validation margin ", v->worst_margin));
  if (v->worst_slack > 1e-6) o.Fail(absl::StrCat("slack ", v->worst_slack));
  o.detail = absl::StrCat("checked to (", Num(r->budget.eps), ", ", Num(r->budget.delta),
                          "); ", v->pairs, " adjacent pairs, worst needed delta ",
                          Num(v->worst_needed_delta), ", slack ", Num(v->worst_slack),
                          o.detail.empty() ? "" : "; ", o.detail);
  return o;
}

constexpr char kSingleTest[] = R"(
decls {
  const eps = 1.0;
  const delta = 0.5;
  const M = 1;
  const eps1 = eps / (4 * sqrt(2 * M * ln(2 / delta)));
  query q_first(x) = x[0];
  query q_second(x) = x[1];
  query q_total(x) = x[0] + x[1];
  d : list<int[0,3]>[len 2];
  q : query;
  A : int[-2,2];
  B : int[135,139];
  S : int[-1300,1306];
  r : bool;
}
S <-$ lap(eps1 / 3, evalQ(q, d));
r := A <= S && S <= B;
return r;
)";

// 9. ASV between thresholds. The tiny-instance radius trades run time for
// a tighter truncation bound at noise scale eps'/3, about 0.05.
int kTinyRadius = 40;

Outcome Asvbt() {
  Outcome o;
  AsvbtParams par = *ComputeAsvbtParams(1.0, 0.5, 1);
  const long double ep = 1.0L / (4.0L * std::sqrt(2.0L * std::log(4.0L)));
  const long double gamma = (6.0L / ep) * std::log(4.0L / ep) + 4.0L * std::log(4.0L);
  if (std::fabs(par.eps_prime - static_cast<double>(ep)) > 1e-6 ||
      std::fabs(par.gamma - static_cast<double>(gamma)) > 1e-6) {
    o.Fail(absl::StrCat("params ", par.eps_prime, " ", par.gamma));
  }
  absl::StatusOr<DerivationReport> r = CheckProofFile(Src("examples/asvbt.proof.json"));
  if (!r.ok() || !r->ok) {
    o.Fail(r.ok() ? absl::StrCat(r->message, " at ", r->failed_path)
                  : r.status().ToString());
  } else if (std::fabs(r->budget.eps - 1.0) > 1e-9 ||
             std::fabs(r->budget.delta - 0.5) > 1e-9) {
    o.Fail(absl::StrCat("budget ", r->budget.eps, ", ", r->budget.delta));
  }
  const size_t nodes = r.ok() ? r->nodes.size() : 0;

  // Critical step, one Laplace sample against coupled thresholds.
  auto p = std::make_shared<const Program>(*ParseProgram(kSingleTest));
  RelJudgment j;
  j.c1 = j.c2 = p->body;
  j.pre = *ParseAssertion(
      absl::StrCat("adj(d<1>, d<2>) && q<1> = q<2> && A<1> + 1 = A<2> && "
                   "B<1> = B<2> + 1 && A<1> + B<1> = 137 && B<1> - A<1> >= ",
                   par.sigma),
      *p, AssertionMode::kRelational);
  j.post = *ParseAssertion("r<1> = r<2>", *p, AssertionMode::kRelational);
  j.budget = {par.eps_prime, 0.0};
  JudgmentValidation crit = *ValidateJudgmentEmpirical(*p, j);
  if (!crit.ok) o.Fail(absl::StrCat("critical step margin ", crit.worst_margin));

  // Tiny instance: both variants under one truncation.
  AsvbtConfig c;
  c.b = 6;
  c.with_proof = false;
  c.u_margin = kTinyRadius + 2;
  c.s_margin = kTinyRadius + 2;
  BuiltMechanism orig = *BuildAsvbt(c, AsvbtVariant::kOriginal);
  BuiltMechanism tr = *BuildAsvbt(c, AsvbtVariant::kTransformed);
  const std::vector<NamedAdversaries> b1 = AdversaryBattery(*orig.program);
  const std::vector<NamedAdversaries> b2 = AdversaryBattery(*tr.program);
  InterpOptions io;
  io.lap_radius = kTinyRadius;
  double worst_gap = 0.0, worst_slack = 0.0;
  int runs = 0;
  for (size_t a = 0; a < b1.size(); ++a) {
    for (const Value& d : c.space.All()) {
      std::map<Value, double> out[2];
      double slack = 0.0;
      const BuiltMechanism* ms[2] = {&orig, &tr};
      for (int v = 0; v < 2; ++v) {
        const Program& prog = *ms[v]->program;
        Memory m = DefaultMemory(prog);
        m[prog.Slot("d")] = d;
        io.adversaries = v == 0 ? &b1[a].impls : &b2[a].impls;
        InterpResult res = *Interpret(prog, prog.body, m, io);
        slack += res.truncation_slack;
        for (const auto& [mem, w] : res.out.entries()) out[v][mem[prog.Slot("l")]] += w;
      }
      ++runs;
      worst_slack = std::max(worst_slack, slack);
      for (int v = 0; v < 2; ++v) {
        for (const auto& [key, w] : out[v]) {
          const double gap = std::fabs(w - out[1 - v][key]);
          worst_gap = std::max(worst_gap, gap);
          if (gap > slack + 1e-12) o.Fail(absl::StrCat(b1[a].name, " ", d.ToString()));
        }
      }
    }
  }
  o.detail = absl::StrCat(
      "eps' = ", Num(par.eps_prime), ", gamma = ", Num(par.gamma), "; proof of ", nodes,
      " nodes checked to (1, 0.5); critical step passes at eps' over ", crit.pairs,
      " pairs; variants agree on ", runs, " runs (max gap ", Num(worst_gap),
      ", slack ", Num(worst_slack), ")", o.detail.empty() ? "" : "; ", o.detail);
  return o;
}

// 10. Random programs with valid derivations, and budget mutations.
class ProofGen {
 public:
  static constexpr int kBound = 20;
  static constexpr int kRadius = 6;

  explicit ProofGen(std::mt19937& rng) : rng_(rng) {}

  struct Piece {
    std::string text;
    Json proof;
    double eps = 0.0;
    double delta = 0.0;
  };
  struct State {
    std::set<std::string> eq;
    std::map<std::string, std::pair<int, int>> range;
    bool used_loop = false;
  };

  static std::string Assert(const std::set<std::string>& eq) {
    std::string s = "abs(d<1> - d<2>) <= 1";
    for (const std::string& v : eq) absl::StrAppend(&s, " && ", v, "<1> = ", v, "<2>");
    return s;
  }

  static Json Node(const std::string& rule, const std::string& c, const std::string& pre,
                   const std::string& post, double eps, double delta,
                   Json children = Json::array(), Json params = Json::object()) {
    Json n = {{"rule", rule},
              {"conclusion",
               {{"c1", c}, {"c2", c}, {"pre", pre}, {"post", post},
                {"eps", eps}, {"delta", delta}}}};
    if (!params.empty()) n["params"] = params;
    if (!children.empty()) n["children"] = children;
    return n;
  }

  int Pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool Chance(double p) { return std::bernoulli_distribution(p)(rng_); }
  double PickEps() {
    static const double kEps[] = {0.4, 0.5, 0.6, 0.75, 0.8, 1.0};
    return kEps[Pick(0, 5)];
  }
  std::string PickVar(const std::vector<std::string>& from) {
    return from[Pick(0, static_cast<int>(from.size()) - 1)];
  }
  static bool Fits(int lo, int hi) { return lo >= -kBound && hi <= kBound; }

  // v <-$ lap(e, center) with a center of sensitivity 1 or 2 in d.
  Piece SampleSecret(State& s, const std::string& v) {
    const double e = PickEps();
    const int c = Pick(-2, 2);
    std::string center;
    int lo, hi, sens;
    switch (Pick(0, 2)) {
      case 0:
        center = absl::StrCat("d + ", c);
        lo = c, hi = c + 2, sens = 1;
        break;
      case 1:
        center = absl::StrCat(c, " - d");
        lo = c - 2, hi = c, sens = 1;
        break;
      default:
        center = "2 * d";
        lo = 0, hi = 4, sens = 2;
    }
    // Occasionally a loose shift bound: still valid, just more expensive.
    const int kp = sens + (Chance(0.2) ? 1 : 0);
    Piece out;
    out.text = absl::StrCat(v, " <-$ lap(", e, ", ", center, ");");
    const std::string pre = Assert(s.eq);
    s.eq.insert(v);
    s.range[v] = {lo - kRadius, hi + kRadius};
    out.eps = kp * e;
    out.proof = Node("LapGen", out.text, pre, Assert(s.eq), out.eps, 0.0,
                     Json::array(), {{"k", 0}, {"kprime", kp}});
    return out;
  }

  // v <-$ lap(e, u) with u already equal on both sides.
  bool SamplePublic(State& s, const std::string& v, Piece* out) {
    std::vector<std::string> srcs;
    for (const std::string& u : s.eq) {
      if (u != v && Fits(s.range[u].first - kRadius, s.range[u].second + kRadius)) {
        srcs.push_back(u);
      }
    }
    if (srcs.empty()) return false;
    const std::string u = PickVar(srcs);
    out->text = absl::StrCat(v, " <-$ lap(", PickEps(), ", ", u, ");");
    const std::string pre = Assert(s.eq);
    s.eq.insert(v);
    s.range[v] = {s.range[u].first - kRadius, s.range[u].second + kRadius};
    out->proof = Node("LapNull", out->text, pre, Assert(s.eq), 0.0, 0.0);
    return true;
  }

  Piece Assign(State& s, const std::string& v) {
    Piece out;
    std::vector<std::string> srcs(s.eq.begin(), s.eq.end());
    const int c = Pick(-3, 3);
    std::string rhs;
    std::pair<int, int> r{c, c};
    if (!srcs.empty() && Chance(0.7)) {
      const std::string u = PickVar(srcs);
      const auto [lo, hi] = s.range[u];
      switch (Pick(0, 2)) {
        case 0:
          rhs = u, r = {lo, hi};
          break;
        case 1:
          rhs = absl::StrCat(u, " > ", c, " ? 1 : 0"), r = {0, 1};
          break;
        default:
          rhs = absl::StrCat("-", u), r = {-hi, -lo};
      }
    } else {
      rhs = absl::StrCat(c);
    }
    out.text = absl::StrCat(v, " := ", rhs, ";");
    const std::string pre = Assert(s.eq);
    s.eq.insert(v);
    s.range[v] = r;
    out.proof = Node(Chance(0.5) ? "Assn" : "Wp", out.text, pre, Assert(s.eq), 0.0, 0.0);
    return out;
  }

  Piece Simple(State& s) {
    const std::string v = PickVar({"x", "y", "z"});
    Piece p;
    const int kind = Pick(0, 2);
    if (kind == 1 && SamplePublic(s, v, &p)) return p;
    if (kind == 2) return Assign(s, v);
    return SampleSecret(s, v);
  }

  // if u > c then { A } else { B } on an equal guard variable.
  bool Branch(State& s, Piece* out) {
    if (s.eq.empty()) return false;
    const std::string u = PickVar(std::vector<std::string>(s.eq.begin(), s.eq.end()));
    const int c = Pick(-2, 2);
    State st = s, sf = s;
    Piece t = Simple(st), f = Simple(sf);
    State joined = s;
    joined.eq.clear();
    for (const std::string& v : st.eq) {
      if (sf.eq.count(v)) joined.eq.insert(v);
    }
    for (const auto& [v, r] : st.range) joined.range[v] = r;
    for (const auto& [v, r] : sf.range) {
      auto it = joined.range.find(v);
      joined.range[v] = it == joined.range.end()
                            ? r
                            : std::make_pair(std::min(it->second.first, r.first),
                                             std::max(it->second.second, r.second));
    }
    // Variables assigned on one side only keep their old range too.
    for (const auto& [v, r] : s.range) {
      auto& jr = joined.range[v];
      jr = {std::min(jr.first, r.first), std::max(jr.second, r.second)};
    }
    out->text = absl::StrCat("if ", u, " > ", c, " then { ", t.text, " } else { ",
                             f.text, " }");
    out->eps = std::max(t.eps, f.eps);
    out->proof = Node("Cond", out->text, Assert(s.eq), Assert(joined.eq), out->eps,
                      0.0, Json::array({t.proof, f.proof}));
    s = joined;
    return true;
  }

  // i := 0; v := c; while i < n cap n { v <-$ lap(e, d + c'); i := i + 1; }
  bool Loop(State& s, Piece* pre_piece, Piece* loop) {
    if (s.used_loop) return false;
    s.used_loop = true;
    const int n = Pick(1, 2);
    const std::string v = PickVar({"x", "y", "z"});
    const double e = PickEps();
    const int c = Pick(-2, 2);
    pre_piece->text = absl::StrCat("i := 0; ", v, " := 0;");
    const std::string pre0 = Assert(s.eq);
    s.eq.insert("i");
    s.eq.insert(v);
    s.range["i"] = {0, n};
    s.range[v] = {std::min(0, c - kRadius), std::max(0, c + 2 + kRadius)};
    const std::string theta = Assert(s.eq);
    pre_piece->proof = Node("Assn", pre_piece->text, pre0, theta + " && i<1> = 0", 0, 0);

    const std::string sample = absl::StrCat(v, " <-$ lap(", e, ", d + ", c, ");");
    const std::string body = absl::StrCat(sample, " i := i + 1;");
    loop->text = absl::StrCat("while i < ", n, " cap ", n, " { ", body, " }");
    Json kids = Json::array();
    for (int k = 1; k <= n; ++k) {
      const std::string pk = absl::StrCat(theta, " && i<1> < ", n, " && i<2> < ", n,
                                          " && ", n, " - i<1> = ", k);
      const std::string post = absl::StrCat(theta, " && (i<1> < ", n, ") = (i<2> < ", n,
                                            ") && ", n, " - i<1> < ", k);
      kids.push_back(Node("Seq", body, pk, post, e, 0,
                          Json::array({Node("LapGen", sample, pk, pk, e, 0, Json::array(),
                                            {{"k", 0}, {"kprime", 1}}),
                                       Node("Assn", "i := i + 1;", pk, post, 0, 0)})));
    }
    Json params = {{"theta", theta}, {"variant", absl::StrCat(n, " - i<1>")}, {"n", n}};
    std::string rule = "While";
    loop->eps = n * e;
    if (Chance(0.5)) {
      rule = "AC-While";
      const double omega = Chance(0.5) ? 0.25 : 0.5;
      params["eps"] = e;
      params["delta"] = 0;
      params["omega"] = omega;
      const Budget b = *AdvBudget(n, e, 0.0, omega);
      loop->eps = b.eps;
      loop->delta = b.delta;
    }
    loop->proof = Node(rule, loop->text, theta + " && i<1> = 0", theta, loop->eps,
                       loop->delta, kids, params);
    return true;
  }

  struct Generated {
    std::string program;
    Json doc;
    Budget budget;  // claimed at the root
    Budget tight;   // computed by the sequence itself
    std::string ret;
  };

  Generated Make() {
    State s;
    std::vector<Piece> pieces;
    pieces.push_back(SampleSecret(s, PickVar({"x", "y", "z"})));
    const int extra = Pick(1, 3);
    for (int i = 0; i < extra; ++i) {
      Piece a, b;
      const int kind = Pick(0, 5);
      if (kind == 0 && Loop(s, &a, &b)) {
        pieces.push_back(a);
        pieces.push_back(b);
      } else if (kind == 1 && Branch(s, &a)) {
        pieces.push_back(a);
      } else {
        pieces.push_back(Simple(s));
      }
    }
    Generated g;
    g.ret = PickVar(std::vector<std::string>(s.eq.begin(), s.eq.end()));
    if (g.ret == "i") g.ret = *s.eq.begin();
    std::string body;
    Json kids = Json::array();
    for (const Piece& p : pieces) {
      absl::StrAppend(&body, p.text, "\n");
      kids.push_back(p.proof);
      g.budget.eps += p.eps;
      g.budget.delta += p.delta;
    }
    g.program = absl::StrCat(
        "decls {\n  d : int[0,2];\n  x : int[-", kBound, ",", kBound, "];\n  y : int[-",
        kBound, ",", kBound, "];\n  z : int[-", kBound, ",", kBound,
        "];\n  i : int[0,2];\n}\n", body, "return ", g.ret, ";\n");
    Json seq = Node("Seq", "@main", Assert({}), Assert(s.eq), g.budget.eps,
                    g.budget.delta, kids);
    // Narrow the post to equalities (the returned variable alone, or all of
    // them), sometimes with a looser budget.
    g.tight = g.budget;
    if (Chance(0.3)) g.budget.eps += 0.25;
    std::string post = absl::StrCat(g.ret, "<1> = ", g.ret, "<2>");
    if (Chance(0.4)) {
      std::vector<std::string> eqs;
      for (const std::string& v : s.eq) eqs.push_back(absl::StrCat(v, "<1> = ", v, "<2>"));
      post = absl::StrJoin(eqs, " && ");
    }
    g.doc = {{"root", Node("Conseq", "@main", Assert({}), post, g.budget.eps,
                           g.budget.delta, Json::array({seq}))}};
    return g;
  }

 private:
  std::mt19937& rng_;
};

Outcome Soundness() {
  Outcome o;
  std::mt19937 rng(1010);
  ProofGen gen(rng);
  int accepted = 0, checker_rejects = 0, validator_rejects = 0;
  std::map<std::string, int> rules;
  size_t nodes = 0;
  double worst_needed = -INFINITY;
  for (int trial = 0; trial < 100; ++trial) {
    ProofGen::Generated g = gen.Make();
    absl::StatusOr<Program> parsed = ParseProgram(g.program);
    if (!parsed.ok()) {
      o.Fail(absl::StrCat("trial ", trial, " parse: ", parsed.status().ToString()));
      continue;
    }
    auto p = std::make_shared<const Program>(*std::move(parsed));
    absl::StatusOr<DerivationReport> r = CheckDerivation(p, g.doc);
    if (!r.ok() || !r->ok) {
      o.Fail(absl::StrCat("trial ", trial, " rejected: ",
                          r.ok() ? r->message + " at " + r->failed_path
                                 : r.status().ToString()));
      continue;
    }
    ++accepted;
    nodes += r->nodes.size();
    for (const NodeRecord& n : r->nodes) ++rules[n.rule];
    if (std::fabs(r->budget.eps - g.budget.eps) > 1e-9 ||
        std::fabs(r->budget.delta - g.budget.delta) > 1e-9) {
      o.Fail(absl::StrCat("trial ", trial, " budget ", r->budget.eps));
    }
    ValidationOptions opts;
    opts.interp.lap_radius = ProofGen::kRadius;
    absl::StatusOr<JudgmentValidation> v = ValidateJudgmentEmpirical(*p, *r->root, opts);
    if (!v.ok()) {
      o.Fail(absl::StrCat("trial ", trial, " validator: ", v.status().ToString()));
      continue;
    }
    if (!v->ok) o.Fail(absl::StrCat("trial ", trial, " margin ", v->worst_margin));
    worst_needed = std::max(worst_needed, v->worst_margin);

    // Mutation: the root claims a quarter less eps than the derivation
    // computes.
    Json bad = g.doc;
    const double mutated = 0.75 * g.tight.eps;
    bad["root"]["conclusion"]["eps"] = mutated;
    absl::StatusOr<DerivationReport> rb = CheckDerivation(p, bad);
    bool rejected = false;
    if (rb.ok() && !rb->ok) {
      ++checker_rejects;
      rejected = true;
    }
    RelJudgment jm = *r->root;
    jm.budget.eps = mutated;
    absl::StatusOr<JudgmentValidation> vm = ValidateJudgmentEmpirical(*p, jm, opts);
    if (vm.ok() && !vm->ok) {
      ++validator_rejects;
      rejected = true;
    }
    if (!rejected) o.Fail(absl::StrCat("trial ", trial, " mutation accepted"));
  }
  std::vector<std::string> mix;
  for (const auto& [rule, n] : rules) mix.push_back(absl::StrCat(rule, ":", n));
  o.detail = absl::StrCat(accepted, "/100 derivations accepted and validated (", nodes,
                          " nodes; ", absl::StrJoin(mix, " "), "); mutations rejected by checker ",
                          checker_rejects, ", by validator ", validator_rejects,
                          "; worst validation margin ", Num(worst_needed),
                          o.detail.empty() ? "" : "; ", o.detail);
  return o;
}

}  // namespace
}  // namespace dpcouple

int main(int argc, char** argv) {
  using dpcouple::Outcome;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"divergence oracle equivalence", dpcouple::Divergence},
      {"Laplace closed forms and accuracy tail", dpcouple::LaplaceForms},
      {"optimal subset coupling", dpcouple::SubsetCouplings},
      {"equality lifting vs divergence", dpcouple::LiftFund},
      {"backward transport round trip", dpcouple::LiftEr},
      {"advanced composition", dpcouple::Advanced},
      {"interval mass inequality", dpcouple::LapIntLemma},
      {"PTR end to end", dpcouple::Ptr},
      {"ASV between thresholds", dpcouple::Asvbt},
      {"checker soundness sweep", dpcouple::Soundness},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]).rfind("--tiny-radius=", 0) == 0) {
      dpcouple::kTinyRadius = std::atoi(argv[i] + 14);
      continue;
    }
    selected.push_back(std::atoi(argv[i]));
  }
  if (selected.empty()) {
    for (int i = 1; i <= 10; ++i) selected.push_back(i);
  }
  bool all = true;
  for (int id : selected) {
    if (id < 1 || id > 10) {
      std::fprintf(stderr, "unknown criterion %d\n", id);
      return 2;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome o = criteria[id - 1].second();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d %s: %s (%.2f s) %s\n", id, criteria[id - 1].first,
                o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
