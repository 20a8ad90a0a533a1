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

#include "dpcouple/lifting.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include "dpcouple/composition.h"
#include "dpcouple/distribution.h"
#include "dpcouple/status.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace dpcouple {
namespace {

using ::dpcouple::testing::IntRange;
using ::dpcouple::testing::RandomDistr;

Distr Uniform(int n) {
  std::vector<std::pair<Value, double>> pairs;
  for (int i = 0; i < n; ++i) pairs.emplace_back(Value::Int(i), 1.0 / n);
  return *Distr::Make(pairs);
}

Distr Diagonal(const Distr& mu) {
  Distr::Map m;
  for (const auto& [v, w] : mu.entries()) m[Value::Pair(v, v)] = w;
  return Distr::FromMapUnchecked(m);
}

// Independent oracle for the smallest delta: mass of mu1 that cannot be
// covered by e^eps mu2 along relation edges (a max-flow computation), or
// infinity when some support point has no partner at all.
double FlowDeltaMin(const Distr& mu1, const Distr& mu2, const Relation& psi,
                    const std::vector<Value>& universe, double eps) {
  const std::vector<Value> xs = mu1.Support();
  const std::vector<Value> ys = mu2.Support();
  for (const Value& x : xs) {
    bool any = false;
    for (const Value& y : universe) any = any || psi.holds(x, y);
    if (!any) return std::numeric_limits<double>::infinity();
  }
  for (const Value& y : ys) {
    bool any = false;
    for (const Value& x : universe) any = any || psi.holds(x, y);
    if (!any) return std::numeric_limits<double>::infinity();
  }
  const size_t n = xs.size() + ys.size() + 2;
  const size_t s = n - 2, t = n - 1;
  std::vector<std::vector<double>> cap(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < xs.size(); ++i) {
    cap[s][i] = mu1.Prob(xs[i]);
    for (size_t j = 0; j < ys.size(); ++j) {
      if (psi.holds(xs[i], ys[j])) cap[i][xs.size() + j] = 1e9;
    }
  }
  for (size_t j = 0; j < ys.size(); ++j) {
    cap[xs.size() + j][t] = std::exp(eps) * mu2.Prob(ys[j]);
  }
  double flow = 0.0;
  while (true) {
    std::vector<int> parent(n, -1);
    parent[s] = static_cast<int>(s);
    std::deque<size_t> queue = {s};
    while (!queue.empty() && parent[t] < 0) {
      size_t u = queue.front();
      queue.pop_front();
      for (size_t v = 0; v < n; ++v) {
        if (parent[v] < 0 && cap[u][v] > 1e-15) {
          parent[v] = static_cast<int>(u);
          queue.push_back(v);
        }
      }
    }
    if (parent[t] < 0) break;
    double push = std::numeric_limits<double>::infinity();
    for (size_t v = t; v != s; v = parent[v]) push = std::min(push, cap[parent[v]][v]);
    for (size_t v = t; v != s; v = parent[v]) {
      cap[parent[v]][v] -= push;
      cap[v][parent[v]] += push;
    }
    flow += push;
  }
  return std::max(0.0, 1.0 - flow);
}

TEST(CheckWitnessesTest, IdentityCouplingPasses) {
  Distr mu = Uniform(3);
  WitnessPair w{Diagonal(mu), Diagonal(mu)};
  WitnessReport r = CheckWitnesses(mu, mu, Relation::Equality(), 0, 0, w);
  EXPECT_TRUE(r.ok) << r.Summary();
}

TEST(CheckWitnessesTest, StrictLessThanFailsSupportClause) {
  Distr mu = Uniform(3);
  Relation lt;
  lt.holds = [](const Value& a, const Value& b) { return a < b; };
  WitnessReport r =
      CheckWitnesses(mu, mu, lt, 0, 0, WitnessPair{Diagonal(mu), Diagonal(mu)});
  EXPECT_FALSE(r.ok);
  EXPECT_FALSE(r.support_ok);
  EXPECT_TRUE(r.marginals_ok);
}

TEST(SubsetCouplingTest, UniformExample) {
  Distr mu = Uniform(4);
  const std::vector<Value> p = IntRange(0, 2), q = {Value::Int(1)};
  SubsetCoupling sc = *OptimalSubsetCoupling(mu, p, q);
  EXPECT_NEAR(sc.alpha, 3.0, 1e-15);
  WitnessReport r = CheckWitnesses(mu, mu, SubsetRelation(p, q),
                                   std::log(sc.alpha), 0, sc.witnesses);
  EXPECT_TRUE(r.ok) << r.Summary();
  // Brute-force marginal sums.
  for (int x = 0; x < 4; ++x) {
    double row = 0, col = 0;
    for (int y = 0; y < 4; ++y) {
      row += sc.witnesses.mu_l.Prob(Value::Pair(Value::Int(x), Value::Int(y)));
      col += sc.witnesses.mu_r.Prob(Value::Pair(Value::Int(y), Value::Int(x)));
    }
    EXPECT_NEAR(row, 0.25, 1e-15);
    EXPECT_NEAR(col, 0.25, 1e-15);
  }
  EXPECT_TRUE(*FundamentalLemmaCheck(mu, mu, p, q, std::log(3.0), 0,
                                     sc.witnesses));
}

TEST(SubsetCouplingTest, DegenerateCases) {
  Distr mu = Uniform(4);
  SubsetCoupling same = *OptimalSubsetCoupling(mu, IntRange(0, 1), IntRange(0, 1));
  EXPECT_EQ(same.alpha, 1.0);
  EXPECT_EQ(same.witnesses.mu_l, Diagonal(mu));
  Distr low = *Distr::Make({{Value::Int(0), 0.5}, {Value::Int(3), 0.5}});
  // P \ Q = {1, 2} carries no mass.
  SubsetCoupling trivial =
      *OptimalSubsetCoupling(low, IntRange(0, 2), {Value::Int(0)});
  EXPECT_EQ(trivial.witnesses.mu_r, Diagonal(low));
}

TEST(SubsetCouplingTest, Errors) {
  Distr mu = Uniform(4);
  EXPECT_EQ(ErrorKindOf(OptimalSubsetCoupling(mu, {Value::Int(0)},
                                              {Value::Int(1)})
                            .status()),
            ErrorKind::kNotNested);
  Distr low = *Distr::Make({{Value::Int(0), 0.5}, {Value::Int(3), 0.5}});
  EXPECT_EQ(ErrorKindOf(OptimalSubsetCoupling(low, IntRange(0, 2),
                                              {Value::Int(1)})
                            .status()),
            ErrorKind::kZeroInnerMass);
  EXPECT_EQ(ErrorKindOf(OptimalSubsetCoupling(mu, IntRange(0, 3),
                                              {Value::Int(1)})
                            .status()),
            ErrorKind::kNoOutsideElement);
  // An explicit universe supplies x0 outside the support.
  EXPECT_TRUE(
      OptimalSubsetCoupling(mu, IntRange(0, 3), {Value::Int(1)}, IntRange(0, 4))
          .ok());
}

TEST(LiftingExistsTest, Examples) {
  Distr mu = Uniform(3);
  LiftingResult same = *LiftingExists(mu, mu, Relation::Equality(), 0, 0);
  EXPECT_TRUE(same.feasible);
  EXPECT_TRUE(CheckWitnesses(mu, mu, Relation::Equality(), 0, 0,
                             *same.witnesses)
                  .ok);
  LiftingResult apart = *LiftingExists(Unit(Value::Int(0)), Unit(Value::Int(1)),
                                       Relation::Equality(), 2.0, 0);
  EXPECT_FALSE(apart.feasible);
  Distr u4 = Uniform(4);
  Relation sub = SubsetRelation(IntRange(0, 2), {Value::Int(1)});
  EXPECT_TRUE(LiftingExists(u4, u4, sub, std::log(3.0), 0)->feasible);
  EXPECT_FALSE(LiftingExists(u4, u4, sub, std::log(3.0) - 0.01, 0)->feasible);
}

TEST(LiftingExistsTest, ProblemTooLarge) {
  Distr big = Uniform(21);
  EXPECT_EQ(ErrorKindOf(LiftingExists(big, big, Relation::Equality(), 0, 0)
                            .status()),
            ErrorKind::kProblemTooLarge);
}

TEST(LiftingExistsTest, AgreesWithFlowOracleOnRandomRelations) {
  std::mt19937 rng(3);
  std::bernoulli_distribution edge(0.35);
  std::uniform_real_distribution<double> ueps(0.0, 1.5);
  for (int trial = 0; trial < 150; ++trial) {
    Distr mu1 = RandomDistr(rng, 5);
    Distr mu2 = RandomDistr(rng, 5);
    std::set<std::pair<int64_t, int64_t>> edges;
    for (int a = 0; a < 5; ++a) {
      for (int b = 0; b < 5; ++b) {
        if (edge(rng)) edges.insert({a, b});
      }
    }
    Relation psi;
    psi.holds = [edges](const Value& a, const Value& b) {
      return edges.count({a.as_int(), b.as_int()}) > 0;
    };
    psi.universe1 = psi.universe2 = IntRange(0, 4);
    const double eps = ueps(rng);
    const double oracle = FlowDeltaMin(mu1, mu2, psi, IntRange(0, 4), eps);
    LiftingResult r = *LiftingExists(mu1, mu2, psi, eps, 1.0);
    if (std::isinf(oracle)) {
      EXPECT_FALSE(r.feasible);
      continue;
    }
    EXPECT_NEAR(r.delta_min, oracle, 1e-9) << "trial " << trial;
    ASSERT_TRUE(r.feasible);
    WitnessReport check = CheckWitnesses(mu1, mu2, psi, eps, r.delta_min,
                                         *r.witnesses);
    EXPECT_TRUE(check.ok) << check.Summary();
  }
}

// Equality liftings and divergence: the lifting definition is one-sided, so
// feasibility coincides with Delta_eps(mu1, mu2) <= delta. The two-sided
// criterion differs exactly when only the reverse divergence is too big.
TEST(LiftFundTest, EqualityLiftingMatchesForwardDivergence) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int symmetric_disagreements = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Distr mu1 = RandomDistr(rng, 1 + trial % 8);
    Distr mu2 = RandomDistr(rng, 1 + (trial * 5) % 8);
    const double eps = 0.5 * u(rng);
    const double delta = 0.3 * u(rng);
    const double forward = *DpDivergence(mu1, mu2, eps);
    const double backward = *DpDivergence(mu2, mu1, eps);
    const bool feasible =
        LiftingExists(mu1, mu2, Relation::Equality(), eps, delta)->feasible;
    EXPECT_EQ(feasible, forward <= delta + 1e-9) << "trial " << trial;
    const bool symmetric = forward <= delta && backward <= delta;
    if (symmetric != feasible) {
      ++symmetric_disagreements;
      EXPECT_GT(backward, delta);
    }
  }
  EXPECT_GT(symmetric_disagreements, 0);
}

TEST(FundamentalLemmaTest, Examples) {
  Distr mu = Uniform(3);
  WitnessPair w{Diagonal(mu), Diagonal(mu)};
  EXPECT_TRUE(*FundamentalLemmaCheck(mu, mu, IntRange(0, 2), IntRange(0, 2), 0,
                                     0, w));
  Distr other = Uniform(2);
  EXPECT_EQ(ErrorKindOf(FundamentalLemmaCheck(mu, other, {Value::Int(0)},
                                              {Value::Int(0)}, 0, 0, w)
                            .status()),
            ErrorKind::kWitnessInvalid);
}

TEST(FundamentalLemmaTest, RandomSolverWitnesses) {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Distr mu1 = RandomDistr(rng, 4);
    Distr mu2 = RandomDistr(rng, 4);
    std::vector<Value> e1, e2;
    for (int i = 0; i < 4; ++i) {
      if (u(rng) < 0.5) e1.push_back(Value::Int(i));
      if (u(rng) < 0.5) e2.push_back(Value::Int(i));
    }
    std::set<Value> s1(e1.begin(), e1.end()), s2(e2.begin(), e2.end());
    Relation psi;
    psi.holds = [s1, s2](const Value& a, const Value& b) {
      return !s1.count(a) || s2.count(b);
    };
    psi.universe1 = psi.universe2 = IntRange(0, 3);
    const double eps = u(rng);
    LiftingResult r = *LiftingExists(mu1, mu2, psi, eps, 1.0);
    if (!r.feasible) continue;
    ++checked;
    EXPECT_TRUE(*FundamentalLemmaCheck(mu1, mu2, e1, e2, eps, r.delta_min,
                                       *r.witnesses));
  }
  EXPECT_GT(checked, 50);
}

TEST(TransportTest, ForwardIdentityAndParity) {
  Distr mu = Uniform(4);
  WitnessPair w{Diagonal(mu), Diagonal(mu)};
  WitnessPair same = TransportForward(w, [](const Value& v) { return v; });
  EXPECT_EQ(same.mu_l, w.mu_l);
  WitnessPair parity = TransportForward(
      w, [](const Value& v) { return Value::Int(v.as_int() % 2); });
  EXPECT_EQ(parity.mu_l, Diagonal(Uniform(2)));
  EXPECT_EQ(parity.mu_r, Diagonal(Uniform(2)));
}

TEST(TransportTest, ForwardDoesNotIncreaseDivergence) {
  std::mt19937 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    Distr mu1 = RandomDistr(rng, 6), mu2 = RandomDistr(rng, 6);
    std::uniform_int_distribution<int> pick(0, 2);
    std::vector<int> table(6);
    for (int& t : table) t = pick(rng);
    ValueFn f = [table](const Value& v) { return Value::Int(table[v.as_int()]); };
    LiftingResult r = *LiftingExists(mu1, mu2, Relation::Equality(), 0.3, 1.0);
    ASSERT_TRUE(r.feasible);
    WitnessPair img = TransportForward(*r.witnesses, f);
    EXPECT_LE(*DpDivergence(img.mu_l, img.mu_r, 0.3),
              *DpDivergence(r.witnesses->mu_l, r.witnesses->mu_r, 0.3) + 1e-12);
  }
}

TEST(TransportTest, BackwardIdentity) {
  Distr mu = Uniform(3);
  WitnessPair nu{Diagonal(mu), Diagonal(mu)};
  WitnessPair back = *TransportBackward(
      nu, [](const Value& v) { return v; }, mu, mu, IntRange(0, 2));
  EXPECT_EQ(back.mu_l, nu.mu_l);
  EXPECT_EQ(back.mu_r, nu.mu_r);
}

TEST(TransportTest, BackwardEquivalenceClasses) {
  // Universe {0,1,2,3}, classes {0,1} and {2,3}.
  ValueFn cls = [](const Value& v) { return Value::Int(v.as_int() / 2); };
  Distr mu1 = *Distr::Make({{Value::Int(0), 0.1}, {Value::Int(1), 0.3},
                            {Value::Int(2), 0.6}});
  Distr mu2 = *Distr::Make({{Value::Int(1), 0.35}, {Value::Int(3), 0.65}});
  Distr q1 = mu1.Pushforward<Value>(cls), q2 = mu2.Pushforward<Value>(cls);
  const double eps = 0.2;
  LiftingResult quotient = *LiftingExists(q1, q2, Relation::Equality(), eps, 1);
  ASSERT_TRUE(quotient.feasible);
  WitnessPair back =
      *TransportBackward(*quotient.witnesses, cls, mu1, mu2, IntRange(0, 3));
  Relation same_class;
  same_class.holds = [cls](const Value& a, const Value& b) {
    return cls(a) == cls(b);
  };
  WitnessReport r =
      CheckWitnesses(mu1, mu2, same_class, eps, quotient.delta_min, back);
  EXPECT_TRUE(r.ok) << r.Summary();
}

TEST(TransportTest, BackwardRandomSurjections) {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> table = {0, 1, 2};
    std::uniform_int_distribution<int> pick(0, 2);
    for (int i = 0; i < 3; ++i) table.push_back(pick(rng));
    std::shuffle(table.begin(), table.end(), rng);
    ValueFn f = [table](const Value& v) { return Value::Int(table[v.as_int()]); };
    Distr mu1 = RandomDistr(rng, 6), mu2 = RandomDistr(rng, 6);
    Distr b1 = mu1.Pushforward<Value>(f), b2 = mu2.Pushforward<Value>(f);
    std::set<std::pair<int64_t, int64_t>> edges;
    for (int a = 0; a < 3; ++a) {
      edges.insert({a, a});
      for (int b = 0; b < 3; ++b) {
        if (u(rng) < 0.3) edges.insert({a, b});
      }
    }
    Relation r_b;
    r_b.holds = [edges](const Value& a, const Value& b) {
      return edges.count({a.as_int(), b.as_int()}) > 0;
    };
    r_b.universe1 = r_b.universe2 = IntRange(0, 2);
    const double eps = u(rng);
    LiftingResult nu = *LiftingExists(b1, b2, r_b, eps, 1.0);
    ASSERT_TRUE(nu.feasible);
    WitnessPair back = *TransportBackward(*nu.witnesses, f, mu1, mu2, IntRange(0, 5));
    Relation pulled;
    pulled.holds = [&](const Value& a, const Value& b) {
      return r_b.holds(f(a), f(b));
    };
    WitnessReport rep = CheckWitnesses(mu1, mu2, pulled, eps, nu.delta_min, back);
    EXPECT_TRUE(rep.ok) << rep.Summary();
  }
}

TEST(TransportTest, BackwardErrors) {
  Distr mu = Uniform(2);
  WitnessPair nu{Diagonal(mu), Diagonal(mu)};
  ValueFn id = [](const Value& v) { return v; };
  EXPECT_EQ(ErrorKindOf(TransportBackward(nu, id, mu, mu, {Value::Int(0)})
                            .status()),
            ErrorKind::kNotSurjective);
  Distr other = *Distr::Make({{Value::Int(0), 0.9}, {Value::Int(1), 0.1}});
  EXPECT_EQ(ErrorKindOf(TransportBackward(nu, id, other, mu, IntRange(0, 1))
                            .status()),
            ErrorKind::kMarginalMismatch);
}

WitnessKernel CoinStep() {
  return [](const Value& a, const Value& b) -> absl::StatusOr<WitnessPair> {
    // Both sides move by the same fair +0/+1 step mod 3.
    Distr::Map m;
    for (int d = 0; d < 2; ++d) {
      m[Value::Pair(Value::Int((a.as_int() + d) % 3),
                    Value::Int((b.as_int() + d) % 3))] += 0.5;
    }
    Distr joint = Distr::FromMapUnchecked(m);
    return WitnessPair{joint, joint};
  };
}

TEST(ComposeLiftingWitnessesTest, SmallCases) {
  std::vector<WitnessKernel> ks(3, CoinStep());
  WitnessPair zero = *ComposeLiftingWitnesses(ks, 0, Value::Int(1), Value::Int(1));
  EXPECT_EQ(zero.mu_l, Unit(Value::Pair(Value::Int(1), Value::Int(1))));
  WitnessPair one = *ComposeLiftingWitnesses(ks, 1, Value::Int(1), Value::Int(1));
  EXPECT_EQ(one.mu_l, CoinStep()(Value::Int(1), Value::Int(1))->mu_l);
  WitnessPair three =
      *ComposeLiftingWitnesses(ks, 3, Value::Int(1), Value::Int(1));
  Kernel f = [](const Value& a, const std::optional<Value>&) {
    return Distr::Make({{a, 0.5}, {Value::Int((a.as_int() + 1) % 3), 0.5}});
  };
  Distr oracle = *ComposeKernels({f, f, f}, Value::Int(1));
  EXPECT_LE(MaxKeywiseDistance(*Marginal(three.mu_l, 1), oracle), 1e-12);
  EXPECT_LE(MaxKeywiseDistance(*Marginal(three.mu_r, 2), oracle), 1e-12);
}

TEST(ComposeLiftingWitnessesTest, SupportEscape) {
  std::vector<WitnessKernel> ks(2, CoinStep());
  auto never_two = [](const Value& a, const Value&) { return a.as_int() != 2; };
  EXPECT_EQ(ErrorKindOf(ComposeLiftingWitnesses(ks, 2, Value::Int(1),
                                                Value::Int(1), never_two)
                            .status()),
            ErrorKind::kSupportEscapesRelation);
}

}  // namespace
}  // namespace dpcouple
