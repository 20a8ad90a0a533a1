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

#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>

#include "dpcouple/aprhl.h"
#include "dpcouple/composition.h"
#include "dpcouple/interp.h"
#include "dpcouple/laplace.h"
#include "dpcouple/mechanisms.h"
#include "dpcouple/parser.h"
#include "dpcouple/status.h"
#include "gtest/gtest.h"

namespace dpcouple {
namespace {

std::string Slurp(const std::string& rel) {
  std::ifstream in(std::string(DPCOUPLE_SOURCE_DIR) + "/" + rel);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double ValueOf(const BuiltMechanism& m, const std::string& key) {
  for (const auto& [k, v] : m.values) {
    if (k == key) return v;
  }
  ADD_FAILURE() << "no value " << key;
  return NAN;
}

TEST(AsvbtParamsTest, MatchesLongDoubleOracle) {
  for (double eps : {0.25, 0.5, 1.0}) {
    for (double delta : {0.01, 0.1, 0.5}) {
      for (int64_t M : {1, 2, 3}) {
        const long double e = eps, d = delta;
        const long double ep = e / (4.0L * std::sqrt(2.0L * M * std::log(2.0L / d)));
        const long double g =
            (6.0L / ep) * std::log(4.0L / ep) + (4.0L / e) * std::log(2.0L / d);
        AsvbtParams p = *ComputeAsvbtParams(eps, delta, M);
        EXPECT_NEAR(p.eps_prime, static_cast<double>(ep), 1e-15);
        EXPECT_NEAR(p.gamma, static_cast<double>(g), 1e-10);
        // eps' * 2 sqrt(2 M ln(2/delta)) = eps / 2
        EXPECT_NEAR(p.eps_prime * 2.0 * std::sqrt(2.0 * M * std::log(2.0 / delta)),
                    eps / 2.0, 1e-14);
        EXPECT_NEAR(*AdvTargetEpsilon(eps / 2.0, static_cast<int>(M), delta / 2.0),
                    p.eps_prime, 1e-15);
        // The outer loop at omega = delta/2 stays within eps/2.
        EXPECT_LE(AdvBudget(static_cast<int>(M), p.eps_prime, 0.0, delta / 2.0)->eps,
                  eps / 2.0);
        EXPECT_GT(InnerTestSlack(p.eps_prime, p.sigma), 0.0);
      }
    }
  }
}

TEST(AsvbtParamsTest, HeadlineInstanceAndMonotonicity) {
  AsvbtParams p = *ComputeAsvbtParams(1.0, 0.5, 1);
  EXPECT_NEAR(p.eps_prime, 0.15014030109830623, 1e-15);
  EXPECT_NEAR(p.gamma, 136.72166044725375, 1e-9);
  EXPECT_NEAR(p.sigma, 131.1764830027742, 1e-9);
  AsvbtParams smaller = *ComputeAsvbtParams(0.5, 0.5, 1);
  EXPECT_LT(smaller.eps_prime, p.eps_prime);
  EXPECT_GT(smaller.gamma, p.gamma);
  EXPECT_EQ(ErrorKindOf(ComputeAsvbtParams(0.0, 0.5, 1).status()), ErrorKind::kOutOfRange);
  EXPECT_EQ(ErrorKindOf(ComputeAsvbtParams(0.5, 1.0, 1).status()), ErrorKind::kOutOfRange);
  EXPECT_EQ(ErrorKindOf(ComputeAsvbtParams(0.5, 0.5, 0).status()), ErrorKind::kOutOfRange);
}

TEST(ToyDatabaseTest, SpaceAndAdjacency) {
  ToyDatabaseSpace s{3, 0, 1};
  EXPECT_EQ(s.All().size(), 8u);
  EXPECT_EQ(s.AdjacentPairs().size(), 24u);  // each row can flip
  ToyDatabaseSpace t{2, 0, 3};
  EXPECT_EQ(t.All().size(), 16u);
  EXPECT_EQ(t.AdjacentPairs().size(), 48u);  // 2 rows x 2 * 3 unit moves x 4
  EXPECT_EQ(t.TypeText(), "list<int[0,3]>[len 2]");
}

TEST(PtrTest, BuildsAndChecksToEpsDelta) {
  BuiltMechanism m = *BuildPtr(PtrConfig{});
  EXPECT_NEAR(ValueOf(m, "threshold"), std::log(10.0) + 1.0, 1e-15);
  absl::StatusOr<DerivationReport> r = CheckDerivation(m.program, m.proof);
  ASSERT_TRUE(r.ok()) << r.status();
  ASSERT_TRUE(r->ok) << r->message << " at " << r->failed_path;
  EXPECT_NEAR(r->budget.eps, 1.0, 1e-12);
  EXPECT_NEAR(r->budget.delta, 0.1, 1e-12);

  // One unit of privacy less and the root no longer matches.
  Json bad = m.proof;
  bad["root"]["conclusion"]["eps"] = 0.9;
  DerivationReport rb = *CheckDerivation(m.program, bad);
  EXPECT_FALSE(rb.ok);
  EXPECT_EQ(rb.kind, ErrorKind::kBudgetMismatch);
}

TEST(PtrTest, EmpiricalPrivacyOnAllAdjacentPairs) {
  BuiltMechanism m = *BuildPtr(PtrConfig{});
  DerivationReport r = *CheckDerivation(m.program, m.proof);
  ASSERT_TRUE(r.ok);
  ValidationOptions opts;
  opts.interp.lap_radius = DefaultLaplaceRadius(1.0);
  JudgmentValidation v = *ValidateJudgmentEmpirical(*m.program, *r.root, opts);
  EXPECT_TRUE(v.ok) << v.worst_margin;
  EXPECT_EQ(v.pairs, 24u);
  EXPECT_LE(v.worst_slack, 1e-6);
  EXPECT_GT(v.worst_needed_delta, 0.0);
  EXPECT_LE(v.worst_needed_delta, 0.1);
}

TEST(PtrTest, InstabilityPropertiesAreChecked) {
  PtrConfig flips;
  flips.dist_to_inst = "2";  // claims stability where majority flips
  EXPECT_EQ(ErrorKindOf(BuildPtr(flips).status()),
            ErrorKind::kInstabilityPropertyViolated);
  PtrConfig jumps;
  jumps.dist_to_inst = "sum(x) >= 2 ? 3 * sum(x) - 5 : 2 - sum(x)";
  EXPECT_EQ(ErrorKindOf(BuildPtr(jumps).status()),
            ErrorKind::kInstabilityPropertyViolated);
}

TEST(PtrTest, ConstantFunctionAlwaysReleases) {
  PtrConfig c;
  c.f = "1";
  c.dist_to_inst = "64";  // never unstable: the domain maximum
  BuiltMechanism m = *BuildPtr(c);
  DerivationReport r = *CheckDerivation(m.program, m.proof);
  EXPECT_TRUE(r.ok) << r.message;
  for (const char* d : {"d=[0,0,0]", "d=[1,0,1]"}) {
    InterpResult out = *Interpret(*m.program, m.program->body, *ParseMemory(*m.program, d));
    const int slot = m.program->Slot("r");
    double released = 0.0;
    for (const auto& [mem, w] : out.out.entries()) {
      if (mem[slot] == Value::Int(1)) released += w;
    }
    EXPECT_NEAR(released, 1.0, 1e-12);
  }
}

TEST(AsvbtTest, ShippedFilesMatchBuilders) {
  PtrConfig cfg;
  cfg.comment =
      "Propose-test-release on 3-row binary databases. f is majority and\n"
      "// dist_to_inst counts the rows that must change before f flips.";
  BuiltMechanism ptr = *BuildPtr(cfg);
  EXPECT_EQ(Slurp("examples/ptr.prog"), ptr.program_text);
  EXPECT_EQ(Json::parse(Slurp("examples/ptr.proof.json")), ptr.proof);
  BuiltMechanism orig = *BuildAsvbt(AsvbtConfig{}, AsvbtVariant::kOriginal);
  EXPECT_EQ(Slurp("examples/asvbt_original.prog"), orig.program_text);
  BuiltMechanism tr = *BuildAsvbt(AsvbtConfig{}, AsvbtVariant::kTransformed);
  EXPECT_EQ(Slurp("examples/asvbt_transformed.prog"), tr.program_text);
  EXPECT_EQ(Json::parse(Slurp("examples/asvbt.proof.json")), tr.proof);
}

TEST(AsvbtTest, OriginalListing) {
  BuiltMechanism m = *BuildAsvbt(AsvbtConfig{}, AsvbtVariant::kOriginal);
  EXPECT_TRUE(m.proof.is_null());
  const std::vector<CmdPtr> top = FlatList(m.program->body);
  ASSERT_EQ(top.size(), 6u);
  const CmdKind want[] = {CmdKind::kAssign, CmdKind::kAssign, CmdKind::kSample,
                          CmdKind::kAssign, CmdKind::kAssign, CmdKind::kWhile};
  for (size_t i = 0; i < top.size(); ++i) EXPECT_EQ(top[i]->kind, want[i]) << i;
  EXPECT_DOUBLE_EQ(top[2]->eps_value, 0.5);
  const std::vector<CmdPtr> loop = FlatList(top[5]->body[0]);
  ASSERT_EQ(loop.size(), 4u);
  EXPECT_EQ(loop[0]->kind, CmdKind::kAdvCall);
  EXPECT_EQ(loop[1]->kind, CmdKind::kSample);
  EXPECT_NEAR(loop[1]->eps_value, 0.15014030109830623 / 3.0, 1e-15);
  EXPECT_EQ(loop[2]->kind, CmdKind::kIf);
  EXPECT_EQ(loop[3]->kind, CmdKind::kAssign);
  EXPECT_EQ(m.program->ret, "l");
}

TEST(AsvbtTest, TransformedProofChecksToEpsDelta) {
  BuiltMechanism m = *BuildAsvbt(AsvbtConfig{}, AsvbtVariant::kTransformed);
  absl::StatusOr<DerivationReport> r = CheckDerivation(m.program, m.proof);
  ASSERT_TRUE(r.ok()) << r.status();
  ASSERT_TRUE(r->ok) << r->message << " at " << r->failed_path;
  EXPECT_NEAR(r->budget.eps, 1.0, 1e-12);
  EXPECT_NEAR(r->budget.delta, 0.5, 1e-12);
  // Threshold noise stays within 2 except with its exact discrete tail;
  // omega takes the rest of delta.
  const double beta = 2.0 * std::exp(-1.0) / (std::exp(0.5) + 1.0);
  EXPECT_NEAR(ValueOf(m, "beta"), beta, 1e-15);
  EXPECT_NEAR(ValueOf(m, "omega"), 0.5 - beta, 1e-15);
  EXPECT_LE(0.5 + ValueOf(m, "loop_eps"), 1.0);
  EXPECT_LE(ValueOf(m, "inner_test_cost"), ValueOf(m, "eps_prime"));
  EXPECT_NEAR(ValueOf(m, "inner_test_cost"), 0.13835, 1e-5);
  bool saw_lapint = false;
  for (const NodeRecord& n : r->nodes) saw_lapint = saw_lapint || n.rule == "LapInt";
  EXPECT_TRUE(saw_lapint);
}

TEST(AsvbtTest, BuilderPreconditions) {
  AsvbtConfig narrow;
  narrow.b = 130;
  EXPECT_EQ(ErrorKindOf(BuildAsvbt(narrow, AsvbtVariant::kTransformed).status()),
            ErrorKind::kGapTooSmall);
  // Without a proof the gap is not needed.
  narrow.with_proof = false;
  EXPECT_TRUE(BuildAsvbt(narrow, AsvbtVariant::kTransformed).ok());
  AsvbtConfig loud;
  loud.queries.push_back({"q_double", "2 * x[0]"});
  EXPECT_EQ(ErrorKindOf(BuildAsvbt(loud, AsvbtVariant::kOriginal).status()),
            ErrorKind::kQueryNotSensitive);
  AsvbtConfig bad_m;
  bad_m.M = 3;
  EXPECT_EQ(ErrorKindOf(BuildAsvbt(bad_m, AsvbtVariant::kOriginal).status()),
            ErrorKind::kOutOfRange);
}

// Breaking the critical step of one inner-loop lemma must be caught.
TEST(AsvbtTest, CriticalStepWithoutIntervalCouplingIsRejected) {
  BuiltMechanism m = *BuildAsvbt(AsvbtConfig{}, AsvbtVariant::kTransformed);
  Json doc = m.proof;
  std::string dump = doc["lemmas"]["inner_0"].dump();
  const std::string from = "\"rule\":\"LapInt\"";
  ASSERT_NE(dump.find(from), std::string::npos);
  dump.replace(dump.find(from), from.size(), "\"rule\":\"LapNull\"");
  doc["lemmas"]["inner_0"] = Json::parse(dump);
  DerivationReport r = *CheckDerivation(m.program, doc);
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.kind, ErrorKind::kSideConditionFailed) << r.message;
  EXPECT_NE(r.failed_path.find("inner_0"), std::string::npos) << r.failed_path;
}

// One between-thresholds test on a single query, thresholds coupled as in
// the proof: equality of the boolean outcome at eps'.
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

TEST(AsvbtTest, CriticalStepCouplingHoldsEmpirically) {
  auto p = std::make_shared<const Program>(*ParseProgram(kSingleTest));
  const AsvbtParams par = *ComputeAsvbtParams(1.0, 0.5, 1);
  RelJudgment j;
  j.c1 = j.c2 = p->body;
  j.pre = *ParseAssertion(
      absl::StrCat("adj(d<1>, d<2>) && q<1> = q<2> && A<1> + 1 = A<2> && "
                   "B<1> = B<2> + 1 && A<1> + B<1> = 137 && B<1> - A<1> >= ",
                   par.sigma),
      *p, AssertionMode::kRelational);
  j.post = *ParseAssertion("r<1> = r<2>", *p, AssertionMode::kRelational);
  j.budget = {par.eps_prime, 0.0};
  JudgmentValidation v = *ValidateJudgmentEmpirical(*p, j);
  EXPECT_TRUE(v.ok) << v.worst_margin;
  EXPECT_TRUE(v.equality_fast_path);
  EXPECT_EQ(v.pairs, 4u * 48u * 3u);
  EXPECT_LE(v.worst_slack, 1e-6);
  // Not vacuous: at a third of the budget the same pairs fail.
  j.budget = {par.eps_prime / 3.0, 0.0};
  JudgmentValidation tight = *ValidateJudgmentEmpirical(*p, j);
  EXPECT_FALSE(tight.ok);
}

// Both variants under the same truncation on a small instance: identical
// output distributions for every database and battery member.
TEST(AsvbtTest, VariantsAgreeOnTinyInstance) {
  AsvbtConfig c;
  c.b = 6;
  c.with_proof = false;
  c.u_margin = 16;
  c.s_margin = 16;
  BuiltMechanism orig = *BuildAsvbt(c, AsvbtVariant::kOriginal);
  BuiltMechanism tr = *BuildAsvbt(c, AsvbtVariant::kTransformed);
  InterpOptions opts;
  opts.lap_radius = 8;
  const std::vector<NamedAdversaries> b1 = AdversaryBattery(*orig.program);
  const std::vector<NamedAdversaries> b2 = AdversaryBattery(*tr.program);
  ASSERT_EQ(b1.size(), b2.size());
  double worst = 0.0;
  for (size_t a = 0; a < b1.size(); ++a) {
    for (const Value& d : c.space.All()) {
      std::map<Value, double> out[2];
      double slack = 0.0;
      const BuiltMechanism* ms[2] = {&orig, &tr};
      for (int v = 0; v < 2; ++v) {
        const Program& p = *ms[v]->program;
        Memory m = DefaultMemory(p);
        m[p.Slot("d")] = d;
        opts.adversaries = v == 0 ? &b1[a].impls : &b2[a].impls;
        InterpResult res = *Interpret(p, p.body, m, opts);
        slack += res.truncation_slack;
        for (const auto& [mem, w] : res.out.entries()) out[v][mem[p.Slot("l")]] += w;
      }
      for (int v = 0; v < 2; ++v) {
        for (const auto& [key, w] : out[v]) {
          const double gap = std::fabs(w - out[1 - v][key]);
          worst = std::max(worst, gap);
          EXPECT_LE(gap, slack + 1e-12) << b1[a].name << " " << d.ToString();
        }
      }
    }
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(AdversaryBatteryTest, Strategies) {
  BuiltMechanism m = *BuildAsvbt(AsvbtConfig{}, AsvbtVariant::kOriginal);
  const std::vector<NamedAdversaries> battery = AdversaryBattery(*m.program);
  ASSERT_EQ(battery.size(), 4u);
  std::map<std::string, const AdversaryImpl*> by_name;
  for (const NamedAdversaries& n : battery) by_name[n.name] = &n.impls.at("Adv");

  const Value empty = Value::List({});
  const Value one = Value::List({Value::Int(1)});
  // Fixed sequence: 0, 1, 2, 0, ... regardless of the answers.
  Value s = Value::Int(0);
  std::vector<int64_t> seen;
  for (int i = 0; i < 4; ++i) {
    AdvAction a = by_name["fixed_sequence"]->step(s, {i % 2 ? one : empty});
    seen.push_back(a.values[0].as_query());
    s = a.state;
  }
  EXPECT_EQ(seen, (std::vector<int64_t>{0, 1, 2, 0}));
  // Greedy: the query changes exactly when the answer list grows.
  const AdversaryImpl* g = by_name["greedy"];
  const int64_t q0 = g->step(Value::Int(0), {empty}).values[0].as_query();
  EXPECT_EQ(g->step(Value::Int(3), {empty}).values[0].as_query(), q0);
  EXPECT_NE(g->step(Value::Int(0), {one}).values[0].as_query(), q0);
  // Length switcher uses the first query until something is answered.
  EXPECT_EQ(by_name["length_switcher"]->step(Value::Int(0), {empty}).values[0].as_query(), 0);
  EXPECT_EQ(by_name["length_switcher"]->step(Value::Int(0), {one}).values[0].as_query(), 2);
  // Marker follows the latest answer.
  EXPECT_EQ(by_name["marker"]->step(Value::Int(5), {one}).values[0].as_query(), 2);

  // Every member answers in one move without oracle queries, keeps its
  // state in the declared domain and returns a valid query; the program's
  // loop cap then bounds the calls per run by N.
  const Type& st = m.program->Var("Adv")->type;
  for (const NamedAdversaries& n : battery) {
    const AdversaryImpl& impl = n.impls.at("Adv");
    EXPECT_LE(impl.max_steps, 1);
    for (const Value& state : st.Enumerate()) {
      for (const Value& l : {empty, one, Value::List({Value::Int(0)})}) {
        AdvAction a = impl.step(state, {l});
        EXPECT_EQ(a.kind, AdvAction::Kind::kReturn);
        EXPECT_TRUE(st.Contains(a.state)) << n.name;
        ASSERT_EQ(a.values.size(), 1u);
        EXPECT_LT(a.values[0].as_query(), 3);
      }
    }
  }
  const std::vector<CmdPtr> top = FlatList(m.program->body);
  EXPECT_EQ(top.back()->cap, 2);
}

}  // namespace
}  // namespace dpcouple
