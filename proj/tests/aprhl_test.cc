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
#include <memory>
#include <string>

#include "dpcouple/aprhl.h"
#include "dpcouple/assertion.h"
#include "dpcouple/composition.h"
#include "dpcouple/interp.h"
#include "dpcouple/parser.h"
#include "dpcouple/status.h"
#include "gtest/gtest.h"

namespace dpcouple {
namespace {

constexpr char kTwoSamples[] = R"(
decls {
  const eps = 0.5;
  x : int[0,3];
  y : int[-24,27];
  w : int[-24,27];
  b : bool;
  d : list<int[0,1]>[len 3];
}
y <-$ lap(eps, x);
w <-$ lap(eps, x);
)";

std::shared_ptr<const Program> Prog(const char* text) {
  absl::StatusOr<Program> p = ParseProgram(text);
  EXPECT_TRUE(p.ok()) << p.status();
  return std::make_shared<const Program>(*p);
}

DerivationReport Check(const std::shared_ptr<const Program>& p,
                       const std::string& doc) {
  absl::StatusOr<DerivationReport> r = CheckDerivation(p, Json::parse(doc));
  EXPECT_TRUE(r.ok()) << r.status();
  return r.ok() ? *r : DerivationReport{};
}

ExprPtr Rel(const Program& p, const std::string& text) {
  absl::StatusOr<ExprPtr> e = ParseAssertion(text, p, AssertionMode::kRelational);
  EXPECT_TRUE(e.ok()) << e.status();
  return *e;
}

ValidationOptions Radius(int64_t r) {
  ValidationOptions o;
  o.interp.lap_radius = r;
  return o;
}

TEST(RelAssertionTest, Evaluation) {
  auto p = Prog("decls { x : int[0,8]; d : list<int[0,3]>[len 3]; }");
  Memory m1 = *ParseMemory(*p, "x=3, d=[0,1,2]");
  Memory m2 = *ParseMemory(*p, "x=5, d=[0,2,2]");
  EXPECT_TRUE(*EvalRelAssertion(Rel(*p, "x<1> = x<2>"), *p, m1, m1));
  EXPECT_FALSE(*EvalRelAssertion(Rel(*p, "abs(x<1> - x<2>) <= 1"), *p, m1, m2));
  EXPECT_TRUE(*EvalRelAssertion(Rel(*p, "adj(d<1>, d<2>)"), *p, m1, m2));
  Memory m3 = *ParseMemory(*p, "d=[1,2,2]");
  EXPECT_FALSE(*EvalRelAssertion(Rel(*p, "adj(d<1>, d<2>)"), *p, m1, m3));
  EXPECT_FALSE(ParseAssertion("x = x<2>", *p, AssertionMode::kRelational).ok());
}

TEST(ImplicationTest, ValidAndInvalid) {
  auto p = Prog(kTwoSamples);
  const ExprPtr phi = Rel(*p, "abs(x<1> - x<2>) <= 1 && b<1>");
  EXPECT_TRUE(CheckImplication(*p, phi, phi)->valid);
  EXPECT_TRUE(
      CheckImplication(*p, Rel(*p, "x<1> = x<2>"), Rel(*p, "x<1> <= x<2>"))->valid);
  ImplicationOutcome bad =
      *CheckImplication(*p, Rel(*p, "x<1> <= x<2>"), Rel(*p, "x<1> = x<2>"));
  ASSERT_FALSE(bad.valid);
  ASSERT_TRUE(bad.counterexample.has_value());
  const int x = p->Slot("x");
  EXPECT_LT(bad.counterexample->m1[x].as_int(), bad.counterexample->m2[x].as_int());
}

TEST(ImplicationTest, WeakestPreconditionOfAssignments) {
  auto p = Prog("decls { x : int[0,3]; y : int[0,6]; } skip;");
  const CmdPtr c = *ParseCommand("y := x + x; if y > 2 then { y := 6; }", *p);
  const ExprPtr wp = *Wp(c, 1, Rel(*p, "y<1> != 4"));
  EXPECT_TRUE(CheckImplication(*p, True(), wp)->valid);
  const ExprPtr wp2 = *Wp(c, 1, Rel(*p, "y<1> <= 2"));
  EXPECT_FALSE(CheckImplication(*p, True(), wp2)->valid);
  EXPECT_TRUE(CheckImplication(*p, Rel(*p, "x<1> <= 1"), wp2)->valid);
}

// [Seq] over two [LapGen] steps at cost 0.5 each.
constexpr char kSeqLapGen[] = R"({
  "fragments": {"s1": "y <-$ lap(eps, x);", "s2": "w <-$ lap(eps, x);"},
  "root": {
    "rule": "Seq",
    "conclusion": {"c1": "@main", "c2": "@main", "pre": "abs(x<1> - x<2>) <= 1",
                   "post": "y<1> = y<2> && w<1> = w<2>", "eps": 1.0, "delta": 0},
    "children": [
      {"rule": "LapGen", "params": {"k": 0, "kprime": 1},
       "conclusion": {"c1": "@frag:s1", "c2": "@frag:s1",
                      "pre": "abs(x<1> - x<2>) <= 1",
                      "post": "y<1> = y<2> && abs(x<1> - x<2>) <= 1",
                      "eps": "eps", "delta": 0}},
      {"rule": "LapGen", "params": {"k": 0, "kprime": 1},
       "conclusion": {"c1": "@frag:s2", "c2": "@frag:s2",
                      "pre": "y<1> = y<2> && abs(x<1> - x<2>) <= 1",
                      "post": "y<1> = y<2> && w<1> = w<2>",
                      "eps": 0.5, "delta": 0}}
    ]
  }
})";

TEST(DerivationTest, SeqOfLapGenAddsBudgets) {
  auto p = Prog(kTwoSamples);
  DerivationReport r = Check(p, kSeqLapGen);
  ASSERT_TRUE(r.ok) << r.message;
  EXPECT_NEAR(r.budget.eps, 1.0, 1e-12);
  EXPECT_EQ(r.budget.delta, 0.0);
  EXPECT_EQ(r.nodes.size(), 3u);
  JudgmentValidation v = *ValidateJudgmentEmpirical(*p, *r.root, Radius(20));
  EXPECT_TRUE(v.ok) << v.worst_margin;
  EXPECT_TRUE(v.equality_fast_path);
  EXPECT_EQ(v.pairs, 10u);  // |x1 - x2| <= 1 over [0,3]^2
}

TEST(DerivationTest, CorruptedBudgetIsRejected) {
  auto p = Prog(kTwoSamples);
  Json doc = Json::parse(kSeqLapGen);
  doc["root"]["conclusion"]["eps"] = 0.9;
  DerivationReport r = *CheckDerivation(p, doc);
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.kind, ErrorKind::kBudgetMismatch);
  EXPECT_EQ(r.failed_path, "root");
  doc = Json::parse(kSeqLapGen);
  doc["root"]["children"][1]["params"]["kprime"] = 0;
  r = *CheckDerivation(p, doc);
  EXPECT_EQ(r.kind, ErrorKind::kSideConditionFailed);
  EXPECT_EQ(r.failed_path, "root/1");
  EXPECT_FALSE(r.counterexample.empty());
}

TEST(DerivationTest, UnknownRuleAndSchemaErrors) {
  auto p = Prog(kTwoSamples);
  Json doc = Json::parse(kSeqLapGen);
  doc["root"]["children"][0]["rule"] = "Magic";
  EXPECT_EQ(CheckDerivation(p, doc)->kind, ErrorKind::kUnknownRule);
  doc = Json::parse(kSeqLapGen);
  doc["root"]["children"][0]["conclusion"]["c2"] = "skip;";
  EXPECT_EQ(CheckDerivation(p, doc)->kind, ErrorKind::kRuleSchemaMismatch);
}

TEST(DerivationTest, FreshnessAndFrame) {
  auto p = Prog(kTwoSamples);
  const char* fresh = R"({"root": {"rule": "LapNull",
    "conclusion": {"c1": "y <-$ lap(eps, y);", "c2": "y <-$ lap(eps, y);",
                   "pre": "true", "post": "true", "eps": 0, "delta": 0}}})";
  EXPECT_EQ(Check(p, fresh).kind, ErrorKind::kFreshnessViolation);
  const char* frame = R"({"root": {"rule": "Frame", "params": {"theta": "y<1> = 0"},
    "conclusion": {"c1": "@main", "c2": "skip;", "pre": "y<1> = 0",
                   "post": "y<1> = 0", "eps": 0, "delta": 0},
    "children": [{"rule": "True",
      "conclusion": {"c1": "@main", "c2": "skip;", "pre": "true", "post": "true",
                     "eps": 0, "delta": 0}}]}})";
  DerivationReport r = Check(p, frame);
  EXPECT_EQ(r.kind, ErrorKind::kSideConditionFailed);
  EXPECT_NE(r.message.find("y<1>"), std::string::npos) << r.message;
}

TEST(DerivationTest, LapNullFrameAndValidation) {
  auto p = Prog(kTwoSamples);
  const char* doc = R"({"root": {"rule": "LapNull",
    "conclusion": {"c1": "y <-$ lap(eps, x);", "c2": "y <-$ lap(eps, x);",
                   "pre": "x<1> = x<2> && b<1>",
                   "post": "y<1> = y<2> && b<1>", "eps": 0, "delta": 0}}})";
  DerivationReport r = Check(p, doc);
  ASSERT_TRUE(r.ok) << r.message;
  EXPECT_TRUE(ValidateJudgmentEmpirical(*p, *r.root, Radius(5))->ok);
}

TEST(ValidationTest, SkipAndUnderBudget) {
  auto p = Prog(kTwoSamples);
  RelJudgment skip{MakeSkip(), MakeSkip(), Rel(*p, "x<1> = x<2>"),
                   Rel(*p, "x<1> = x<2>"), {0, 0}};
  EXPECT_TRUE(ValidateJudgmentEmpirical(*p, skip)->ok);
  // One sample with shifted means needs eps = 0.5; claim 0.25.
  RelJudgment under{*ParseCommand("y <-$ lap(eps, x);", *p),
                    *ParseCommand("y <-$ lap(eps, x);", *p),
                    Rel(*p, "x<1> + 1 = x<2>"), Rel(*p, "y<1> = y<2>"),
                    {0.25, 0.0}};
  JudgmentValidation v = *ValidateJudgmentEmpirical(*p, under, Radius(20));
  EXPECT_FALSE(v.ok);
  EXPECT_GT(v.worst_needed_delta, 0.05);
  under.budget.eps = 0.5;
  EXPECT_TRUE(ValidateJudgmentEmpirical(*p, under, Radius(20))->ok);
  // Non-equality post goes through the lifting solver.
  RelJudgment shift{under.c1, under.c2, Rel(*p, "x<1> + 1 = x<2>"),
                    Rel(*p, "y<1> + 1 = y<2>"), {0.0, 0.0}};
  JudgmentValidation s = *ValidateJudgmentEmpirical(*p, shift, Radius(6));
  EXPECT_FALSE(s.equality_fast_path);
  EXPECT_TRUE(s.ok) << s.worst_margin;
}

// Up-to-bad on a single sample: if |y - x| <= 2 the outputs agree.
constexpr char kUtb[] = R"({
  "root": {"rule": "RULE", "params": {"theta": "abs(y - x) <= 2", "e": "b"},
    "conclusion": {"c1": "@main", "c2": "@main", "pre": "x<1> = x<2>",
                   "post": "b<1> = b<2>", "eps": 0, "delta": DELTA},
    "children": [
      {"rule": "Seq",
       "conclusion": {"c1": "@main", "c2": "@main", "pre": "x<1> = x<2>",
                      "post": "COND -> b<1> = b<2>", "eps": 0, "delta": 0},
       "children": [
         {"rule": "LapNull",
          "conclusion": {"c1": "y <-$ lap(eps, x);", "c2": "y <-$ lap(eps, x);",
                         "pre": "x<1> = x<2>", "post": "y<1> = y<2> && x<1> = x<2>",
                         "eps": 0, "delta": 0}},
         {"rule": "Wp",
          "conclusion": {"c1": "b := y >= 0;", "c2": "b := y >= 0;",
                         "pre": "y<1> = y<2> && x<1> = x<2>",
                         "post": "COND -> b<1> = b<2>", "eps": 0, "delta": 0}}]},
      {"logic": "ahl", "rule": "Seq",
       "conclusion": {"c": "@main", "pre": "true", "post": "abs(y - x) <= 2",
                      "beta": BETA},
       "children": [
         {"logic": "ahl", "rule": "LapAcc", "params": {"bound": 2},
          "conclusion": {"c": "y <-$ lap(eps, x);", "pre": "true",
                         "post": "abs(y - x) <= 2", "beta": BETA}},
         {"logic": "ahl", "rule": "Assn",
          "conclusion": {"c": "b := y >= 0;", "pre": "abs(y - x) <= 2",
                         "post": "abs(y - x) <= 2", "beta": 0}}]}
    ]}
})";

std::string Utb(const std::string& rule, const std::string& cond, double beta,
                double delta) {
  std::string s = kUtb;
  auto rep = [&](const std::string& from, const std::string& to) {
    for (size_t i; (i = s.find(from)) != std::string::npos;) s.replace(i, from.size(), to);
  };
  rep("RULE", rule);
  rep("COND", cond);
  rep("BETA", Number17(beta));
  rep("DELTA", Number17(delta));
  return s;
}

TEST(DerivationTest, UpToBadAsymmetry) {
  auto p = Prog(R"(decls { const eps = 0.5; x : int[0,3]; y : int[-24,27]; b : bool; }
    y <-$ lap(eps, x); b := y >= 0;)");
  const double beta = 2 * std::exp(-0.5 * 2) / (std::exp(0.5) + 1);
  DerivationReport l = Check(p, Utb("UtB-L", "abs(y<1> - x<1>) <= 2", beta, beta));
  ASSERT_TRUE(l.ok) << l.message;
  EXPECT_NEAR(l.budget.delta, beta, 1e-12);
  // Same script, bad event on side 2: budget delta + e^0 * beta = beta here;
  // a Conseq-free eps = 0 premise makes both rules agree. Raise the
  // apRHL eps to see the factor.
  Json doc = Json::parse(Utb("UtB-R", "abs(y<2> - x<2>) <= 2", beta, beta));
  EXPECT_TRUE(CheckDerivation(p, doc)->ok);
  Json lifted = doc;
  Json inner = lifted["root"]["children"][0];
  Json conseq = {{"rule", "Conseq"}, {"conclusion", inner["conclusion"]},
                 {"children", Json::array({inner})}};
  conseq["conclusion"]["eps"] = 0.3;
  lifted["root"]["children"][0] = conseq;
  lifted["root"]["conclusion"]["eps"] = 0.3;
  lifted["root"]["conclusion"]["delta"] = beta * std::exp(0.3);
  DerivationReport r = *CheckDerivation(p, lifted);
  ASSERT_TRUE(r.ok) << r.message;
  lifted["root"]["rule"] = "UtB-L";
  lifted["root"]["children"][0]["conclusion"]["post"] =
      "abs(y<1> - x<1>) <= 2 -> b<1> = b<2>";
  lifted["root"]["children"][0]["children"][0]["conclusion"]["post"] =
      "abs(y<1> - x<1>) <= 2 -> b<1> = b<2>";
  lifted["root"]["children"][0]["children"][0]["children"][1]["conclusion"]["post"] =
      "abs(y<1> - x<1>) <= 2 -> b<1> = b<2>";
  EXPECT_EQ(CheckDerivation(p, lifted)->kind, ErrorKind::kBudgetMismatch);
  lifted["root"]["conclusion"]["delta"] = beta;
  DerivationReport ok = *CheckDerivation(p, lifted);
  ASSERT_TRUE(ok.ok) << ok.message;
  EXPECT_TRUE(ValidateJudgmentEmpirical(*p, *ok.root, Radius(20))->ok);
}

TEST(DerivationTest, PointwiseEqualityAndConditionals) {
  auto p = Prog(R"(decls { x : int[0,1]; b : bool; } if b then { x := 1; } else { x := 0; })");
  // PW-Eq over x with Cond children per index.
  Json child = R"({"rule": "Cond",
      "conclusion": {"c1": "@main", "c2": "@main", "pre": "b<1> = b<2>",
                     "post": "x<1> = x<2>", "eps": 0, "delta": 0},
      "children": [
        {"rule": "Assn", "conclusion": {"c1": "x := 1;", "c2": "x := 1;",
          "pre": "b<1> = b<2> && b<1> && b<2>", "post": "x<1> = x<2>", "eps": 0, "delta": 0}},
        {"rule": "Assn", "conclusion": {"c1": "x := 0;", "c2": "x := 0;",
          "pre": "b<1> = b<2> && !b<1> && !b<2>", "post": "x<1> = x<2>", "eps": 0, "delta": 0}}]})"_json;
  Json doc = {{"root", {{"rule", "PW-Eq"}, {"params", {{"vars", {"x"}}}},
                        {"conclusion", child["conclusion"]},
                        {"children", Json::array({child, child})}}}};
  DerivationReport r = Check(p, doc.dump());
  ASSERT_TRUE(r.ok) << r.message;
  doc["root"]["children"].push_back(child);
  EXPECT_EQ(Check(p, doc.dump()).kind, ErrorKind::kRuleSchemaMismatch);
  // Cond needs agreeing guards.
  child["conclusion"]["pre"] = "true";
  EXPECT_EQ(Check(p, Json({{"root", child}}).dump()).kind,
            ErrorKind::kSideConditionFailed);
}

TEST(DerivationTest, AdvancedCompositionBudget) {
  auto p = Prog(R"(decls { const eps = 0.1; i : int[0,4]; y : int[-30,34]; x : int[0,3]; }
    while i < 4 cap 4 { y <-$ lap(eps, x); i := i + 1; })");
  Json body = R"({"rule": "Seq",
    "conclusion": {"c1": "y <-$ lap(eps, x); i := i + 1;", "c2": "y <-$ lap(eps, x); i := i + 1;",
      "pre": "PRE", "post": "THETA && (i<1> < 4) = (i<2> < 4) && 4 - i<1> < K",
      "eps": 0.1, "delta": 0},
    "children": [
      {"rule": "LapGen", "params": {"k": 0, "kprime": 1},
       "conclusion": {"c1": "y <-$ lap(eps, x);", "c2": "y <-$ lap(eps, x);",
         "pre": "PRE", "post": "PRE", "eps": 0.1, "delta": 0}},
      {"rule": "Assn",
       "conclusion": {"c1": "i := i + 1;", "c2": "i := i + 1;", "pre": "PRE",
         "post": "THETA && (i<1> < 4) = (i<2> < 4) && 4 - i<1> < K", "eps": 0, "delta": 0}}]})"_json;
  const std::string theta = "i<1> = i<2> && abs(x<1> - x<2>) <= 1";
  Json kids = Json::array();
  for (int k = 1; k <= 4; ++k) {
    std::string s = body.dump();
    const std::string pre = theta + " && i<1> < 4 && i<2> < 4 && 4 - i<1> = " + std::to_string(k);
    auto rep = [&](const std::string& from, const std::string& to) {
      for (size_t i; (i = s.find(from)) != std::string::npos;) s.replace(i, from.size(), to);
    };
    rep("PRE", pre);
    rep("THETA", theta);
    rep(" K\"", " " + std::to_string(k) + "\"");
    kids.push_back(Json::parse(s));
  }
  const Budget ac = *AdvBudget(4, 0.1, 0.0, 0.25);
  Json doc = {{"root",
               {{"rule", "AC-While"},
                {"params", {{"theta", theta}, {"variant", "4 - i<1>"}, {"n", 4},
                            {"eps", 0.1}, {"delta", 0}, {"omega", 0.25}}},
                {"conclusion", {{"c1", "@main"}, {"c2", "@main"},
                                {"pre", theta + " && i<1> = 0"},
                                {"post", "i<1> = i<2>"},
                                {"eps", ac.eps}, {"delta", ac.delta}}},
                {"children", kids}}}};
  DerivationReport r = Check(p, doc.dump());
  ASSERT_TRUE(r.ok) << r.message;
  EXPECT_DOUBLE_EQ(r.budget.eps, ac.eps);
  EXPECT_DOUBLE_EQ(r.budget.delta, 0.25);
  doc["root"]["rule"] = "While";
  doc["root"]["conclusion"]["eps"] = 0.4;
  doc["root"]["conclusion"]["delta"] = 0;
  r = Check(p, doc.dump());
  ASSERT_TRUE(r.ok) << r.message;
  EXPECT_NEAR(r.budget.eps, 0.4, 1e-12);
  doc["root"]["params"]["n"] = 5;
  EXPECT_EQ(Check(p, doc.dump()).kind, ErrorKind::kRuleSchemaMismatch);
}

}  // namespace
}  // namespace dpcouple
