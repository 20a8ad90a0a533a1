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

#include "dpcouple/mechanisms.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "dpcouple/assertion.h"
#include "dpcouple/composition.h"
#include "dpcouple/eval.h"
#include "dpcouple/laplace.h"
#include "dpcouple/parser.h"
#include "dpcouple/status.h"

namespace dpcouple {

std::vector<Value> ToyDatabaseSpace::All() const {
  std::vector<Value> out;
  std::vector<int64_t> cur(rows, lo);
  while (true) {
    std::vector<Value> row;
    for (int64_t x : cur) row.push_back(Value::Int(x));
    out.push_back(Value::List(row));
    int i = rows - 1;
    while (i >= 0 && cur[i] == hi) cur[i--] = lo;
    if (i < 0) break;
    ++cur[i];
  }
  return out;
}

std::vector<std::pair<Value, Value>> ToyDatabaseSpace::AdjacentPairs() const {
  std::vector<std::pair<Value, Value>> out;
  const std::vector<Value> all = All();
  for (const Value& a : all) {
    for (const Value& b : all) {
      if (Adjacent(a, b)) out.emplace_back(a, b);
    }
  }
  return out;
}

std::string ToyDatabaseSpace::TypeText() const {
  return absl::StrCat("list<int[", lo, ",", hi, "]>[len ", rows, "]");
}

absl::StatusOr<AsvbtParams> ComputeAsvbtParams(double eps, double delta,
                                               int64_t M) {
  if (!(eps > 0.0 && eps <= 1.0) || !(delta > 0.0 && delta < 1.0) || M < 1) {
    return MakeError(ErrorKind::kOutOfRange,
                     absl::StrCat("eps = ", eps, ", delta = ", delta,
                                  ", M = ", M));
  }
  AsvbtParams out;
  out.eps_prime = eps / (4.0 * std::sqrt(2.0 * M * std::log(2.0 / delta)));
  out.sigma = (6.0 / out.eps_prime) * std::log(4.0 / out.eps_prime);
  out.gamma = out.sigma + (4.0 / eps) * std::log(2.0 / delta);
  return out;
}

double InnerTestSlack(double x, double sigma) {
  return x - (2.0 * x / 3.0 - std::log1p(-std::exp(-sigma * x / 6.0)));
}

namespace {

// Real literal that the parser keeps real ("1" would be an int).
std::string RealLit(double x) {
  std::string s;
  for (int digits = 15; digits <= 17; ++digits) {
    s = absl::StrFormat("%.*g", digits, x);
    if (std::stod(s) == x) break;
  }
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

absl::StatusOr<std::shared_ptr<const Program>> ParseBuilt(
    const std::string& text) {
  DPC_ASSIGN_OR_RETURN(Program p, ParseProgram(text));
  return std::make_shared<const Program>(std::move(p));
}

absl::StatusOr<Value> EvalAt(const Program& p, const std::string& expr,
                             const std::vector<std::pair<std::string, Value>>& vals) {
  DPC_ASSIGN_OR_RETURN(ExprPtr e, ParseAssertion(expr, p, AssertionMode::kUnary));
  Memory m = DefaultMemory(p);
  for (const auto& [name, v] : vals) m[p.Slot(name)] = v;
  return Eval(e, p, &m);
}

Json BudgetFields(Json concl, const Budget& b) {
  concl["eps"] = b.eps;
  concl["delta"] = b.delta;
  return concl;
}

Json RelNode(const std::string& rule, Json params, const std::string& c,
             const std::string& pre, const std::string& post, const Budget& b,
             std::vector<Json> children = {}) {
  Json node;
  node["rule"] = rule;
  if (!params.is_null()) node["params"] = std::move(params);
  node["conclusion"] =
      BudgetFields({{"c1", c}, {"c2", c}, {"pre", pre}, {"post", post}}, b);
  if (!children.empty()) node["children"] = std::move(children);
  return node;
}

Json AhlNode(const std::string& rule, Json params, const std::string& c,
             const std::string& pre, const std::string& post, double beta,
             std::vector<Json> children = {}) {
  Json node;
  node["logic"] = "ahl";
  node["rule"] = rule;
  if (!params.is_null()) node["params"] = std::move(params);
  node["conclusion"] = {{"c", c}, {"pre", pre}, {"post", post}, {"beta", beta}};
  if (!children.empty()) node["children"] = std::move(children);
  return node;
}

Json LemmaRef(const std::string& name) { return Json{{"lemma", name}}; }

std::string Frag(const std::string& name) { return "@frag:" + name; }

// Relational weakest precondition of a deterministic fragment run on both
// sides, rendered back to text.
absl::StatusOr<std::string> RelWp(const Program& p, const std::string& cmd,
                                  const std::string& post) {
  DPC_ASSIGN_OR_RETURN(CmdPtr c, ParseCommand(cmd, p));
  DPC_ASSIGN_OR_RETURN(ExprPtr q, ParseAssertion(post, p, AssertionMode::kRelational));
  DPC_ASSIGN_OR_RETURN(ExprPtr w2, Wp(c, 2, q));
  DPC_ASSIGN_OR_RETURN(ExprPtr w, Wp(c, 1, w2));
  return ToString(w);
}

absl::StatusOr<std::string> UnWp(const Program& p, const std::string& cmd,
                                 const std::string& post) {
  DPC_ASSIGN_OR_RETURN(CmdPtr c, ParseCommand(cmd, p));
  DPC_ASSIGN_OR_RETURN(ExprPtr q, ParseAssertion(post, p, AssertionMode::kUnary));
  DPC_ASSIGN_OR_RETURN(ExprPtr w, Wp(c, 0, q));
  return ToString(w);
}

constexpr char kLicenseLines[] =
    "// Copyright 2026 The DP Coupling Workbench Authors\n"
    "// SPDX-License-Identifier: Apache-2.0\n";

}  // namespace

// ---------------------------------------------------------------------------
// Propose-test-release.

absl::StatusOr<BuiltMechanism> BuildPtr(const PtrConfig& config) {
  if (!(config.eps > 0.0) || !(config.delta > 0.0 && config.delta < 1.0)) {
    return MakeError(ErrorKind::kOutOfRange,
                     absl::StrCat("eps = ", config.eps, ", delta = ", config.delta));
  }
  const ToyDatabaseSpace& space = config.space;
  const std::string head = absl::StrCat(
      "decls {\n  fun f(x) = ", config.f, ";\n  fun dist_to_inst(x) = ",
      config.dist_to_inst, ";\n  d : ", space.TypeText(), ";\n}\n");
  DPC_ASSIGN_OR_RETURN(auto probe, ParseBuilt(head));

  // Instability properties over the declared space.
  std::map<Value, int64_t> dist;
  std::map<Value, Value> fval;
  int64_t dmin = std::numeric_limits<int64_t>::max(), dmax = -dmin;
  int64_t rmin = config.bot, rmax = config.bot;
  for (const Value& d : space.All()) {
    DPC_ASSIGN_OR_RETURN(Value dv, EvalAt(*probe, "dist_to_inst(d)", {{"d", d}}));
    DPC_ASSIGN_OR_RETURN(Value fv, EvalAt(*probe, "f(d)", {{"d", d}}));
    if (!dv.is_int() || !fv.is_int()) {
      return MakeError(ErrorKind::kTypeMismatch,
                       "f and dist_to_inst must be integer valued");
    }
    dist[d] = dv.as_int();
    fval[d] = fv;
    dmin = std::min(dmin, dv.as_int());
    dmax = std::max(dmax, dv.as_int());
    rmin = std::min(rmin, fv.as_int());
    rmax = std::max(rmax, fv.as_int());
  }
  for (const auto& [d1, d2] : space.AdjacentPairs()) {
    if (dist[d1] > 1 && fval[d1] != fval[d2]) {
      return MakeError(ErrorKind::kInstabilityPropertyViolated,
                       absl::StrCat("dist_to_inst(", d1.ToString(), ") = ",
                                    dist[d1], " > 1 but f changes at ",
                                    d2.ToString()));
    }
    if (std::llabs(dist[d1] - dist[d2]) > 1) {
      return MakeError(ErrorKind::kInstabilityPropertyViolated,
                       absl::StrCat("dist_to_inst differs by more than 1 on ",
                                    d1.ToString(), ", ", d2.ToString()));
    }
  }

  const int64_t radius = DefaultLaplaceRadius(config.eps);
  const double t0 = std::log(1.0 / config.delta) / config.eps;
  BuiltMechanism out;
  out.target = {config.eps, config.delta};
  out.values = {{"threshold", t0 + 1.0}, {"bad_event_bound", t0}};
  out.program_text = absl::StrCat(
      kLicenseLines, config.comment.empty() ? "" : "// " + config.comment + "\n",
      "decls {\n  const eps = ", RealLit(config.eps), ";\n  const delta = ",
      RealLit(config.delta), ";\n  const bot = ", config.bot,
      ";\n  fun f(x) = ", config.f, ";\n  fun dist_to_inst(x) = ",
      config.dist_to_inst, ";\n  d : ", space.TypeText(), ";\n  dist : int[",
      dmin - radius - 2, ",", dmax + radius + 2, "];\n  r : int[", rmin, ",",
      rmax, "];\n}\n",
      "dist <-$ lap(eps, dist_to_inst(d));\n"
      "if dist > ln(1 / delta) / eps + 1 then {\n  r := f(d);\n} else {\n"
      "  r := bot;\n}\nreturn r;\n");
  DPC_ASSIGN_OR_RETURN(out.program, ParseBuilt(out.program_text));

  const std::string T = RealLit(t0);
  const std::string thr = "ln(1 / delta) / eps + 1";
  const std::string theta = absl::StrCat("abs(dist - dist_to_inst(d)) < ", T);
  const std::string phi0 = "adj(d<1>, d<2>)";
  const std::string coupled = "dist<1> = dist<2> && adj(d<1>, d<2>)";
  const std::string cond_post =
      absl::StrCat("abs(dist<1> - dist_to_inst(d<1>)) < ", T, " -> r<1> = r<2>");
  const Budget zero{0.0, 0.0};
  const Budget lap{config.eps, 0.0};

  Json cond = RelNode(
      "Cond", nullptr, Frag("test"), coupled, cond_post, zero,
      {RelNode("Wp", nullptr, Frag("release"),
               absl::StrCat(coupled, " && dist<1> > ", thr, " && dist<2> > ", thr),
               cond_post, zero),
       RelNode("Wp", nullptr, Frag("default"), coupled, cond_post, zero)});
  Json rel = RelNode(
      "Seq", nullptr, "@main", phi0, cond_post, lap,
      {RelNode("LapGen", {{"k", 0}, {"kprime", 1}}, Frag("noise"), phi0, coupled,
               lap),
       std::move(cond)});
  Json bad = AhlNode(
      "Seq", nullptr, "@main", "true", theta, config.delta,
      {AhlNode("LapAcc", {{"beta", config.delta}}, Frag("noise"), "true", theta,
               config.delta),
       AhlNode("Frame", {{"theta", theta}}, Frag("test"), theta, theta, 0.0,
               {AhlNode("True", nullptr, Frag("test"), "true", "true", 0.0)})});
  Json root = RelNode("UtB-L", {{"theta", theta}, {"e", "r"}}, "@main", phi0,
                      "r<1> = r<2>", out.target, {std::move(rel), std::move(bad)});
  out.proof = {
      {"header", {{"program", "ptr.prog"}}},
      {"fragments",
       {{"noise", "dist <-$ lap(eps, dist_to_inst(d));"},
        {"test", "if dist > ln(1 / delta) / eps + 1 then { r := f(d); } "
                 "else { r := bot; }"},
        {"release", "r := f(d);"},
        {"default", "r := bot;"}}},
      {"root", std::move(root)}};
  return out;
}

// ---------------------------------------------------------------------------
// Sparse vector between thresholds.

namespace {

struct AsvbtText {
  std::string decls;
  std::string prefix;  // shared initialization
  std::string original_loop;
  std::string transformed_loop;
};

AsvbtText AsvbtSource(const AsvbtConfig& c, int64_t qmin, int64_t qmax,
                      int64_t um, int64_t sm) {
  AsvbtText t;
  std::string queries;
  for (const QuerySpec& q : c.queries) {
    absl::StrAppend(&queries, "  query ", q.name, "(x) = ", q.body, ";\n");
  }
  t.decls = absl::StrCat(
      "decls {\n  const eps = ", RealLit(c.eps), ";\n  const delta = ",
      RealLit(c.delta), ";\n  const M = ", c.M, ";\n  const N = ", c.N,
      ";\n  const a = ", c.a, ";\n  const b = ", c.b,
      ";\n  const eps1 = eps / (4 * sqrt(2 * M * ln(2 / delta)));\n", queries,
      "  d : ", c.space.TypeText(),
      ";\n  i : int[0,N];\n  ip : int[0,N];\n  hd : int[-1,N];\n"
      "  l : list<int[0,N]>[max M];\n  u : int[", -um, ",", um, "];\n  A : int[",
      c.a - um, ",", c.a + um, "];\n  B : int[", c.b - um, ",", c.b + um,
      "];\n  S : int[", qmin - sm, ",", qmax + sm,
      "];\n  q : query;\n  adversary Adv : int[0,", c.adversary_states - 1,
      "];\n}\n");
  t.prefix =
      "i := 0;\nl := [];\nu <-$ lap(eps / 2, 0);\nA := a - u;\nB := b + u;\n";
  t.original_loop =
      "while i < N && len(l) < M cap N {\n"
      "  q <- adv Adv(l);\n"
      "  S <-$ lap(eps1 / 3, evalQ(q, d));\n"
      "  if A <= S && S <= B then {\n"
      "    l := i :: l;\n"
      "  }\n"
      "  i := i + 1;\n"
      "}\n";
  t.transformed_loop =
      "while i < N && len(l) < M cap N {\n"
      "  ip := i;\n"
      "  hd := -1;\n"
      "  while ip < N cap N {\n"
      "    if hd == -1 then {\n"
      "      q <- adv Adv(l);\n"
      "      S <-$ lap(eps1 / 3, evalQ(q, d));\n"
      "      if A <= S && S <= B then {\n"
      "        hd := i;\n"
      "      }\n"
      "      i := i + 1;\n"
      "    }\n"
      "    ip := ip + 1;\n"
      "  }\n"
      "  if hd != -1 then {\n"
      "    l := hd :: l;\n"
      "  }\n"
      "}\n";
  return t;
}

// Derivation generator for the transformed variant. All assertion texts
// are built here; intermediate ones come from the library's Wp so that the
// checker sees exactly the substitutions it computes.
class AsvbtProof {
 public:
  AsvbtProof(const AsvbtConfig& c, const Program& p, const AsvbtParams& params,
             int64_t acc_bound, double beta, double omega)
      : c_(c), p_(p), par_(params), T_(acc_bound), beta_(beta), omega_(omega) {
    sig_ = RealLit(params.sigma);
    psi1_ = absl::StrCat("B<1> - A<1> >= ", sig_);
    statics_ = absl::StrCat(
        "adj(d<1>, d<2>) && l<1> = l<2> && A<1> + 1 = A<2> && B<1> = B<2> + 1"
        " && A<1> + B<1> = a + b && A<2> + B<2> = a + b && ",
        psi1_);
    theta_o_ = statics_ + " && i<1> = i<2> && Adv<1> = Adv<2>";
    b1_ = "(i<1> < N && len(l<1>) < M)";
    b2_ = "(i<2> < N && len(l<2>) < M)";
    e_ = "((i<1> < N && len(l<1>) < M) ? M - len(l<1>) : 0)";
    p_in_ = statics_ +
            " && Adv<1> = Adv<2> && ip<1> = ip<2> && ip<1> = i<1> && i<1> = i<2>"
            " && hd<1> = -1 && hd<2> = -1";
    eq_post_ =
        "hd<1> = hd<2> && i<1> = i<2> && Adv<1> = Adv<2> && (hd<1> = -1 -> "
        "i<1> = N) && (hd<2> = -1 -> i<2> = N)";
  }

  absl::StatusOr<Json> Build();
  Budget total() const { return total_; }
  double ac_eps() const { return ac_.eps; }
  double lapint_cost() const { return lapint_cost_; }

 private:
  std::string Sync(int64_t j) const {
    const std::string tail = "hd<2> = hd<1> && i<1> = i<2> && Adv<1> = Adv<2>";
    std::string s = absl::StrCat("(hd<1> = -1 -> ", tail, ")");
    if (j >= 0) absl::StrAppend(&s, " && (hd<1> = ", j, " -> ", tail, ")");
    return s;
  }
  std::string ThetaInner(int64_t j) const {
    return absl::StrCat(statics_,
                        " && ip<1> = ip<2> && (hd<1> = -1 -> i<1> = ip<1>) && "
                        "hd<1> < ip<1> && ",
                        Sync(j));
  }
  bool Critical(int64_t j, int64_t k) const {
    return j >= 0 && j < c_.N && k == c_.N - j;
  }

  absl::StatusOr<Json> InnerLemma(int64_t j);
  absl::StatusOr<Json> InnerIteration(int64_t j, int64_t k);
  absl::StatusOr<Json> AhlInnerLemma();
  absl::StatusOr<Json> OuterIteration(int64_t k);

  const AsvbtConfig& c_;
  const Program& p_;
  AsvbtParams par_;
  int64_t T_;
  double beta_;
  double omega_;
  Budget ac_;
  Budget total_;
  double lapint_cost_ = 0.0;
  std::string sig_, psi1_, statics_, theta_o_, b1_, b2_, e_, p_in_, eq_post_;
};

absl::StatusOr<Json> AsvbtProof::InnerIteration(int64_t j, int64_t k) {
  const Budget zero{0.0, 0.0};
  const int64_t cv = c_.N - k;  // value of ip<1> at this iteration
  const std::string theta = ThetaInner(j);
  const std::string pre = absl::StrCat(theta, " && ip<1> < N && ip<2> < N && N - ip<1> = ", k);
  const std::string post = absl::StrCat(
      theta, " && (ip<1> < N <-> ip<2> < N) && N - ip<1> < ", k);
  DPC_ASSIGN_OR_RETURN(std::string mid, RelWp(p_, "ip := ip + 1;", post));
  const bool crit = Critical(j, k);
  const Budget cost{crit ? par_.eps_prime : 0.0, 0.0};

  // Both sides still scanning: couple the adversary call and the noise.
  const std::string phi = absl::StrCat(
      statics_, " && ip<1> = ", cv, " && ip<2> = ", cv, " && hd<1> = -1 && hd<2> = -1",
      " && i<1> = ", cv, " && i<2> = ", cv);
  const std::string pre_c1 = phi + " && Adv<1> = Adv<2>";
  const std::string post_adv = phi + " && q<1> = q<2> && Adv<1> = Adv<2>";
  Json sample;
  std::string post_samp;
  if (crit) {
    post_samp = post_adv +
                " && ((A<1> <= S<1> && S<1> <= B<1>) <-> (A<2> <= S<2> && S<2> <= B<2>))";
    Json lapint = RelNode("LapInt",
                          {{"p", "A<1>"}, {"q", "B<1>"}, {"r", "A<2>"}, {"s", "B<2>"},
                           {"k", 1}, {"eta", 2.0}, {"sigma", par_.sigma}},
                          Frag("samp"), post_adv, post_samp, {lapint_cost_, 0.0});
    sample = RelNode("Conseq", nullptr, Frag("samp"), post_adv, post_samp, cost,
                     {std::move(lapint)});
  } else {
    post_samp = post_adv + " && S<1> - S<2> <= 1 && S<2> - S<1> <= 1";
    Json null = RelNode("LapNull", nullptr, Frag("samp"), post_adv,
                        "S<1> - S<2> = evalQ(q<1>, d<1>) - evalQ(q<2>, d<2>) && " + post_adv,
                        zero);
    sample = RelNode("Conseq", nullptr, Frag("samp"), post_adv, post_samp, zero,
                     {std::move(null)});
  }
  Json then_seq = RelNode(
      "Seq", nullptr, Frag("then"), pre_c1, mid, cost,
      {RelNode("Adv", {{"phi", phi}}, Frag("adv"), pre_c1, post_adv, zero),
       std::move(sample),
       RelNode("Wp", nullptr, Frag("rest"), post_samp, mid, zero)});
  const std::string c1_pre = pre + " && hd<1> = -1";
  Json branch_c1 = RelNode(
      "Seq", nullptr, Frag("ibody"), c1_pre, post, cost,
      {RelNode("Cond", nullptr, Frag("iif"), pre_c1, mid, cost,
               {std::move(then_seq),
                RelNode("Skip", nullptr, "skip;", "false", mid, zero)}),
       RelNode("Wp", nullptr, Frag("ipinc"), mid, post, zero)});

  // Side 1 has already answered at an index other than j: the sides run
  // independently for this step.
  const std::string not_c1 = pre + " && !(hd<1> = -1)";
  const std::string nc_pre =
      j >= 0 ? absl::StrCat(not_c1, " && !(hd<1> = ", j, ")") : not_c1;
  std::string p1 = "hd != -1 && hd < ip";
  std::string p1_rel = "hd<1> != -1 && hd<1> < ip<1>";
  if (j >= 0) {
    absl::StrAppend(&p1, " && hd != ", j);
    absl::StrAppend(&p1_rel, " && hd<1> != ", j);
  }
  const std::string frame_t =
      absl::StrCat(statics_, " && ip<1> = ip<2> && ip<1> = ", cv);
  Json side1 = AhlNode("Cond", nullptr, Frag("iif"), p1, p1, 0.0,
                       {AhlNode("Absurd", nullptr, Frag("then"), "false", p1, 0.0),
                        AhlNode("Skip", nullptr, "skip;", p1, p1, 0.0)});
  Json side2 = AhlNode("True", nullptr, Frag("iif"), "true", "true", 0.0);
  Json indep = RelNode("Indep", nullptr, Frag("iif"), nc_pre, p1_rel, zero,
                       {std::move(side1), std::move(side2)});
  const std::string framed = p1_rel + " && " + frame_t;
  Json branch_nc = RelNode(
      "Seq", nullptr, Frag("ibody"), nc_pre, post, zero,
      {RelNode("Frame", {{"theta", frame_t}}, Frag("iif"), nc_pre, framed, zero,
               {std::move(indep)}),
       RelNode("Wp", nullptr, Frag("ipinc"), framed, post, zero)});

  Json rest;
  if (j >= 0) {
    // Both sides answered at j: nothing left to sample.
    const std::string c2_pre = absl::StrCat(not_c1, " && hd<1> = ", j);
    Json branch_c2 = RelNode(
        "Seq", nullptr, Frag("ibody"), c2_pre, post, zero,
        {RelNode("Cond", nullptr, Frag("iif"), c2_pre, mid, zero,
                 {RelNode("Absurd", nullptr, Frag("then"), "false", mid, zero),
                  RelNode("Skip", nullptr, "skip;", mid, mid, zero)}),
         RelNode("Wp", nullptr, Frag("ipinc"), mid, post, zero)});
    rest = RelNode("Case", {{"cond", absl::StrCat("hd<1> = ", j)}}, Frag("ibody"),
                   not_c1, post, zero, {std::move(branch_c2), std::move(branch_nc)});
  } else {
    rest = std::move(branch_nc);
  }
  return RelNode("Case", {{"cond", "hd<1> = -1"}}, Frag("ibody"), pre, post, cost,
                 {std::move(branch_c1), std::move(rest)});
}

absl::StatusOr<Json> AsvbtProof::InnerLemma(int64_t j) {
  std::vector<Json> kids;
  Budget sum;
  for (int64_t k = 1; k <= c_.N; ++k) {
    DPC_ASSIGN_OR_RETURN(Json it, InnerIteration(j, k));
    if (Critical(j, k)) sum.eps += par_.eps_prime;
    kids.push_back(std::move(it));
  }
  const std::string theta = ThetaInner(j);
  return RelNode("While",
                 {{"theta", theta}, {"variant", "N - ip<1>"}, {"n", c_.N}},
                 Frag("inner"), p_in_,
                 theta + " && !(ip<1> < N) && !(ip<2> < N)", sum, std::move(kids));
}

absl::StatusOr<Json> AsvbtProof::AhlInnerLemma() {
  const std::string theta = "(hd == -1 -> i == ip) && hd < ip";
  std::vector<Json> kids;
  for (int64_t k = 1; k <= c_.N; ++k) {
    const std::string pre = absl::StrCat(theta, " && ip < N && N - ip = ", k);
    const std::string post = absl::StrCat(theta, " && N - ip < ", k);
    DPC_ASSIGN_OR_RETURN(std::string mid, UnWp(p_, "ip := ip + 1;", post));
    DPC_ASSIGN_OR_RETURN(std::string r, UnWp(p_, "i := i + 1;", mid));
    const std::string t0 = pre + " && hd == -1";
    Json then_seq = AhlNode(
        "Seq", nullptr, Frag("then"), t0, mid, 0.0,
        {AhlNode("Frame", {{"theta", t0}}, Frag("advsamp"), t0, t0, 0.0,
                 {AhlNode("True", nullptr, Frag("advsamp"), "true", "true", 0.0)}),
         AhlNode("Cond", nullptr, Frag("aif"), t0, r, 0.0,
                 {AhlNode("Assn", nullptr, "hd := i;", t0, r, 0.0),
                  AhlNode("Skip", nullptr, "skip;", t0, r, 0.0)}),
         AhlNode("Assn", nullptr, Frag("inc"), r, mid, 0.0)});
    kids.push_back(AhlNode(
        "Seq", nullptr, Frag("ibody"), pre, post, 0.0,
        {AhlNode("Cond", nullptr, Frag("iif"), pre, mid, 0.0,
                 {std::move(then_seq),
                  AhlNode("Skip", nullptr, "skip;", pre + " && !(hd == -1)", mid, 0.0)}),
         AhlNode("Assn", nullptr, Frag("ipinc"), mid, post, 0.0)}));
  }
  return AhlNode("While", {{"theta", theta}, {"variant", "N - ip"}, {"n", c_.N}},
                 Frag("inner"), "hd == -1 && i == ip", "hd == -1 -> i == N", 0.0,
                 std::move(kids));
}

absl::StatusOr<Json> AsvbtProof::OuterIteration(int64_t k) {
  const Budget zero{0.0, 0.0};
  const Budget cost{par_.eps_prime, 0.0};
  const std::string pre =
      absl::StrCat(theta_o_, " && ", b1_, " && ", b2_, " && ", e_, " = ", k);
  const std::string post = absl::StrCat(theta_o_, " && (", b1_, " <-> ", b2_,
                                        ") && ", e_, " < ", k);
  const std::string len = absl::StrCat("len(l<1>) = ", c_.M - k);
  const std::string frame_t = statics_ + " && " + len;
  const std::string in_pre = p_in_ + " && " + len;
  const std::string in_post = eq_post_ + " && " + frame_t;

  // Pointwise equality of (hd, i, Adv), one index at a time.
  std::vector<Json> pw;
  for (int64_t vh = -1; vh <= c_.N; ++vh) {
    for (int64_t vi = 0; vi <= c_.N; ++vi) {
      for (int64_t va = 0; va < c_.adversary_states; ++va) {
        const std::string goal = absl::StrCat(
            "(hd<1> = ", vh, " && i<1> = ", vi, " && Adv<1> = ", va,
            ") -> (hd<2> = ", vh, " && i<2> = ", vi, " && Adv<2> = ", va, ")");
        pw.push_back(RelNode("Conseq", nullptr, Frag("inner"), p_in_, goal, cost,
                             {LemmaRef(absl::StrCat("inner_", vh))}));
      }
    }
  }
  Json pweq = RelNode("PW-Eq", {{"vars", {"hd", "i", "Adv"}}}, Frag("inner"), p_in_,
                      "hd<1> = hd<2> && i<1> = i<2> && Adv<1> = Adv<2>", cost,
                      std::move(pw));
  Json eqinv = RelNode("EqInv", {{"vars", {"hd", "i", "Adv"}}, {"inv", "hd == -1 -> i == N"}},
                       Frag("inner"), p_in_, eq_post_, cost,
                       {std::move(pweq), LemmaRef("inner_ahl"), LemmaRef("inner_ahl")});
  return RelNode(
      "Seq", nullptr, Frag("obody"), pre, post, cost,
      {RelNode("Wp", nullptr, Frag("start"), pre, in_pre, zero),
       RelNode("Frame", {{"theta", frame_t}}, Frag("inner"), in_pre, in_post, cost,
               {std::move(eqinv)}),
       RelNode("Wp", nullptr, Frag("push"), in_post, post, zero)});
}

absl::StatusOr<Json> AsvbtProof::Build() {
  const Budget zero{0.0, 0.0};
  const double eps_u = c_.eps / 2.0;
  const double eps_s = par_.eps_prime / 3.0;
  lapint_cost_ = 2.0 * eps_s - std::log1p(-std::exp(-par_.sigma * eps_s / 2.0));
  DPC_ASSIGN_OR_RETURN(ac_, AdvBudget(static_cast<int>(c_.M), par_.eps_prime, 0.0, omega_));

  Json lemmas = Json::object();
  for (int64_t j = -1; j <= c_.N; ++j) {
    DPC_ASSIGN_OR_RETURN(lemmas[absl::StrCat("inner_", j)], InnerLemma(j));
  }
  DPC_ASSIGN_OR_RETURN(lemmas["inner_ahl"], AhlInnerLemma());

  std::vector<Json> iters;
  for (int64_t k = 1; k <= c_.M; ++k) {
    DPC_ASSIGN_OR_RETURN(Json it, OuterIteration(k));
    iters.push_back(std::move(it));
  }
  Json ac = RelNode("AC-While",
                    {{"theta", theta_o_}, {"variant", e_}, {"n", c_.M},
                     {"eps", par_.eps_prime}, {"delta", 0.0}, {"omega", omega_}},
                    Frag("outer"), absl::StrCat(theta_o_, " && (", b1_, " <-> ", b2_, ") && ", e_, " <= M"),
                    absl::StrCat(theta_o_, " && !", b1_, " && !", b2_), ac_,
                    std::move(iters));

  // Threshold coupling: u<1> - 1 = u<2> gives A<1> + 1 = A<2>, B<1> = B<2> + 1.
  const std::string phi0 = "adj(d<1>, d<2>) && Adv<1> = Adv<2>";
  const std::string phi_i =
      phi0 + " && i<1> = 0 && i<2> = 0 && l<1> = [] && l<2> = []";
  const std::string phi_u = phi_i + " && u<1> - 1 = u<2>";
  const std::string phi_t =
      phi0 +
      " && i<1> = i<2> && i<1> = 0 && l<1> = l<2> && l<1> = [] && A<1> + 1 = A<2>"
      " && B<1> = B<2> + 1 && A<1> + B<1> = a + b && A<2> + B<2> = a + b";
  const Budget bu{eps_u, 0.0};
  Json threshold = RelNode(
      "Seq", nullptr, Frag("prefix"), phi0, phi_t, bu,
      {RelNode("Assn", nullptr, Frag("init"), phi0, phi_i, zero),
       RelNode("LapGen", {{"k", -1}, {"kprime", 1}}, Frag("noise_u"), phi_i, phi_u, bu),
       RelNode("Assn", nullptr, Frag("ab"), phi_u, phi_t, zero)});

  const std::string cond_post = psi1_ + " -> l<1> = l<2>";
  const std::string not_psi1 = "!(" + psi1_ + ")";
  Json outer = RelNode(
      "Case", {{"cond", psi1_}}, Frag("outer"), phi_t, cond_post, ac_,
      {RelNode("Conseq", nullptr, Frag("outer"), phi_t + " && " + psi1_, cond_post, ac_,
               {std::move(ac)}),
       RelNode("Conseq", nullptr, Frag("outer"), phi_t + " && " + not_psi1, cond_post, ac_,
               {RelNode("Frame", {{"theta", not_psi1}}, Frag("outer"),
                        phi_t + " && " + not_psi1, not_psi1, zero,
                        {RelNode("True", nullptr, Frag("outer"), "true", "true", zero)})})});
  const Budget rel_b{eps_u + ac_.eps, ac_.delta};
  Json rel = RelNode("Seq", nullptr, "@main", phi0, cond_post, rel_b,
                     {std::move(threshold), std::move(outer)});

  // Noise on the threshold stays within T, so B - A >= sigma.
  const std::string gap = absl::StrCat("B - A >= ", sig_);
  const std::string acc = absl::StrCat("abs(u) <= ", T_);
  Json bad = AhlNode(
      "Seq", nullptr, "@main", "true", gap, beta_,
      {AhlNode("Assn", nullptr, Frag("init"), "true", "true", 0.0),
       AhlNode("LapAcc", {{"bound", T_}}, Frag("noise_u"), "true", acc, beta_),
       AhlNode("Assn", nullptr, Frag("ab"), acc, gap, 0.0),
       AhlNode("Frame", {{"theta", gap}}, Frag("outer"), gap, gap, 0.0,
               {AhlNode("True", nullptr, Frag("outer"), "true", "true", 0.0)})});
  const Budget utb{rel_b.eps, rel_b.delta + beta_};
  Json utbl = RelNode("UtB-L", {{"theta", gap}, {"e", "l"}}, "@main", phi0,
                      "l<1> = l<2>", utb, {std::move(rel), std::move(bad)});
  total_ = {c_.eps, c_.delta};
  Json root = RelNode("Conseq", nullptr, "@main", phi0, "l<1> = l<2>", total_,
                      {std::move(utbl)});

  Json frags = {
      {"init", "i := 0; l := [];"},
      {"noise_u", "u <-$ lap(eps / 2, 0);"},
      {"ab", "A := a - u; B := b + u;"},
      {"prefix", "i := 0; l := []; u <-$ lap(eps / 2, 0); A := a - u; B := b + u;"},
      {"adv", "q <- adv Adv(l);"},
      {"samp", "S <-$ lap(eps1 / 3, evalQ(q, d));"},
      {"advsamp", "q <- adv Adv(l); S <-$ lap(eps1 / 3, evalQ(q, d));"},
      {"aif", "if A <= S && S <= B then { hd := i; }"},
      {"inc", "i := i + 1;"},
      {"rest", "if A <= S && S <= B then { hd := i; } i := i + 1;"},
      {"then",
       "q <- adv Adv(l); S <-$ lap(eps1 / 3, evalQ(q, d)); "
       "if A <= S && S <= B then { hd := i; } i := i + 1;"},
      {"iif",
       "if hd == -1 then { q <- adv Adv(l); S <-$ lap(eps1 / 3, evalQ(q, d)); "
       "if A <= S && S <= B then { hd := i; } i := i + 1; }"},
      {"ipinc", "ip := ip + 1;"},
      {"ibody",
       "if hd == -1 then { q <- adv Adv(l); S <-$ lap(eps1 / 3, evalQ(q, d)); "
       "if A <= S && S <= B then { hd := i; } i := i + 1; } ip := ip + 1;"},
      {"start", "ip := i; hd := -1;"},
      {"inner",
       "while ip < N cap N { if hd == -1 then { q <- adv Adv(l); "
       "S <-$ lap(eps1 / 3, evalQ(q, d)); if A <= S && S <= B then { hd := i; } "
       "i := i + 1; } ip := ip + 1; }"},
      {"push", "if hd != -1 then { l := hd :: l; }"},
      {"obody",
       "ip := i; hd := -1; while ip < N cap N { if hd == -1 then { "
       "q <- adv Adv(l); S <-$ lap(eps1 / 3, evalQ(q, d)); "
       "if A <= S && S <= B then { hd := i; } i := i + 1; } ip := ip + 1; } "
       "if hd != -1 then { l := hd :: l; }"},
  };
  frags["outer"] = absl::StrCat("while i < N && len(l) < M cap N { ",
                                frags["obody"].get<std::string>(), " }");
  return Json{{"header", {{"program", "asvbt_transformed.prog"}}},
              {"fragments", std::move(frags)},
              {"lemmas", std::move(lemmas)},
              {"root", std::move(root)}};
}

}  // namespace

absl::StatusOr<BuiltMechanism> BuildAsvbt(const AsvbtConfig& config,
                                          AsvbtVariant variant) {
  if (config.M < 1 || config.N < config.M || config.adversary_states < 1 ||
      config.queries.empty()) {
    return MakeError(ErrorKind::kOutOfRange,
                     absl::StrCat("M = ", config.M, ", N = ", config.N));
  }
  DPC_ASSIGN_OR_RETURN(AsvbtParams params,
                       ComputeAsvbtParams(config.eps, config.delta, config.M));

  // Query table: 1-sensitive over the declared space, range for S.
  std::string probe_text = "decls {\n";
  for (const QuerySpec& q : config.queries) {
    absl::StrAppend(&probe_text, "  query ", q.name, "(x) = ", q.body, ";\n");
  }
  absl::StrAppend(&probe_text, "  d : ", config.space.TypeText(), ";\n  q : query;\n}\n");
  DPC_ASSIGN_OR_RETURN(auto probe, ParseBuilt(probe_text));
  int64_t qmin = std::numeric_limits<int64_t>::max(), qmax = -qmin;
  for (size_t qi = 0; qi < config.queries.size(); ++qi) {
    const Value qv = Value::Query(static_cast<int64_t>(qi));
    std::map<Value, int64_t> vals;
    for (const Value& d : config.space.All()) {
      DPC_ASSIGN_OR_RETURN(Value v, EvalAt(*probe, "evalQ(q, d)", {{"d", d}, {"q", qv}}));
      if (!v.is_int()) {
        return MakeError(ErrorKind::kTypeMismatch,
                         config.queries[qi].name + " is not integer valued");
      }
      vals[d] = v.as_int();
      qmin = std::min(qmin, v.as_int());
      qmax = std::max(qmax, v.as_int());
    }
    const bool ok = CheckSensitivity(
        [&](const Value& d) { return vals[d]; }, config.space.AdjacentPairs(), 1);
    if (!ok) {
      return MakeError(ErrorKind::kQueryNotSensitive,
                       config.queries[qi].name + " is not 1-sensitive");
    }
  }

  const int64_t um = config.u_margin > 0
                         ? config.u_margin
                         : static_cast<int64_t>(std::ceil(
                               1.25 * DefaultLaplaceRadius(config.eps / 2.0)));
  const int64_t sm = config.s_margin > 0 ? config.s_margin : 200;
  const AsvbtText src = AsvbtSource(config, qmin, qmax, um, sm);
  BuiltMechanism out;
  out.target = {config.eps, config.delta};
  out.values = {{"eps_prime", params.eps_prime},
                {"gamma", params.gamma},
                {"sigma", params.sigma}};
  if (variant == AsvbtVariant::kOriginal) {
    out.program_text = absl::StrCat(
        kLicenseLines, "// Sparse vector for between thresholds, as listed.\n",
        src.decls, src.prefix, src.original_loop, "return l;\n");
  } else {
    out.program_text = absl::StrCat(
        kLicenseLines,
        "// Block form: each outer iteration scans queries until one lands "
        "between\n// the thresholds, and the inner loop always runs to N.\n",
        src.decls, src.prefix, src.transformed_loop, "return l;\n");
  }
  DPC_ASSIGN_OR_RETURN(out.program, ParseBuilt(out.program_text));
  if (variant == AsvbtVariant::kOriginal || !config.with_proof) return out;

  if (static_cast<double>(config.b - config.a) < params.gamma) {
    return MakeError(ErrorKind::kGapTooSmall,
                     absl::StrCat("b - a = ", config.b - config.a, " < gamma = ",
                                  params.gamma));
  }
  // Largest integer noise bound that keeps B - A >= sigma; its exact tail
  // is the bad-event probability, and the rest of delta goes to omega.
  const int64_t T = static_cast<int64_t>(
      std::floor((static_cast<double>(config.b - config.a) - params.sigma) / 2.0));
  const double beta = LaplaceExactTail(config.eps / 2.0, static_cast<double>(T));
  const double omega = config.delta - beta;
  if (!(omega > 0.0)) {
    return MakeError(ErrorKind::kGapTooSmall,
                     absl::StrCat("threshold noise tail ", beta,
                                  " leaves no room in delta = ", config.delta));
  }
  AsvbtProof gen(config, *out.program, params, T, beta, omega);
  DPC_ASSIGN_OR_RETURN(out.proof, gen.Build());
  out.values.push_back({"accuracy_bound", static_cast<double>(T)});
  out.values.push_back({"beta", beta});
  out.values.push_back({"omega", omega});
  out.values.push_back({"loop_eps", gen.ac_eps()});
  out.values.push_back({"inner_test_cost", gen.lapint_cost()});
  out.values.push_back({"inner_test_slack", InnerTestSlack(params.eps_prime, params.sigma)});
  return out;
}

// ---------------------------------------------------------------------------
// Adversaries.

std::vector<NamedAdversaries> AdversaryBattery(const Program& p) {
  const int64_t nq = std::max<int64_t>(1, static_cast<int64_t>(p.queries.size()));
  using Step = std::function<AdvAction(const Value&, const std::vector<Value>&)>;
  struct Strategy {
    std::string name;
    std::function<std::pair<int64_t, int64_t>(int64_t state, const Value& arg)> pick;
  };
  auto len_of = [](const Value& v) -> int64_t {
    return v.is_list() ? static_cast<int64_t>(v.as_list().size()) : 0;
  };
  const std::vector<Strategy> strategies = {
      {"fixed_sequence",
       [nq](int64_t s, const Value&) { return std::make_pair(s % nq, s + 1); }},
      {"greedy",
       [nq, len_of](int64_t s, const Value& l) {
         return std::make_pair(len_of(l) % nq, s);
       }},
      {"length_switcher",
       [nq, len_of](int64_t s, const Value& l) {
         return std::make_pair(len_of(l) == 0 ? int64_t{0} : nq - 1, s);
       }},
      {"marker",
       [nq, len_of](int64_t s, const Value& l) {
         const int64_t q = len_of(l) > 0 && l.as_list()[0].is_int()
                               ? (l.as_list()[0].as_int() + 1) % nq
                               : s % nq;
         return std::make_pair(q, s + 1);
       }},
  };
  std::vector<NamedAdversaries> out;
  for (const Strategy& st : strategies) {
    NamedAdversaries named{st.name, {}};
    for (const AdversaryDecl& adv : p.adversaries) {
      const VarDecl* state = p.Var(adv.name);
      const int64_t lo = state ? state->type.lo : 0;
      const int64_t span = state ? state->type.hi - state->type.lo + 1 : 1;
      AdversaryImpl impl;
      impl.name = st.name;
      impl.max_steps = 1;
      auto pick = st.pick;
      impl.step = Step([pick, lo, span](const Value& s, const std::vector<Value>& obs) {
        const int64_t cur = s.as_int() - lo;
        const auto [q, next] = pick(cur, obs.empty() ? Value() : obs[0]);
        AdvAction a;
        a.kind = AdvAction::Kind::kReturn;
        a.values = {Value::Query(q)};
        a.state = Value::Int(lo + ((next % span) + span) % span);
        return a;
      });
      named.impls[adv.name] = std::move(impl);
    }
    out.push_back(std::move(named));
  }
  return out;
}

}  // namespace dpcouple
