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

// Command-line front end. Every subcommand prints a JSON report on stdout
// and a one-line summary on stderr. Exit codes: 0 pass, 1 check failed,
// 2 usage or parse error, 3 resource cap exceeded.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/strings/str_format.h"
#include "dpcouple/aprhl.h"
#include "dpcouple/composition.h"
#include "dpcouple/distribution.h"
#include "dpcouple/interp.h"
#include "dpcouple/mechanisms.h"
#include "dpcouple/parser.h"
#include "dpcouple/status.h"
#include "json.hpp"

namespace dpcouple {
namespace {

using Json = nlohmann::json;

enum Exit { kPass = 0, kFail = 1, kUsage = 2, kResource = 3 };

// 12 significant digits everywhere in reports.
Json Round12(const Json& j) {
  if (j.is_number_float()) {
    const double x = j.get<double>();
    if (!std::isfinite(x)) return Json(absl::StrFormat("%g", x));
    return Json(std::stod(absl::StrFormat("%.12g", x)));
  }
  if (j.is_array()) {
    Json out = Json::array();
    for (const Json& e : j) out.push_back(Round12(e));
    return out;
  }
  if (j.is_object()) {
    Json out = Json::object();
    for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = Round12(it.value());
    return out;
  }
  return j;
}

int ExitFor(const absl::Status& s) {
  switch (ErrorKindOf(s)) {
    case ErrorKind::kSpaceTooLarge:
    case ErrorKind::kProblemTooLarge:
    case ErrorKind::kSupportTooLarge:
      return kResource;
    default:
      return kUsage;
  }
}

struct Report {
  std::string command;
  Json body = Json::object();
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  int Emit(int code, const std::string& summary) {
    Json out;
    out["command"] = command;
    out["status"] = code == kPass ? "pass" : code == kFail ? "fail" : "error";
    out["result"] = body;
    out["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << Round12(out).dump(2) << "\n";
    std::cerr << summary << "\n";
    return code;
  }
  int Error(const absl::Status& s) {
    body["error"] = {{"kind", std::string(ErrorKindName(ErrorKindOf(s)))},
                     {"message", std::string(s.message())}};
    return Emit(ExitFor(s), "error: " + std::string(s.message()));
  }
};

absl::StatusOr<std::string> ReadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) return MakeError(ErrorKind::kIoError, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

absl::StatusOr<std::map<std::string, Value>> ParseConsts(
    const std::vector<std::string>& items) {
  std::map<std::string, Value> out;
  for (const std::string& item : items) {
    const size_t eq = item.find('=');
    if (eq == std::string::npos) {
      return MakeError(ErrorKind::kSyntaxError, "expected NAME=VALUE: " + item);
    }
    const std::string v = item.substr(eq + 1);
    try {
      size_t used = 0;
      if (v.find_first_of(".eE") == std::string::npos) {
        const long long i = std::stoll(v, &used);
        if (used == v.size()) {
          out[item.substr(0, eq)] = Value::Int(i);
          continue;
        }
      }
      const double d = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      out[item.substr(0, eq)] = Value::Real(d);
    } catch (const std::exception&) {
      return MakeError(ErrorKind::kSyntaxError, "bad constant value: " + item);
    }
  }
  return out;
}

absl::StatusOr<std::shared_ptr<const Program>> LoadProgram(
    const std::string& path, const std::map<std::string, Value>& consts) {
  DPC_ASSIGN_OR_RETURN(std::string text, ReadFile(path));
  DPC_ASSIGN_OR_RETURN(Program p, ParseProgram(text, consts));
  return std::make_shared<const Program>(std::move(p));
}

Json MemoryJson(const Program& p, const Memory& m) {
  Json out = Json::object();
  for (size_t i = 0; i < p.vars.size() && i < m.size(); ++i) {
    out[p.vars[i].name] = m[i].ToString();
  }
  return out;
}

// Output distribution: the returned variable, or the whole memory.
absl::StatusOr<Distr> Output(const Program& p, const MemDistr& out) {
  const int slot = p.ret.empty() ? -1 : p.Slot(p.ret);
  Distr::Map m;
  for (const auto& [mem, w] : out.entries()) {
    m[slot >= 0 ? mem[slot] : Value::List(mem)] += w;
  }
  return Distr::FromMapUnchecked(std::move(m));
}

Json DistrJson(const Distr& d) {
  Json out = Json::array();
  for (const auto& [v, w] : d.entries()) out.push_back({{"value", v.ToString()}, {"p", w}});
  return out;
}

const NamedAdversaries* PickAdversary(const std::vector<NamedAdversaries>& battery,
                                      const std::string& name) {
  for (const NamedAdversaries& n : battery) {
    if (n.name == name) return &n;
  }
  return nullptr;
}

std::string BudgetSummary(double eps, double delta) {
  return absl::StrFormat("(%.12g, %.12g)", eps, delta);
}

int RunCheck(Report& r, const std::string& path, const std::vector<std::string>& consts) {
  auto overrides = ParseConsts(consts);
  if (!overrides.ok()) return r.Error(overrides.status());
  absl::StatusOr<DerivationReport> rep = CheckProofFile(path, *overrides);
  if (!rep.ok()) return r.Error(rep.status());
  r.body["accepted"] = rep->ok;
  r.body["budget"] = {{"eps", rep->budget.eps}, {"delta", rep->budget.delta}};
  r.body["implication_steps"] = rep->implication_steps;
  r.body["tolerances"] = {{"budget", 1e-9}};
  Json nodes = Json::array();
  for (const NodeRecord& n : rep->nodes) {
    Json j = {{"path", n.path}, {"logic", n.logic}, {"rule", n.rule}};
    if (n.logic == "ahl") {
      j["beta"] = n.eps;
    } else {
      j["eps"] = n.eps;
      j["delta"] = n.delta;
    }
    if (!n.note.empty()) j["note"] = n.note;
    nodes.push_back(std::move(j));
  }
  r.body["nodes"] = std::move(nodes);
  if (!rep->ok) {
    r.body["failure"] = {{"kind", std::string(ErrorKindName(rep->kind))},
                         {"message", rep->message},
                         {"path", rep->failed_path},
                         {"counterexample", rep->counterexample}};
    return r.Emit(kFail, "rejected at " + rep->failed_path + ": " + rep->message);
  }
  return r.Emit(kPass, "accepted, budget " +
                           BudgetSummary(rep->budget.eps, rep->budget.delta));
}

struct ValidateArgs {
  std::string prog, pre, post, adv;
  double eps = 0, delta = 0;
  int64_t radius = 0;
  std::vector<std::string> consts;
};

int RunValidate(Report& r, const ValidateArgs& a) {
  auto consts = ParseConsts(a.consts);
  if (!consts.ok()) return r.Error(consts.status());
  auto p = LoadProgram(a.prog, *consts);
  if (!p.ok()) return r.Error(p.status());
  RelJudgment j;
  j.c1 = j.c2 = (*p)->body;
  auto pre = ParseAssertion(a.pre, **p, AssertionMode::kRelational);
  if (!pre.ok()) return r.Error(pre.status());
  auto post = ParseAssertion(a.post, **p, AssertionMode::kRelational);
  if (!post.ok()) return r.Error(post.status());
  j.pre = *pre;
  j.post = *post;
  j.budget = {a.eps, a.delta};
  ValidationOptions opts;
  opts.interp.lap_radius = a.radius;
  if (!(*p)->adversaries.empty()) {
    std::vector<NamedAdversaries> battery = AdversaryBattery(**p);
    if (!a.adv.empty()) {
      const NamedAdversaries* one = PickAdversary(battery, a.adv);
      if (!one) {
        return r.Error(MakeError(ErrorKind::kMissingAdversary, "no adversary " + a.adv));
      }
      battery = {*one};
    }
    opts.battery = std::move(battery);
  }
  auto v = ValidateJudgmentEmpirical(**p, j, opts);
  if (!v.ok()) return r.Error(v.status());
  r.body["valid"] = v->ok;
  r.body["pairs"] = v->pairs;
  r.body["runs"] = v->runs;
  r.body["equality_fast_path"] = v->equality_fast_path;
  r.body["worst_needed_delta"] = v->worst_needed_delta;
  r.body["worst_slack"] = v->worst_slack;
  r.body["worst_margin"] = v->worst_margin;
  r.body["tolerances"] = {{"solver", opts.lifting.tolerance}};
  Json fails = Json::array();
  for (const ValidationCase& c : v->failures) {
    fails.push_back({{"m1", MemoryJson(**p, c.m1)},
                     {"m2", MemoryJson(**p, c.m2)},
                     {"adversary", c.adversary},
                     {"needed_delta", c.needed_delta},
                     {"slack", c.slack},
                     {"detail", c.detail}});
  }
  r.body["failures"] = std::move(fails);
  return r.Emit(v->ok ? kPass : kFail,
                absl::StrFormat("%s over %d pairs, worst margin %.6g",
                                v->ok ? "valid" : "INVALID", v->pairs, v->worst_margin));
}

int RunRun(Report& r, const std::string& prog, const std::string& mem,
           int64_t radius, const std::string& adv, const std::vector<std::string>& consts_in) {
  auto consts = ParseConsts(consts_in);
  if (!consts.ok()) return r.Error(consts.status());
  auto p = LoadProgram(prog, *consts);
  if (!p.ok()) return r.Error(p.status());
  auto m = ParseMemory(**p, mem);
  if (!m.ok()) return r.Error(m.status());
  InterpOptions opts;
  opts.lap_radius = radius;
  std::vector<NamedAdversaries> battery = AdversaryBattery(**p);
  if (!(*p)->adversaries.empty()) {
    const NamedAdversaries* one = PickAdversary(battery, adv.empty() ? "fixed_sequence" : adv);
    if (!one) return r.Error(MakeError(ErrorKind::kMissingAdversary, "no adversary " + adv));
    opts.adversaries = &one->impls;
    r.body["adversary"] = one->name;
  }
  auto res = Interpret(**p, (*p)->body, *m, opts);
  if (!res.ok()) return r.Error(res.status());
  auto out = Output(**p, res->out);
  if (!out.ok()) return r.Error(out.status());
  r.body["output"] = DistrJson(*out);
  r.body["mass"] = out->Mass();
  r.body["truncation_slack"] = res->truncation_slack;
  r.body["laplace_nodes"] = res->laplace_nodes;
  return r.Emit(kPass, absl::StrFormat("%d outcomes, truncation slack %.3g", out->size(),
                                       res->truncation_slack));
}

int RunDivergence(Report& r, const std::string& p1s, const std::string& p2s,
                  double eps, const std::string& mem1, const std::string& mem2,
                  int64_t radius, const std::string& adv) {
  std::vector<Distr> outs;
  double slack = 0.0;
  for (const auto& [path, mem] : {std::pair{p1s, mem1}, std::pair{p2s, mem2}}) {
    auto p = LoadProgram(path, {});
    if (!p.ok()) return r.Error(p.status());
    auto m = ParseMemory(**p, mem);
    if (!m.ok()) return r.Error(m.status());
    InterpOptions opts;
    opts.lap_radius = radius;
    std::vector<NamedAdversaries> battery = AdversaryBattery(**p);
    if (!(*p)->adversaries.empty()) {
      const NamedAdversaries* one =
          PickAdversary(battery, adv.empty() ? "fixed_sequence" : adv);
      if (!one) return r.Error(MakeError(ErrorKind::kMissingAdversary, "no adversary " + adv));
      opts.adversaries = &one->impls;
    }
    auto res = Interpret(**p, (*p)->body, *m, opts);
    if (!res.ok()) return r.Error(res.status());
    auto out = Output(**p, res->out);
    if (!out.ok()) return r.Error(out.status());
    outs.push_back(*out);
    slack = slack == 0.0 ? res->truncation_slack
                         : slack * std::exp(eps) + res->truncation_slack;
  }
  auto d12 = DpDivergence(outs[0], outs[1], eps);
  if (!d12.ok()) return r.Error(d12.status());
  auto d21 = DpDivergence(outs[1], outs[0], eps);
  if (!d21.ok()) return r.Error(d21.status());
  r.body["eps"] = eps;
  r.body["divergence_12"] = *d12;
  r.body["divergence_21"] = *d21;
  r.body["divergence"] = std::max(*d12, *d21);
  r.body["truncation_slack"] = slack;
  return r.Emit(kPass, absl::StrFormat("Delta_eps = %.12g", std::max(*d12, *d21)));
}

int RunBudget(Report& r, const std::string& mode, int n, double eps, double delta,
              double omega) {
  if (mode == "seq") {
    if (n < 0 || eps < 0 || delta < 0) {
      return r.Error(MakeError(ErrorKind::kOutOfRange, "negative argument"));
    }
    std::vector<Budget> steps(n, Budget{eps, delta});
    const Budget b = SeqBudget(steps);
    r.body = {{"mode", "seq"}, {"n", n}, {"eps", b.eps}, {"delta", b.delta}};
    return r.Emit(kPass, "sequential " + BudgetSummary(b.eps, b.delta));
  }
  auto b = AdvBudget(n, eps, delta, omega);
  if (!b.ok()) return r.Error(b.status());
  r.body = {{"mode", "adv"}, {"n", n}, {"omega", omega}, {"eps", b->eps}, {"delta", b->delta}};
  return r.Emit(kPass, "advanced " + BudgetSummary(b->eps, b->delta));
}

int RunParams(Report& r, double eps, double delta, int64_t M) {
  auto params = ComputeAsvbtParams(eps, delta, M);
  if (!params.ok()) return r.Error(params.status());
  r.body = {{"eps", eps}, {"delta", delta}, {"M", M},
            {"eps_prime", params->eps_prime}, {"gamma", params->gamma},
            {"sigma", params->sigma},
            {"inner_test_slack", InnerTestSlack(params->eps_prime, params->sigma)}};
  return r.Emit(kPass, absl::StrFormat("eps' = %.12g, gamma = %.12g",
                                       params->eps_prime, params->gamma));
}

int RunEmit(Report& r, const std::string& what, const std::string& out_path) {
  absl::StatusOr<BuiltMechanism> m;
  bool proof = false;
  if (what == "ptr" || what == "ptr-proof") {
    PtrConfig cfg;
    cfg.comment =
        "Propose-test-release on 3-row binary databases. f is majority and\n"
        "// dist_to_inst counts the rows that must change before f flips.";
    m = BuildPtr(cfg);
    proof = what == "ptr-proof";
  } else if (what == "asvbt-original") {
    m = BuildAsvbt(AsvbtConfig{}, AsvbtVariant::kOriginal);
  } else if (what == "asvbt-transformed" || what == "asvbt-proof") {
    m = BuildAsvbt(AsvbtConfig{}, AsvbtVariant::kTransformed);
    proof = what == "asvbt-proof";
  } else {
    return r.Error(MakeError(ErrorKind::kInvalidArgument, "unknown artifact " + what));
  }
  if (!m.ok()) return r.Error(m.status());
  const std::string text = proof ? m->proof.dump(1) + "\n" : m->program_text;
  if (out_path.empty()) {
    std::cout << text;
    std::cerr << "emitted " << what << "\n";
    return kPass;
  }
  std::ofstream out(out_path);
  if (!out) return r.Error(MakeError(ErrorKind::kIoError, "cannot write " + out_path));
  out << text;
  Json values = Json::object();
  for (const auto& [k, v] : m->values) values[k] = v;
  r.body = {{"artifact", what}, {"path", out_path}, {"values", values}};
  return r.Emit(kPass, "wrote " + out_path);
}

}  // namespace
}  // namespace dpcouple

int main(int argc, char** argv) {
  using namespace dpcouple;
  CLI::App app{"Differential privacy coupling workbench"};
  app.require_subcommand(1);

  std::string proof_path;
  std::vector<std::string> consts;
  auto* check = app.add_subcommand("check", "check a proof document");
  check->add_option("proof", proof_path, "proof JSON")->required();
  check->add_option("--const", consts, "NAME=VALUE constant override");

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "empirically validate a judgment");
  validate->add_option("prog", va.prog)->required();
  validate->add_option("--pre", va.pre)->required();
  validate->add_option("--post", va.post)->required();
  validate->add_option("--eps", va.eps)->required();
  validate->add_option("--delta", va.delta)->required();
  validate->add_option("--adv", va.adv, "battery member name");
  validate->add_option("--radius", va.radius, "Laplace truncation radius");
  validate->add_option("--const", va.consts);

  std::string run_prog, mem, adv;
  int64_t radius = 0;
  std::vector<std::string> run_consts;
  auto* run = app.add_subcommand("run", "print a program's output distribution");
  run->add_option("prog", run_prog)->required();
  run->add_option("--mem", mem, "initial assignments, e.g. \"d=[0,1,1]\"");
  run->add_option("--radius", radius);
  run->add_option("--adv", adv);
  run->add_option("--const", run_consts);

  std::string mode;
  int n = 1;
  double eps = 0, delta = 0, omega = 0;
  auto* budget = app.add_subcommand("budget", "composition calculators");
  budget->add_option("mode", mode)->required()->check(CLI::IsMember({"seq", "adv"}));
  budget->add_option("--n", n)->required();
  budget->add_option("--eps", eps)->required();
  budget->add_option("--delta", delta)->default_val(0.0);
  budget->add_option("--omega", omega)->default_val(0.0);

  std::string which;
  int64_t M = 1;
  auto* params = app.add_subcommand("params", "mechanism parameters");
  params->add_option("mechanism", which)->required()->check(CLI::IsMember({"asvbt"}));
  params->add_option("--eps", eps)->required();
  params->add_option("--delta", delta)->required();
  params->add_option("--M", M)->default_val(1);

  std::string p1, p2, mem1, mem2;
  auto* divergence = app.add_subcommand("divergence", "Delta_eps between two programs");
  divergence->add_option("prog1", p1)->required();
  divergence->add_option("prog2", p2)->required();
  divergence->add_option("--eps", eps)->required();
  divergence->add_option("--mem1", mem1);
  divergence->add_option("--mem2", mem2);
  divergence->add_option("--radius", radius);
  divergence->add_option("--adv", adv);

  std::string what, out_path;
  auto* emit = app.add_subcommand("emit", "write a shipped example program or proof");
  emit->add_option("artifact", what)->required();
  emit->add_option("--out", out_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  Report r;
  for (int i = 1; i < argc; ++i) r.command += (i > 1 ? " " : "") + std::string(argv[i]);
  if (*check) return RunCheck(r, proof_path, consts);
  if (*validate) return RunValidate(r, va);
  if (*run) return RunRun(r, run_prog, mem, radius, adv, run_consts);
  if (*budget) return RunBudget(r, mode, n, eps, delta, omega);
  if (*params) return RunParams(r, eps, delta, M);
  if (*divergence) return RunDivergence(r, p1, p2, eps, mem1, mem2, radius, adv);
  if (*emit) return RunEmit(r, what, out_path);
  return kUsage;
}
