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
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dpcouple/simplex.h"
#include "dpcouple/status.h"

namespace dpcouple {
namespace {

bool Contains(const std::set<Value>& s, const Value& v) {
  return s.find(v) != s.end();
}

double MassOf(const Distr& mu, const std::set<Value>& s) {
  double total = 0.0;
  for (const auto& [v, w] : mu.entries()) {
    if (Contains(s, v)) total += w;
  }
  return total;
}

std::vector<Value> Universe(const std::vector<Value>& declared,
                            const Distr& mu) {
  if (!declared.empty()) return declared;
  return mu.Support();
}

}  // namespace

Relation Relation::Equality() {
  Relation r;
  r.holds = [](const Value& a, const Value& b) { return a == b; };
  return r;
}

std::string WitnessReport::Summary() const {
  return absl::StrFormat(
      "marginals %s (err %.3g / %.3g), support %s%s, divergence %.12g "
      "(slack %.3g) %s",
      marginals_ok ? "ok" : "FAIL", marginal1_error, marginal2_error,
      support_ok ? "ok" : "FAIL",
      support_violation.empty() ? "" : " [" + support_violation + "]",
      divergence, divergence_slack, divergence_ok ? "ok" : "FAIL");
}

WitnessReport CheckWitnesses(const Distr& mu1, const Distr& mu2,
                             const Relation& psi, double eps, double delta,
                             const WitnessPair& w) {
  WitnessReport report;
  absl::StatusOr<Distr> m1 = Marginal(w.mu_l, 1);
  absl::StatusOr<Distr> m2 = Marginal(w.mu_r, 2);
  if (!m1.ok() || !m2.ok()) {
    report.support_violation = "witness support is not made of pairs";
    return report;
  }
  report.marginal1_error = MaxKeywiseDistance(*m1, mu1);
  report.marginal2_error = MaxKeywiseDistance(*m2, mu2);
  report.marginals_ok = report.marginal1_error <= kMassTolerance &&
                        report.marginal2_error <= kMassTolerance;
  report.support_ok = true;
  for (const Distr* d : {&w.mu_l, &w.mu_r}) {
    for (const auto& [pair, weight] : d->entries()) {
      if (!psi.holds(pair.first(), pair.second())) {
        report.support_ok = false;
        if (report.support_violation.empty()) {
          report.support_violation = absl::StrCat(
              d == &w.mu_l ? "mu_L" : "mu_R", " has ", pair.ToString());
        }
      }
    }
  }
  absl::StatusOr<double> div = DpDivergence(w.mu_l, w.mu_r, eps);
  report.divergence = div.ok() ? *div : std::numeric_limits<double>::infinity();
  report.divergence_slack = delta - report.divergence;
  report.divergence_ok = report.divergence <= delta + kMassTolerance;
  report.ok = report.marginals_ok && report.support_ok && report.divergence_ok;
  return report;
}

Relation SubsetRelation(std::vector<Value> p, std::vector<Value> q) {
  std::set<Value> ps(p.begin(), p.end());
  std::set<Value> qs(q.begin(), q.end());
  Relation r;
  r.holds = [ps, qs](const Value& a, const Value& b) {
    return Contains(ps, a) == Contains(qs, b);
  };
  return r;
}

absl::StatusOr<SubsetCoupling> OptimalSubsetCoupling(
    const Distr& mu, const std::vector<Value>& p, const std::vector<Value>& q,
    const std::vector<Value>& universe) {
  const std::set<Value> ps(p.begin(), p.end());
  const std::set<Value> qs(q.begin(), q.end());
  for (const Value& v : qs) {
    if (!Contains(ps, v)) {
      return MakeError(ErrorKind::kNotNested,
                       absl::StrCat(v.ToString(), " is in Q but not in P"));
    }
  }
  std::set<Value> p_minus_q;
  for (const Value& v : ps) {
    if (!Contains(qs, v)) p_minus_q.insert(v);
  }
  const double mass_p = MassOf(mu, ps);
  const double mass_q = MassOf(mu, qs);
  const double mass_pq = MassOf(mu, p_minus_q);

  SubsetCoupling out;
  if (mass_pq == 0.0) {
    // Identity coupling.
    Distr::Map diag;
    for (const auto& [v, w] : mu.entries()) diag[Value::Pair(v, v)] = w;
    out.witnesses.mu_l = Distr::FromMapUnchecked(diag);
    out.witnesses.mu_r = Distr::FromMapUnchecked(std::move(diag));
    out.alpha = 1.0;
    return out;
  }
  if (mass_q == 0.0) {
    return MakeError(ErrorKind::kZeroInnerMass,
                     "mu(Q) = 0 while mu(P \\ Q) > 0");
  }
  std::optional<Value> x0;
  for (const Value& v : Universe(universe, mu)) {
    if (!Contains(ps, v) && (!x0.has_value() || v < *x0)) x0 = v;
  }
  if (!x0.has_value()) {
    return MakeError(ErrorKind::kNoOutsideElement,
                     "no element outside P to receive the transferred mass");
  }
  const double lambda = mass_q / mass_p;
  Distr::Map left, right;
  for (const auto& [x, wx] : mu.entries()) {
    if (!Contains(p_minus_q, x)) {
      left[Value::Pair(x, x)] += wx;
    } else {
      for (const auto& [y, wy] : mu.entries()) {
        if (Contains(qs, y)) left[Value::Pair(x, y)] += wx * wy / mass_q;
      }
    }
  }
  for (const auto& [y, wy] : mu.entries()) {
    if (!Contains(ps, y)) {
      right[Value::Pair(y, y)] += wy;
    } else if (Contains(qs, y)) {
      right[Value::Pair(y, y)] += lambda * wy;
      for (const auto& [x, wx] : mu.entries()) {
        if (Contains(p_minus_q, x)) {
          right[Value::Pair(x, y)] += (1.0 - lambda) * wx * wy / mass_pq;
        }
      }
    } else {
      right[Value::Pair(*x0, y)] += wy;
    }
  }
  out.witnesses.mu_l = Distr::FromMapUnchecked(std::move(left));
  out.witnesses.mu_r = Distr::FromMapUnchecked(std::move(right));
  out.alpha = mass_p / mass_q;
  return out;
}

absl::StatusOr<LiftingResult> LiftingExists(const Distr& mu1, const Distr& mu2,
                                            const Relation& psi, double eps,
                                            double delta,
                                            const LiftingOptions& options) {
  if (!(eps >= 0.0)) {
    return MakeError(ErrorKind::kNegativeEpsilon, absl::StrCat("eps ", eps));
  }
  const std::vector<Value> xs = mu1.Support();
  const std::vector<Value> ys = mu2.Support();
  if (xs.size() * ys.size() > options.max_pairs) {
    return MakeError(ErrorKind::kProblemTooLarge,
                     absl::StrCat(xs.size(), " x ", ys.size(),
                                  " support pairs exceed ",
                                  options.max_pairs));
  }
  // Partners outside the other support: mu_L mass sent to (x, y) with
  // mu2(y) = 0 counts fully toward Delta; mu_R mass at (x, y) with
  // mu1(x) = 0 is free.
  // Without declared universes, both sides range over the union of the
  // supports.
  std::vector<Value> joint = xs;
  for (const Value& y : ys) {
    if (mu1.Prob(y) == 0.0) joint.push_back(y);
  }
  std::sort(joint.begin(), joint.end());
  const std::vector<Value>& universe1 =
      psi.universe1.empty() ? joint : psi.universe1;
  const std::vector<Value>& universe2 =
      psi.universe2.empty() ? joint : psi.universe2;
  std::vector<std::optional<Value>> outside_partner_x(xs.size());
  std::vector<std::optional<Value>> outside_partner_y(ys.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    for (const Value& y : universe2) {
      if (mu2.Prob(y) == 0.0 && psi.holds(xs[i], y)) {
        outside_partner_x[i] = y;
        break;
      }
    }
  }
  for (size_t j = 0; j < ys.size(); ++j) {
    for (const Value& x : universe1) {
      if (mu1.Prob(x) == 0.0 && psi.holds(x, ys[j])) {
        outside_partner_y[j] = x;
        break;
      }
    }
  }
  std::vector<std::pair<size_t, size_t>> pairs;
  for (size_t i = 0; i < xs.size(); ++i) {
    for (size_t j = 0; j < ys.size(); ++j) {
      if (psi.holds(xs[i], ys[j])) pairs.emplace_back(i, j);
    }
  }
  LiftingResult result;
  // Cheap obstruction check before building the program.
  for (size_t i = 0; i < xs.size(); ++i) {
    bool any = outside_partner_x[i].has_value();
    for (const auto& [pi, pj] : pairs) any = any || pi == i;
    if (!any) {
      result.delta_min = std::numeric_limits<double>::infinity();
      result.obstruction =
          absl::StrCat("left point ", xs[i].ToString(), " has no partner");
      return result;
    }
  }
  for (size_t j = 0; j < ys.size(); ++j) {
    bool any = outside_partner_y[j].has_value();
    for (const auto& [pi, pj] : pairs) any = any || pj == j;
    if (!any) {
      result.delta_min = std::numeric_limits<double>::infinity();
      result.obstruction =
          absl::StrCat("right point ", ys[j].ToString(), " has no partner");
      return result;
    }
  }
  // Columns: for each pair k: L_k, R_k, s_k, w_k (slack of
  // L - e^eps R - s <= 0); then G_i for left points with outside partner,
  // D_j for right points with outside partner.
  const size_t np = pairs.size();
  std::vector<size_t> g_col(xs.size(), SIZE_MAX), d_col(ys.size(), SIZE_MAX);
  size_t ncols = 4 * np;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (outside_partner_x[i]) g_col[i] = ncols++;
  }
  for (size_t j = 0; j < ys.size(); ++j) {
    if (outside_partner_y[j]) d_col[j] = ncols++;
  }
  const size_t nrows = xs.size() + ys.size() + np;
  LinearProgram lp;
  lp.a.assign(nrows, std::vector<double>(ncols, 0.0));
  lp.b.assign(nrows, 0.0);
  lp.c.assign(ncols, 0.0);
  const double factor = std::exp(eps);
  for (size_t k = 0; k < np; ++k) {
    const auto [i, j] = pairs[k];
    lp.a[i][4 * k] = 1.0;
    lp.a[xs.size() + j][4 * k + 1] = 1.0;
    const size_t row = xs.size() + ys.size() + k;
    lp.a[row][4 * k] = 1.0;
    lp.a[row][4 * k + 1] = -factor;
    lp.a[row][4 * k + 2] = -1.0;
    lp.a[row][4 * k + 3] = 1.0;
    lp.c[4 * k + 2] = 1.0;
  }
  for (size_t i = 0; i < xs.size(); ++i) {
    lp.b[i] = mu1.Prob(xs[i]);
    if (g_col[i] != SIZE_MAX) {
      lp.a[i][g_col[i]] = 1.0;
      lp.c[g_col[i]] = 1.0;
    }
  }
  for (size_t j = 0; j < ys.size(); ++j) {
    lp.b[xs.size() + j] = mu2.Prob(ys[j]);
    if (d_col[j] != SIZE_MAX) lp.a[xs.size() + j][d_col[j]] = 1.0;
  }
  DPC_ASSIGN_OR_RETURN(LpSolution sol, SolveLinearProgram(lp));
  if (sol.status != LpSolution::Status::kOptimal) {
    result.delta_min = std::numeric_limits<double>::infinity();
    result.obstruction = "marginal constraints infeasible";
    return result;
  }
  result.delta_min = sol.objective;
  result.feasible = sol.objective <= delta + options.tolerance;
  if (result.feasible) {
    Distr::Map left, right;
    for (size_t k = 0; k < np; ++k) {
      const auto [i, j] = pairs[k];
      const Value key = Value::Pair(xs[i], ys[j]);
      if (sol.x[4 * k] > 0) left[key] += sol.x[4 * k];
      if (sol.x[4 * k + 1] > 0) right[key] += sol.x[4 * k + 1];
    }
    for (size_t i = 0; i < xs.size(); ++i) {
      if (g_col[i] != SIZE_MAX && sol.x[g_col[i]] > 0) {
        left[Value::Pair(xs[i], *outside_partner_x[i])] += sol.x[g_col[i]];
      }
    }
    for (size_t j = 0; j < ys.size(); ++j) {
      if (d_col[j] != SIZE_MAX && sol.x[d_col[j]] > 0) {
        right[Value::Pair(*outside_partner_y[j], ys[j])] += sol.x[d_col[j]];
      }
    }
    result.witnesses = WitnessPair{Distr::FromMapUnchecked(std::move(left)),
                                   Distr::FromMapUnchecked(std::move(right))};
  }
  return result;
}

absl::StatusOr<bool> FundamentalLemmaCheck(const Distr& mu1, const Distr& mu2,
                                           const std::vector<Value>& e1,
                                           const std::vector<Value>& e2,
                                           double eps, double delta,
                                           const WitnessPair& w) {
  const std::set<Value> s1(e1.begin(), e1.end());
  const std::set<Value> s2(e2.begin(), e2.end());
  Relation psi;
  psi.holds = [&](const Value& a, const Value& b) {
    return !Contains(s1, a) || Contains(s2, b);
  };
  WitnessReport report = CheckWitnesses(mu1, mu2, psi, eps, delta, w);
  if (!report.ok) {
    return MakeError(ErrorKind::kWitnessInvalid, report.Summary());
  }
  return MassOf(mu1, s1) <=
         std::exp(eps) * MassOf(mu2, s2) + delta + kMassTolerance;
}

WitnessPair TransportForward(const WitnessPair& w, const ValueFn& f) {
  auto push = [&](const Distr& d) {
    return d.Pushforward<Value>([&](const Value& pair) {
      return Value::Pair(f(pair.first()), f(pair.second()));
    });
  };
  return WitnessPair{push(w.mu_l), push(w.mu_r)};
}

absl::StatusOr<WitnessPair> TransportBackward(
    const WitnessPair& nu, const ValueFn& f, const Distr& mu1,
    const Distr& mu2, const std::vector<Value>& universe_a) {
  // Equivalence classes [a]_f, each sorted so the representative is the
  // least element.
  std::map<Value, std::vector<Value>> classes;
  std::vector<Value> sorted = universe_a;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (const Value& a : sorted) classes[f(a)].push_back(a);
  for (const Distr* mu : {&mu1, &mu2}) {
    for (const auto& [a, w] : mu->entries()) {
      if (!std::binary_search(sorted.begin(), sorted.end(), a)) {
        return MakeError(ErrorKind::kNotSurjective,
                         absl::StrCat(a.ToString(), " is not in the domain"));
      }
    }
  }
  for (const Distr* d : {&nu.mu_l, &nu.mu_r}) {
    for (const auto& [pair, w] : d->entries()) {
      if (!pair.is_pair()) {
        return MakeError(ErrorKind::kNotAPairDistribution, pair.ToString());
      }
      for (const Value& b : {pair.first(), pair.second()}) {
        if (classes.find(b) == classes.end()) {
          return MakeError(ErrorKind::kNotSurjective,
                           absl::StrCat(b.ToString(), " has no preimage"));
        }
      }
    }
  }
  auto image = [&](const Distr& mu) {
    return mu.Pushforward<Value>([&](const Value& a) { return f(a); });
  };
  DPC_ASSIGN_OR_RETURN(Distr nl1, Marginal(nu.mu_l, 1));
  DPC_ASSIGN_OR_RETURN(Distr nr2, Marginal(nu.mu_r, 2));
  if (MaxKeywiseDistance(nl1, image(mu1)) > kMassTolerance ||
      MaxKeywiseDistance(nr2, image(mu2)) > kMassTolerance) {
    return MakeError(ErrorKind::kMarginalMismatch,
                     "nu marginals differ from the images of mu1, mu2");
  }
  std::map<Value, double> class_mass1, class_mass2;
  for (const auto& [a, w] : mu1.entries()) class_mass1[f(a)] += w;
  for (const auto& [a, w] : mu2.entries()) class_mass2[f(a)] += w;
  auto alpha = [&](const Distr& mu, std::map<Value, double>& mass,
                   const Value& a, const Value& b) {
    const double m = mass[b];
    return m == 0.0 ? 0.0 : mu.Prob(a) / m;
  };
  Distr::Map left, right;
  for (const auto& [pair, w] : nu.mu_l.entries()) {
    const Value& b1 = pair.first();
    const Value& b2 = pair.second();
    for (const Value& a1 : classes[b1]) {
      const double al1 = alpha(mu1, class_mass1, a1, b1);
      if (al1 == 0.0) continue;
      if (class_mass2[b2] != 0.0) {
        for (const Value& a2 : classes[b2]) {
          const double al2 = alpha(mu2, class_mass2, a2, b2);
          if (al2 != 0.0) left[Value::Pair(a1, a2)] += al1 * al2 * w;
        }
      } else {
        left[Value::Pair(a1, classes[b2].front())] += al1 * w;
      }
    }
  }
  for (const auto& [pair, w] : nu.mu_r.entries()) {
    const Value& b1 = pair.first();
    const Value& b2 = pair.second();
    for (const Value& a2 : classes[b2]) {
      const double al2 = alpha(mu2, class_mass2, a2, b2);
      if (al2 == 0.0) continue;
      if (class_mass1[b1] != 0.0) {
        for (const Value& a1 : classes[b1]) {
          const double al1 = alpha(mu1, class_mass1, a1, b1);
          if (al1 != 0.0) right[Value::Pair(a1, a2)] += al1 * al2 * w;
        }
      } else {
        right[Value::Pair(classes[b1].front(), a2)] += al2 * w;
      }
    }
  }
  return WitnessPair{Distr::FromMapUnchecked(std::move(left)),
                     Distr::FromMapUnchecked(std::move(right))};
}

absl::StatusOr<WitnessPair> ComposeLiftingWitnesses(
    const std::vector<WitnessKernel>& kernels, int n, const Value& a1,
    const Value& a2,
    const std::function<bool(const Value&, const Value&)>& phi) {
  if (n < 0 || static_cast<size_t>(n) > kernels.size()) {
    return MakeError(ErrorKind::kInvalidArgument,
                     absl::StrCat("n = ", n, " with ", kernels.size(),
                                  " kernels"));
  }
  Distr left = Unit(Value::Pair(a1, a2));
  Distr right = left;
  auto check = [&](const Distr& d, int step) -> absl::Status {
    if (!phi) return absl::OkStatus();
    for (const auto& [pair, w] : d.entries()) {
      if (!phi(pair.first(), pair.second())) {
        return MakeError(ErrorKind::kSupportEscapesRelation,
                         absl::StrCat("step ", step, " reaches ",
                                      pair.ToString()));
      }
    }
    return absl::OkStatus();
  };
  DPC_RETURN_IF_ERROR(check(left, 0));
  for (int i = 0; i < n; ++i) {
    const WitnessKernel& k = kernels[i];
    DPC_ASSIGN_OR_RETURN(
        left, left.Bind<Value>([&](const Value& p) -> absl::StatusOr<Distr> {
          DPC_ASSIGN_OR_RETURN(WitnessPair w, k(p.first(), p.second()));
          return w.mu_l;
        }));
    DPC_ASSIGN_OR_RETURN(
        right, right.Bind<Value>([&](const Value& p) -> absl::StatusOr<Distr> {
          DPC_ASSIGN_OR_RETURN(WitnessPair w, k(p.first(), p.second()));
          return w.mu_r;
        }));
    DPC_RETURN_IF_ERROR(check(left, i + 1));
    DPC_RETURN_IF_ERROR(check(right, i + 1));
  }
  return WitnessPair{std::move(left), std::move(right)};
}

}  // namespace dpcouple
