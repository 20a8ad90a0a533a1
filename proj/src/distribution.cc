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

#include "dpcouple/distribution.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"

namespace dpcouple {

absl::StatusOr<double> DpDivergenceBruteforce(const Distr& mu1,
                                              const Distr& mu2, double eps) {
  if (!(eps >= 0.0)) {
    return MakeError(ErrorKind::kNegativeEpsilon,
                     absl::StrCat("eps = ", eps));
  }
  std::vector<Value> universe = mu1.Support();
  for (const auto& [v, w] : mu2.entries()) {
    if (mu1.Prob(v) == 0.0) universe.push_back(v);
  }
  if (universe.size() > 20) {
    return MakeError(ErrorKind::kSupportTooLarge,
                     absl::StrCat(universe.size(), " points exceed 20"));
  }
  const double factor = std::exp(eps);
  const size_t n = universe.size();
  std::vector<double> p1(n), p2(n);
  for (size_t i = 0; i < n; ++i) {
    p1[i] = mu1.Prob(universe[i]);
    p2[i] = mu2.Prob(universe[i]);
  }
  double best = 0.0;
  for (uint32_t mask = 0; mask < (1u << n); ++mask) {
    double a = 0.0, b = 0.0;
    for (size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        a += p1[i];
        b += p2[i];
      }
    }
    best = std::max(best, a - factor * b);
  }
  return best;
}

absl::StatusOr<Distr> Marginal(const Distr& mu, int side) {
  if (side != 1 && side != 2) {
    return MakeError(ErrorKind::kInvalidArgument, "side must be 1 or 2");
  }
  Distr::Map out;
  for (const auto& [v, w] : mu.entries()) {
    if (!v.is_pair()) {
      return MakeError(ErrorKind::kNotAPairDistribution,
                       absl::StrCat("support value ", v.ToString()));
    }
    out[side == 1 ? v.first() : v.second()] += w;
  }
  return Distr::FromMapUnchecked(std::move(out));
}

std::string DistrToString(const Distr& mu) {
  std::string out = "{";
  bool first = true;
  for (const auto& [v, w] : mu.entries()) {
    absl::StrAppend(&out, first ? "" : ", ", v.ToString(), ": ",
                    absl::StrFormat("%.12g", w));
    first = false;
  }
  out += "}";
  return out;
}

}  // namespace dpcouple
