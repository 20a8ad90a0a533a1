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

#include "dpcouple/laplace.h"

#include <cmath>
#include <cstdlib>
#include <utility>
#include <vector>

#include "absl/strings/str_cat.h"
#include "dpcouple/status.h"

namespace dpcouple {
namespace {

// Mass of [x, y] with x <= y <= 0: (e^{(y+1)eps} - e^{x eps}) / (e^eps + 1).
double NonPositiveIntervalMass(double eps, int64_t x, int64_t y) {
  return (std::exp((y + 1) * eps) - std::exp(x * eps)) / (std::exp(eps) + 1);
}

}  // namespace

double LaplaceNormalizer(double eps) {
  return (std::exp(eps) + 1.0) / std::expm1(eps);
}

double LaplaceTailMass(double eps, int64_t radius) {
  return 2.0 * std::exp(-eps * static_cast<double>(radius)) /
         (std::exp(eps) + 1.0);
}

double LaplaceExactTail(double eps, double t) {
  if (t < 0) return 1.0;
  return LaplaceTailMass(eps, static_cast<int64_t>(std::floor(t)));
}

int64_t DefaultLaplaceRadius(double eps) {
  return static_cast<int64_t>(std::ceil(60.0 / eps - 1e-9));
}

std::vector<double> TruncatedLaplaceWeights(double eps, int64_t radius) {
  std::vector<double> w(2 * radius + 1);
  double total = 0.0;
  for (int64_t k = -radius; k <= radius; ++k) {
    w[k + radius] = std::exp(-eps * static_cast<double>(std::llabs(k)));
    total += w[k + radius];
  }
  for (double& x : w) x /= total;
  return w;
}

absl::StatusOr<std::pair<Distr, TruncatedLaplaceSpec>> TruncatedLaplace(
    double eps, int64_t center, int64_t radius) {
  if (!(eps > 0.0)) {
    return MakeError(ErrorKind::kNonPositiveEps, absl::StrCat("eps = ", eps));
  }
  if (radius < 1) {
    return MakeError(ErrorKind::kInvalidArgument,
                     absl::StrCat("radius ", radius, " < 1"));
  }
  std::vector<double> w = TruncatedLaplaceWeights(eps, radius);
  Distr::Map m;
  for (int64_t k = -radius; k <= radius; ++k) {
    m.emplace(Value::Int(center + k), w[k + radius]);
  }
  TruncatedLaplaceSpec spec{eps, center, radius, LaplaceTailMass(eps, radius)};
  return std::make_pair(Distr::FromMapUnchecked(std::move(m)), spec);
}

absl::StatusOr<double> LapIntervalMass(double eps, int64_t a, int64_t b) {
  if (a > b) {
    return MakeError(ErrorKind::kEmptyInterval,
                     absl::StrCat("[", a, ", ", b, "]"));
  }
  if (!(eps > 0.0)) {
    return MakeError(ErrorKind::kNonPositiveEps, absl::StrCat("eps = ", eps));
  }
  double mass = 0.0;
  if (a <= 0) mass += NonPositiveIntervalMass(eps, a, std::min<int64_t>(b, 0));
  // Positive part [max(a,1), b] mirrors to [-b, -max(a,1)].
  if (b >= 1) {
    mass += NonPositiveIntervalMass(eps, -b, -std::max<int64_t>(a, 1));
  }
  return mass;
}

absl::StatusOr<double> LaplaceAccuracyBound(double eps, double beta) {
  if (!(eps > 0.0)) {
    return MakeError(ErrorKind::kNonPositiveEps, absl::StrCat("eps = ", eps));
  }
  if (!(beta > 0.0 && beta < 1.0)) {
    return MakeError(ErrorKind::kBadBeta, absl::StrCat("beta = ", beta));
  }
  return std::log(1.0 / beta) / eps;
}

bool CheckSensitivity(const std::function<int64_t(const Value&)>& f,
                      const std::vector<std::pair<Value, Value>>& pairs,
                      int64_t k) {
  for (const auto& [a, b] : pairs) {
    if (std::llabs(f(a) - f(b)) > k) return false;
  }
  return true;
}

}  // namespace dpcouple
