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

#ifndef DPCOUPLE_LAPLACE_H_
#define DPCOUPLE_LAPLACE_H_

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "dpcouple/distribution.h"
#include "dpcouple/value.h"

namespace dpcouple {

struct TruncatedLaplaceSpec {
  double eps = 0.0;
  int64_t center = 0;
  int64_t radius = 0;
  // Untruncated mass outside [center - radius, center + radius].
  double tail_mass = 0.0;
};

// Total mass sum_{k in Z} e^{-eps |k|} = (e^eps + 1) / (e^eps - 1).
double LaplaceNormalizer(double eps);

// Untruncated mass outside [-radius, radius]: 2 e^{-eps R} / (e^eps + 1).
double LaplaceTailMass(double eps, int64_t radius);

// Pr[|nu| > t] for the untruncated centered law, t >= 0.
double LaplaceExactTail(double eps, double t);

// Default radius ceil(60 / eps), which keeps the tail below e^{-60}.
int64_t DefaultLaplaceRadius(double eps);

// Renormalized weights for offsets -radius..radius (index i is offset
// i - radius).
std::vector<double> TruncatedLaplaceWeights(double eps, int64_t radius);

absl::StatusOr<std::pair<Distr, TruncatedLaplaceSpec>> TruncatedLaplace(
    double eps, int64_t center, int64_t radius);

// Exact untruncated mass of [a, b] under the centered discrete Laplace.
absl::StatusOr<double> LapIntervalMass(double eps, int64_t a, int64_t b);

// (1/eps) ln(1/beta).
absl::StatusOr<double> LaplaceAccuracyBound(double eps, double beta);

// True iff |f(a1) - f(a2)| <= k on every pair.
bool CheckSensitivity(const std::function<int64_t(const Value&)>& f,
                      const std::vector<std::pair<Value, Value>>& pairs,
                      int64_t k);

}  // namespace dpcouple

#endif  // DPCOUPLE_LAPLACE_H_
