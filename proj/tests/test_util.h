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

#ifndef DPCOUPLE_TESTS_TEST_UTIL_H_
#define DPCOUPLE_TESTS_TEST_UTIL_H_

#include <random>
#include <utility>
#include <vector>

#include "dpcouple/distribution.h"
#include "dpcouple/value.h"

namespace dpcouple::testing {

// Random distribution over Int(offset .. offset + support - 1); roughly a
// fifth of the points get weight zero so supports vary.
inline Distr RandomDistr(std::mt19937& rng, int support, int offset = 0,
                         double zero_rate = 0.2) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<Value, double>> pairs;
  double total = 0.0;
  for (int i = 0; i < support; ++i) {
    double w = u(rng);
    if (u(rng) < zero_rate) w = 0.0;
    pairs.emplace_back(Value::Int(i + offset), w);
    total += w;
  }
  if (total == 0.0) {
    pairs[0].second = 1.0;
    total = 1.0;
  }
  for (auto& p : pairs) p.second /= total;
  return *Distr::Make(pairs);
}

inline std::vector<Value> IntRange(int lo, int hi) {
  std::vector<Value> out;
  for (int i = lo; i <= hi; ++i) out.push_back(Value::Int(i));
  return out;
}

}  // namespace dpcouple::testing

#endif  // DPCOUPLE_TESTS_TEST_UTIL_H_
