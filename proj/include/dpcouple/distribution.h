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

#ifndef DPCOUPLE_DISTRIBUTION_H_
#define DPCOUPLE_DISTRIBUTION_H_

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "dpcouple/status.h"
#include "dpcouple/value.h"

namespace dpcouple {

// Tolerance used for distribution contracts (normalization, marginals).
inline constexpr double kMassTolerance = 1e-9;

// Finite-support probability distribution. Keys with weight exactly zero are
// never stored, so the key set is the support.
template <typename T>
class Distribution {
 public:
  using Map = std::map<T, double>;

  Distribution() = default;

  // Merges duplicate keys, drops zero weights and verifies normalization.
  static absl::StatusOr<Distribution> Make(
      const std::vector<std::pair<T, double>>& pairs) {
    Map m;
    for (const auto& [value, weight] : pairs) {
      if (!(weight >= 0.0)) {
        return MakeError(ErrorKind::kNegativeWeight,
                         absl::StrCat("weight ", weight, " is negative"));
      }
      m[value] += weight;
    }
    return FromMap(std::move(m));
  }

  static absl::StatusOr<Distribution> FromMap(Map m) {
    double total = 0.0;
    for (auto it = m.begin(); it != m.end();) {
      if (!(it->second >= 0.0)) {
        return MakeError(ErrorKind::kNegativeWeight,
                         absl::StrCat("weight ", it->second, " is negative"));
      }
      total += it->second;
      if (it->second == 0.0) {
        it = m.erase(it);
      } else {
        ++it;
      }
    }
    if (std::fabs(total - 1.0) > kMassTolerance) {
      return MakeError(ErrorKind::kNotNormalized,
                       absl::StrCat("total mass ", total));
    }
    Distribution d;
    d.entries_ = std::move(m);
    return d;
  }

  // No normalization check; used by callers that already track mass
  // (e.g. the interpreter, which renormalizes truncated noise).
  static Distribution FromMapUnchecked(Map m) {
    for (auto it = m.begin(); it != m.end();) {
      it = it->second == 0.0 ? m.erase(it) : std::next(it);
    }
    Distribution d;
    d.entries_ = std::move(m);
    return d;
  }

  static Distribution Unit(T v) {
    Distribution d;
    d.entries_.emplace(std::move(v), 1.0);
    return d;
  }

  const Map& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  double Prob(const T& v) const {
    auto it = entries_.find(v);
    return it == entries_.end() ? 0.0 : it->second;
  }

  double Mass() const {
    double total = 0.0;
    for (const auto& [v, w] : entries_) total += w;
    return total;
  }

  std::vector<T> Support() const {
    std::vector<T> out;
    out.reserve(entries_.size());
    for (const auto& [v, w] : entries_) out.push_back(v);
    return out;
  }

  // Monadic bind. `k` maps each support element to a
  // StatusOr<Distribution<U>>.
  template <typename U, typename K>
  absl::StatusOr<Distribution<U>> Bind(K&& k) const {
    typename Distribution<U>::Map out;
    for (const auto& [v, w] : entries_) {
      absl::StatusOr<Distribution<U>> next = k(v);
      if (!next.ok()) return next.status();
      for (const auto& [u, wu] : next->entries()) out[u] += w * wu;
    }
    return Distribution<U>::FromMap(std::move(out));
  }

  // Pushforward along a total function.
  template <typename U, typename F>
  Distribution<U> Pushforward(F&& f) const {
    typename Distribution<U>::Map out;
    for (const auto& [v, w] : entries_) out[f(v)] += w;
    return Distribution<U>::FromMapUnchecked(std::move(out));
  }

  friend bool operator==(const Distribution& a, const Distribution& b) {
    return a.entries_ == b.entries_;
  }

 private:
  Map entries_;
};

using Distr = Distribution<Value>;

// Largest absolute key-wise difference, over the union of supports.
template <typename T>
double MaxKeywiseDistance(const Distribution<T>& a, const Distribution<T>& b) {
  double worst = 0.0;
  for (const auto& [v, w] : a.entries()) {
    worst = std::max(worst, std::fabs(w - b.Prob(v)));
  }
  for (const auto& [v, w] : b.entries()) {
    worst = std::max(worst, std::fabs(w - a.Prob(v)));
  }
  return worst;
}

// Sum over the union of supports of max(0, mu1(x) - e^eps mu2(x)).
template <typename T>
absl::StatusOr<double> DpDivergence(const Distribution<T>& mu1,
                                    const Distribution<T>& mu2, double eps) {
  if (!(eps >= 0.0)) {
    return MakeError(ErrorKind::kNegativeEpsilon,
                     absl::StrCat("eps = ", eps));
  }
  const double factor = std::exp(eps);
  double total = 0.0;
  // Points outside supp(mu1) contribute nothing.
  for (const auto& [v, w] : mu1.entries()) {
    const double gap = w - factor * mu2.Prob(v);
    if (gap > 0.0) total += gap;
  }
  return total;
}

// Literal supremum over all subsets of the joint support.
absl::StatusOr<double> DpDivergenceBruteforce(const Distr& mu1,
                                              const Distr& mu2, double eps);

inline Distr Unit(Value v) { return Distr::Unit(std::move(v)); }

// Marginal of a distribution over 2-element list values. side is 1 or 2.
absl::StatusOr<Distr> Marginal(const Distr& mu, int side);

std::string DistrToString(const Distr& mu);

}  // namespace dpcouple

#endif  // DPCOUPLE_DISTRIBUTION_H_
