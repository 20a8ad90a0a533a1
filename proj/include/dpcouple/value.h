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

#ifndef DPCOUPLE_VALUE_H_
#define DPCOUPLE_VALUE_H_

#include <cstdint>
#include <string>
#include <vector>

namespace dpcouple {

// Runtime value of the object language. Reals only arise inside expressions
// (noise parameters, thresholds); variables never hold them.
class Value {
 public:
  enum class Kind { kBool = 0, kInt = 1, kReal = 2, kList = 3, kQuery = 4 };

  Value() : kind_(Kind::kInt) {}

  static Value Bool(bool b);
  static Value Int(int64_t i);
  static Value Real(double r);
  static Value List(std::vector<Value> elems);
  static Value Query(int64_t id);
  static Value Pair(Value a, Value b);

  Kind kind() const { return kind_; }
  bool is_bool() const { return kind_ == Kind::kBool; }
  bool is_int() const { return kind_ == Kind::kInt; }
  bool is_real() const { return kind_ == Kind::kReal; }
  bool is_numeric() const { return is_int() || is_real(); }
  bool is_list() const { return kind_ == Kind::kList; }
  bool is_query() const { return kind_ == Kind::kQuery; }
  bool is_pair() const { return is_list() && list_.size() == 2; }

  bool as_bool() const { return int_ != 0; }
  int64_t as_int() const { return int_; }
  int64_t as_query() const { return int_; }
  // Ints widen to doubles.
  double as_real() const {
    return kind_ == Kind::kReal ? real_ : static_cast<double>(int_);
  }
  const std::vector<Value>& as_list() const { return list_; }
  const Value& first() const { return list_[0]; }
  const Value& second() const { return list_[1]; }

  std::string ToString() const;

  // Total order: kind first, then payload; lists lexicographic.
  friend int Compare(const Value& a, const Value& b);
  friend bool operator==(const Value& a, const Value& b) {
    return Compare(a, b) == 0;
  }
  friend bool operator!=(const Value& a, const Value& b) {
    return Compare(a, b) != 0;
  }
  friend bool operator<(const Value& a, const Value& b) {
    return Compare(a, b) < 0;
  }

 private:
  Kind kind_;
  int64_t int_ = 0;
  double real_ = 0.0;
  std::vector<Value> list_;
};

int Compare(const Value& a, const Value& b);

}  // namespace dpcouple

#endif  // DPCOUPLE_VALUE_H_
