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

#include "dpcouple/value.h"

#include <cstdio>
#include <string>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"

namespace dpcouple {

Value Value::Bool(bool b) {
  Value v;
  v.kind_ = Kind::kBool;
  v.int_ = b ? 1 : 0;
  return v;
}

Value Value::Int(int64_t i) {
  Value v;
  v.kind_ = Kind::kInt;
  v.int_ = i;
  return v;
}

Value Value::Real(double r) {
  Value v;
  v.kind_ = Kind::kReal;
  v.real_ = r;
  return v;
}

Value Value::List(std::vector<Value> elems) {
  Value v;
  v.kind_ = Kind::kList;
  v.list_ = std::move(elems);
  return v;
}

Value Value::Query(int64_t id) {
  Value v;
  v.kind_ = Kind::kQuery;
  v.int_ = id;
  return v;
}

Value Value::Pair(Value a, Value b) {
  std::vector<Value> elems;
  elems.reserve(2);
  elems.push_back(std::move(a));
  elems.push_back(std::move(b));
  return List(std::move(elems));
}

std::string Value::ToString() const {
  switch (kind_) {
    case Kind::kBool:
      return int_ ? "true" : "false";
    case Kind::kInt:
      return std::to_string(int_);
    case Kind::kReal: {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.17g", real_);
      return buf;
    }
    case Kind::kQuery:
      return absl::StrCat("#", int_);
    case Kind::kList:
      return absl::StrCat(
          "[",
          absl::StrJoin(list_, ",",
                        [](std::string* out, const Value& v) {
                          out->append(v.ToString());
                        }),
          "]");
  }
  return "?";
}

int Compare(const Value& a, const Value& b) {
  if (a.kind_ != b.kind_) {
    return static_cast<int>(a.kind_) < static_cast<int>(b.kind_) ? -1 : 1;
  }
  switch (a.kind_) {
    case Value::Kind::kReal:
      if (a.real_ < b.real_) return -1;
      return a.real_ > b.real_ ? 1 : 0;
    case Value::Kind::kList: {
      const size_t n = std::min(a.list_.size(), b.list_.size());
      for (size_t i = 0; i < n; ++i) {
        int c = Compare(a.list_[i], b.list_[i]);
        if (c != 0) return c;
      }
      if (a.list_.size() == b.list_.size()) return 0;
      return a.list_.size() < b.list_.size() ? -1 : 1;
    }
    default:
      if (a.int_ < b.int_) return -1;
      return a.int_ > b.int_ ? 1 : 0;
  }
}

}  // namespace dpcouple
