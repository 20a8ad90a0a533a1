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

#ifndef DPCOUPLE_STATUS_H_
#define DPCOUPLE_STATUS_H_

#include <string>
#include "absl/strings/string_view.h"

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace dpcouple {

// Error categories shared by every module. The kind travels with the
// absl::Status as a payload so callers can branch on it.
enum class ErrorKind {
  kNone = 0,
  kNotNormalized,
  kNegativeWeight,
  kNotAPairDistribution,
  kNegativeEpsilon,
  kSupportTooLarge,
  kNonPositiveEps,
  kEmptyInterval,
  kBadBeta,
  kNotNested,
  kZeroInnerMass,
  kNoOutsideElement,
  kProblemTooLarge,
  kWitnessInvalid,
  kNotSurjective,
  kMarginalMismatch,
  kSupportEscapesRelation,
  kBadOmega,
  kOutOfRange,
  kTypeMismatch,
  kPremiseViolated,
  kSyntaxError,
  kUnboundVariable,
  kTypeError,
  kDomainOverflowRisk,
  kLoopCapExceeded,
  kMissingAdversary,
  kDomainEscape,
  kSpaceTooLarge,
  kUnknownRule,
  kSideConditionFailed,
  kRuleSchemaMismatch,
  kBudgetMismatch,
  kFreshnessViolation,
  kInstabilityPropertyViolated,
  kGapTooSmall,
  kQueryNotSensitive,
  kIoError,
  kInvalidArgument,
};

absl::string_view ErrorKindName(ErrorKind kind);

// Builds a status whose code is derived from `kind` and which carries the
// kind as a payload.
absl::Status MakeError(ErrorKind kind, absl::string_view message);

// Returns kNone for OK statuses and kInvalidArgument for statuses that were
// not produced by MakeError.
ErrorKind ErrorKindOf(const absl::Status& status);

// Same kind, with `where` inserted after the kind name in the message.
absl::Status AnnotateError(const absl::Status& status, absl::string_view where);

}  // namespace dpcouple

#define DPC_RETURN_IF_ERROR(expr)              \
  do {                                         \
    ::absl::Status dpc_status_ = (expr);       \
    if (!dpc_status_.ok()) return dpc_status_; \
  } while (0)

#define DPC_CONCAT_INNER_(a, b) a##b
#define DPC_CONCAT_(a, b) DPC_CONCAT_INNER_(a, b)

#define DPC_ASSIGN_OR_RETURN(lhs, rexpr) \
  DPC_ASSIGN_OR_RETURN_IMPL_(DPC_CONCAT_(dpc_statusor_, __LINE__), lhs, rexpr)

#define DPC_ASSIGN_OR_RETURN_IMPL_(statusor, lhs, rexpr) \
  auto statusor = (rexpr);                               \
  if (!statusor.ok()) return statusor.status();          \
  lhs = std::move(statusor).value()

#endif  // DPCOUPLE_STATUS_H_
