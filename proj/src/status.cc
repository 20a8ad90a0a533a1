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

#include "dpcouple/status.h"

#include <string>

#include "absl/strings/cord.h"
#include "absl/strings/str_cat.h"

namespace dpcouple {
namespace {

constexpr char kPayloadUrl[] = "dpcouple/error-kind";

absl::StatusCode CodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNone:
      return absl::StatusCode::kOk;
    case ErrorKind::kSupportTooLarge:
    case ErrorKind::kProblemTooLarge:
    case ErrorKind::kSpaceTooLarge:
    case ErrorKind::kLoopCapExceeded:
      return absl::StatusCode::kResourceExhausted;
    case ErrorKind::kIoError:
      return absl::StatusCode::kNotFound;
    case ErrorKind::kSideConditionFailed:
    case ErrorKind::kRuleSchemaMismatch:
    case ErrorKind::kBudgetMismatch:
    case ErrorKind::kFreshnessViolation:
    case ErrorKind::kPremiseViolated:
    case ErrorKind::kWitnessInvalid:
      return absl::StatusCode::kFailedPrecondition;
    case ErrorKind::kDomainEscape:
    case ErrorKind::kOutOfRange:
      return absl::StatusCode::kOutOfRange;
    default:
      return absl::StatusCode::kInvalidArgument;
  }
}

}  // namespace

absl::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNone: return "None";
    case ErrorKind::kNotNormalized: return "NotNormalized";
    case ErrorKind::kNegativeWeight: return "NegativeWeight";
    case ErrorKind::kNotAPairDistribution: return "NotAPairDistribution";
    case ErrorKind::kNegativeEpsilon: return "NegativeEpsilon";
    case ErrorKind::kSupportTooLarge: return "SupportTooLarge";
    case ErrorKind::kNonPositiveEps: return "NonPositiveEps";
    case ErrorKind::kEmptyInterval: return "EmptyInterval";
    case ErrorKind::kBadBeta: return "BadBeta";
    case ErrorKind::kNotNested: return "NotNested";
    case ErrorKind::kZeroInnerMass: return "ZeroInnerMass";
    case ErrorKind::kNoOutsideElement: return "NoOutsideElement";
    case ErrorKind::kProblemTooLarge: return "ProblemTooLarge";
    case ErrorKind::kWitnessInvalid: return "WitnessInvalid";
    case ErrorKind::kNotSurjective: return "NotSurjective";
    case ErrorKind::kMarginalMismatch: return "MarginalMismatch";
    case ErrorKind::kSupportEscapesRelation: return "SupportEscapesRelation";
    case ErrorKind::kBadOmega: return "BadOmega";
    case ErrorKind::kOutOfRange: return "OutOfRange";
    case ErrorKind::kTypeMismatch: return "TypeMismatch";
    case ErrorKind::kPremiseViolated: return "PremiseViolated";
    case ErrorKind::kSyntaxError: return "SyntaxError";
    case ErrorKind::kUnboundVariable: return "UnboundVariable";
    case ErrorKind::kTypeError: return "TypeError";
    case ErrorKind::kDomainOverflowRisk: return "DomainOverflowRisk";
    case ErrorKind::kLoopCapExceeded: return "LoopCapExceeded";
    case ErrorKind::kMissingAdversary: return "MissingAdversary";
    case ErrorKind::kDomainEscape: return "DomainEscape";
    case ErrorKind::kSpaceTooLarge: return "SpaceTooLarge";
    case ErrorKind::kUnknownRule: return "UnknownRule";
    case ErrorKind::kSideConditionFailed: return "SideConditionFailed";
    case ErrorKind::kRuleSchemaMismatch: return "RuleSchemaMismatch";
    case ErrorKind::kBudgetMismatch: return "BudgetMismatch";
    case ErrorKind::kFreshnessViolation: return "FreshnessViolation";
    case ErrorKind::kInstabilityPropertyViolated:
      return "InstabilityPropertyViolated";
    case ErrorKind::kGapTooSmall: return "GapTooSmall";
    case ErrorKind::kQueryNotSensitive: return "QueryNotSensitive";
    case ErrorKind::kIoError: return "IoError";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

absl::Status MakeError(ErrorKind kind, absl::string_view message) {
  absl::Status status(CodeFor(kind),
                      absl::StrCat(ErrorKindName(kind), ": ", message));
  status.SetPayload(kPayloadUrl,
                    absl::Cord(std::to_string(static_cast<int>(kind))));
  return status;
}

ErrorKind ErrorKindOf(const absl::Status& status) {
  if (status.ok()) return ErrorKind::kNone;
  auto payload = status.GetPayload(kPayloadUrl);
  if (!payload.has_value()) return ErrorKind::kInvalidArgument;
  return static_cast<ErrorKind>(std::stoi(std::string(*payload)));
}

absl::Status AnnotateError(const absl::Status& status,
                           absl::string_view where) {
  if (status.ok()) return status;
  const ErrorKind kind = ErrorKindOf(status);
  absl::string_view msg = status.message();
  const std::string prefix = absl::StrCat(ErrorKindName(kind), ": ");
  if (msg.substr(0, prefix.size()) == prefix) msg.remove_prefix(prefix.size());
  return MakeError(kind, absl::StrCat(where, ": ", msg));
}

}  // namespace dpcouple
