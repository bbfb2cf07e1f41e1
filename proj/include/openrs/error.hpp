// Copyright 2026 The OpenRS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace openrs {

enum class ErrorCode {
  // rubric model
  kUnknownCriterionId,
  kDuplicateCriterionId,
  kEmptyModify,
  kInvalidCriterion,
  kParentMismatch,
  kRubricNotFound,
  kDuplicateRubric,
  kStoreUnavailable,
  // judge client
  kTransport,
  kTimeout,
  kRateLimited,
  kBadResponse,
  kCacheCorrupt,
  // pairwise pipeline
  kParseFailure,
  kMissingCriterion,
  kDiffUnavailable,
  kRubricUnavailable,
  kScoreUnavailable,
  kWeightSumZero,
  // verifiers
  kUnknownKind,
  kInvalidBounds,
  kPatternSyntax,
  kInvalidSpec,
  // reward composition
  kEmptyGroup,
  kOutOfRange,
  kBOutOfRange,
  kLengthMismatch,
  kIoFailure,
  // refinement and review
  kInvalidConfig,
  kOracleUnavailable,
  kAlignmentMismatch,
  kIllegalTransition,
  kHoldoutRegression,
  kEditNotFound,
  // bench harness
  kMalformedRecord,
  kUnknownFormat,
  // service
  kBindFailure,
  kUnauthorized,
  kBadRequest,
};

std::string_view to_string(ErrorCode code);

/// Base exception for everything the library throws on a contract violation
/// or an unrecoverable external failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace openrs
