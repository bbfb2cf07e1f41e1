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

#include "openrs/error.hpp"

namespace openrs {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownCriterionId: return "UnknownCriterionId";
    case ErrorCode::kDuplicateCriterionId: return "DuplicateCriterionId";
    case ErrorCode::kEmptyModify: return "EmptyModify";
    case ErrorCode::kInvalidCriterion: return "InvalidCriterion";
    case ErrorCode::kParentMismatch: return "ParentMismatch";
    case ErrorCode::kRubricNotFound: return "RubricNotFound";
    case ErrorCode::kDuplicateRubric: return "DuplicateRubric";
    case ErrorCode::kStoreUnavailable: return "StoreUnavailable";
    case ErrorCode::kTransport: return "Transport";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kRateLimited: return "RateLimited";
    case ErrorCode::kBadResponse: return "BadResponse";
    case ErrorCode::kCacheCorrupt: return "CacheCorrupt";
    case ErrorCode::kParseFailure: return "ParseFailure";
    case ErrorCode::kMissingCriterion: return "MissingCriterion";
    case ErrorCode::kDiffUnavailable: return "DiffUnavailable";
    case ErrorCode::kRubricUnavailable: return "RubricUnavailable";
    case ErrorCode::kScoreUnavailable: return "ScoreUnavailable";
    case ErrorCode::kWeightSumZero: return "WeightSumZero";
    case ErrorCode::kUnknownKind: return "UnknownKind";
    case ErrorCode::kInvalidBounds: return "InvalidBounds";
    case ErrorCode::kPatternSyntax: return "PatternSyntax";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kEmptyGroup: return "EmptyGroup";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kBOutOfRange: return "BOutOfRange";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kOracleUnavailable: return "OracleUnavailable";
    case ErrorCode::kAlignmentMismatch: return "AlignmentMismatch";
    case ErrorCode::kIllegalTransition: return "IllegalTransition";
    case ErrorCode::kHoldoutRegression: return "HoldoutRegression";
    case ErrorCode::kEditNotFound: return "EditNotFound";
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kUnknownFormat: return "UnknownFormat";
    case ErrorCode::kBindFailure: return "BindFailure";
    case ErrorCode::kUnauthorized: return "Unauthorized";
    case ErrorCode::kBadRequest: return "BadRequest";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace openrs
