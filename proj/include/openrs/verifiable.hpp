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

// Deterministic per-query verifiers. Each verifier maps a response to +1 or
// -1. Reward verifiers feed the additive reward term, gate verifiers form a
// hard pass/fail check reported separately.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace openrs {

enum class VerifierKind {
  kWordCountRange,
  kCharLengthRange,
  kPatternMatch,
  kMustInclude,
  kMustExclude,
  kStructuredWellformed,
  kExactMatch,
};

enum class VerifierRole { kReward, kGate };

enum class Normalizer { kIdentity, kTrimCasefold };

struct VerifierSpec {
  std::string id;
  VerifierKind kind = VerifierKind::kWordCountRange;
  VerifierRole role = VerifierRole::kReward;
  std::optional<std::int64_t> min;
  std::optional<std::int64_t> max;
  std::string pattern;
  std::vector<std::string> literals;
  std::string reference;
  Normalizer normalizer = Normalizer::kIdentity;

  std::shared_ptr<const std::regex> compiled;  // set by parse/validate
};

struct VerifiableRubric {
  std::vector<VerifierSpec> specs;
};

struct VerifierOutcome {
  std::string spec_id;
  int value = -1;  // +1 or -1
  std::string detail;
};

struct VerifierRun {
  std::vector<VerifierOutcome> outcomes;  // one per spec, in spec order
  std::int64_t sum = 0;                   // reward-role specs only
};

struct GateResult {
  bool pass = true;
  std::vector<std::string> failed;  // spec ids
};

std::string_view to_string(VerifierKind kind);
std::string_view to_string(VerifierRole role);
std::string_view to_string(Normalizer n);

/// Whitespace-separated tokens after trimming.
std::size_t count_words(std::string_view text);
/// UTF-8 code points; invalid bytes count one each.
std::size_t count_chars(std::string_view text);
std::string normalize(std::string_view text, Normalizer n);

/// Checks spec invariants and compiles patterns in place. Throws
/// kInvalidBounds, kPatternSyntax or kInvalidSpec.
void validate_spec(VerifierSpec& spec);

VerifierOutcome run_verifier(const VerifierSpec& spec, std::string_view response);
VerifierRun run_all(const VerifiableRubric& rubric, std::string_view response);
GateResult gate(const VerifiableRubric& rubric, std::string_view response);

/// Accepts an array of specs or an object carrying a `verifiers` array.
/// Spec shape: {"id"?, "kind", "role"?: "reward"|"gate", "min"?, "max"?,
/// "pattern"?, "literals"?, "reference"?, "normalizer"?: "identity"|"trim_casefold"}.
VerifiableRubric parse_verifier_config(const nlohmann::json& record);

nlohmann::json to_json(const VerifierSpec& spec);
nlohmann::json to_json(const VerifiableRubric& rubric);
nlohmann::json to_json(const VerifierOutcome& outcome);

}  // namespace openrs
