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

// Pairwise adaptive meta-rubric judging.
//
// One directional pass over (first, second):
//   1. extract the semantic differences between the two responses,
//   2. adapt the meta rubric into K weighted criteria for this pair,
//   3. score each criterion on {-2..2} (positive favors `first`),
//   4. aggregate s = sum(w_k * v_k) / sum(w_k) exactly.
// judge_pair runs the pass in both presentation orders and returns "same"
// whenever the two directional conclusions do not agree on a winner.

#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "openrs/judge.hpp"
#include "openrs/prompts.hpp"
#include "openrs/rational.hpp"
#include "openrs/rubric.hpp"

namespace openrs {

struct DiffItem {
  std::string text;
  std::string dimension;
};

struct PairDiff {
  std::vector<DiffItem> items;
};

struct AdaptiveCriterion {
  std::string id;
  std::string text;
  Rational weight{1};
};

struct AdaptiveRubric {
  std::vector<AdaptiveCriterion> criteria;
  std::string meta_rubric_id;
  std::uint64_t meta_version = 0;
  std::string diff_digest;
};

struct CriterionVerdict {
  std::string criterion_id;
  int score = 0;  // -2..2
  std::string rationale;
};

struct PairScore {
  Rational value{0};
  std::vector<CriterionVerdict> verdicts;
};

enum class Conclusion { kFirst, kSecond, kTie };
enum class Verdict { kFirstWins, kSecondWins, kSame };

std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);
Verdict mirror(Verdict v);

/// Tie only at exactly zero.
Conclusion conclude(const Rational& s);

/// Combines a forward pass (A first) with a reverse pass (B first) into a
/// verdict in the A/B frame.
Verdict resolve_verdict(const Rational& forward, const Rational& reverse);

/// s = sum(w_k * v_k) / sum(w_k). Verdicts must cover the rubric exactly
/// (any order); throws kMissingCriterion / kParseFailure otherwise.
PairScore aggregate_scores(const AdaptiveRubric& rubric, std::span<const CriterionVerdict> verdicts);

struct PassResult {
  PairDiff diff;
  AdaptiveRubric rubric;
  PairScore score;
  std::vector<std::string> transcript_refs;  // cache keys of every judge call
};

struct PairJudgment {
  PassResult forward;  // A presented first
  PassResult reverse;  // B presented first
  Verdict verdict = Verdict::kSame;
};

/// Error raised by a pipeline stage, tagged with the pass direction.
class PairwiseError : public Error {
 public:
  PairwiseError(ErrorCode code, const std::string& message, std::string direction = {})
      : Error(code, direction.empty() ? message : direction + ": " + message), direction_(std::move(direction)) {}
  const std::string& direction() const { return direction_; }

 private:
  std::string direction_;
};

struct PairwiseConfig {
  PromptTemplates templates = PromptTemplates::defaults();
  bool use_diff = true;
  bool fused = false;  // one call for diff + rubric
  int reasks = 1;
  double temperature = 0.0;
  int max_output_tokens = 2048;
  std::string model = "judge";
};

// Reply parsers, exposed for tests. All throw Error(kParseFailure) or, for
// scores, Error(kMissingCriterion).
PairDiff parse_diff_reply(std::string_view reply);
std::vector<AdaptiveCriterion> parse_rubric_reply(std::string_view reply);
std::vector<CriterionVerdict> parse_scores_reply(std::string_view reply, const AdaptiveRubric& rubric);
std::vector<int> parse_grades_reply(std::string_view reply, const AdaptiveRubric& rubric);

std::string render_diff(const PairDiff& diff);
std::string render_criteria(const AdaptiveRubric& rubric);

class PairwiseJudge {
 public:
  PairwiseJudge(JudgeClient& client, PairwiseConfig config);

  const PairwiseConfig& config() const { return config_; }
  JudgeClient& client() { return client_; }

  PairDiff extract_diff(const std::string& query, const std::string& first, const std::string& second,
                        std::vector<std::string>* refs = nullptr);

  /// `diff` may be null when the diff mechanism is disabled.
  AdaptiveRubric generate_adaptive_rubric(const MetaRubric& meta, const std::string& query, const std::string& first,
                                          const std::string& second, const PairDiff* diff,
                                          std::vector<std::string>* refs = nullptr);

  std::vector<CriterionVerdict> score_criteria(const AdaptiveRubric& rubric, const std::string& query,
                                               const std::string& first, const std::string& second,
                                               std::vector<std::string>* refs = nullptr);

  PassResult run_pass(const std::string& query, const std::string& first, const std::string& second,
                      const MetaRubric& meta);

  PairJudgment judge_pair(const std::string& query, const std::string& a, const std::string& b,
                          const MetaRubric& meta);

  /// Weighted mean of absolute 0..4 grades, divided by 4.
  Rational score_pointwise(const MetaRubric& meta, const std::string& query, const std::string& response,
                           std::vector<std::string>* refs = nullptr);

  /// Digest of everything that influences a verdict besides the inputs.
  std::string config_digest(const MetaRubric& meta) const;

 private:
  JudgePrompt make_prompt(const PromptTemplate& t, const std::map<std::string, std::string>& vars) const;

  template <typename Parse>
  auto ask(const PromptTemplate& t, const std::map<std::string, std::string>& vars, ErrorCode unavailable,
           std::vector<std::string>* refs, Parse parse);

  JudgeClient& client_;
  PairwiseConfig config_;
};

nlohmann::json to_json(const PairDiff& d);
nlohmann::json to_json(const AdaptiveRubric& r);
nlohmann::json to_json(const PairScore& s);
nlohmann::json to_json(const PassResult& p);
nlohmann::json to_json(const PairJudgment& j);

}  // namespace openrs
