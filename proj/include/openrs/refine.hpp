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

// Beam-search refinement of a meta rubric.
//
// Each iteration every beam rubric spawns G/B candidates: a proposer rolls
// out an edit sequence, the edits are applied, and an oracle scores the
// mutated rubric in [0, 1]. The next beam is the Top-B candidates (plus the
// parents when elitism is on). The G rewards of an iteration form one GRPO
// group and are exported as training records for the proposer.
//
// Proposers only ever see a rubric and aggregate reward feedback. Oracles
// own their preference data.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "openrs/bench.hpp"
#include "openrs/judge.hpp"
#include "openrs/pairwise.hpp"
#include "openrs/prompts.hpp"
#include "openrs/rational.hpp"
#include "openrs/reward.hpp"
#include "openrs/rubric.hpp"

namespace openrs {

class Oracle {
 public:
  virtual ~Oracle() = default;
  /// Reward in [0, 1]. Judge failures throw and invalidate the candidate;
  /// Error(kOracleUnavailable) aborts the whole iteration.
  virtual Rational score(const MetaRubric& rubric) = 0;
};

/// Fraction of hidden target tokens present as words in the criterion texts.
class SyntheticOracle : public Oracle {
 public:
  explicit SyntheticOracle(std::vector<std::string> targets = default_targets());
  Rational score(const MetaRubric& rubric) override;

  static std::vector<std::string> default_targets();
  const std::vector<std::string>& targets() const { return targets_; }

 private:
  std::vector<std::string> targets_;
};

/// Lowercased alphanumeric words of all criterion texts.
std::vector<std::string> rubric_words(const MetaRubric& rubric);

/// Alignment accuracy on a labeled pairwise set: correct iff the verdict
/// names the chosen response; same counts as incorrect. label_error records
/// are skipped. Throws kOracleUnavailable when nothing is scorable.
Rational oracle_score(PairwiseJudge& judge, const MetaRubric& rubric, std::span<const BenchRecord> dataset);

class JudgeOracle : public Oracle {
 public:
  /// `parent` is merged under domain candidates before judging.
  JudgeOracle(PairwiseJudge& judge, std::vector<BenchRecord> dataset, std::optional<MetaRubric> parent = {});
  Rational score(const MetaRubric& rubric) override;

 private:
  PairwiseJudge& judge_;
  std::vector<BenchRecord> dataset_;
  std::optional<MetaRubric> parent_;
};

struct ProposerInput {
  const MetaRubric& rubric;
  std::string feedback;  // aggregate past rewards only
  std::uint64_t seed = 0;
  std::string rollout;  // e.g. "t3/b1/k5", distinguishes sibling rollouts
};

class Proposer {
 public:
  virtual ~Proposer() = default;
  /// Must be safe to call concurrently.
  virtual EditSequence propose(const ProposerInput& in) = 0;
};

/// The synthetic targets plus as many distractor words.
std::vector<std::string> default_proposer_vocabulary();

struct RandomProposerConfig {
  std::vector<std::string> vocabulary = default_proposer_vocabulary();
  std::size_t max_edits = 3;
  std::size_t min_words = 1;
  std::size_t max_words = 3;
};

/// Seeded random edits over the ADD / DELETE / MODIFY grammar. Ids referenced
/// by DELETE / MODIFY are live at their point of application.
class RandomProposer : public Proposer {
 public:
  explicit RandomProposer(RandomProposerConfig cfg);
  EditSequence propose(const ProposerInput& in) override;

 private:
  RandomProposerConfig cfg_;
};

class ScriptedProposer : public Proposer {
 public:
  using Fn = std::function<EditSequence(const ProposerInput&)>;
  explicit ScriptedProposer(Fn fn) : fn_(std::move(fn)) {}
  EditSequence propose(const ProposerInput& in) override { return fn_(in); }

 private:
  Fn fn_;
};

/// Judge-backed proposer reading an `openrs-edits` block. Resamples up to
/// `retries` times on unparsable or empty replies, then throws kParseFailure.
class LlmProposer : public Proposer {
 public:
  LlmProposer(JudgeClient& client, PromptTemplates templates, std::size_t max_edits = 3, int retries = 2,
              double temperature = 1.0, std::string model = "proposer");
  EditSequence propose(const ProposerInput& in) override;

 private:
  JudgeClient& client_;
  PromptTemplates templates_;
  std::size_t max_edits_;
  int retries_;
  double temperature_;
  std::string model_;
};

/// Parses an `openrs-edits` reply; throws kParseFailure.
EditSequence parse_edits_reply(std::string_view reply);

struct RefineConfig {
  std::size_t beam = 4;
  std::size_t rollouts = 32;  // G per iteration
  std::size_t iterations = 10;
  bool elitism = false;
  std::uint64_t seed = 0;
  std::size_t parallelism = 1;

  std::size_t per_parent() const { return rollouts / beam; }
  /// Throws kInvalidConfig unless B >= 1, B divides G and T >= 1.
  void validate() const;
};

struct RefineCandidate {
  std::size_t index = 0;
  std::size_t parent = 0;  // beam slot
  MetaRubric rubric;       // the parent itself when invalid
  EditSequence edits;
  std::optional<Rational> reward;  // present iff valid
  bool valid = false;
  std::string error;

  Rational effective_reward() const { return reward.value_or(Rational(0)); }
};

struct BeamState {
  std::size_t iteration = 0;
  std::vector<MetaRubric> beam;
  std::vector<Rational> rewards;
};

struct IterationResult {
  BeamState next;
  std::vector<RefineCandidate> candidates;
  /// Indices into the selection pool: candidates, then parents with elitism.
  std::vector<std::size_t> selected;
  std::vector<Rational> group_rewards;
  std::vector<double> advantages;
  std::vector<int> mask;
  std::vector<TrainingRecord> records;
};

/// One iteration. Throws Error(kOracleUnavailable) without side effects when
/// the oracle cannot score.
IterationResult refine_iteration(const BeamState& state, const RefineConfig& cfg, Proposer& proposer,
                                 Oracle& oracle, const std::string& feedback = {});

struct RefineResult {
  MetaRubric best;
  Rational best_reward{0};
  std::vector<IterationResult> history;
  Rational seed_reward{0};
};

/// Beam initialized with B copies of the seed; best = highest reward in the
/// final beam, ties to the earliest slot. `log` receives one line per
/// iteration.
RefineResult run_refinement(const MetaRubric& seed_rubric, const RefineConfig& cfg, Proposer& proposer,
                            Oracle& oracle, std::ostream* log = nullptr);

/// Aggregate reward text handed to proposers.
std::string feedback_text(std::span<const IterationResult> history, const Rational& seed_reward);

nlohmann::json to_json(const RefineCandidate& c);
nlohmann::json to_json(const IterationResult& r);

}  // namespace openrs
