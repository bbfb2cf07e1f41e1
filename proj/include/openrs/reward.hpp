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

// Reward composition and group statistics for an external RL trainer.
//
//   R_i   = s(o_i, o_ref) + gamma * sum_c phi_c(o_i)
//   A_i   = (R_i - mean R) / std R       (population std, zeros if std = 0)
//   mask  = Top-B rollouts by R, ties to the smaller index

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "openrs/pairwise.hpp"
#include "openrs/rational.hpp"
#include "openrs/verifiable.hpp"

namespace openrs {

enum class GatePolicy { kReportOnly, kClampToMin };

struct RewardConfig {
  Rational gamma{1, 2};
  Rational same_fraction_threshold{1, 2};
  GatePolicy gate_policy = GatePolicy::kReportOnly;
  std::optional<std::size_t> top_b;  // Asym-GRPO mask size; none = no mask
};

struct RolloutGroup {
  std::string query;
  std::vector<std::string> responses;
  VerifiableRubric verifiers;
  std::optional<std::size_t> anchor;
};

/// Uniform over [0, G) from a generator seeded with `seed`.
std::size_t select_anchor(const RolloutGroup& group, std::uint64_t seed);

/// R = s_ref + gamma * verifier_sum. Throws kOutOfRange unless -2 <= s_ref <= 2.
Rational compose_reward(const Rational& s_ref, std::int64_t verifier_sum, const RewardConfig& cfg);

std::vector<double> grpo_advantages(std::span<const double> rewards);
std::vector<double> grpo_advantages(std::span<const Rational> rewards);

/// Indices of the B largest rewards in ascending index order. Throws
/// kBOutOfRange unless 1 <= B <= G.
std::vector<std::size_t> asym_topb_mask(std::span<const Rational> rewards, std::size_t b);
std::vector<std::size_t> asym_topb_mask(std::span<const double> rewards, std::size_t b);

/// Mask bits (0/1) of length `g` for the index set `topb`.
std::vector<int> mask_bits(std::size_t g, std::span<const std::size_t> topb);

enum class FilterDecision { kKeep, kDrop };

/// Drop iff the fraction of `same` verdicts strictly exceeds the threshold.
/// No judgments keeps the group.
FilterDecision filter_group(std::span<const Verdict> verdicts, const RewardConfig& cfg);
FilterDecision filter_group(std::span<const PairJudgment> judgments, const RewardConfig& cfg);

/// Signed pairwise score of one rollout against the anchor, oriented so that
/// positive favors the rollout: 0 on a same verdict, else the mean of the
/// forward score and the negated reverse score.
Rational anchor_score(const PairJudgment& j);

inline constexpr const char* kTrainingSchema = "openrs.training_record";
inline constexpr int kTrainingSchemaVersion = 1;

struct TrainingRecord {
  std::string group_id;
  std::size_t index = 0;
  std::string query;
  std::string response;
  Rational reward{0};
  double advantage = 0.0;
  double advantage_topb = 0.0;  // normalized over the Top-B subset only
  int mask = 1;
  std::vector<std::string> transcript_refs;
  std::string config_digest;

  friend bool operator==(const TrainingRecord&, const TrainingRecord&) = default;
};

/// One record per rollout. `mask` empty means every record carries bit 1.
std::vector<TrainingRecord> emit_training_records(const std::string& group_id, const RolloutGroup& group,
                                                  std::span<const Rational> rewards,
                                                  std::span<const double> advantages, std::span<const int> mask,
                                                  std::span<const std::vector<std::string>> transcript_refs = {},
                                                  const std::string& config_digest = {});

nlohmann::json to_json(const TrainingRecord& r);
TrainingRecord training_record_from_json(const nlohmann::json& j);

/// Header line followed by one record per line.
void write_training_records(std::ostream& out, std::span<const TrainingRecord> records);
std::vector<TrainingRecord> read_training_records(std::istream& in);

struct RolloutResult {
  std::optional<PairJudgment> judgment;  // empty for the anchor itself
  Rational s_ref{0};
  VerifierRun verifiers;
  GateResult gate;
  Rational reward{0};
};

struct GroupRewardResult {
  std::size_t anchor = 0;
  std::vector<RolloutResult> rollouts;
  std::vector<Rational> rewards;
  std::vector<double> advantages;
  std::vector<int> mask;
  FilterDecision filter = FilterDecision::kKeep;
  std::string config_digest;
};

/// Judges every rollout against a seeded anchor (the anchor itself scores
/// s = 0), composes rewards and computes advantages, mask and filter.
GroupRewardResult compute_group_rewards(PairwiseJudge& judge, RolloutGroup group, const MetaRubric& meta,
                                        const RewardConfig& cfg, std::uint64_t seed);

nlohmann::json to_json(const GroupRewardResult& r);

}  // namespace openrs
