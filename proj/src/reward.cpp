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

#include "openrs/reward.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>

#include "openrs/error.hpp"
#include "openrs/util.hpp"

namespace openrs {
namespace {

using nlohmann::json;

long double as_long_double(const Rational& r) {
  return static_cast<long double>(r.numerator()) / static_cast<long double>(r.denominator());
}

std::vector<double> normalize_group(std::span<const long double> x, bool degenerate) {
  std::vector<double> out(x.size(), 0.0);
  if (degenerate || x.empty()) return out;
  const long double n = static_cast<long double>(x.size());
  long double mean = 0;
  for (auto v : x) mean += v;
  mean /= n;
  long double var = 0;
  for (auto v : x) var += (v - mean) * (v - mean);
  var /= n;
  const long double sd = std::sqrt(var);
  if (sd == 0) return out;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<double>((x[i] - mean) / sd);
  return out;
}

template <typename T>
std::vector<std::size_t> topb(std::span<const T> rewards, std::size_t b) {
  if (b < 1 || b > rewards.size()) {
    throw Error(ErrorCode::kBOutOfRange,
                "B=" + std::to_string(b) + " outside [1, " + std::to_string(rewards.size()) + "]");
  }
  std::vector<std::size_t> order(rewards.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) { return rewards[c] < rewards[a]; });
  order.resize(b);
  std::sort(order.begin(), order.end());
  return order;
}

std::string_view to_string(FilterDecision d) { return d == FilterDecision::kDrop ? "drop" : "keep"; }

}  // namespace

std::size_t select_anchor(const RolloutGroup& group, std::uint64_t seed) {
  if (group.responses.empty()) throw Error(ErrorCode::kEmptyGroup, "group has no responses");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dist(0, group.responses.size() - 1);
  return dist(rng);
}

Rational compose_reward(const Rational& s_ref, std::int64_t verifier_sum, const RewardConfig& cfg) {
  if (s_ref < -2 || s_ref > 2) throw Error(ErrorCode::kOutOfRange, "s_ref " + format_rational(s_ref) + " outside [-2, 2]");
  return s_ref + cfg.gamma * verifier_sum;
}

std::vector<double> grpo_advantages(std::span<const double> rewards) {
  std::vector<long double> x(rewards.begin(), rewards.end());
  const bool degenerate = std::adjacent_find(rewards.begin(), rewards.end(), std::not_equal_to<>()) == rewards.end();
  return normalize_group(x, degenerate);
}

std::vector<double> grpo_advantages(std::span<const Rational> rewards) {
  std::vector<long double> x;
  x.reserve(rewards.size());
  for (const auto& r : rewards) x.push_back(as_long_double(r));
  const bool degenerate = std::adjacent_find(rewards.begin(), rewards.end(), std::not_equal_to<>()) == rewards.end();
  return normalize_group(x, degenerate);
}

std::vector<std::size_t> asym_topb_mask(std::span<const Rational> rewards, std::size_t b) { return topb(rewards, b); }

std::vector<std::size_t> asym_topb_mask(std::span<const double> rewards, std::size_t b) { return topb(rewards, b); }

std::vector<int> mask_bits(std::size_t g, std::span<const std::size_t> topb_set) {
  std::vector<int> bits(g, 0);
  for (auto i : topb_set) {
    if (i >= g) throw Error(ErrorCode::kLengthMismatch, "mask index " + std::to_string(i) + " out of range");
    bits[i] = 1;
  }
  return bits;
}

FilterDecision filter_group(std::span<const Verdict> verdicts, const RewardConfig& cfg) {
  if (verdicts.empty()) return FilterDecision::kKeep;
  const auto same = std::count(verdicts.begin(), verdicts.end(), Verdict::kSame);
  const Rational fraction(static_cast<std::int64_t>(same), static_cast<std::int64_t>(verdicts.size()));
  return fraction > cfg.same_fraction_threshold ? FilterDecision::kDrop : FilterDecision::kKeep;
}

FilterDecision filter_group(std::span<const PairJudgment> judgments, const RewardConfig& cfg) {
  std::vector<Verdict> v;
  v.reserve(judgments.size());
  for (const auto& j : judgments) v.push_back(j.verdict);
  return filter_group(v, cfg);
}

Rational anchor_score(const PairJudgment& j) {
  if (j.verdict == Verdict::kSame) return Rational(0);
  return (j.forward.score.value - j.reverse.score.value) / 2;
}

std::vector<TrainingRecord> emit_training_records(const std::string& group_id, const RolloutGroup& group,
                                                  std::span<const Rational> rewards,
                                                  std::span<const double> advantages, std::span<const int> mask,
                                                  std::span<const std::vector<std::string>> transcript_refs,
                                                  const std::string& config_digest) {
  const auto g = group.responses.size();
  if (rewards.size() != g || advantages.size() != g || (!mask.empty() && mask.size() != g) ||
      (!transcript_refs.empty() && transcript_refs.size() != g)) {
    throw Error(ErrorCode::kLengthMismatch, "group, rewards, advantages and mask must align");
  }
  std::vector<double> sub_adv(g, 0.0);
  if (mask.empty()) {
    sub_adv.assign(advantages.begin(), advantages.end());
  } else {
    std::vector<Rational> kept;
    for (std::size_t i = 0; i < g; ++i) {
      if (mask[i]) kept.push_back(rewards[i]);
    }
    const auto adv = grpo_advantages(kept);
    for (std::size_t i = 0, k = 0; i < g; ++i) {
      if (mask[i]) sub_adv[i] = adv[k++];
    }
  }
  std::vector<TrainingRecord> out;
  out.reserve(g);
  for (std::size_t i = 0; i < g; ++i) {
    TrainingRecord r;
    r.group_id = group_id;
    r.index = i;
    r.query = group.query;
    r.response = group.responses[i];
    r.reward = rewards[i];
    r.advantage = advantages[i];
    r.advantage_topb = sub_adv[i];
    r.mask = mask.empty() ? 1 : (mask[i] ? 1 : 0);
    if (!transcript_refs.empty()) r.transcript_refs = transcript_refs[i];
    r.config_digest = config_digest;
    out.push_back(std::move(r));
  }
  return out;
}

json to_json(const TrainingRecord& r) {
  return {{"group_id", r.group_id},
          {"index", r.index},
          {"query", r.query},
          {"response", r.response},
          {"reward", format_rational(r.reward)},
          {"advantage", r.advantage},
          {"advantage_topb", r.advantage_topb},
          {"mask", r.mask},
          {"transcript_refs", r.transcript_refs},
          {"config_digest", r.config_digest}};
}

TrainingRecord training_record_from_json(const json& j) {
  TrainingRecord r;
  try {
    r.group_id = j.at("group_id").get<std::string>();
    r.index = j.at("index").get<std::size_t>();
    r.query = j.at("query").get<std::string>();
    r.response = j.at("response").get<std::string>();
    r.reward = rational_from_json(j.at("reward"));
    r.advantage = j.at("advantage").get<double>();
    r.advantage_topb = j.value("advantage_topb", r.advantage);
    r.mask = j.at("mask").get<int>();
    r.transcript_refs = j.value("transcript_refs", std::vector<std::string>{});
    r.config_digest = j.value("config_digest", std::string());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kIoFailure, std::string("bad training record: ") + e.what());
  }
  return r;
}

void write_training_records(std::ostream& out, std::span<const TrainingRecord> records) {
  const json header = {
      {"schema", kTrainingSchema},
      {"version", kTrainingSchemaVersion},
      {"trainer_terms", {"clip_epsilon", "kl_beta", "policy_ratio", "reference_policy"}},
  };
  out << header.dump() << '\n';
  for (const auto& r : records) out << to_json(r).dump() << '\n';
  if (!out) throw Error(ErrorCode::kIoFailure, "failed to write training records");
}

std::vector<TrainingRecord> read_training_records(std::istream& in) {
  std::vector<TrainingRecord> out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kIoFailure, std::string("bad training line: ") + e.what());
    }
    if (header) {
      header = false;
      if (j.value("schema", std::string()) != kTrainingSchema) {
        throw Error(ErrorCode::kIoFailure, "missing training record header");
      }
      if (j.value("version", 0) > kTrainingSchemaVersion) {
        throw Error(ErrorCode::kIoFailure, "unsupported training schema version");
      }
      continue;
    }
    out.push_back(training_record_from_json(j));
  }
  return out;
}

GroupRewardResult compute_group_rewards(PairwiseJudge& judge, RolloutGroup group, const MetaRubric& meta,
                                        const RewardConfig& cfg, std::uint64_t seed) {
  const auto g = group.responses.size();
  if (g == 0) throw Error(ErrorCode::kEmptyGroup, "group has no responses");
  GroupRewardResult result;
  result.anchor = group.anchor.value_or(select_anchor(group, seed));
  if (result.anchor >= g) throw Error(ErrorCode::kOutOfRange, "anchor index out of range");
  result.rollouts.resize(g);

  const auto width = static_cast<std::size_t>(std::max(1, judge.client().config().max_in_flight));
  parallel_for(g, std::min(width, g), [&](std::size_t i) {
    if (i == result.anchor) return;
    auto j = judge.judge_pair(group.query, group.responses[i], group.responses[result.anchor], meta);
    result.rollouts[i].s_ref = anchor_score(j);
    result.rollouts[i].judgment = std::move(j);
  });

  std::int64_t n_reward = 0;
  for (const auto& s : group.verifiers.specs) n_reward += s.role == VerifierRole::kReward ? 1 : 0;
  std::vector<Verdict> verdicts;
  for (std::size_t i = 0; i < g; ++i) {
    auto& r = result.rollouts[i];
    r.verifiers = run_all(group.verifiers, group.responses[i]);
    r.gate = gate(group.verifiers, group.responses[i]);
    r.reward = compose_reward(r.s_ref, r.verifiers.sum, cfg);
    if (!r.gate.pass && cfg.gate_policy == GatePolicy::kClampToMin) r.reward = Rational(-2) - cfg.gamma * n_reward;
    result.rewards.push_back(r.reward);
    if (r.judgment) verdicts.push_back(r.judgment->verdict);
  }
  result.advantages = grpo_advantages(result.rewards);
  if (cfg.top_b) result.mask = mask_bits(g, asym_topb_mask(result.rewards, *cfg.top_b));
  result.filter = filter_group(verdicts, cfg);
  result.config_digest =
      sha256_hex(judge.config_digest(meta) + "|gamma=" + format_rational(cfg.gamma) +
                 "|same=" + format_rational(cfg.same_fraction_threshold) +
                 "|gate=" + (cfg.gate_policy == GatePolicy::kClampToMin ? "clamp_to_min" : "report_only"));
  return result;
}

json to_json(const GroupRewardResult& r) {
  json rollouts = json::array();
  for (std::size_t i = 0; i < r.rollouts.size(); ++i) {
    const auto& ro = r.rollouts[i];
    json outcomes = json::array();
    for (const auto& o : ro.verifiers.outcomes) outcomes.push_back(to_json(o));
    json item = {{"index", i},
                 {"s_ref", format_rational(ro.s_ref)},
                 {"verifier_sum", ro.verifiers.sum},
                 {"verifiers", outcomes},
                 {"gate", {{"pass", ro.gate.pass}, {"failed", ro.gate.failed}}},
                 {"reward", format_rational(ro.reward)},
                 {"advantage", r.advantages.at(i)}};
    if (!r.mask.empty()) item["mask"] = r.mask[i];
    item["judgment"] = ro.judgment ? to_json(*ro.judgment) : json(nullptr);
    rollouts.push_back(std::move(item));
  }
  return {{"anchor", r.anchor},
          {"filter", to_string(r.filter)},
          {"rollouts", rollouts},
          {"config_digest", r.config_digest}};
}

}  // namespace openrs
