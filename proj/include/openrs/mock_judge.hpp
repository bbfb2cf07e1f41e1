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

// Deterministic, table-driven judge used by every protocol test and by the
// CLI's --mock mode. It answers the default prompt templates by reading the
// requested block schema from the system text and the inputs from the
// tagged sections of the user text.

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "openrs/judge.hpp"
#include "openrs/rational.hpp"

namespace openrs {

enum class JudgeStage { kDiff, kRubric, kFused, kScores, kGrades, kEdits, kSummary, kUnknown };

JudgeStage detect_stage(const JudgePrompt& prompt);

struct MockCriterion {
  std::string id;
  std::string text;
  Rational weight{1};
};

struct MockPolicy {
  /// +1 when the response presented first is better, -1 when the second is,
  /// 0 when equal.
  std::function<int(const std::string& query, const std::string& first, const std::string& second)> prefer;
  /// Absolute grade in 0..4 for the pointwise variant.
  std::function<int(const std::string& query, const std::string& response)> grade;
  std::vector<MockCriterion> rubric;
  int magnitude = 2;
  std::size_t diff_items = 1;
  std::string edits_reply;
  std::string summary_reply = "Mock summary.";
};

/// Prefers the response containing `marker`; equal when both or neither do.
MockPolicy marker_policy(const std::string& marker);
/// Prefers the higher "[q=N]" tag; untagged responses count as 0.
MockPolicy quality_tag_policy();
/// Position-biased: always prefers whatever is presented first.
MockPolicy first_policy();
MockPolicy second_policy();
MockPolicy equal_policy();

/// Default adaptive rubric the mock emits: c1 (w=2), c2 (w=1), c3 (w=1).
std::vector<MockCriterion> default_mock_rubric();

class MockJudge : public JudgeBackend {
 public:
  using Fault = std::function<std::optional<ErrorCode>(const JudgePrompt&, std::uint64_t call_index)>;

  explicit MockJudge(MockPolicy policy);

  /// Table file for the CLI: {"policy": "marker|quality|first|second|equal",
  /// "marker": "...", "magnitude": 2, "diff_items": 1, "rubric": [...],
  /// "edits_reply": "...", "entries": {"<prompt digest>": "<reply>"}}.
  static std::shared_ptr<MockJudge> from_json(const nlohmann::json& table);

  JudgeReply call(const JudgePrompt& prompt) override;
  bool reachable() override { return reachable_; }

  /// Exact reply for one prompt digest; consulted before the policy.
  void set_entry(const std::string& digest, std::string reply);
  void set_fault(Fault fault);
  /// Fails the first `n` calls with `code`.
  void fail_first(std::uint64_t n, ErrorCode code = ErrorCode::kTransport);
  void set_latency(std::chrono::microseconds latency) { latency_ = latency; }
  void set_reachable(bool r) { reachable_ = r; }

  std::uint64_t calls() const { return calls_.load(); }
  std::uint64_t high_water() const { return high_water_.load(); }
  std::uint64_t stage_calls(JudgeStage stage) const;

  /// The reply the policy would give, without faults, tables or counters.
  std::string policy_reply(const JudgePrompt& prompt) const;

 private:
  MockPolicy policy_;
  std::map<std::string, std::string> table_;
  Fault fault_;
  std::chrono::microseconds latency_{0};
  bool reachable_ = true;
  std::atomic<std::uint64_t> calls_{0};
  std::atomic<std::uint64_t> in_flight_{0};
  std::atomic<std::uint64_t> high_water_{0};
  mutable std::mutex mutex_;
  std::map<JudgeStage, std::uint64_t> per_stage_;
};

}  // namespace openrs
