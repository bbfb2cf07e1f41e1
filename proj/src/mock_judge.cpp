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

#include "openrs/mock_judge.hpp"

#include <algorithm>
#include <regex>
#include <sstream>
#include <thread>

#include "openrs/prompts.hpp"

using nlohmann::json;

namespace openrs {
namespace {

int sign(int v) { return (v > 0) - (v < 0); }

int quality_of(const std::string& text) {
  static const std::regex tag(R"(\[q=(-?\d+)\])");
  std::smatch m;
  if (std::regex_search(text, m, tag)) return std::stoi(m[1].str());
  return 0;
}

std::vector<std::string> criterion_ids(const std::string& criteria_section) {
  std::vector<std::string> ids;
  std::istringstream in(criteria_section);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("- [", 0) != 0) continue;
    const auto close = line.find(']', 3);
    if (close != std::string::npos) ids.push_back(line.substr(3, close - 3));
  }
  return ids;
}

std::string rubric_block(const std::vector<MockCriterion>& rubric) {
  json arr = json::array();
  for (const auto& c : rubric) arr.push_back({{"id", c.id}, {"text", c.text}, {"weight", rational_to_json(c.weight)}});
  return fenced(kRubricBlock, arr.dump());
}

std::string diff_block(const std::string& a, const std::string& b, std::size_t items) {
  json arr = json::array();
  if (a != b) {
    for (std::size_t i = 0; i < items; ++i) {
      arr.push_back({{"text", "Difference " + std::to_string(i + 1) + " between the responses"},
                     {"dimension", "aspect-" + std::to_string(i + 1)}});
    }
  }
  return fenced(kDiffBlock, arr.dump());
}

}  // namespace

JudgeStage detect_stage(const JudgePrompt& prompt) {
  const auto& s = prompt.system_text;
  auto asks = [&](std::string_view tag) { return s.find("```" + std::string(tag)) != std::string::npos; };
  const bool diff = asks(kDiffBlock);
  const bool rubric = asks(kRubricBlock);
  if (diff && rubric) return JudgeStage::kFused;
  if (diff) return JudgeStage::kDiff;
  if (rubric) return JudgeStage::kRubric;
  if (asks(kScoresBlock)) return JudgeStage::kScores;
  if (asks(kGradesBlock)) return JudgeStage::kGrades;
  if (asks(kEditsBlock)) return JudgeStage::kEdits;
  if (s.find("summarize") != std::string::npos) return JudgeStage::kSummary;
  return JudgeStage::kUnknown;
}

std::vector<MockCriterion> default_mock_rubric() {
  return {{"c1", "Correctly and completely addresses the request", Rational(2)},
          {"c2", "Clear, well organized presentation", Rational(1)},
          {"c3", "Follows every explicit instruction", Rational(1)}};
}

MockPolicy marker_policy(const std::string& marker) {
  MockPolicy p;
  p.prefer = [marker](const std::string&, const std::string& first, const std::string& second) {
    const bool f = first.find(marker) != std::string::npos;
    const bool s = second.find(marker) != std::string::npos;
    return static_cast<int>(f) - static_cast<int>(s);
  };
  p.grade = [marker](const std::string&, const std::string& r) {
    return r.find(marker) != std::string::npos ? 4 : 0;
  };
  p.rubric = default_mock_rubric();
  return p;
}

MockPolicy quality_tag_policy() {
  MockPolicy p;
  p.prefer = [](const std::string&, const std::string& first, const std::string& second) {
    return sign(quality_of(first) - quality_of(second));
  };
  p.grade = [](const std::string&, const std::string& r) { return std::clamp(quality_of(r), 0, 4); };
  p.rubric = default_mock_rubric();
  return p;
}

MockPolicy first_policy() {
  MockPolicy p;
  p.prefer = [](const std::string&, const std::string&, const std::string&) { return 1; };
  p.grade = [](const std::string&, const std::string&) { return 2; };
  p.rubric = default_mock_rubric();
  return p;
}

MockPolicy second_policy() {
  MockPolicy p = first_policy();
  p.prefer = [](const std::string&, const std::string&, const std::string&) { return -1; };
  return p;
}

MockPolicy equal_policy() {
  MockPolicy p = first_policy();
  p.prefer = [](const std::string&, const std::string&, const std::string&) { return 0; };
  return p;
}

MockJudge::MockJudge(MockPolicy policy) : policy_(std::move(policy)) {
  if (policy_.rubric.empty()) policy_.rubric = default_mock_rubric();
}

std::shared_ptr<MockJudge> MockJudge::from_json(const json& table) {
  const auto name = table.value("policy", std::string("quality"));
  MockPolicy p;
  if (name == "marker") {
    p = marker_policy(table.value("marker", std::string("[chosen]")));
  } else if (name == "quality") {
    p = quality_tag_policy();
  } else if (name == "first") {
    p = first_policy();
  } else if (name == "second") {
    p = second_policy();
  } else if (name == "equal") {
    p = equal_policy();
  } else {
    throw Error(ErrorCode::kInvalidConfig, "unknown mock policy '" + name + "'");
  }
  p.magnitude = table.value("magnitude", 2);
  p.diff_items = table.value("diff_items", std::size_t{1});
  p.edits_reply = table.value("edits_reply", std::string());
  if (table.contains("rubric")) {
    p.rubric.clear();
    for (const auto& c : table.at("rubric")) {
      p.rubric.push_back({c.at("id").get<std::string>(), c.at("text").get<std::string>(),
                          c.contains("weight") ? rational_from_json(c.at("weight")) : Rational(1)});
    }
  }
  auto mock = std::make_shared<MockJudge>(std::move(p));
  if (table.contains("entries")) {
    for (const auto& [digest, reply] : table.at("entries").items()) mock->set_entry(digest, reply.get<std::string>());
  }
  return mock;
}

void MockJudge::set_entry(const std::string& digest, std::string reply) {
  std::lock_guard lock(mutex_);
  table_[digest] = std::move(reply);
}

void MockJudge::set_fault(Fault fault) {
  std::lock_guard lock(mutex_);
  fault_ = std::move(fault);
}

void MockJudge::fail_first(std::uint64_t n, ErrorCode code) {
  set_fault([n, code](const JudgePrompt&, std::uint64_t i) -> std::optional<ErrorCode> {
    if (i < n) return code;
    return std::nullopt;
  });
}

std::uint64_t MockJudge::stage_calls(JudgeStage stage) const {
  std::lock_guard lock(mutex_);
  auto it = per_stage_.find(stage);
  return it == per_stage_.end() ? 0 : it->second;
}

std::string MockJudge::policy_reply(const JudgePrompt& prompt) const {
  const auto& user = prompt.user_text;
  const auto query = extract_section(user, "query").value_or("");
  const auto first = extract_section(user, "response_1").value_or("");
  const auto second = extract_section(user, "response_2").value_or("");

  switch (detect_stage(prompt)) {
    case JudgeStage::kDiff:
      return diff_block(first, second, policy_.diff_items);
    case JudgeStage::kRubric:
      return rubric_block(policy_.rubric);
    case JudgeStage::kFused:
      return diff_block(first, second, policy_.diff_items) + "\n" + rubric_block(policy_.rubric);
    case JudgeStage::kScores: {
      const int score = sign(policy_.prefer(query, first, second)) * policy_.magnitude;
      json arr = json::array();
      for (const auto& id : criterion_ids(extract_section(user, "criteria").value_or(""))) {
        arr.push_back({{"id", id}, {"score", score}, {"rationale", "mock"}});
      }
      return fenced(kScoresBlock, arr.dump());
    }
    case JudgeStage::kGrades: {
      const auto response = extract_section(user, "response").value_or("");
      const int g = std::clamp(policy_.grade(query, response), 0, 4);
      json arr = json::array();
      for (const auto& id : criterion_ids(extract_section(user, "criteria").value_or(""))) {
        arr.push_back({{"id", id}, {"grade", g}, {"rationale", "mock"}});
      }
      return fenced(kGradesBlock, arr.dump());
    }
    case JudgeStage::kEdits:
      return policy_.edits_reply.empty() ? fenced(kEditsBlock, "[]") : policy_.edits_reply;
    case JudgeStage::kSummary:
      return policy_.summary_reply;
    case JudgeStage::kUnknown:
      break;
  }
  throw JudgeError(ErrorCode::kBadResponse, "mock judge cannot answer this prompt");
}

JudgeReply MockJudge::call(const JudgePrompt& prompt) {
  const auto index = calls_++;
  const auto now = ++in_flight_;
  auto hw = high_water_.load();
  while (now > hw && !high_water_.compare_exchange_weak(hw, now)) {
  }
  struct Leave {
    std::atomic<std::uint64_t>& n;
    ~Leave() { --n; }
  } leave{in_flight_};

  const auto digest = prompt_digest(prompt);
  Fault fault;
  std::optional<std::string> canned;
  {
    std::lock_guard lock(mutex_);
    ++per_stage_[detect_stage(prompt)];
    fault = fault_;
    if (auto it = table_.find(digest); it != table_.end()) canned = it->second;
  }
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  if (fault) {
    if (auto code = fault(prompt, index)) throw JudgeError(*code, "scripted mock failure");
  }

  JudgeReply reply;
  reply.text = canned ? *canned : policy_reply(prompt);
  reply.prompt_tokens = static_cast<std::int64_t>((prompt.system_text.size() + prompt.user_text.size()) / 4);
  reply.completion_tokens = static_cast<std::int64_t>(reply.text.size() / 4);
  return reply;
}

}  // namespace openrs
