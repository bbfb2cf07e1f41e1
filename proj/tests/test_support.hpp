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

#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "openrs/judge.hpp"
#include "openrs/mock_judge.hpp"
#include "openrs/prompts.hpp"
#include "openrs/rubric.hpp"

namespace openrs::testing {

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("openrs-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline Criterion crit(std::string id, Rational w = Rational(1), std::string text = {}) {
  Criterion c;
  c.text = text.empty() ? "Principle " + id : std::move(text);
  c.id = std::move(id);
  c.weight = w;
  return c;
}

inline MetaRubric general(std::string id, std::vector<Criterion> criteria, std::uint64_t version = 0) {
  MetaRubric r;
  r.id = std::move(id);
  r.version = version;
  r.criteria = std::move(criteria);
  return r;
}

inline MetaRubric domain(std::string id, std::string parent, std::vector<Criterion> criteria) {
  MetaRubric r;
  r.id = std::move(id);
  r.kind = RubricKind::kDomain;
  r.parent_id = std::move(parent);
  r.criteria = std::move(criteria);
  return r;
}

/// Client config with no backoff so retry tests run instantly.
inline ClientConfig fast_config(std::filesystem::path cache = {}) {
  ClientConfig cfg;
  cfg.backoff_base = std::chrono::milliseconds(0);
  cfg.cache_dir = std::move(cache);
  return cfg;
}

/// Backend answering through a plain function and recording every prompt.
class FnBackend : public JudgeBackend {
 public:
  using Fn = std::function<std::string(const JudgePrompt&)>;
  explicit FnBackend(Fn fn) : fn_(std::move(fn)) {}

  JudgeReply call(const JudgePrompt& prompt) override {
    {
      std::lock_guard lock(mutex_);
      prompts_.push_back(prompt);
    }
    JudgeReply r;
    r.text = fn_(prompt);
    return r;
  }

  std::vector<JudgePrompt> prompts() const {
    std::lock_guard lock(mutex_);
    return prompts_;
  }

 private:
  Fn fn_;
  mutable std::mutex mutex_;
  std::vector<JudgePrompt> prompts_;
};

/// Judge whose verdicts depend on the meta rubric: the adaptive rubric
/// echoes the meta criteria, and only criteria mentioning `keyword` compare
/// the responses' [q=N] tags. Any other criterion scores 0.
inline std::shared_ptr<FnBackend> rubric_sensitive_backend(std::string keyword) {
  return std::make_shared<FnBackend>([keyword](const JudgePrompt& p) -> std::string {
    auto quality = [](const std::string& t) {
      static const std::regex tag(R"(\[q=(-?\d+)\])");
      std::smatch m;
      return std::regex_search(t, m, tag) ? std::stoi(m[1].str()) : 0;
    };
    switch (detect_stage(p)) {
      case JudgeStage::kDiff:
        return fenced(kDiffBlock, "[]");
      case JudgeStage::kRubric: {
        nlohmann::json arr = nlohmann::json::array();
        std::istringstream in(extract_section(p.user_text, "meta_rubric").value_or(""));
        for (std::string line; std::getline(in, line);) {
          const auto pos = line.find("] ");
          if (line.empty() || !std::isdigit(static_cast<unsigned char>(line[0])) || pos == std::string::npos) continue;
          arr.push_back({{"id", "m" + std::to_string(arr.size() + 1)}, {"text", line.substr(pos + 2)}});
        }
        if (arr.empty()) arr.push_back({{"id", "neutral"}, {"text", "Overall quality"}});
        return fenced(kRubricBlock, arr.dump());
      }
      case JudgeStage::kScores: {
        const auto first = quality(extract_section(p.user_text, "response_1").value_or(""));
        const auto second = quality(extract_section(p.user_text, "response_2").value_or(""));
        const int s = first > second ? 2 : first < second ? -2 : 0;
        nlohmann::json arr = nlohmann::json::array();
        std::istringstream in(extract_section(p.user_text, "criteria").value_or(""));
        for (std::string line; std::getline(in, line);) {
          if (line.rfind("- [", 0) != 0) continue;
          const auto id = line.substr(3, line.find(']') - 3);
          arr.push_back({{"id", id}, {"score", line.find(keyword) != std::string::npos ? s : 0}});
        }
        return fenced(kScoresBlock, arr.dump());
      }
      default:
        return "unsupported";
    }
  });
}

}  // namespace openrs::testing
