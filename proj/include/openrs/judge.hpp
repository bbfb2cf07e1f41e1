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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <vector>

#include "openrs/error.hpp"

namespace openrs {

struct JudgePrompt {
  std::string system_text;
  std::string user_text;
  double temperature = 0.0;
  int max_output_tokens = 2048;
  std::string model;
};

struct JudgeReply {
  std::string text;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  std::chrono::milliseconds latency{0};
};

/// Judge failure. `attempts` counts how many times the request was issued.
class JudgeError : public Error {
 public:
  JudgeError(ErrorCode code, const std::string& message, int attempts = 1)
      : Error(code, message), attempts_(attempts) {}

  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

/// Transport/timeout/rate-limit failures are worth another attempt; a bad
/// response is not.
bool is_retryable(ErrorCode code);

/// Cache key: hex SHA-256 over model, sampling params and both texts.
std::string prompt_digest(const JudgePrompt& prompt);

/// One endpoint. `call` performs exactly one attempt and throws JudgeError.
class JudgeBackend {
 public:
  virtual ~JudgeBackend() = default;
  virtual JudgeReply call(const JudgePrompt& prompt) = 0;
  virtual bool reachable() { return true; }
};

struct ClientConfig {
  std::string endpoint;
  std::string credential_env = "OPENRS_JUDGE_API_KEY";
  std::string model = "judge";
  int max_in_flight = 64;
  std::chrono::milliseconds timeout{120000};
  int retry_budget = 3;
  std::chrono::milliseconds backoff_base{250};
  std::chrono::milliseconds backoff_cap{8000};
  std::filesystem::path cache_dir;
};

/// Either a reply or the error that exhausted its retries.
struct JudgeResult {
  std::optional<JudgeReply> reply;
  std::optional<JudgeError> error;

  bool ok() const { return reply.has_value(); }
};

struct ClientStats {
  std::uint64_t live_calls = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_corrupt = 0;
};

/// Shareable judge client. A single in-flight semaphore bounds concurrent
/// backend calls across every caller of the instance.
class JudgeClient {
 public:
  JudgeClient(std::shared_ptr<JudgeBackend> backend, ClientConfig config);

  const ClientConfig& config() const { return config_; }
  JudgeBackend& backend() { return *backend_; }

  /// One logical request with up to `retry_budget` retries on retryable errors.
  JudgeReply complete(const JudgePrompt& prompt);

  /// Positionally aligned results; at most `max_in_flight` outstanding.
  std::vector<JudgeResult> batch_complete(std::span<const JudgePrompt> prompts, bool use_cache = false);

  /// Replays from `cache_dir` when possible, otherwise calls `complete` and
  /// stores the raw reply. Without a cache directory this is `complete`.
  JudgeReply cached_complete(const JudgePrompt& prompt);

  ClientStats stats() const;

 private:
  std::optional<JudgeReply> cache_lookup(const std::string& key);
  void cache_store(const std::string& key, const JudgePrompt& prompt, const JudgeReply& reply);
  std::chrono::milliseconds backoff_delay(int retry);

  std::shared_ptr<JudgeBackend> backend_;
  ClientConfig config_;
  std::counting_semaphore<> in_flight_;
  std::atomic<std::uint64_t> live_calls_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
  std::atomic<std::uint64_t> cache_corrupt_{0};
};

}  // namespace openrs
