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

#include "openrs/judge.hpp"

#include <algorithm>
#include <random>
#include <thread>

#include <json.hpp>

#include "openrs/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace openrs {

bool is_retryable(ErrorCode code) {
  return code == ErrorCode::kTransport || code == ErrorCode::kTimeout || code == ErrorCode::kRateLimited;
}

std::string prompt_digest(const JudgePrompt& prompt) {
  // Field order is fixed by the array; the texts are length-delimited by JSON.
  const json key = json::array({"openrs.judge.v1", prompt.model, prompt.temperature, prompt.max_output_tokens,
                                prompt.system_text, prompt.user_text});
  return sha256_hex(key.dump());
}

JudgeClient::JudgeClient(std::shared_ptr<JudgeBackend> backend, ClientConfig config)
    : backend_(std::move(backend)), config_(std::move(config)), in_flight_(std::max(config_.max_in_flight, 1)) {
  if (!backend_) throw Error(ErrorCode::kInvalidConfig, "judge client needs a backend");
  if (config_.max_in_flight < 1) throw Error(ErrorCode::kInvalidConfig, "max_in_flight must be >= 1");
  if (config_.retry_budget < 0) throw Error(ErrorCode::kInvalidConfig, "retry budget must be >= 0");
  if (!config_.cache_dir.empty()) {
    std::error_code ec;
    fs::create_directories(config_.cache_dir, ec);
    if (ec) throw Error(ErrorCode::kIoFailure, "cannot create cache dir " + config_.cache_dir.string());
  }
}

std::chrono::milliseconds JudgeClient::backoff_delay(int retry) {
  if (config_.backoff_base.count() <= 0) return std::chrono::milliseconds(0);
  thread_local std::mt19937_64 rng{std::random_device{}()};
  const auto exp = config_.backoff_base.count() * (std::int64_t{1} << std::min(retry, 20));
  const auto capped = std::min<std::int64_t>(exp, config_.backoff_cap.count());
  // Full jitter in [capped/2, capped].
  std::uniform_int_distribution<std::int64_t> jitter(capped / 2, capped);
  return std::chrono::milliseconds(jitter(rng));
}

JudgeReply JudgeClient::complete(const JudgePrompt& prompt) {
  int attempt = 0;
  for (;;) {
    ++attempt;
    try {
      in_flight_.acquire();
      struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
      } release{in_flight_};
      ++live_calls_;
      return backend_->call(prompt);
    } catch (const JudgeError& e) {
      if (!is_retryable(e.code()) || attempt > config_.retry_budget) {
        throw JudgeError(e.code(), e.what(), attempt);
      }
    }
    if (auto d = backoff_delay(attempt - 1); d.count() > 0) std::this_thread::sleep_for(d);
  }
}

std::vector<JudgeResult> JudgeClient::batch_complete(std::span<const JudgePrompt> prompts, bool use_cache) {
  std::vector<JudgeResult> results(prompts.size());
  parallel_for(prompts.size(), static_cast<std::size_t>(config_.max_in_flight), [&](std::size_t i) {
    try {
      results[i].reply = use_cache ? cached_complete(prompts[i]) : complete(prompts[i]);
    } catch (const JudgeError& e) {
      results[i].error = e;
    } catch (const std::exception& e) {
      results[i].error = JudgeError(ErrorCode::kBadResponse, e.what());
    }
  });
  return results;
}

std::optional<JudgeReply> JudgeClient::cache_lookup(const std::string& key) {
  const auto path = config_.cache_dir / (key + ".json");
  std::error_code ec;
  if (!fs::exists(path, ec)) return std::nullopt;
  try {
    const auto j = json::parse(read_file(path));
    if (j.at("key").get<std::string>() != key) throw Error(ErrorCode::kCacheCorrupt, "key mismatch");
    JudgeReply reply;
    reply.text = j.at("text").get<std::string>();
    reply.prompt_tokens = j.value("prompt_tokens", std::int64_t{0});
    reply.completion_tokens = j.value("completion_tokens", std::int64_t{0});
    reply.latency = std::chrono::milliseconds(j.value("latency_ms", std::int64_t{0}));
    return reply;
  } catch (const std::exception&) {
    ++cache_corrupt_;
    return std::nullopt;
  }
}

void JudgeClient::cache_store(const std::string& key, const JudgePrompt& prompt, const JudgeReply& reply) {
  const json j{{"key", key},
               {"model", prompt.model},
               {"text", reply.text},
               {"prompt_tokens", reply.prompt_tokens},
               {"completion_tokens", reply.completion_tokens},
               {"latency_ms", reply.latency.count()}};
  atomic_write(config_.cache_dir / (key + ".json"), j.dump());
}

JudgeReply JudgeClient::cached_complete(const JudgePrompt& prompt) {
  if (config_.cache_dir.empty()) return complete(prompt);
  const auto key = prompt_digest(prompt);
  if (auto hit = cache_lookup(key)) {
    ++cache_hits_;
    return *hit;
  }
  auto reply = complete(prompt);
  cache_store(key, prompt, reply);
  return reply;
}

ClientStats JudgeClient::stats() const { return {live_calls_.load(), cache_hits_.load(), cache_corrupt_.load()}; }

}  // namespace openrs
