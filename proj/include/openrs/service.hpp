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

// HTTP facade over scoring, rubric management and the review queue.
//
//   GET  /healthz
//   POST /v1/judge/pair
//   POST /v1/reward/group
//   GET  /v1/rubrics
//   GET  /v1/rubrics/{id}/versions/{v}
//   POST /v1/rubrics/{id}/edits
//   GET  /v1/review/cases?state=&category=&cursor=&limit=
//   POST /v1/review/edits/{id}/decision
//   GET  /v1/reports/{run_id}
//
// ServiceCore maps requests to responses without sockets; serve() binds it
// to a port via HttpService. POST routes need "Authorization: Bearer <token>" and replay the
// stored response for a repeated X-Request-Id. Every response carries
// X-OpenRS-Config-Digest.

#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "openrs/bench.hpp"
#include "openrs/pairwise.hpp"
#include "openrs/reward.hpp"
#include "openrs/review.hpp"
#include "openrs/rubric_store.hpp"

namespace openrs {

inline constexpr const char* kConfigDigestHeader = "X-OpenRS-Config-Digest";

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string token_env = "OPENRS_API_TOKEN";
  std::optional<std::string> token;  // overrides token_env when set
  std::filesystem::path reports_dir;
  RewardConfig reward;
  std::vector<BenchRecord> holdout;  // pairwise records scoring review edits
  int retry_after_seconds = 5;
  std::size_t idempotency_capacity = 4096;
};

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // names matched case-insensitively
  std::string body;

  std::optional<std::string> header(const std::string& name) const;
};

struct HttpResponse {
  int status = 200;
  std::map<std::string, std::string> headers;
  std::string body;
};

/// HTTP status for a library error code.
int http_status(ErrorCode code);

class ServiceCore {
 public:
  ServiceCore(ServiceConfig cfg, PairwiseJudge& judge, RubricStore& store, ReviewQueue& queue);

  /// Never throws.
  HttpResponse handle(const HttpRequest& req);

  const ServiceConfig& config() const { return cfg_; }

 private:
  HttpResponse dispatch(const HttpRequest& req, std::string& digest);
  bool authorized(const HttpRequest& req) const;

  HttpResponse healthz(std::string& digest);
  HttpResponse judge_pair(const HttpRequest& req, std::string& digest);
  HttpResponse reward_group(const HttpRequest& req, std::string& digest);
  HttpResponse list_rubrics(std::string& digest);
  HttpResponse rubric_version(const std::string& id, const std::string& version, std::string& digest);
  HttpResponse propose_edits(const std::string& id, const HttpRequest& req, std::string& digest);
  HttpResponse review_cases(const HttpRequest& req, std::string& digest);
  HttpResponse review_decision(const std::string& id, const HttpRequest& req, std::string& digest);
  HttpResponse report(const std::string& run_id, std::string& digest);

  ServiceConfig cfg_;
  PairwiseJudge& judge_;
  RubricStore& store_;
  ReviewQueue& queue_;
  std::string base_digest_;

  struct Replay {
    std::string fingerprint;
    HttpResponse response;
  };
  std::mutex replay_mutex_;
  std::map<std::string, Replay> replays_;
  std::deque<std::string> replay_order_;
};

/// Socket front end for a ServiceCore.
class HttpService {
 public:
  explicit HttpService(ServiceCore& core);
  ~HttpService();

  /// Binds cfg.host:cfg.port (port 0 picks a free one) and returns the
  /// port. Throws kBindFailure.
  int bind();
  /// Serves until stop(). Requires bind().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace openrs
