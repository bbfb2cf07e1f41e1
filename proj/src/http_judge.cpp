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

#include "openrs/http_judge.hpp"

#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

using nlohmann::json;

namespace openrs {
namespace {

httplib::Client make_client(const std::string& base, std::chrono::milliseconds timeout) {
  httplib::Client cli(base);
  const auto secs = timeout.count() / 1000;
  const auto usecs = (timeout.count() % 1000) * 1000;
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  return cli;
}

}  // namespace

HttpJudgeBackend::HttpJudgeBackend(const ClientConfig& config) : timeout_(config.timeout) {
  const auto& url = config.endpoint;
  const auto scheme_end = url.find("://");
  if (url.empty() || scheme_end == std::string::npos) {
    throw Error(ErrorCode::kInvalidConfig, "judge endpoint must be an absolute URL, got '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  base_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/v1/chat/completions" : url.substr(path_start);
  if (!config.credential_env.empty()) {
    if (const char* v = std::getenv(config.credential_env.c_str())) credential_ = v;
  }
}

JudgeReply HttpJudgeBackend::call(const JudgePrompt& prompt) {
  auto cli = make_client(base_, timeout_);
  httplib::Headers headers;
  if (!credential_.empty()) headers.emplace("Authorization", "Bearer " + credential_);

  const json body{{"model", prompt.model},
                  {"temperature", prompt.temperature},
                  {"max_tokens", prompt.max_output_tokens},
                  {"messages", json::array({{{"role", "system"}, {"content", prompt.system_text}},
                                            {{"role", "user"}, {"content", prompt.user_text}}})}};

  const auto start = std::chrono::steady_clock::now();
  auto res = cli.Post(path_, headers, body.dump(), "application/json");
  const auto latency =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);

  if (!res) {
    const auto err = res.error();
    const auto code = (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout)
                          ? ErrorCode::kTimeout
                          : ErrorCode::kTransport;
    throw JudgeError(code, "judge request failed: " + httplib::to_string(err));
  }
  if (res->status == 429) throw JudgeError(ErrorCode::kRateLimited, "judge endpoint rate limited");
  if (res->status == 408 || res->status == 504) throw JudgeError(ErrorCode::kTimeout, "judge endpoint timed out");
  if (res->status >= 500) throw JudgeError(ErrorCode::kTransport, "judge endpoint status " + std::to_string(res->status));
  if (res->status != 200) throw JudgeError(ErrorCode::kBadResponse, "judge endpoint status " + std::to_string(res->status));

  try {
    const auto j = json::parse(res->body);
    JudgeReply reply;
    reply.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    if (j.contains("usage")) {
      reply.prompt_tokens = j["usage"].value("prompt_tokens", std::int64_t{0});
      reply.completion_tokens = j["usage"].value("completion_tokens", std::int64_t{0});
    }
    reply.latency = latency;
    return reply;
  } catch (const json::exception& e) {
    throw JudgeError(ErrorCode::kBadResponse, std::string("unparseable judge response: ") + e.what());
  }
}

bool HttpJudgeBackend::reachable() {
  auto cli = make_client(base_, std::chrono::milliseconds(2000));
  auto res = cli.Get("/");
  return static_cast<bool>(res);
}

}  // namespace openrs
