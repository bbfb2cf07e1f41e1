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

#include <string>

#include "openrs/judge.hpp"

namespace openrs {

/// Chat-completion style endpoint: POST {model, messages:[system, user],
/// temperature, max_tokens} and read choices[0].message.content.
/// The bearer credential is read from the environment variable named in
/// the config at construction time.
class HttpJudgeBackend : public JudgeBackend {
 public:
  explicit HttpJudgeBackend(const ClientConfig& config);

  JudgeReply call(const JudgePrompt& prompt) override;
  bool reachable() override;

 private:
  std::string base_;  // scheme://host[:port]
  std::string path_;
  std::string credential_;
  std::chrono::milliseconds timeout_;
};

}  // namespace openrs
