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

// Judge prompt templates and the fenced-block reply format.
//
// Every judge reply carries its payload in a fenced block whose info string
// names the schema, e.g.
//
//   ```openrs-scores
//   [{"id": "c1", "score": 2, "rationale": "..."}]
//   ```
//
// Templates use {{name}} placeholders. User texts wrap each input in
// <query>, <response_1>, <response_2>, <response>, <meta_rubric>,
// <differences>, <criteria> and <feedback> sections.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace openrs {

inline constexpr std::string_view kDiffBlock = "openrs-diff";
inline constexpr std::string_view kRubricBlock = "openrs-rubric";
inline constexpr std::string_view kScoresBlock = "openrs-scores";
inline constexpr std::string_view kGradesBlock = "openrs-grades";
inline constexpr std::string_view kEditsBlock = "openrs-edits";

struct PromptTemplate {
  std::string system;
  std::string user;
};

struct PromptTemplates {
  PromptTemplate diff;
  PromptTemplate rubric;          // diff-first adaptation
  PromptTemplate rubric_no_diff;  // ablation: no differences section
  PromptTemplate fused;           // diff and rubric in a single call
  PromptTemplate scores;
  PromptTemplate pointwise_rubric;
  PromptTemplate grades;
  PromptTemplate edits;
  PromptTemplate summary;
  std::string reask;  // appended to the user text on a re-ask; {{error}}

  static PromptTemplates defaults();
  /// Overrides any template present in `j`; missing entries keep defaults.
  static PromptTemplates from_json(const nlohmann::json& j);
  static PromptTemplates load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

/// Substitutes {{name}} placeholders. Unknown placeholders are left as is.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

/// Contents of the first ```<tag> fenced block, or nullopt.
std::optional<std::string> extract_block(std::string_view reply, std::string_view tag);

/// Contents of <name>...</name> in a rendered user text, or nullopt.
std::optional<std::string> extract_section(std::string_view text, std::string_view name);

/// Wraps `body` as a fenced block.
std::string fenced(std::string_view tag, std::string_view body);

}  // namespace openrs
