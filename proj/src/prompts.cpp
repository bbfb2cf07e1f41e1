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

#include "openrs/prompts.hpp"

#include "openrs/error.hpp"
#include "openrs/util.hpp"

using nlohmann::json;

namespace openrs {
namespace {

constexpr const char* kDiffSystem = R"(You compare two candidate responses to the same user query.
List the salient semantic differences between them: content, correctness,
completeness, structure, tone, instruction adherence. Do not judge which is
better. If the responses are identical, return an empty list.

Reply with exactly one fenced block:
```openrs-diff
[{"text": "<one difference>", "dimension": "<short label>"}]
```)";

constexpr const char* kPairUser = R"(<query>
{{query}}
</query>

<response_1>
{{response_1}}
</response_1>

<response_2>
{{response_2}}
</response_2>)";

constexpr const char* kRubricSystem = R"(You instantiate a focused evaluation rubric for one comparison.
Start from the differences listed below, then select and adapt the principles
of the meta rubric that decide between the two responses. Each criterion needs
a positive weight reflecting its importance for this pair. Non-negotiable
principles that are at stake must be included.

Reply with exactly one fenced block:
```openrs-rubric
[{"id": "c1", "text": "<criterion>", "weight": 2}]
```)";

constexpr const char* kRubricUser = R"(<meta_rubric>
{{meta_rubric}}
</meta_rubric>

<differences>
{{diff}}
</differences>

<query>
{{query}}
</query>

<response_1>
{{response_1}}
</response_1>

<response_2>
{{response_2}}
</response_2>)";

constexpr const char* kRubricNoDiffSystem = R"(You instantiate a focused evaluation rubric for one comparison.
Select and adapt the principles of the meta rubric that decide between the
two responses. Each criterion needs a positive weight reflecting its
importance for this pair.

Reply with exactly one fenced block:
```openrs-rubric
[{"id": "c1", "text": "<criterion>", "weight": 2}]
```)";

constexpr const char* kRubricNoDiffUser = R"(<meta_rubric>
{{meta_rubric}}
</meta_rubric>

<query>
{{query}}
</query>

<response_1>
{{response_1}}
</response_1>

<response_2>
{{response_2}}
</response_2>)";

constexpr const char* kFusedSystem = R"(You compare two candidate responses to the same user query.
First list the salient semantic differences, then instantiate a focused
rubric from the meta rubric that decides between them, with positive weights.

Reply with exactly two fenced blocks:
```openrs-diff
[{"text": "<one difference>", "dimension": "<short label>"}]
```
```openrs-rubric
[{"id": "c1", "text": "<criterion>", "weight": 2}]
```)";

constexpr const char* kFusedUser = R"(<meta_rubric>
{{meta_rubric}}
</meta_rubric>

<query>
{{query}}
</query>

<response_1>
{{response_1}}
</response_1>

<response_2>
{{response_2}}
</response_2>)";

constexpr const char* kScoresSystem = R"(You compare two responses criterion by criterion.
For every criterion give an integer score from -2 to 2:
 2 response_1 is clearly better, 1 slightly better, 0 equal,
-1 response_2 is slightly better, -2 response_2 is clearly better.
Score every criterion exactly once.

Reply with exactly one fenced block:
```openrs-scores
[{"id": "c1", "score": 0, "rationale": "<one sentence>"}]
```)";

constexpr const char* kScoresUser = R"(<criteria>
{{criteria}}
</criteria>

<query>
{{query}}
</query>

<response_1>
{{response_1}}
</response_1>

<response_2>
{{response_2}}
</response_2>)";

constexpr const char* kPointwiseRubricSystem = R"(You instantiate a focused evaluation rubric for a single response.
Select and adapt the principles of the meta rubric that matter for this query,
each with a positive weight.

Reply with exactly one fenced block:
```openrs-rubric
[{"id": "c1", "text": "<criterion>", "weight": 2}]
```)";

constexpr const char* kPointwiseUser = R"(<meta_rubric>
{{meta_rubric}}
</meta_rubric>

<query>
{{query}}
</query>

<response>
{{response}}
</response>)";

constexpr const char* kGradesSystem = R"(You grade one response against each criterion.
Give an integer grade from 0 (fails entirely) to 4 (fully satisfies).
Grade every criterion exactly once.

Reply with exactly one fenced block:
```openrs-grades
[{"id": "c1", "grade": 4, "rationale": "<one sentence>"}]
```)";

constexpr const char* kGradesUser = R"(<criteria>
{{criteria}}
</criteria>

<query>
{{query}}
</query>

<response>
{{response}}
</response>)";

constexpr const char* kEditsSystem = R"(You improve an evaluation rubric used by an LLM judge.
You see only the rubric and aggregate feedback on past versions.
Propose between 1 and {{max_edits}} edits. Allowed operations:
ADD a new criterion, DELETE an existing criterion by id, MODIFY the text
and/or weight of an existing criterion by id.

Reply with exactly one fenced block:
```openrs-edits
[{"op": "ADD", "criterion": {"id": "new-id", "text": "...", "weight": 1}},
 {"op": "DELETE", "id": "old-id"},
 {"op": "MODIFY", "id": "some-id", "new_text": "...", "new_weight": 2}]
```)";

constexpr const char* kEditsUser = R"(<meta_rubric>
{{meta_rubric}}
</meta_rubric>

<feedback>
{{feedback}}
</feedback>)";

constexpr const char* kSummarySystem = R"(You summarize a cluster of evaluation failures of a rubric-based judge.
Name the systematic failure mode in one or two sentences and suggest an
abstract, reusable principle that would fix it. Plain text only.)";

constexpr const char* kSummaryUser = R"(<cluster>
{{cluster}}
</cluster>)";

constexpr const char* kReask = R"(

Your previous reply could not be used: {{error}}
Reply again following the required block format exactly.)";

void override_from(const json& j, const char* key, PromptTemplate& t) {
  if (!j.contains(key)) return;
  const auto& o = j.at(key);
  if (o.contains("system")) t.system = o.at("system").get<std::string>();
  if (o.contains("user")) t.user = o.at("user").get<std::string>();
}

}  // namespace

PromptTemplates PromptTemplates::defaults() {
  PromptTemplates t;
  t.diff = {kDiffSystem, kPairUser};
  t.rubric = {kRubricSystem, kRubricUser};
  t.rubric_no_diff = {kRubricNoDiffSystem, kRubricNoDiffUser};
  t.fused = {kFusedSystem, kFusedUser};
  t.scores = {kScoresSystem, kScoresUser};
  t.pointwise_rubric = {kPointwiseRubricSystem, kPointwiseUser};
  t.grades = {kGradesSystem, kGradesUser};
  t.edits = {kEditsSystem, kEditsUser};
  t.summary = {kSummarySystem, kSummaryUser};
  t.reask = kReask;
  return t;
}

PromptTemplates PromptTemplates::from_json(const json& j) {
  auto t = defaults();
  override_from(j, "diff", t.diff);
  override_from(j, "rubric", t.rubric);
  override_from(j, "rubric_no_diff", t.rubric_no_diff);
  override_from(j, "fused", t.fused);
  override_from(j, "scores", t.scores);
  override_from(j, "pointwise_rubric", t.pointwise_rubric);
  override_from(j, "grades", t.grades);
  override_from(j, "edits", t.edits);
  override_from(j, "summary", t.summary);
  if (j.contains("reask")) t.reask = j.at("reask").get<std::string>();
  return t;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& path) {
  try {
    return from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, "prompt templates " + path.string() + ": " + e.what());
  }
}

json PromptTemplates::to_json() const {
  auto pt = [](const PromptTemplate& p) { return json{{"system", p.system}, {"user", p.user}}; };
  return json{{"diff", pt(diff)},         {"rubric", pt(rubric)},
              {"rubric_no_diff", pt(rubric_no_diff)}, {"fused", pt(fused)},
              {"scores", pt(scores)},     {"pointwise_rubric", pt(pointwise_rubric)},
              {"grades", pt(grades)},     {"edits", pt(edits)},
              {"summary", pt(summary)},   {"reask", reask}};
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    const auto open = tmpl.find("{{", i);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(i));
      break;
    }
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) {
      out.append(tmpl.substr(i));
      break;
    }
    out.append(tmpl.substr(i, open - i));
    const std::string name(tmpl.substr(open + 2, close - open - 2));
    if (auto it = vars.find(name); it != vars.end()) {
      out.append(it->second);
    } else {
      out.append(tmpl.substr(open, close + 2 - open));
    }
    i = close + 2;
  }
  return out;
}

std::optional<std::string> extract_block(std::string_view reply, std::string_view tag) {
  const std::string fence = "```" + std::string(tag);
  std::size_t pos = 0;
  while ((pos = reply.find(fence, pos)) != std::string_view::npos) {
    const auto eol = reply.find('\n', pos);
    if (eol == std::string_view::npos) return std::nullopt;
    auto info = reply.substr(pos + 3, eol - pos - 3);
    while (!info.empty() && (info.back() == ' ' || info.back() == '\r')) info.remove_suffix(1);
    if (info != tag) {
      pos = eol;
      continue;
    }
    const auto end = reply.find("```", eol + 1);
    if (end == std::string_view::npos) return std::nullopt;
    auto body = reply.substr(eol + 1, end - eol - 1);
    if (!body.empty() && body.back() == '\n') body.remove_suffix(1);
    if (!body.empty() && body.back() == '\r') body.remove_suffix(1);
    return std::string(body);
  }
  return std::nullopt;
}

std::optional<std::string> extract_section(std::string_view text, std::string_view name) {
  const std::string open = "<" + std::string(name) + ">\n";
  const std::string close = "\n</" + std::string(name) + ">";
  const auto b = text.find(open);
  if (b == std::string_view::npos) return std::nullopt;
  const auto start = b + open.size();
  const auto e = text.find(close, start);
  if (e == std::string_view::npos) return std::nullopt;
  return std::string(text.substr(start, e - start));
}

std::string fenced(std::string_view tag, std::string_view body) {
  std::string out = "```";
  out.append(tag);
  out.push_back('\n');
  out.append(body);
  out.append("\n```");
  return out;
}

}  // namespace openrs
