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

#include "openrs/verifiable.hpp"

#include <cctype>

#include "openrs/error.hpp"

namespace openrs {
namespace {

using nlohmann::json;

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

VerifierKind kind_from_string(const std::string& s) {
  static const std::pair<const char*, VerifierKind> kKinds[] = {
      {"word_count_range", VerifierKind::kWordCountRange},
      {"char_length_range", VerifierKind::kCharLengthRange},
      {"pattern_match", VerifierKind::kPatternMatch},
      {"must_include", VerifierKind::kMustInclude},
      {"must_exclude", VerifierKind::kMustExclude},
      {"structured_wellformed", VerifierKind::kStructuredWellformed},
      {"exact_match", VerifierKind::kExactMatch},
  };
  for (const auto& [name, kind] : kKinds) {
    if (s == name) return kind;
  }
  throw Error(ErrorCode::kUnknownKind, "unknown verifier kind '" + s + "'");
}

bool is_range(VerifierKind k) { return k == VerifierKind::kWordCountRange || k == VerifierKind::kCharLengthRange; }

std::string bounds_text(const VerifierSpec& s) {
  return "[" + (s.min ? std::to_string(*s.min) : std::string("-")) + ", " +
         (s.max ? std::to_string(*s.max) : std::string("-")) + "]";
}

VerifierOutcome outcome(const VerifierSpec& spec, bool ok, std::string detail) {
  return {spec.id, ok ? 1 : -1, std::move(detail)};
}

}  // namespace

std::string_view to_string(VerifierKind kind) {
  switch (kind) {
    case VerifierKind::kWordCountRange: return "word_count_range";
    case VerifierKind::kCharLengthRange: return "char_length_range";
    case VerifierKind::kPatternMatch: return "pattern_match";
    case VerifierKind::kMustInclude: return "must_include";
    case VerifierKind::kMustExclude: return "must_exclude";
    case VerifierKind::kStructuredWellformed: return "structured_wellformed";
    case VerifierKind::kExactMatch: return "exact_match";
  }
  return "unknown";
}

std::string_view to_string(VerifierRole role) { return role == VerifierRole::kGate ? "gate" : "reward"; }

std::string_view to_string(Normalizer n) { return n == Normalizer::kTrimCasefold ? "trim_casefold" : "identity"; }

std::size_t count_words(std::string_view text) {
  text = trim(text);
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

std::size_t count_chars(std::string_view text) {
  std::size_t n = 0;
  for (unsigned char c : text) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::string normalize(std::string_view text, Normalizer n) {
  if (n == Normalizer::kIdentity) return std::string(text);
  std::string out(trim(text));
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

void validate_spec(VerifierSpec& spec) {
  if (is_range(spec.kind)) {
    if (!spec.min && !spec.max) throw Error(ErrorCode::kInvalidBounds, spec.id + ": range needs min or max");
    if ((spec.min && *spec.min < 0) || (spec.max && *spec.max < 0)) {
      throw Error(ErrorCode::kInvalidBounds, spec.id + ": negative bound");
    }
    if (spec.min && spec.max && *spec.min > *spec.max) {
      throw Error(ErrorCode::kInvalidBounds, spec.id + ": min > max " + bounds_text(spec));
    }
  }
  switch (spec.kind) {
    case VerifierKind::kPatternMatch:
      try {
        spec.compiled = std::make_shared<const std::regex>(spec.pattern, std::regex::ECMAScript);
      } catch (const std::regex_error& e) {
        throw Error(ErrorCode::kPatternSyntax, spec.id + ": " + e.what());
      }
      break;
    case VerifierKind::kMustInclude:
    case VerifierKind::kMustExclude:
      if (spec.literals.empty()) throw Error(ErrorCode::kInvalidSpec, spec.id + ": literals required");
      break;
    case VerifierKind::kExactMatch:
      if (spec.reference.empty()) throw Error(ErrorCode::kInvalidSpec, spec.id + ": reference required");
      break;
    default:
      break;
  }
}

VerifierOutcome run_verifier(const VerifierSpec& spec, std::string_view response) {
  switch (spec.kind) {
    case VerifierKind::kWordCountRange:
    case VerifierKind::kCharLengthRange: {
      const auto n = static_cast<std::int64_t>(spec.kind == VerifierKind::kWordCountRange ? count_words(response)
                                                                                          : count_chars(response));
      const bool ok = (!spec.min || n >= *spec.min) && (!spec.max || n <= *spec.max);
      return outcome(spec, ok, std::to_string(n) + (ok ? " within " : " outside ") + bounds_text(spec));
    }
    case VerifierKind::kPatternMatch: {
      const auto re = spec.compiled ? spec.compiled : std::make_shared<const std::regex>(spec.pattern);
      const std::string text(response);
      const bool ok = std::regex_search(text, *re);
      return outcome(spec, ok, ok ? "pattern found" : "pattern not found");
    }
    case VerifierKind::kMustInclude: {
      for (const auto& lit : spec.literals) {
        if (response.find(lit) == std::string_view::npos) return outcome(spec, false, "missing '" + lit + "'");
      }
      return outcome(spec, true, "all literals present");
    }
    case VerifierKind::kMustExclude: {
      for (const auto& lit : spec.literals) {
        if (response.find(lit) != std::string_view::npos) return outcome(spec, false, "contains '" + lit + "'");
      }
      return outcome(spec, true, "no excluded literal present");
    }
    case VerifierKind::kStructuredWellformed: {
      const auto body = trim(response);
      const bool container = !body.empty() && (body.front() == '{' || body.front() == '[');
      const bool ok = container && json::accept(body);
      return outcome(spec, ok, ok ? "well-formed" : "not a well-formed data object");
    }
    case VerifierKind::kExactMatch: {
      const bool ok = normalize(response, spec.normalizer) == normalize(spec.reference, spec.normalizer);
      return outcome(spec, ok, ok ? "matches reference" : "differs from reference");
    }
  }
  return outcome(spec, false, "unknown kind");
}

VerifierRun run_all(const VerifiableRubric& rubric, std::string_view response) {
  VerifierRun run;
  run.outcomes.reserve(rubric.specs.size());
  for (const auto& spec : rubric.specs) {
    run.outcomes.push_back(run_verifier(spec, response));
    if (spec.role == VerifierRole::kReward) run.sum += run.outcomes.back().value;
  }
  return run;
}

GateResult gate(const VerifiableRubric& rubric, std::string_view response) {
  GateResult result;
  for (const auto& spec : rubric.specs) {
    if (spec.role != VerifierRole::kGate) continue;
    if (run_verifier(spec, response).value != 1) {
      result.pass = false;
      result.failed.push_back(spec.id);
    }
  }
  return result;
}

VerifiableRubric parse_verifier_config(const json& record) {
  const json* list = &record;
  if (record.is_object()) {
    if (!record.contains("verifiers")) return {};
    list = &record.at("verifiers");
  }
  if (list->is_null()) return {};
  if (!list->is_array()) throw Error(ErrorCode::kInvalidSpec, "verifiers must be an array");

  VerifiableRubric rubric;
  for (std::size_t i = 0; i < list->size(); ++i) {
    const auto& j = (*list)[i];
    if (!j.is_object() || !j.contains("kind")) throw Error(ErrorCode::kInvalidSpec, "verifier " + std::to_string(i) + " needs a kind");
    VerifierSpec s;
    const auto kind = j.at("kind").get<std::string>();
    s.kind = kind_from_string(kind);
    s.id = j.value("id", kind + "#" + std::to_string(i));
    const auto role = j.value("role", std::string("reward"));
    if (role == "gate") {
      s.role = VerifierRole::kGate;
    } else if (role != "reward") {
      throw Error(ErrorCode::kInvalidSpec, s.id + ": unknown role '" + role + "'");
    }
    try {
      if (j.contains("min")) s.min = j.at("min").get<std::int64_t>();
      if (j.contains("max")) s.max = j.at("max").get<std::int64_t>();
      s.pattern = j.value("pattern", std::string());
      if (j.contains("literals")) s.literals = j.at("literals").get<std::vector<std::string>>();
      s.reference = j.value("reference", std::string());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kInvalidSpec, s.id + ": " + e.what());
    }
    const auto norm = j.value("normalizer", std::string("identity"));
    if (norm == "trim_casefold") {
      s.normalizer = Normalizer::kTrimCasefold;
    } else if (norm != "identity") {
      throw Error(ErrorCode::kInvalidSpec, s.id + ": unknown normalizer '" + norm + "'");
    }
    for (const auto& prev : rubric.specs) {
      if (prev.id == s.id) throw Error(ErrorCode::kInvalidSpec, "duplicate verifier id '" + s.id + "'");
    }
    validate_spec(s);
    rubric.specs.push_back(std::move(s));
  }
  return rubric;
}

json to_json(const VerifierSpec& spec) {
  json j = {{"id", spec.id}, {"kind", to_string(spec.kind)}, {"role", to_string(spec.role)}};
  if (spec.min) j["min"] = *spec.min;
  if (spec.max) j["max"] = *spec.max;
  if (spec.kind == VerifierKind::kPatternMatch) j["pattern"] = spec.pattern;
  if (!spec.literals.empty()) j["literals"] = spec.literals;
  if (spec.kind == VerifierKind::kExactMatch) {
    j["reference"] = spec.reference;
    j["normalizer"] = to_string(spec.normalizer);
  }
  return j;
}

json to_json(const VerifiableRubric& rubric) {
  json arr = json::array();
  for (const auto& s : rubric.specs) arr.push_back(to_json(s));
  return arr;
}

json to_json(const VerifierOutcome& o) { return {{"spec_id", o.spec_id}, {"value", o.value}, {"detail", o.detail}}; }

}  // namespace openrs
