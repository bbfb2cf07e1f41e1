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

#include "openrs/pairwise.hpp"

#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "openrs/util.hpp"

using nlohmann::json;

namespace openrs {
namespace {

json parse_block_json(std::string_view reply, std::string_view tag) {
  auto block = extract_block(reply, tag);
  if (!block) throw Error(ErrorCode::kParseFailure, "reply has no ```" + std::string(tag) + " block");
  try {
    auto j = json::parse(*block);
    if (!j.is_array()) throw Error(ErrorCode::kParseFailure, std::string(tag) + " block is not a list");
    return j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseFailure, std::string(tag) + " block is not valid JSON: " + e.what());
  }
}

// Matches each record of `arr` to a rubric criterion by id; returns the
// records in rubric order.
std::vector<json> align_to_rubric(const json& arr, const AdaptiveRubric& rubric) {
  std::unordered_map<std::string, json> by_id;
  for (const auto& rec : arr) {
    if (!rec.is_object() || !rec.contains("id") || !rec.at("id").is_string()) {
      throw Error(ErrorCode::kParseFailure, "score record without a string id");
    }
    const auto id = rec.at("id").get<std::string>();
    if (!by_id.emplace(id, rec).second) throw Error(ErrorCode::kParseFailure, "criterion '" + id + "' scored twice");
  }
  std::vector<json> ordered;
  for (const auto& c : rubric.criteria) {
    auto it = by_id.find(c.id);
    if (it == by_id.end()) throw Error(ErrorCode::kMissingCriterion, "no score for criterion '" + c.id + "'");
    ordered.push_back(std::move(it->second));
    by_id.erase(it);
  }
  if (!by_id.empty()) {
    throw Error(ErrorCode::kParseFailure, "score for unknown criterion '" + by_id.begin()->first + "'");
  }
  return ordered;
}

int bounded_int(const json& rec, const char* field, int lo, int hi) {
  if (!rec.contains(field) || !rec.at(field).is_number_integer()) {
    throw Error(ErrorCode::kParseFailure, std::string("'") + field + "' must be an integer");
  }
  const auto v = rec.at(field).get<std::int64_t>();
  if (v < lo || v > hi) {
    throw Error(ErrorCode::kParseFailure,
                std::string("'") + field + "' " + std::to_string(v) + " outside " + std::to_string(lo) + ".." +
                    std::to_string(hi));
  }
  return static_cast<int>(v);
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kFirstWins: return "first_wins";
    case Verdict::kSecondWins: return "second_wins";
    case Verdict::kSame: return "same";
  }
  return "same";
}

Verdict verdict_from_string(std::string_view s) {
  if (s == "first_wins") return Verdict::kFirstWins;
  if (s == "second_wins") return Verdict::kSecondWins;
  if (s == "same") return Verdict::kSame;
  throw Error(ErrorCode::kParseFailure, "unknown verdict '" + std::string(s) + "'");
}

Verdict mirror(Verdict v) {
  if (v == Verdict::kFirstWins) return Verdict::kSecondWins;
  if (v == Verdict::kSecondWins) return Verdict::kFirstWins;
  return Verdict::kSame;
}

Conclusion conclude(const Rational& s) {
  if (s > 0) return Conclusion::kFirst;
  if (s < 0) return Conclusion::kSecond;
  return Conclusion::kTie;
}

Verdict resolve_verdict(const Rational& forward, const Rational& reverse) {
  const auto f = conclude(forward);
  // In the reverse pass B was presented first; flip into the A/B frame.
  auto r = conclude(reverse);
  if (r == Conclusion::kFirst) {
    r = Conclusion::kSecond;
  } else if (r == Conclusion::kSecond) {
    r = Conclusion::kFirst;
  }
  if (f != r || f == Conclusion::kTie) return Verdict::kSame;
  return f == Conclusion::kFirst ? Verdict::kFirstWins : Verdict::kSecondWins;
}

PairScore aggregate_scores(const AdaptiveRubric& rubric, std::span<const CriterionVerdict> verdicts) {
  std::unordered_map<std::string, const CriterionVerdict*> by_id;
  for (const auto& v : verdicts) {
    if (v.score < -2 || v.score > 2) {
      throw Error(ErrorCode::kParseFailure, "score " + std::to_string(v.score) + " outside -2..2");
    }
    if (!by_id.emplace(v.criterion_id, &v).second) {
      throw Error(ErrorCode::kParseFailure, "criterion '" + v.criterion_id + "' scored twice");
    }
  }
  if (by_id.size() != rubric.criteria.size()) {
    throw Error(ErrorCode::kMissingCriterion, "verdicts do not cover the rubric exactly");
  }

  PairScore out;
  Rational weighted{0};
  Rational total{0};
  for (const auto& c : rubric.criteria) {
    auto it = by_id.find(c.id);
    if (it == by_id.end()) throw Error(ErrorCode::kMissingCriterion, "no verdict for '" + c.id + "'");
    weighted += c.weight * it->second->score;
    total += c.weight;
    out.verdicts.push_back(*it->second);
  }
  if (total == Rational(0)) throw Error(ErrorCode::kWeightSumZero, "adaptive rubric has zero total weight");
  out.value = weighted / total;
  return out;
}

PairDiff parse_diff_reply(std::string_view reply) {
  const auto arr = parse_block_json(reply, kDiffBlock);
  PairDiff diff;
  for (const auto& item : arr) {
    if (item.is_string()) {
      diff.items.push_back({item.get<std::string>(), ""});
    } else if (item.is_object() && item.contains("text") && item.at("text").is_string()) {
      diff.items.push_back({item.at("text").get<std::string>(), item.value("dimension", std::string())});
    } else {
      throw Error(ErrorCode::kParseFailure, "diff item must be a string or {text, dimension}");
    }
  }
  return diff;
}

std::vector<AdaptiveCriterion> parse_rubric_reply(std::string_view reply) {
  const auto arr = parse_block_json(reply, kRubricBlock);
  std::vector<AdaptiveCriterion> out;
  std::unordered_set<std::string> ids;
  for (const auto& item : arr) {
    if (!item.is_object() || !item.contains("text") || !item.at("text").is_string()) {
      throw Error(ErrorCode::kParseFailure, "rubric criterion needs a text");
    }
    AdaptiveCriterion c;
    c.id = item.contains("id") && item.at("id").is_string() ? item.at("id").get<std::string>()
                                                             : "k" + std::to_string(out.size() + 1);
    c.text = item.at("text").get<std::string>();
    if (c.text.empty()) throw Error(ErrorCode::kParseFailure, "criterion '" + c.id + "' has empty text");
    try {
      c.weight = item.contains("weight") ? rational_from_json(item.at("weight")) : Rational(1);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kParseFailure, "criterion '" + c.id + "' weight: " + e.what());
    }
    if (c.weight <= 0) {
      throw Error(ErrorCode::kParseFailure, "criterion '" + c.id + "' has non-positive weight " + format_rational(c.weight));
    }
    if (!ids.insert(c.id).second) throw Error(ErrorCode::kParseFailure, "duplicate criterion id '" + c.id + "'");
    out.push_back(std::move(c));
  }
  if (out.empty()) throw Error(ErrorCode::kParseFailure, "adaptive rubric has no criteria");
  return out;
}

std::vector<CriterionVerdict> parse_scores_reply(std::string_view reply, const AdaptiveRubric& rubric) {
  const auto arr = parse_block_json(reply, kScoresBlock);
  std::vector<CriterionVerdict> out;
  for (const auto& rec : align_to_rubric(arr, rubric)) {
    out.push_back({rec.at("id").get<std::string>(), bounded_int(rec, "score", -2, 2),
                   rec.value("rationale", std::string())});
  }
  return out;
}

std::vector<int> parse_grades_reply(std::string_view reply, const AdaptiveRubric& rubric) {
  const auto arr = parse_block_json(reply, kGradesBlock);
  std::vector<int> out;
  for (const auto& rec : align_to_rubric(arr, rubric)) out.push_back(bounded_int(rec, "grade", 0, 4));
  return out;
}

std::string render_diff(const PairDiff& diff) {
  if (diff.items.empty()) return "(no differences)";
  std::ostringstream os;
  for (std::size_t i = 0; i < diff.items.size(); ++i) {
    if (i) os << "\n";
    os << "- " << diff.items[i].text;
    if (!diff.items[i].dimension.empty()) os << " [" << diff.items[i].dimension << "]";
  }
  return os.str();
}

std::string render_criteria(const AdaptiveRubric& rubric) {
  std::ostringstream os;
  for (std::size_t i = 0; i < rubric.criteria.size(); ++i) {
    const auto& c = rubric.criteria[i];
    if (i) os << "\n";
    os << "- [" << c.id << "] (weight " << format_rational(c.weight) << ") " << c.text;
  }
  return os.str();
}

PairwiseJudge::PairwiseJudge(JudgeClient& client, PairwiseConfig config)
    : client_(client), config_(std::move(config)) {
  if (config_.reasks < 0) throw Error(ErrorCode::kInvalidConfig, "reasks must be >= 0");
}

JudgePrompt PairwiseJudge::make_prompt(const PromptTemplate& t, const std::map<std::string, std::string>& vars) const {
  JudgePrompt p;
  p.system_text = render_template(t.system, vars);
  p.user_text = render_template(t.user, vars);
  p.temperature = config_.temperature;
  p.max_output_tokens = config_.max_output_tokens;
  p.model = config_.model;
  return p;
}

template <typename Parse>
auto PairwiseJudge::ask(const PromptTemplate& t, const std::map<std::string, std::string>& vars,
                        ErrorCode unavailable, std::vector<std::string>* refs, Parse parse) {
  const auto base = make_prompt(t, vars);
  std::string last_error;
  for (int attempt = 0; attempt <= config_.reasks; ++attempt) {
    auto prompt = base;
    if (attempt > 0) prompt.user_text += render_template(config_.templates.reask, {{"error", last_error}});
    const auto reply = client_.cached_complete(prompt);
    if (refs) refs->push_back(prompt_digest(prompt));
    try {
      return parse(reply.text);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kParseFailure && e.code() != ErrorCode::kMissingCriterion) throw;
      last_error = e.what();
    }
  }
  throw PairwiseError(unavailable, "after " + std::to_string(config_.reasks + 1) + " attempts: " + last_error);
}

PairDiff PairwiseJudge::extract_diff(const std::string& query, const std::string& first, const std::string& second,
                                     std::vector<std::string>* refs) {
  if (first.empty() || second.empty()) throw Error(ErrorCode::kBadRequest, "responses must be non-empty");
  return ask(config_.templates.diff, {{"query", query}, {"response_1", first}, {"response_2", second}},
             ErrorCode::kDiffUnavailable, refs, [](std::string_view r) { return parse_diff_reply(r); });
}

AdaptiveRubric PairwiseJudge::generate_adaptive_rubric(const MetaRubric& meta, const std::string& query,
                                                       const std::string& first, const std::string& second,
                                                       const PairDiff* diff, std::vector<std::string>* refs) {
  std::map<std::string, std::string> vars{{"meta_rubric", render_rubric_context(meta)},
                                          {"query", query},
                                          {"response_1", first},
                                          {"response_2", second}};
  AdaptiveRubric rubric;
  rubric.meta_rubric_id = meta.id;
  rubric.meta_version = meta.version;
  const PromptTemplate* t = &config_.templates.rubric_no_diff;
  if (diff) {
    vars["diff"] = render_diff(*diff);
    rubric.diff_digest = sha256_hex(vars["diff"]);
    t = &config_.templates.rubric;
  }
  rubric.criteria = ask(*t, vars, ErrorCode::kRubricUnavailable, refs,
                        [](std::string_view r) { return parse_rubric_reply(r); });
  return rubric;
}

std::vector<CriterionVerdict> PairwiseJudge::score_criteria(const AdaptiveRubric& rubric, const std::string& query,
                                                            const std::string& first, const std::string& second,
                                                            std::vector<std::string>* refs) {
  if (rubric.criteria.empty()) throw Error(ErrorCode::kBadRequest, "adaptive rubric has no criteria");
  return ask(config_.templates.scores,
             {{"criteria", render_criteria(rubric)}, {"query", query}, {"response_1", first}, {"response_2", second}},
             ErrorCode::kScoreUnavailable, refs,
             [&](std::string_view r) { return parse_scores_reply(r, rubric); });
}

PassResult PairwiseJudge::run_pass(const std::string& query, const std::string& first, const std::string& second,
                                   const MetaRubric& meta) {
  PassResult pass;
  if (config_.fused) {
    struct Fused {
      PairDiff diff;
      std::vector<AdaptiveCriterion> criteria;
    };
    auto fused = ask(config_.templates.fused,
                     {{"meta_rubric", render_rubric_context(meta)},
                      {"query", query},
                      {"response_1", first},
                      {"response_2", second}},
                     ErrorCode::kRubricUnavailable, &pass.transcript_refs,
                     [](std::string_view r) { return Fused{parse_diff_reply(r), parse_rubric_reply(r)}; });
    pass.diff = std::move(fused.diff);
    pass.rubric.criteria = std::move(fused.criteria);
    pass.rubric.meta_rubric_id = meta.id;
    pass.rubric.meta_version = meta.version;
    pass.rubric.diff_digest = sha256_hex(render_diff(pass.diff));
  } else if (config_.use_diff) {
    pass.diff = extract_diff(query, first, second, &pass.transcript_refs);
    pass.rubric = generate_adaptive_rubric(meta, query, first, second, &pass.diff, &pass.transcript_refs);
  } else {
    pass.rubric = generate_adaptive_rubric(meta, query, first, second, nullptr, &pass.transcript_refs);
  }
  const auto verdicts = score_criteria(pass.rubric, query, first, second, &pass.transcript_refs);
  pass.score = aggregate_scores(pass.rubric, verdicts);
  return pass;
}

PairJudgment PairwiseJudge::judge_pair(const std::string& query, const std::string& a, const std::string& b,
                                       const MetaRubric& meta) {
  auto tagged = [&](const char* direction, const std::string& first, const std::string& second) {
    try {
      return run_pass(query, first, second, meta);
    } catch (const PairwiseError& e) {
      throw PairwiseError(e.code(), e.what(), direction);
    } catch (const JudgeError& e) {
      throw PairwiseError(e.code(), e.what(), direction);
    }
  };
  PairJudgment j;
  j.forward = tagged("forward", a, b);
  j.reverse = tagged("reverse", b, a);
  j.verdict = resolve_verdict(j.forward.score.value, j.reverse.score.value);
  return j;
}

Rational PairwiseJudge::score_pointwise(const MetaRubric& meta, const std::string& query, const std::string& response,
                                        std::vector<std::string>* refs) {
  const std::map<std::string, std::string> base{
      {"meta_rubric", render_rubric_context(meta)}, {"query", query}, {"response", response}};
  AdaptiveRubric rubric;
  rubric.meta_rubric_id = meta.id;
  rubric.meta_version = meta.version;
  rubric.criteria = ask(config_.templates.pointwise_rubric, base, ErrorCode::kScoreUnavailable, refs,
                        [](std::string_view r) { return parse_rubric_reply(r); });
  auto vars = base;
  vars["criteria"] = render_criteria(rubric);
  const auto grades = ask(config_.templates.grades, vars, ErrorCode::kScoreUnavailable, refs,
                          [&](std::string_view r) { return parse_grades_reply(r, rubric); });
  Rational weighted{0};
  Rational total{0};
  for (std::size_t k = 0; k < grades.size(); ++k) {
    weighted += rubric.criteria[k].weight * grades[k];
    total += rubric.criteria[k].weight;
  }
  return weighted / (total * 4);
}

std::string PairwiseJudge::config_digest(const MetaRubric& meta) const {
  const json j{{"templates", config_.templates.to_json()},
               {"use_diff", config_.use_diff},
               {"fused", config_.fused},
               {"reasks", config_.reasks},
               {"temperature", config_.temperature},
               {"max_output_tokens", config_.max_output_tokens},
               {"model", config_.model},
               {"meta_rubric", render_rubric_context(meta)}};
  return sha256_hex(j.dump());
}

json to_json(const PairDiff& d) {
  json arr = json::array();
  for (const auto& i : d.items) arr.push_back({{"text", i.text}, {"dimension", i.dimension}});
  return arr;
}

json to_json(const AdaptiveRubric& r) {
  json criteria = json::array();
  for (const auto& c : r.criteria) {
    criteria.push_back({{"id", c.id}, {"text", c.text}, {"weight", rational_to_json(c.weight)}});
  }
  return json{{"criteria", criteria},
              {"meta_rubric_id", r.meta_rubric_id},
              {"meta_version", r.meta_version},
              {"diff_digest", r.diff_digest}};
}

json to_json(const PairScore& s) {
  json verdicts = json::array();
  for (const auto& v : s.verdicts) {
    verdicts.push_back({{"criterion_id", v.criterion_id}, {"score", v.score}, {"rationale", v.rationale}});
  }
  return json{{"value", rational_to_json(s.value)}, {"value_decimal", to_double(s.value)}, {"verdicts", verdicts}};
}

json to_json(const PassResult& p) {
  return json{{"diff", to_json(p.diff)},
              {"rubric", to_json(p.rubric)},
              {"score", to_json(p.score)},
              {"transcript_refs", p.transcript_refs}};
}

json to_json(const PairJudgment& j) {
  return json{{"verdict", std::string(to_string(j.verdict))},
              {"forward", to_json(j.forward)},
              {"reverse", to_json(j.reverse)}};
}

}  // namespace openrs
