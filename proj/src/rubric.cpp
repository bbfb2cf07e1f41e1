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

#include "openrs/rubric.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "openrs/error.hpp"
#include "openrs/util.hpp"

namespace openrs {

using nlohmann::json;

const Criterion* MetaRubric::find(const std::string& criterion_id) const {
  auto it = std::find_if(criteria.begin(), criteria.end(),
                         [&](const Criterion& c) { return c.id == criterion_id; });
  return it == criteria.end() ? nullptr : &*it;
}

std::string_view to_string(RubricKind kind) {
  return kind == RubricKind::kGeneral ? "general" : "domain";
}

void validate_criterion(const Criterion& c) {
  if (c.id.empty()) throw Error(ErrorCode::kInvalidCriterion, "criterion id is empty");
  if (c.text.empty()) throw Error(ErrorCode::kInvalidCriterion, "criterion '" + c.id + "' has empty text");
  if (c.weight <= 0) {
    throw Error(ErrorCode::kInvalidCriterion,
                "criterion '" + c.id + "' weight must be positive, got " + format_rational(c.weight));
  }
}

void validate_rubric(const MetaRubric& rubric) {
  if (rubric.id.empty()) throw Error(ErrorCode::kInvalidCriterion, "rubric id is empty");
  if (rubric.kind == RubricKind::kGeneral && rubric.parent_id) {
    throw Error(ErrorCode::kParentMismatch, "general rubric '" + rubric.id + "' must not have a parent");
  }
  if (rubric.kind == RubricKind::kDomain && (!rubric.parent_id || rubric.parent_id->empty())) {
    throw Error(ErrorCode::kParentMismatch, "domain rubric '" + rubric.id + "' needs a parent");
  }
  std::unordered_set<std::string> seen;
  for (const auto& c : rubric.criteria) {
    validate_criterion(c);
    if (!seen.insert(c.id).second) {
      throw Error(ErrorCode::kDuplicateCriterionId, "duplicate criterion id '" + c.id + "'");
    }
  }
}

MetaRubric apply_edits(const MetaRubric& rubric, const EditSequence& seq, const EditContext& ctx) {
  MetaRubric out = rubric;
  if (seq.empty()) return out;

  auto locate = [&](const std::string& id) {
    auto it = std::find_if(out.criteria.begin(), out.criteria.end(),
                           [&](const Criterion& c) { return c.id == id; });
    if (it == out.criteria.end()) {
      throw Error(ErrorCode::kUnknownCriterionId, "no live criterion '" + id + "'");
    }
    return it;
  };

  for (std::size_t step = 0; step < seq.size(); ++step) {
    std::visit(
        [&](const auto& edit) {
          using T = std::decay_t<decltype(edit)>;
          if constexpr (std::is_same_v<T, AddEdit>) {
            validate_criterion(edit.criterion);
            if (out.find(edit.criterion.id)) {
              throw Error(ErrorCode::kDuplicateCriterionId,
                          "ADD of live criterion '" + edit.criterion.id + "'");
            }
            out.criteria.push_back(edit.criterion);
          } else if constexpr (std::is_same_v<T, DeleteEdit>) {
            out.criteria.erase(locate(edit.id));
          } else {
            if (!edit.new_text && !edit.new_weight) {
              throw Error(ErrorCode::kEmptyModify, "MODIFY of '" + edit.id + "' changes nothing");
            }
            auto it = locate(edit.id);
            Criterion changed = *it;
            if (edit.new_text) changed.text = *edit.new_text;
            if (edit.new_weight) changed.weight = *edit.new_weight;
            validate_criterion(changed);
            *it = std::move(changed);
          }
        },
        seq[step]);
  }

  out.version = rubric.version + 1;
  out.changelog.push_back({out.version, digest_edits(seq), ctx.timestamp, ctx.author});
  return out;
}

MetaRubric merge_hierarchy(const MetaRubric& general, const MetaRubric& domain) {
  if (general.kind != RubricKind::kGeneral || !domain.parent_id || *domain.parent_id != general.id) {
    throw Error(ErrorCode::kParentMismatch,
                "domain '" + domain.id + "' does not extend general '" + general.id + "'");
  }
  MetaRubric out;
  out.id = domain.id;
  out.version = domain.version;
  out.kind = RubricKind::kDomain;
  out.parent_id = general.id;
  out.changelog = domain.changelog;
  out.criteria = general.criteria;

  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < out.criteria.size(); ++i) position.emplace(out.criteria[i].id, i);
  for (const auto& c : domain.criteria) {
    if (auto it = position.find(c.id); it != position.end()) {
      out.criteria[it->second] = c;
    } else {
      out.criteria.push_back(c);
    }
  }
  return out;
}

EditSequence diff_rubrics(const MetaRubric& a, const MetaRubric& b) {
  std::unordered_map<std::string, std::size_t> pos_in_a;
  for (std::size_t i = 0; i < a.criteria.size(); ++i) pos_in_a.emplace(a.criteria[i].id, i);

  // Longest prefix of b that can be reached from a by MODIFY/DELETE alone:
  // ids present in a, in a's relative order, differing only in text/weight.
  std::unordered_set<std::string> kept;
  std::size_t prefix = 0;
  std::size_t last_pos = 0;
  for (; prefix < b.criteria.size(); ++prefix) {
    const auto& cb = b.criteria[prefix];
    auto it = pos_in_a.find(cb.id);
    if (it == pos_in_a.end()) break;
    if (prefix > 0 && it->second <= last_pos) break;
    const auto& ca = a.criteria[it->second];
    if (ca.non_negotiable != cb.non_negotiable || ca.tags != cb.tags) break;
    last_pos = it->second;
    kept.insert(cb.id);
  }

  std::unordered_map<std::string, const Criterion*> in_b;
  for (const auto& c : b.criteria) in_b.emplace(c.id, &c);

  EditSequence seq;
  for (const auto& ca : a.criteria) {
    if (!kept.count(ca.id)) {
      seq.emplace_back(DeleteEdit{ca.id});
      continue;
    }
    const Criterion& cb = *in_b.at(ca.id);
    ModifyEdit mod{ca.id, std::nullopt, std::nullopt};
    if (ca.text != cb.text) mod.new_text = cb.text;
    if (ca.weight != cb.weight) mod.new_weight = cb.weight;
    if (mod.new_text || mod.new_weight) seq.emplace_back(std::move(mod));
  }
  for (std::size_t i = prefix; i < b.criteria.size(); ++i) seq.emplace_back(AddEdit{b.criteria[i]});
  return seq;
}

std::string render_rubric_context(const MetaRubric& rubric) {
  std::ostringstream os;
  os << "Meta rubric: " << rubric.id << " (version " << rubric.version << ", " << to_string(rubric.kind)
     << ")\n";
  int n = 0;
  for (const auto& c : rubric.criteria) {
    os << ++n << ". [weight " << format_rational(c.weight) << "]";
    if (c.non_negotiable) os << " [NON-NEGOTIABLE]";
    os << " " << c.text << "\n";
  }
  return os.str();
}

std::string digest_edits(const EditSequence& seq) { return sha256_hex(to_json(seq).dump()); }

json to_json(const Criterion& c) {
  return json{{"id", c.id},
              {"text", c.text},
              {"weight", rational_to_json(c.weight)},
              {"non_negotiable", c.non_negotiable},
              {"tags", c.tags}};
}

Criterion criterion_from_json(const json& j) {
  Criterion c;
  c.id = j.at("id").get<std::string>();
  c.text = j.at("text").get<std::string>();
  if (j.contains("weight")) c.weight = rational_from_json(j.at("weight"));
  c.non_negotiable = j.value("non_negotiable", false);
  if (j.contains("tags")) c.tags = j.at("tags").get<std::vector<std::string>>();
  return c;
}

json to_json(const MetaRubric& r) {
  json criteria = json::array();
  for (const auto& c : r.criteria) criteria.push_back(to_json(c));
  json changelog = json::array();
  for (const auto& e : r.changelog) {
    changelog.push_back(
        {{"version", e.version}, {"edits_digest", e.edits_digest}, {"timestamp", e.timestamp}, {"author", e.author}});
  }
  return json{{"id", r.id},
              {"version", r.version},
              {"kind", std::string(to_string(r.kind))},
              {"parent_id", r.parent_id ? json(*r.parent_id) : json(nullptr)},
              {"criteria", std::move(criteria)},
              {"changelog", std::move(changelog)}};
}

MetaRubric rubric_from_json(const json& j) {
  MetaRubric r;
  r.id = j.at("id").get<std::string>();
  r.version = j.value("version", std::uint64_t{0});
  const auto kind = j.value("kind", std::string("general"));
  if (kind == "general") {
    r.kind = RubricKind::kGeneral;
  } else if (kind == "domain") {
    r.kind = RubricKind::kDomain;
  } else {
    throw Error(ErrorCode::kInvalidCriterion, "unknown rubric kind '" + kind + "'");
  }
  if (j.contains("parent_id") && !j.at("parent_id").is_null()) r.parent_id = j.at("parent_id").get<std::string>();
  for (const auto& c : j.value("criteria", json::array())) r.criteria.push_back(criterion_from_json(c));
  for (const auto& e : j.value("changelog", json::array())) {
    r.changelog.push_back({e.at("version").get<std::uint64_t>(), e.value("edits_digest", ""),
                           e.value("timestamp", ""), e.value("author", "")});
  }
  validate_rubric(r);
  return r;
}

json to_json(const EditAction& e) {
  return std::visit(
      [](const auto& edit) -> json {
        using T = std::decay_t<decltype(edit)>;
        if constexpr (std::is_same_v<T, AddEdit>) {
          return {{"op", "ADD"}, {"criterion", to_json(edit.criterion)}};
        } else if constexpr (std::is_same_v<T, DeleteEdit>) {
          return {{"op", "DELETE"}, {"id", edit.id}};
        } else {
          json j{{"op", "MODIFY"}, {"id", edit.id}};
          if (edit.new_text) j["new_text"] = *edit.new_text;
          if (edit.new_weight) j["new_weight"] = rational_to_json(*edit.new_weight);
          return j;
        }
      },
      e);
}

EditAction edit_from_json(const json& j) {
  const auto op = j.at("op").get<std::string>();
  if (op == "ADD") return AddEdit{criterion_from_json(j.at("criterion"))};
  if (op == "DELETE") return DeleteEdit{j.at("id").get<std::string>()};
  if (op == "MODIFY") {
    ModifyEdit m{j.at("id").get<std::string>(), std::nullopt, std::nullopt};
    if (j.contains("new_text") && !j.at("new_text").is_null()) m.new_text = j.at("new_text").get<std::string>();
    if (j.contains("new_weight") && !j.at("new_weight").is_null()) m.new_weight = rational_from_json(j.at("new_weight"));
    if (!m.new_text && !m.new_weight) throw Error(ErrorCode::kEmptyModify, "MODIFY of '" + m.id + "' changes nothing");
    return m;
  }
  throw Error(ErrorCode::kParseFailure, "unknown edit op '" + op + "'");
}

json to_json(const EditSequence& seq) {
  json arr = json::array();
  for (const auto& e : seq) arr.push_back(to_json(e));
  return arr;
}

EditSequence edits_from_json(const json& j) {
  EditSequence seq;
  for (const auto& e : j) seq.push_back(edit_from_json(e));
  return seq;
}

}  // namespace openrs
