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

// Meta rubrics: versioned, hierarchical sets of weighted criteria, and the
// ADD / DELETE / MODIFY edit algebra that the refinement loop and the review
// workflow mutate them through.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "openrs/rational.hpp"

namespace openrs {

struct Criterion {
  std::string id;
  std::string text;
  Rational weight{1};
  bool non_negotiable = false;
  std::vector<std::string> tags;

  friend bool operator==(const Criterion&, const Criterion&) = default;
};

enum class RubricKind { kGeneral, kDomain };

struct ChangelogEntry {
  std::uint64_t version = 0;
  std::string edits_digest;
  std::string timestamp;
  std::string author;

  friend bool operator==(const ChangelogEntry&, const ChangelogEntry&) = default;
};

struct MetaRubric {
  std::string id;
  std::uint64_t version = 0;
  RubricKind kind = RubricKind::kGeneral;
  std::optional<std::string> parent_id;
  std::vector<Criterion> criteria;
  std::vector<ChangelogEntry> changelog;

  const Criterion* find(const std::string& criterion_id) const;

  friend bool operator==(const MetaRubric&, const MetaRubric&) = default;
};

struct AddEdit {
  Criterion criterion;
  friend bool operator==(const AddEdit&, const AddEdit&) = default;
};

struct DeleteEdit {
  std::string id;
  friend bool operator==(const DeleteEdit&, const DeleteEdit&) = default;
};

struct ModifyEdit {
  std::string id;
  std::optional<std::string> new_text;
  std::optional<Rational> new_weight;
  friend bool operator==(const ModifyEdit&, const ModifyEdit&) = default;
};

using EditAction = std::variant<AddEdit, DeleteEdit, ModifyEdit>;
using EditSequence = std::vector<EditAction>;

/// Who and when, recorded in the changelog entry of a successful edit.
struct EditContext {
  std::string author;
  std::string timestamp;
};

/// Throws Error(kInvalidCriterion) when id/text are empty or weight <= 0.
void validate_criterion(const Criterion& c);

/// Structural checks: unique ids, valid criteria, parent present iff domain.
void validate_rubric(const MetaRubric& rubric);

/// Applies `seq` atomically to a copy of `rubric`. ADD appends, DELETE
/// removes, MODIFY replaces text and/or weight. A non-empty sequence bumps
/// the version by one and appends a changelog entry; an empty one returns an
/// unchanged copy.
MetaRubric apply_edits(const MetaRubric& rubric, const EditSequence& seq, const EditContext& ctx = {});

/// Effective rubric: general criteria first, then domain criteria. A domain
/// criterion whose id matches a general one replaces it in place.
MetaRubric merge_hierarchy(const MetaRubric& general, const MetaRubric& domain);

/// An edit sequence taking `a`'s criteria to exactly `b`'s (ids, fields and
/// order). MODIFY/DELETE come first in `a` order, then ADDs in `b` order.
EditSequence diff_rubrics(const MetaRubric& a, const MetaRubric& b);

/// Stable text block embedded into judge prompts.
std::string render_rubric_context(const MetaRubric& rubric);

std::string digest_edits(const EditSequence& seq);

// Serialization. Rubric files and edit payloads share these shapes.
nlohmann::json to_json(const Criterion& c);
Criterion criterion_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MetaRubric& r);
MetaRubric rubric_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EditAction& e);
EditAction edit_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EditSequence& seq);
EditSequence edits_from_json(const nlohmann::json& j);

std::string_view to_string(RubricKind kind);

}  // namespace openrs
