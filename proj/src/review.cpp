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

#include "openrs/review.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "openrs/error.hpp"
#include "openrs/util.hpp"

namespace openrs {
namespace {

using nlohmann::json;

ReviewState target_of(Decision d) {
  switch (d) {
    case Decision::kApprove: return ReviewState::kApproved;
    case Decision::kReject: return ReviewState::kRejected;
    case Decision::kMerge: return ReviewState::kMerged;
  }
  return ReviewState::kPending;
}

[[noreturn]] void illegal(const ProposedDomainEdit& e, Decision d) {
  throw Error(ErrorCode::kIllegalTransition, "cannot " + std::string(to_string(d)) + " edit " + e.id + " in state " +
                                                 std::string(to_string(e.state)));
}

}  // namespace

std::string_view to_string(Confusion c) {
  switch (c) {
    case Confusion::kWrongWinner: return "wrong_winner";
    case Confusion::kSpuriousSame: return "spurious_same";
    case Confusion::kMissedSame: return "missed_same";
  }
  return "unknown";
}

std::optional<Confusion> classify(Verdict system, Verdict label) {
  if (system == label) return std::nullopt;
  if (system == Verdict::kSame) return Confusion::kSpuriousSame;
  if (label == Verdict::kSame) return Confusion::kMissedSame;
  return Confusion::kWrongWinner;
}

std::vector<FailureCluster> analyze_domain_failures(const EvalReport& report,
                                                    const std::map<std::string, Verdict>& labels,
                                                    const Dataset* dataset) {
  std::map<std::string, const BenchRecord*> texts;
  if (dataset) {
    for (const auto& r : dataset->records) texts[r.id] = &r;
  }
  std::set<std::string> seen;
  std::map<std::pair<std::string, Confusion>, FailureCluster> clusters;
  for (const auto& o : report.records) {
    seen.insert(o.id);
    if (o.status != RecordStatus::kScored) continue;
    const auto label = labels.find(o.id);
    if (label == labels.end()) throw Error(ErrorCode::kAlignmentMismatch, "no human label for record " + o.id);
    const bool multi = o.comparisons.size() > 1;
    for (const auto& c : o.comparisons) {
      const auto kind = classify(c.verdict, label->second);
      if (!kind) continue;
      FailureCase fc;
      fc.id = multi ? o.id + "#" + std::to_string(c.chosen_index) + "x" + std::to_string(c.rejected_index) : o.id;
      fc.record_id = o.id;
      fc.category = o.category;
      fc.system = c.verdict;
      fc.label = label->second;
      fc.confusion = *kind;
      fc.transcript_refs = c.transcript_refs;
      if (auto it = texts.find(o.id); it != texts.end()) {
        fc.query = it->second->query;
        if (c.chosen_index < it->second->chosen.size()) fc.response_a = it->second->chosen[c.chosen_index];
        if (c.rejected_index < it->second->rejected.size()) fc.response_b = it->second->rejected[c.rejected_index];
      }
      auto& cluster = clusters[{o.category, *kind}];
      cluster.category = o.category;
      cluster.confusion = *kind;
      cluster.cases.push_back(std::move(fc));
    }
  }
  for (const auto& [id, _] : labels) {
    if (!seen.count(id)) throw Error(ErrorCode::kAlignmentMismatch, "label for unknown record " + id);
  }
  std::vector<FailureCluster> out;
  for (auto& [_, c] : clusters) out.push_back(std::move(c));
  return out;
}

void summarize_clusters(JudgeClient& client, const PromptTemplates& templates, std::vector<FailureCluster>& clusters,
                        const std::string& model) {
  for (auto& cluster : clusters) {
    std::ostringstream body;
    body << "Category: " << cluster.category << "\nConfusion: " << to_string(cluster.confusion) << "\n";
    for (const auto& c : cluster.cases) {
      body << "\n[" << c.id << "] system=" << to_string(c.system) << " label=" << to_string(c.label)
           << "\nQuery: " << c.query << "\nResponse A: " << c.response_a << "\nResponse B: " << c.response_b << "\n";
    }
    const std::map<std::string, std::string> vars = {{"cluster", body.str()}};
    JudgePrompt p;
    p.system_text = render_template(templates.summary.system, vars);
    p.user_text = render_template(templates.summary.user, vars);
    p.model = model;
    cluster.summary = client.cached_complete(p).text;
  }
}

std::string_view to_string(ReviewState s) {
  switch (s) {
    case ReviewState::kPending: return "pending";
    case ReviewState::kApproved: return "approved";
    case ReviewState::kRejected: return "rejected";
    case ReviewState::kMerged: return "merged";
  }
  return "unknown";
}

std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::kApprove: return "approve";
    case Decision::kReject: return "reject";
    case Decision::kMerge: return "merge";
  }
  return "unknown";
}

ReviewState review_state_from_string(std::string_view s) {
  for (auto st : {ReviewState::kPending, ReviewState::kApproved, ReviewState::kRejected, ReviewState::kMerged}) {
    if (to_string(st) == s) return st;
  }
  throw Error(ErrorCode::kBadRequest, "unknown review state '" + std::string(s) + "'");
}

Decision decision_from_string(std::string_view s) {
  for (auto d : {Decision::kApprove, Decision::kReject, Decision::kMerge}) {
    if (to_string(d) == s) return d;
  }
  throw Error(ErrorCode::kBadRequest, "unknown decision '" + std::string(s) + "'");
}

MetaRubric effective_rubric(const RubricStore& store, const MetaRubric& rubric) {
  if (rubric.kind == RubricKind::kGeneral) return rubric;
  return merge_hierarchy(store.latest(*rubric.parent_id), rubric);
}

ProposedDomainEdit review_edit(ProposedDomainEdit edit, Decision decision, const std::string& reviewer,
                               RubricStore& store, Oracle& holdout) {
  switch (decision) {
    case Decision::kApprove: {
      if (edit.state != ReviewState::kPending) illegal(edit, decision);
      const auto current = store.latest(edit.rubric_id);
      const auto proposed = apply_edits(current, {edit.edit});
      const auto before = holdout.score(effective_rubric(store, current));
      const auto after = holdout.score(effective_rubric(store, proposed));
      edit.holdout_delta = after - before;
      edit.state = ReviewState::kApproved;
      edit.reviewer = reviewer;
      return edit;
    }
    case Decision::kReject:
      if (edit.state != ReviewState::kPending) illegal(edit, decision);
      edit.state = ReviewState::kRejected;
      edit.reviewer = reviewer;
      return edit;
    case Decision::kMerge: {
      if (edit.state != ReviewState::kApproved || !edit.holdout_delta) illegal(edit, decision);
      if (*edit.holdout_delta < 0) {
        throw Error(ErrorCode::kHoldoutRegression,
                    "edit " + edit.id + " lowers holdout accuracy by " + format_rational(-*edit.holdout_delta));
      }
      const auto merged = store.commit(edit.rubric_id, {edit.edit}, reviewer);
      edit.merged_version = merged.version;
      edit.state = ReviewState::kMerged;
      edit.reviewer = reviewer;
      return edit;
    }
  }
  illegal(edit, decision);
}

json to_json(const FailureCase& c) {
  return {{"id", c.id},
          {"record_id", c.record_id},
          {"category", c.category},
          {"query", c.query},
          {"response_a", c.response_a},
          {"response_b", c.response_b},
          {"system_verdict", to_string(c.system)},
          {"human_label", to_string(c.label)},
          {"confusion", to_string(c.confusion)},
          {"transcript_refs", c.transcript_refs}};
}

json to_json(const FailureCluster& c) {
  json cases = json::array();
  for (const auto& fc : c.cases) cases.push_back(to_json(fc));
  return {{"category", c.category},
          {"confusion", to_string(c.confusion)},
          {"size", c.cases.size()},
          {"summary", c.summary},
          {"cases", cases}};
}

json to_json(const ProposedDomainEdit& e) {
  return {{"id", e.id},
          {"rubric_id", e.rubric_id},
          {"edit", to_json(e.edit)},
          {"rationale", e.rationale},
          {"supporting_cases", e.supporting_cases},
          {"state", to_string(e.state)},
          {"reviewer", e.reviewer},
          {"holdout_delta", e.holdout_delta ? json(format_rational(*e.holdout_delta)) : json(nullptr)},
          {"merged_version", e.merged_version ? json(*e.merged_version) : json(nullptr)},
          {"sequence", e.sequence}};
}

ProposedDomainEdit proposed_edit_from_json(const json& j) {
  ProposedDomainEdit e;
  e.id = j.at("id").get<std::string>();
  e.rubric_id = j.at("rubric_id").get<std::string>();
  e.edit = edit_from_json(j.at("edit"));
  e.rationale = j.value("rationale", std::string());
  e.supporting_cases = j.value("supporting_cases", std::vector<std::string>{});
  e.state = review_state_from_string(j.at("state").get<std::string>());
  e.reviewer = j.value("reviewer", std::string());
  if (j.contains("holdout_delta") && !j.at("holdout_delta").is_null()) {
    e.holdout_delta = rational_from_json(j.at("holdout_delta"));
  }
  if (j.contains("merged_version") && !j.at("merged_version").is_null()) {
    e.merged_version = j.at("merged_version").get<std::uint64_t>();
  }
  e.sequence = j.at("sequence").get<std::uint64_t>();
  return e;
}

ReviewQueue::ReviewQueue(std::filesystem::path file) : file_(std::move(file)) {
  if (file_.empty() || !std::filesystem::exists(file_)) return;
  try {
    const auto j = json::parse(read_file(file_));
    for (const auto& e : j.at("edits")) edits_.push_back(proposed_edit_from_json(e));
    for (const auto& c : j.value("cases", json::array())) {
      FailureCase fc;
      fc.id = c.at("id").get<std::string>();
      fc.record_id = c.value("record_id", fc.id);
      fc.category = c.value("category", std::string());
      fc.query = c.value("query", std::string());
      fc.response_a = c.value("response_a", std::string());
      fc.response_b = c.value("response_b", std::string());
      fc.system = verdict_from_string(c.value("system_verdict", std::string("same")));
      fc.label = verdict_from_string(c.value("human_label", std::string("same")));
      const auto conf = c.value("confusion", std::string("wrong_winner"));
      fc.confusion = conf == "spurious_same" ? Confusion::kSpuriousSame
                     : conf == "missed_same" ? Confusion::kMissedSame
                                             : Confusion::kWrongWinner;
      fc.transcript_refs = c.value("transcript_refs", std::vector<std::string>{});
      cases_[fc.id] = std::move(fc);
    }
    next_sequence_ = j.value("next_sequence", std::uint64_t{1});
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kStoreUnavailable, "cannot load review queue " + file_.string() + ": " + e.what());
  }
}

void ReviewQueue::save_locked() const {
  if (file_.empty()) return;
  json edits = json::array();
  for (const auto& e : edits_) edits.push_back(to_json(e));
  json cases = json::array();
  for (const auto& [_, c] : cases_) cases.push_back(to_json(c));
  atomic_write(file_, json{{"edits", edits}, {"cases", cases}, {"next_sequence", next_sequence_}}.dump(2));
}

ProposedDomainEdit ReviewQueue::propose(const std::string& rubric_id, EditAction edit, std::string rationale,
                                        std::vector<std::string> supporting_cases) {
  std::lock_guard lock(mutex_);
  ProposedDomainEdit e;
  e.sequence = next_sequence_++;
  e.id = "edit-" + std::to_string(e.sequence);
  e.rubric_id = rubric_id;
  e.edit = std::move(edit);
  e.rationale = std::move(rationale);
  e.supporting_cases = std::move(supporting_cases);
  edits_.push_back(e);
  save_locked();
  return e;
}

std::optional<ProposedDomainEdit> ReviewQueue::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  for (const auto& e : edits_) {
    if (e.id == id) return e;
  }
  return std::nullopt;
}

ProposedDomainEdit ReviewQueue::decide(const std::string& id, Decision decision, const std::string& reviewer,
                                       RubricStore& store, Oracle& holdout) {
  std::lock_guard lock(mutex_);
  auto it = std::find_if(edits_.begin(), edits_.end(), [&](const auto& e) { return e.id == id; });
  if (it == edits_.end()) throw Error(ErrorCode::kEditNotFound, id);
  if (it->state == target_of(decision)) return *it;
  *it = review_edit(*it, decision, reviewer, store, holdout);
  save_locked();
  return *it;
}

ReviewQueue::Page ReviewQueue::list(std::optional<ReviewState> state, std::optional<std::string> category,
                                    std::optional<std::uint64_t> cursor, std::size_t limit) const {
  std::lock_guard lock(mutex_);
  Page page;
  if (limit == 0) limit = 1;
  for (auto it = edits_.rbegin(); it != edits_.rend(); ++it) {
    if (cursor && it->sequence >= *cursor) continue;
    if (state && it->state != *state) continue;
    if (category) {
      const bool match = std::any_of(it->supporting_cases.begin(), it->supporting_cases.end(), [&](const auto& cid) {
        auto c = cases_.find(cid);
        return c != cases_.end() && c->second.category == *category;
      });
      if (!match) continue;
    }
    if (page.items.size() == limit) {
      page.next_cursor = page.items.back().sequence;
      break;
    }
    page.items.push_back(*it);
  }
  return page;
}

void ReviewQueue::add_cases(const std::vector<FailureCase>& cases) {
  std::lock_guard lock(mutex_);
  for (const auto& c : cases) cases_[c.id] = c;
  save_locked();
}

std::optional<FailureCase> ReviewQueue::find_case(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = cases_.find(id);
  if (it == cases_.end()) return std::nullopt;
  return it->second;
}

}  // namespace openrs
