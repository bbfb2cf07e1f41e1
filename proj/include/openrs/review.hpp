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

// Domain refinement with human review.
//
// Failure analysis groups judge/label mismatches by (category, confusion
// kind). Proposed domain edits move through
//
//   pending --approve--> approved --merge--> merged
//   pending --reject---> rejected
//
// Approval records the holdout delta; merge commits the edit to the domain
// rubric only when that delta is non-negative.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "openrs/bench.hpp"
#include "openrs/judge.hpp"
#include "openrs/prompts.hpp"
#include "openrs/refine.hpp"
#include "openrs/rubric_store.hpp"

namespace openrs {

enum class Confusion { kWrongWinner, kSpuriousSame, kMissedSame };

std::string_view to_string(Confusion c);

/// Mismatch kind for a system verdict against a human label, or nullopt
/// when they agree.
std::optional<Confusion> classify(Verdict system, Verdict label);

struct FailureCase {
  std::string id;  // record id, or "<record>#<chosen>x<rejected>" for multi-pair records
  std::string record_id;
  std::string category;
  std::string query;
  std::string response_a;
  std::string response_b;
  Verdict system = Verdict::kSame;
  Verdict label = Verdict::kSame;
  Confusion confusion = Confusion::kWrongWinner;
  std::vector<std::string> transcript_refs;
};

struct FailureCluster {
  std::string category;
  Confusion confusion = Confusion::kWrongWinner;
  std::vector<FailureCase> cases;
  std::string summary;
};

/// `labels` maps record ids to the human verdict with the chosen response
/// presented first. Every scored record needs a label and every label a
/// record; otherwise kAlignmentMismatch. `dataset` fills response texts.
std::vector<FailureCluster> analyze_domain_failures(const EvalReport& report,
                                                    const std::map<std::string, Verdict>& labels,
                                                    const Dataset* dataset = nullptr);

/// Drafts a summary for each cluster with the judge's summary template.
void summarize_clusters(JudgeClient& client, const PromptTemplates& templates, std::vector<FailureCluster>& clusters,
                        const std::string& model = "judge");

enum class ReviewState { kPending, kApproved, kRejected, kMerged };
enum class Decision { kApprove, kReject, kMerge };

std::string_view to_string(ReviewState s);
std::string_view to_string(Decision d);
ReviewState review_state_from_string(std::string_view s);
Decision decision_from_string(std::string_view s);

struct ProposedDomainEdit {
  std::string id;
  std::string rubric_id;
  EditAction edit;
  std::string rationale;
  std::vector<std::string> supporting_cases;
  ReviewState state = ReviewState::kPending;
  std::string reviewer;
  std::optional<Rational> holdout_delta;
  std::optional<std::uint64_t> merged_version;
  std::uint64_t sequence = 0;  // creation order
};

/// The rubric a holdout oracle judges with: the domain rubric merged under
/// its general parent, or the rubric itself for general rubrics.
MetaRubric effective_rubric(const RubricStore& store, const MetaRubric& rubric);

/// Applies one decision. Throws kIllegalTransition for any move outside the
/// state machine and kHoldoutRegression (state unchanged) when merging a
/// negative delta.
ProposedDomainEdit review_edit(ProposedDomainEdit edit, Decision decision, const std::string& reviewer,
                               RubricStore& store, Oracle& holdout);

nlohmann::json to_json(const FailureCase& c);
nlohmann::json to_json(const FailureCluster& c);
nlohmann::json to_json(const ProposedDomainEdit& e);
ProposedDomainEdit proposed_edit_from_json(const nlohmann::json& j);

/// Persistent queue of proposed edits and the failure cases backing them.
class ReviewQueue {
 public:
  /// Loads `file` when it exists; an empty path keeps the queue in memory.
  explicit ReviewQueue(std::filesystem::path file = {});

  ProposedDomainEdit propose(const std::string& rubric_id, EditAction edit, std::string rationale = {},
                             std::vector<std::string> supporting_cases = {});
  std::optional<ProposedDomainEdit> get(const std::string& id) const;

  /// Idempotent: a decision whose target state already holds returns the
  /// edit unchanged.
  ProposedDomainEdit decide(const std::string& id, Decision decision, const std::string& reviewer, RubricStore& store,
                            Oracle& holdout);

  struct Page {
    std::vector<ProposedDomainEdit> items;
    std::optional<std::uint64_t> next_cursor;
  };
  /// Newest first. `cursor` is exclusive: only edits created before it.
  Page list(std::optional<ReviewState> state, std::optional<std::string> category, std::optional<std::uint64_t> cursor,
            std::size_t limit) const;

  void add_cases(const std::vector<FailureCase>& cases);
  std::optional<FailureCase> find_case(const std::string& id) const;

 private:
  void save_locked() const;

  std::filesystem::path file_;
  mutable std::mutex mutex_;
  std::vector<ProposedDomainEdit> edits_;
  std::map<std::string, FailureCase> cases_;
  std::uint64_t next_sequence_ = 1;
};

}  // namespace openrs
