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

#include <doctest.h>

#include "openrs/review.hpp"
#include "test_support.hpp"

using namespace openrs;
using namespace openrs::testing;

namespace {

RecordOutcome scored(std::string id, std::string category, Verdict v) {
  RecordOutcome o;
  o.id = std::move(id);
  o.category = std::move(category);
  Comparison c;
  c.verdict = v;
  o.comparisons.push_back(c);
  return o;
}

std::vector<BenchRecord> holdout_records() {
  std::vector<BenchRecord> out;
  for (int i = 0; i < 3; ++i) {
    BenchRecord r;
    r.id = "h" + std::to_string(i);
    r.query = "question " + r.id;
    r.chosen = {"[q=3] strong " + r.id};
    r.rejected = {"[q=1] weak " + r.id};
    out.push_back(r);
  }
  return out;
}

Criterion precise() {
  Criterion c = crit("p", Rational(1), "Answers are precise");
  return c;
}

}  // namespace

TEST_SUITE("review") {
  TEST_CASE("confusion classes") {
    CHECK_FALSE(classify(Verdict::kFirstWins, Verdict::kFirstWins));
    CHECK_FALSE(classify(Verdict::kSame, Verdict::kSame));
    CHECK(classify(Verdict::kSecondWins, Verdict::kFirstWins) == Confusion::kWrongWinner);
    CHECK(classify(Verdict::kSame, Verdict::kFirstWins) == Confusion::kSpuriousSame);
    CHECK(classify(Verdict::kFirstWins, Verdict::kSame) == Confusion::kMissedSame);
  }

  TEST_CASE("failure clusters") {
    EvalReport report;
    std::map<std::string, Verdict> labels;
    for (int i = 0; i < 5; ++i) {
      const auto id = "r" + std::to_string(i);
      report.records.push_back(scored(id, i < 3 ? "writing" : "math", Verdict::kFirstWins));
      labels[id] = Verdict::kFirstWins;
    }
    CHECK(analyze_domain_failures(report, labels).empty());

    for (int i = 0; i < 3; ++i) report.records[i].comparisons[0].verdict = Verdict::kSecondWins;
    report.records[4].comparisons[0].verdict = Verdict::kSame;
    auto excluded = scored("x", "writing", Verdict::kSecondWins);
    excluded.status = RecordStatus::kExcluded;
    report.records.push_back(excluded);

    const auto clusters = analyze_domain_failures(report, labels);
    REQUIRE(clusters.size() == 2);
    std::size_t total = 0;
    for (const auto& c : clusters) {
      total += c.cases.size();
      if (c.category == "writing") {
        CHECK(c.confusion == Confusion::kWrongWinner);
        CHECK(c.cases.size() == 3);
      } else {
        CHECK(c.category == "math");
        CHECK(c.confusion == Confusion::kSpuriousSame);
        CHECK(c.cases.size() == 1);
        CHECK(c.cases[0].id == "r4");
      }
    }
    CHECK(total == 4);

    auto multi = scored("m", "code", Verdict::kFirstWins);
    Comparison second;
    second.chosen_index = 0;
    second.rejected_index = 2;
    second.verdict = Verdict::kSecondWins;
    multi.comparisons.push_back(second);
    report.records.push_back(multi);
    labels["m"] = Verdict::kFirstWins;
    bool found = false;
    for (const auto& c : analyze_domain_failures(report, labels)) {
      if (c.category == "code") {
        REQUIRE(c.cases.size() == 1);
        CHECK(c.cases[0].id == "m#0x2");
        found = true;
      }
    }
    CHECK(found);

    auto stray = labels;
    stray["ghost"] = Verdict::kSame;
    CHECK_THROWS_AS(analyze_domain_failures(report, stray), Error);
    auto missing = labels;
    missing.erase("r0");
    try {
      analyze_domain_failures(report, missing);
      FAIL("expected a mismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kAlignmentMismatch);
    }
  }

  TEST_CASE("cluster summaries come from the judge") {
    auto mock = std::make_shared<MockJudge>(equal_policy());
    JudgeClient client(mock, fast_config());
    std::vector<FailureCluster> clusters(2);
    clusters[0].category = "a";
    clusters[1].category = "b";
    summarize_clusters(client, PromptTemplates::defaults(), clusters);
    CHECK(clusters[0].summary == "Mock summary.");
    CHECK(clusters[1].summary == "Mock summary.");
  }

  TEST_CASE("review decisions against a holdout") {
    TempDir dir;
    RubricStore store(dir.path() / "store");
    store.create(general("g", {crit("a", Rational(1), "Tone is friendly")}));
    store.create(domain("d", "g", {crit("x", Rational(1), "Style is vivid")}));
    const auto v0 = store.latest("d").version;

    auto backend = rubric_sensitive_backend("precise");
    JudgeClient client(backend, fast_config());
    PairwiseJudge judge(client, {});
    JudgeOracle holdout(judge, holdout_records());
    CHECK(holdout.score(effective_rubric(store, store.latest("d"))) == Rational(0));

    ProposedDomainEdit rejected;
    rejected.id = "edit-1";
    rejected.rubric_id = "d";
    rejected.edit = AddEdit{precise()};
    const auto r = review_edit(rejected, Decision::kReject, "alice", store, holdout);
    CHECK(r.state == ReviewState::kRejected);
    CHECK(store.latest("d").version == v0);
    CHECK_THROWS_AS(review_edit(r, Decision::kMerge, "alice", store, holdout), Error);
    CHECK_THROWS_AS(review_edit(rejected, Decision::kMerge, "alice", store, holdout), Error);

    auto approved = review_edit(rejected, Decision::kApprove, "bob", store, holdout);
    CHECK(approved.state == ReviewState::kApproved);
    CHECK(*approved.holdout_delta == Rational(1));
    CHECK(store.latest("d").version == v0);
    const auto merged = review_edit(approved, Decision::kMerge, "bob", store, holdout);
    CHECK(merged.state == ReviewState::kMerged);
    CHECK(*merged.merged_version == v0 + 1);
    CHECK(store.latest("d").version == v0 + 1);
    CHECK(store.changelog("d").back().author == "bob");

    ProposedDomainEdit regress;
    regress.id = "edit-2";
    regress.rubric_id = "d";
    regress.edit = ModifyEdit{"p", std::string("Answers are vague"), std::nullopt};
    auto worse = review_edit(regress, Decision::kApprove, "carol", store, holdout);
    CHECK(*worse.holdout_delta == Rational(-1));
    try {
      review_edit(worse, Decision::kMerge, "carol", store, holdout);
      FAIL("expected a regression");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kHoldoutRegression);
    }
    CHECK(store.latest("d").version == v0 + 1);
  }

  TEST_CASE("queue: idempotent decisions, pagination, persistence") {
    TempDir dir;
    RubricStore store(dir.path() / "store");
    store.create(general("g", {crit("a", Rational(1), "Tone")}));
    store.create(domain("d", "g", {}));
    SyntheticOracle holdout;
    const auto file = dir.path() / "queue.json";
    {
      ReviewQueue queue(file);
      FailureCase c;
      c.id = "case-1";
      c.record_id = "r1";
      c.category = "writing";
      queue.add_cases({c});
      for (int i = 0; i < 5; ++i) {
        Criterion cr = crit("n" + std::to_string(i), Rational(1), i == 0 ? "accuracy" : "filler");
        queue.propose("d", AddEdit{cr}, "because", i % 2 == 0 ? std::vector<std::string>{"case-1"}
                                                              : std::vector<std::string>{});
      }
      const auto once = queue.decide("edit-1", Decision::kApprove, "amy", store, holdout);
      const auto twice = queue.decide("edit-1", Decision::kApprove, "amy", store, holdout);
      CHECK(once.holdout_delta == twice.holdout_delta);
      CHECK(*once.holdout_delta == Rational(1, 10));
      queue.decide("edit-1", Decision::kMerge, "amy", store, holdout);
      const auto versions = store.versions("d").size();
      queue.decide("edit-1", Decision::kMerge, "amy", store, holdout);
      CHECK(store.versions("d").size() == versions);
      CHECK_THROWS_AS(queue.decide("edit-99", Decision::kReject, "amy", store, holdout), Error);
      queue.decide("edit-2", Decision::kReject, "amy", store, holdout);
      CHECK_THROWS_AS(queue.decide("edit-2", Decision::kApprove, "amy", store, holdout), Error);

      const auto p1 = queue.list(std::nullopt, std::nullopt, std::nullopt, 2);
      REQUIRE(p1.items.size() == 2);
      CHECK(p1.items[0].id == "edit-5");
      CHECK(p1.items[1].id == "edit-4");
      REQUIRE(p1.next_cursor);
      const auto p2 = queue.list(std::nullopt, std::nullopt, p1.next_cursor, 2);
      CHECK(p2.items[0].id == "edit-3");
      CHECK(p2.items[1].id == "edit-2");
      const auto p3 = queue.list(std::nullopt, std::nullopt, p2.next_cursor, 2);
      REQUIRE(p3.items.size() == 1);
      CHECK(p3.items[0].id == "edit-1");
      CHECK_FALSE(p3.next_cursor);

      const auto pending = queue.list(ReviewState::kPending, std::nullopt, std::nullopt, 10);
      CHECK(pending.items.size() == 3);
      const auto writing = queue.list(std::nullopt, std::string("writing"), std::nullopt, 10);
      CHECK(writing.items.size() == 3);
    }
    ReviewQueue reloaded(file);
    CHECK(reloaded.get("edit-1")->state == ReviewState::kMerged);
    CHECK(reloaded.get("edit-2")->state == ReviewState::kRejected);
    CHECK(reloaded.find_case("case-1")->category == "writing");
    CHECK(reloaded.propose("d", DeleteEdit{"n0"}).id == "edit-6");
  }
}
