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

#include <algorithm>
#include <atomic>
#include <numeric>
#include <sstream>

#include "openrs/refine.hpp"
#include "test_support.hpp"

using namespace openrs;
using namespace openrs::testing;

namespace {

RandomProposer random_proposer() {
  return RandomProposer(RandomProposerConfig{});
}

// Independent oracle: full sort by (reward desc, index asc), first B.
std::vector<std::size_t> sorted_top(const std::vector<Rational>& r, std::size_t b) {
  std::vector<std::size_t> idx(r.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
    if (r[x] != r[y]) return r[y] < r[x];
    return x < y;
  });
  idx.resize(b);
  std::sort(idx.begin(), idx.end());
  return idx;
}

BeamState seed_state(const MetaRubric& seed, std::size_t b, Rational reward = Rational(0)) {
  BeamState s;
  s.beam.assign(b, seed);
  s.rewards.assign(b, reward);
  return s;
}

class FailingOracle : public Oracle {
 public:
  explicit FailingOracle(int fail_at) : fail_at_(fail_at) {}
  Rational score(const MetaRubric& r) override {
    if (calls_++ == fail_at_) throw Error(ErrorCode::kOracleUnavailable, "down");
    return inner_.score(r);
  }

 private:
  int fail_at_;
  std::atomic<int> calls_{0};
  SyntheticOracle inner_;
};

}  // namespace

TEST_SUITE("refine-engine") {
  TEST_CASE("synthetic oracle counts hidden tokens") {
    SyntheticOracle oracle;
    const auto t = SyntheticOracle::default_targets();
    CHECK(oracle.score(general("r", {})) == Rational(0));
    const auto eight = general("r", {crit("a", Rational(1), t[0] + " " + t[1] + ", " + t[2]),
                                     crit("b", Rational(1), "Prefer " + t[3] + " and " + t[4] + "; " + t[5]),
                                     crit("c", Rational(1), t[6] + " " + t[7] + " " + t[7])});
    CHECK(oracle.score(eight) == Rational(8, 10));
    CHECK(oracle.score(general("r", {crit("a", Rational(1), "ACCURACY matters")})) == Rational(1, 10));
    CHECK(oracle.score(general("r", {crit("a", Rational(1), "inaccuracy")})) == Rational(0));
  }

  TEST_CASE("judge-backed oracle score") {
    std::vector<BenchRecord> data;
    for (int i = 0; i < 4; ++i) {
      BenchRecord r;
      r.id = std::to_string(i);
      r.query = "q" + r.id;
      r.chosen = {"[q=3] good " + r.id};
      r.rejected = {"[q=1] bad " + r.id};
      data.push_back(r);
    }
    const auto meta = general("g", {crit("a")});
    auto honest = std::make_shared<MockJudge>(quality_tag_policy());
    JudgeClient c1(honest, fast_config());
    PairwiseJudge j1(c1, {});
    CHECK(oracle_score(j1, meta, data) == Rational(1));

    auto biased = std::make_shared<MockJudge>(first_policy());
    JudgeClient c2(biased, fast_config());
    PairwiseJudge j2(c2, {});
    CHECK(oracle_score(j2, meta, data) == Rational(0));

    for (auto& r : data) r.label_error = true;
    CHECK_THROWS_AS(oracle_score(j1, meta, data), Error);
  }

  TEST_CASE("random proposer: determinism and grammar") {
    auto proposer = random_proposer();
    const auto rubric = general("g", {crit("a"), crit("b"), crit("c")});
    const auto s1 = proposer.propose({rubric, "", 42, ""});
    CHECK(s1 == proposer.propose({rubric, "", 42, ""}));
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
      const auto seq = proposer.propose({rubric, "", seed, ""});
      CHECK(seq.size() >= 1);
      CHECK(seq.size() <= 3);
      CHECK_NOTHROW(apply_edits(rubric, seq));
      const auto empty_seq = proposer.propose({general("e", {}), "", seed, ""});
      CHECK(std::holds_alternative<AddEdit>(empty_seq.front()));
      CHECK_NOTHROW(apply_edits(general("e", {}), empty_seq));
    }
    const auto on_empty = proposer.propose({general("e", {}), "", 1, ""});
    if (on_empty.size() == 1) CHECK(std::holds_alternative<AddEdit>(on_empty[0]));
  }

  TEST_CASE("LLM proposer parses edits and resamples bad replies") {
    auto policy = equal_policy();
    policy.edits_reply = fenced(kEditsBlock, R"([{"op": "MODIFY", "id": "a", "new_weight": 3}])");
    auto mock = std::make_shared<MockJudge>(policy);
    JudgeClient client(mock, fast_config());
    LlmProposer proposer(client, PromptTemplates::defaults());
    const auto rubric = general("g", {crit("a")});
    const auto seq = proposer.propose({rubric, "Seed rubric reward: 0.5", 1, "t0/b0/k0"});
    REQUIRE(seq.size() == 1);
    const auto& m = std::get<ModifyEdit>(seq[0]);
    CHECK(m.id == "a");
    CHECK(*m.new_weight == Rational(3));

    int calls = 0;
    auto backend = std::make_shared<FnBackend>([&](const JudgePrompt&) {
      return ++calls == 1 ? std::string("no block here") : fenced(kEditsBlock, R"([{"op": "DELETE", "id": "a"}])");
    });
    JudgeClient c2(backend, fast_config());
    LlmProposer retrying(c2, PromptTemplates::defaults(), 3, 1);
    CHECK(std::holds_alternative<DeleteEdit>(retrying.propose({rubric, "", 0, ""})[0]));
    CHECK(backend->prompts().at(1).user_text.find("could not be used") != std::string::npos);

    auto junk = std::make_shared<FnBackend>([](const JudgePrompt&) { return std::string("nope"); });
    JudgeClient c3(junk, fast_config());
    LlmProposer failing(c3, PromptTemplates::defaults(), 3, 1);
    CHECK_THROWS_AS(failing.propose({rubric, "", 0, ""}), Error);
    CHECK(junk->prompts().size() == 2);
  }

  TEST_CASE("config invariants") {
    RefineConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.rollouts = 30;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.rollouts = 32;
    cfg.iterations = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.iterations = 1;
    cfg.beam = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
  }

  TEST_CASE("selection equals a brute-force sort") {
    auto proposer = random_proposer();
    SyntheticOracle oracle;
    for (bool elitism : {false, true}) {
      RefineConfig cfg;
      cfg.elitism = elitism;
      cfg.seed = 3;
      auto state = seed_state(general("g", {crit("a", Rational(1), "accuracy")}), cfg.beam, Rational(1, 10));
      for (int t = 0; t < 5; ++t) {
        const auto it = refine_iteration(state, cfg, proposer, oracle);
        REQUIRE(it.candidates.size() == cfg.rollouts);
        std::vector<Rational> pool;
        for (const auto& c : it.candidates) pool.push_back(c.effective_reward());
        CHECK(sorted_top(pool, cfg.beam) == [&] {
          std::vector<std::size_t> m;
          for (std::size_t i = 0; i < it.mask.size(); ++i) {
            if (it.mask[i]) m.push_back(i);
          }
          return m;
        }());
        if (elitism) pool.insert(pool.end(), state.rewards.begin(), state.rewards.end());
        CHECK(it.selected == sorted_top(pool, cfg.beam));
        for (std::size_t k = 0; k < cfg.beam; ++k) CHECK(it.next.rewards[k] == pool[it.selected[k]]);
        CHECK(it.records.size() == cfg.rollouts);
        state = it.next;
      }
    }
  }

  TEST_CASE("identity proposals keep the beam") {
    ScriptedProposer identity([](const ProposerInput&) { return EditSequence{}; });
    SyntheticOracle oracle;
    RefineConfig cfg;
    cfg.beam = 2;
    cfg.rollouts = 4;
    const auto seed = general("g", {crit("a", Rational(1), "clarity")});
    const auto it = refine_iteration(seed_state(seed, 2, Rational(1, 10)), cfg, identity, oracle);
    for (const auto& c : it.candidates) {
      CHECK(c.valid);
      CHECK(c.rubric == seed);
    }
    for (const auto& r : it.next.beam) CHECK(r == seed);

    cfg.iterations = 1;
    const auto res = run_refinement(seed, cfg, identity, oracle);
    CHECK(res.best == seed);
    CHECK(res.best_reward == Rational(1, 10));
  }

  TEST_CASE("invalid edits become reward-0 candidates outside the mask") {
    ScriptedProposer scripted([](const ProposerInput& in) -> EditSequence {
      if (in.rollout == "t0/b0/k1") return {DeleteEdit{"missing"}};
      Criterion c;
      c.id = "n";
      c.text = "clarity";
      return {AddEdit{c}};
    });
    SyntheticOracle oracle;
    RefineConfig cfg;
    cfg.beam = 2;
    cfg.rollouts = 4;
    const auto seed = general("g", {crit("a", Rational(1), "tone")});
    const auto it = refine_iteration(seed_state(seed, 2), cfg, scripted, oracle);
    REQUIRE(it.candidates.size() == 4);
    CHECK_FALSE(it.candidates[1].valid);
    CHECK_FALSE(it.candidates[1].reward.has_value());
    CHECK(it.candidates[1].effective_reward() == Rational(0));
    CHECK(it.candidates[1].rubric == seed);
    CHECK(it.group_rewards.size() == 4);
    CHECK(it.mask[1] == 0);
    CHECK(it.records[1].mask == 0);
    CHECK(it.candidates[0].reward.value() == Rational(2, 10));
  }

  TEST_CASE("oracle outage aborts the iteration") {
    auto proposer = random_proposer();
    FailingOracle oracle(5);
    RefineConfig cfg;
    CHECK_THROWS_AS(refine_iteration(seed_state(general("g", {}), cfg.beam), cfg, proposer, oracle), Error);
  }

  TEST_CASE("elitism makes best-of-beam monotone") {
    auto proposer = random_proposer();
    SyntheticOracle oracle;
    RefineConfig cfg;
    cfg.elitism = true;
    cfg.seed = 1;
    const auto res = run_refinement(general("g", {}), cfg, proposer, oracle);
    Rational prev = res.seed_reward;
    for (const auto& it : res.history) {
      const auto best = *std::max_element(it.next.rewards.begin(), it.next.rewards.end());
      CHECK(prev <= best);
      prev = best;
    }
    CHECK(res.best_reward == prev);
  }

  TEST_CASE("same seeds give a bit-identical history regardless of parallelism") {
    auto proposer = random_proposer();
    SyntheticOracle oracle;
    RefineConfig cfg;
    cfg.iterations = 3;
    cfg.seed = 77;
    std::ostringstream a, b;
    run_refinement(general("g", {}), cfg, proposer, oracle, &a);
    cfg.parallelism = 4;
    run_refinement(general("g", {}), cfg, proposer, oracle, &b);
    CHECK(a.str() == b.str());
    CHECK_FALSE(a.str().empty());
  }

  TEST_CASE("proposers never see oracle data") {
    std::vector<BenchRecord> data;
    for (int i = 0; i < 3; ++i) {
      BenchRecord r;
      r.id = "sentinel-id-" + std::to_string(i);
      r.query = "SENTINEL-QUERY-" + std::to_string(i);
      r.chosen = {"[q=2] SENTINEL-CHOSEN"};
      r.rejected = {"[q=1] SENTINEL-REJECTED"};
      data.push_back(r);
    }
    auto mock = std::make_shared<MockJudge>(quality_tag_policy());
    JudgeClient client(mock, fast_config());
    PairwiseJudge judge(client, {});
    JudgeOracle oracle(judge, data);

    std::mutex mu;
    std::vector<std::string> seen;
    auto inner = random_proposer();
    ScriptedProposer spy([&](const ProposerInput& in) {
      {
        std::lock_guard lock(mu);
        seen.push_back(render_rubric_context(in.rubric) + in.feedback + in.rollout);
      }
      return inner.propose(in);
    });
    RefineConfig cfg;
    cfg.beam = 2;
    cfg.rollouts = 4;
    cfg.iterations = 2;
    run_refinement(general("g", {crit("a")}), cfg, spy, oracle);
    CHECK(seen.size() == 8);
    for (const auto& s : seen) CHECK(s.find("SENTINEL") == std::string::npos);
  }
}
