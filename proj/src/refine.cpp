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

#include "openrs/refine.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "openrs/error.hpp"
#include "openrs/util.hpp"

namespace openrs {
namespace {

using nlohmann::json;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t candidate_seed(std::uint64_t seed, std::size_t iteration, std::size_t index) {
  return splitmix64(splitmix64(seed ^ splitmix64(iteration)) + index);
}

std::string decimal(const Rational& r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", to_double(r));
  return buf;
}

std::string rubric_digest(const MetaRubric& r) { return sha256_hex(to_json(r).dump()); }

}  // namespace

// ---------------------------------------------------------------- oracles

std::vector<std::string> rubric_words(const MetaRubric& rubric) {
  std::vector<std::string> words;
  for (const auto& c : rubric.criteria) {
    std::string cur;
    for (char ch : c.text + " ") {
      if (std::isalnum(static_cast<unsigned char>(ch))) {
        cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
      } else if (!cur.empty()) {
        words.push_back(std::move(cur));
        cur.clear();
      }
    }
  }
  return words;
}

SyntheticOracle::SyntheticOracle(std::vector<std::string> targets) : targets_(std::move(targets)) {
  if (targets_.empty()) throw Error(ErrorCode::kInvalidConfig, "synthetic oracle needs target tokens");
}

std::vector<std::string> SyntheticOracle::default_targets() {
  return {"accuracy", "grounding", "concision", "safety", "clarity",
          "completeness", "reasoning", "citations", "formatting", "tone"};
}

std::vector<std::string> default_proposer_vocabulary() {
  auto v = SyntheticOracle::default_targets();
  for (const char* w : {"polite", "brief", "verbose", "novel", "friendly", "strict", "formal", "humor", "speed",
                        "detail", "style", "rhythm", "depth", "breadth", "focus", "scope", "vivid", "plain",
                        "neutral", "balanced"}) {
    v.push_back(w);
  }
  return v;
}

Rational SyntheticOracle::score(const MetaRubric& rubric) {
  const auto words = rubric_words(rubric);
  const std::set<std::string> present(words.begin(), words.end());
  std::int64_t hits = 0;
  for (const auto& t : targets_) hits += present.count(t) ? 1 : 0;
  return Rational(hits, static_cast<std::int64_t>(targets_.size()));
}

Rational oracle_score(PairwiseJudge& judge, const MetaRubric& rubric, std::span<const BenchRecord> dataset) {
  std::int64_t scored = 0;
  std::int64_t correct = 0;
  for (const auto& r : dataset) {
    if (r.label_error) continue;
    if (r.chosen.empty() || r.rejected.empty()) continue;
    const auto j = judge.judge_pair(r.query, r.chosen[0], r.rejected[0], rubric);
    ++scored;
    correct += j.verdict == Verdict::kFirstWins ? 1 : 0;
  }
  if (scored == 0) throw Error(ErrorCode::kOracleUnavailable, "oracle dataset has no scorable records");
  return Rational(correct, scored);
}

JudgeOracle::JudgeOracle(PairwiseJudge& judge, std::vector<BenchRecord> dataset, std::optional<MetaRubric> parent)
    : judge_(judge), dataset_(std::move(dataset)), parent_(std::move(parent)) {}

Rational JudgeOracle::score(const MetaRubric& rubric) {
  if (parent_ && rubric.kind == RubricKind::kDomain) return oracle_score(judge_, merge_hierarchy(*parent_, rubric), dataset_);
  return oracle_score(judge_, rubric, dataset_);
}

// -------------------------------------------------------------- proposers

RandomProposer::RandomProposer(RandomProposerConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.vocabulary.empty()) throw Error(ErrorCode::kInvalidConfig, "random proposer needs a vocabulary");
  if (cfg_.max_edits == 0) throw Error(ErrorCode::kInvalidConfig, "max_edits must be >= 1");
  if (cfg_.min_words == 0 || cfg_.min_words > cfg_.max_words) {
    throw Error(ErrorCode::kInvalidConfig, "word bounds must satisfy 1 <= min <= max");
  }
}

EditSequence RandomProposer::propose(const ProposerInput& in) {
  std::mt19937_64 rng(in.seed);
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  auto text = [&] {
    const auto n = cfg_.min_words + pick(cfg_.max_words - cfg_.min_words + 1);
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + cfg_.vocabulary[pick(cfg_.vocabulary.size())];
    return s;
  };

  std::vector<std::string> live;
  for (const auto& c : in.rubric.criteria) live.push_back(c.id);
  const auto length = 1 + pick(cfg_.max_edits);
  EditSequence seq;
  for (std::size_t e = 0; e < length; ++e) {
    const auto op = live.empty() ? 0 : pick(3);
    if (op == 0) {
      std::string id;
      do {
        char buf[24];
        std::snprintf(buf, sizeof buf, "k%012llx", static_cast<unsigned long long>(rng() & 0xffffffffffffULL));
        id = buf;
      } while (std::find(live.begin(), live.end(), id) != live.end());
      Criterion c;
      c.id = id;
      c.text = text();
      c.weight = Rational(static_cast<std::int64_t>(1 + pick(3)));
      live.push_back(id);
      seq.push_back(AddEdit{std::move(c)});
    } else if (op == 1) {
      const auto i = pick(live.size());
      seq.push_back(DeleteEdit{live[i]});
      live.erase(live.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ModifyEdit m{live[pick(live.size())], std::nullopt, std::nullopt};
      const auto what = pick(3);
      if (what != 1) m.new_text = text();
      if (what != 0) m.new_weight = Rational(static_cast<std::int64_t>(1 + pick(3)));
      seq.push_back(std::move(m));
    }
  }
  return seq;
}

EditSequence parse_edits_reply(std::string_view reply) {
  const auto block = extract_block(reply, kEditsBlock);
  if (!block) throw Error(ErrorCode::kParseFailure, "no openrs-edits block");
  try {
    const auto j = json::parse(*block);
    if (!j.is_array()) throw Error(ErrorCode::kParseFailure, "edits block must be an array");
    return edits_from_json(j);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseFailure, std::string("bad edits block: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParseFailure) throw;
    throw Error(ErrorCode::kParseFailure, e.what());
  }
}

LlmProposer::LlmProposer(JudgeClient& client, PromptTemplates templates, std::size_t max_edits, int retries,
                         double temperature, std::string model)
    : client_(client),
      templates_(std::move(templates)),
      max_edits_(max_edits),
      retries_(retries),
      temperature_(temperature),
      model_(std::move(model)) {}

EditSequence LlmProposer::propose(const ProposerInput& in) {
  const std::map<std::string, std::string> vars = {
      {"meta_rubric", render_rubric_context(in.rubric)},
      {"feedback", in.feedback + (in.rollout.empty() ? "" : "\nRollout: " + in.rollout)},
      {"max_edits", std::to_string(max_edits_)},
  };
  JudgePrompt base;
  base.system_text = render_template(templates_.edits.system, vars);
  base.user_text = render_template(templates_.edits.user, vars);
  base.temperature = temperature_;
  base.model = model_;
  std::string last_error;
  for (int attempt = 0; attempt <= retries_; ++attempt) {
    auto prompt = base;
    if (attempt > 0) prompt.user_text += render_template(templates_.reask, {{"error", last_error}});
    const auto reply = client_.cached_complete(prompt);
    try {
      auto seq = parse_edits_reply(reply.text);
      if (seq.empty() || seq.size() > max_edits_) {
        throw Error(ErrorCode::kParseFailure, "expected 1.." + std::to_string(max_edits_) + " edits, got " +
                                                  std::to_string(seq.size()));
      }
      return seq;
    } catch (const Error& e) {
      last_error = e.what();
    }
  }
  throw Error(ErrorCode::kParseFailure, "proposer reply unusable: " + last_error);
}

// ------------------------------------------------------------ beam search

void RefineConfig::validate() const {
  if (beam < 1) throw Error(ErrorCode::kInvalidConfig, "beam size must be >= 1");
  if (rollouts < beam || rollouts % beam != 0) {
    throw Error(ErrorCode::kInvalidConfig, "beam size must divide the rollout count");
  }
  if (iterations < 1) throw Error(ErrorCode::kInvalidConfig, "iterations must be >= 1");
}

IterationResult refine_iteration(const BeamState& state, const RefineConfig& cfg, Proposer& proposer,
                                 Oracle& oracle, const std::string& feedback) {
  cfg.validate();
  if (state.beam.size() != cfg.beam || state.rewards.size() != cfg.beam) {
    throw Error(ErrorCode::kInvalidConfig, "beam state does not hold B rubrics");
  }
  const auto g = cfg.rollouts;
  const auto per = cfg.per_parent();
  IterationResult out;
  out.candidates.resize(g);

  parallel_for(g, std::max<std::size_t>(1, cfg.parallelism), [&](std::size_t c) {
    auto& cand = out.candidates[c];
    cand.index = c;
    cand.parent = c / per;
    const auto& parent = state.beam[cand.parent];
    cand.rubric = parent;
    char tag[64];
    std::snprintf(tag, sizeof tag, "t%zu/b%zu/k%zu", state.iteration, cand.parent, c % per);
    try {
      cand.edits = proposer.propose({parent, feedback, candidate_seed(cfg.seed, state.iteration, c), tag});
      auto mutated = apply_edits(parent, cand.edits);
      const auto reward = oracle.score(mutated);
      if (reward < 0 || reward > 1) throw Error(ErrorCode::kOutOfRange, "oracle reward outside [0, 1]");
      cand.rubric = std::move(mutated);
      cand.reward = reward;
      cand.valid = true;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kOracleUnavailable) throw;
      cand.error = e.what();
    }
  });

  std::vector<Rational> pool;
  for (const auto& c : out.candidates) pool.push_back(c.effective_reward());
  out.group_rewards = pool;
  if (cfg.elitism) pool.insert(pool.end(), state.rewards.begin(), state.rewards.end());
  out.selected = asym_topb_mask(pool, cfg.beam);

  out.next.iteration = state.iteration + 1;
  for (auto i : out.selected) {
    out.next.beam.push_back(i < g ? out.candidates[i].rubric : state.beam[i - g]);
    out.next.rewards.push_back(pool[i]);
  }

  out.advantages = grpo_advantages(out.group_rewards);
  out.mask = mask_bits(g, asym_topb_mask(out.group_rewards, cfg.beam));
  RolloutGroup group;
  std::vector<std::vector<std::string>> refs(g);
  for (const auto& c : out.candidates) group.responses.push_back(to_json(c.edits).dump());
  out.records = emit_training_records("iteration-" + std::to_string(state.iteration), group, out.group_rewards,
                                      out.advantages, out.mask);
  for (std::size_t c = 0; c < g; ++c) {
    out.records[c].query = render_rubric_context(state.beam[out.candidates[c].parent]);
    out.records[c].config_digest = rubric_digest(state.beam[out.candidates[c].parent]);
  }
  return out;
}

std::string feedback_text(std::span<const IterationResult> history, const Rational& seed_reward) {
  std::ostringstream out;
  out << "Seed rubric reward: " << decimal(seed_reward) << "\n";
  const auto start = history.size() > 5 ? history.size() - 5 : 0;
  for (std::size_t i = start; i < history.size(); ++i) {
    const auto& h = history[i];
    Rational best(0), sum(0);
    std::size_t valid = 0;
    for (const auto& r : h.group_rewards) {
      best = std::max(best, r);
      sum += r;
    }
    for (const auto& c : h.candidates) valid += c.valid ? 1 : 0;
    out << "Iteration " << i + 1 << ": best " << decimal(best) << ", mean "
        << decimal(sum / static_cast<std::int64_t>(std::max<std::size_t>(1, h.group_rewards.size()))) << ", valid "
        << valid << "/" << h.candidates.size() << "\n";
  }
  return out.str();
}

RefineResult run_refinement(const MetaRubric& seed_rubric, const RefineConfig& cfg, Proposer& proposer,
                            Oracle& oracle, std::ostream* log) {
  cfg.validate();
  RefineResult result;
  result.seed_reward = oracle.score(seed_rubric);
  BeamState state;
  state.beam.assign(cfg.beam, seed_rubric);
  state.rewards.assign(cfg.beam, result.seed_reward);
  if (log) {
    *log << json{{"type", "seed"}, {"reward", format_rational(result.seed_reward)}, {"rubric", to_json(seed_rubric)}}.dump()
         << '\n';
  }
  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    auto it = refine_iteration(state, cfg, proposer, oracle, feedback_text(result.history, result.seed_reward));
    if (log) *log << to_json(it).dump() << '\n';
    state = it.next;
    result.history.push_back(std::move(it));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < state.rewards.size(); ++i) {
    if (state.rewards[best] < state.rewards[i]) best = i;
  }
  result.best = state.beam[best];
  result.best_reward = state.rewards[best];
  if (log) {
    *log << json{{"type", "best"}, {"reward", format_rational(result.best_reward)}, {"rubric", to_json(result.best)}}.dump()
         << '\n';
  }
  return result;
}

json to_json(const RefineCandidate& c) {
  json j = {{"index", c.index},
            {"parent", c.parent},
            {"edits", to_json(c.edits)},
            {"valid", c.valid},
            {"reward", c.reward ? json(format_rational(*c.reward)) : json(nullptr)},
            {"rubric_digest", rubric_digest(c.rubric)}};
  if (!c.error.empty()) j["error"] = c.error;
  return j;
}

json to_json(const IterationResult& r) {
  json cands = json::array();
  for (const auto& c : r.candidates) cands.push_back(to_json(c));
  json beam = json::array();
  for (std::size_t i = 0; i < r.next.beam.size(); ++i) {
    beam.push_back({{"reward", format_rational(r.next.rewards[i])}, {"rubric_digest", rubric_digest(r.next.beam[i])}});
  }
  return {{"type", "iteration"},
          {"iteration", r.next.iteration},
          {"candidates", cands},
          {"selected", r.selected},
          {"beam", beam},
          {"advantages", r.advantages},
          {"mask", r.mask}};
}

}  // namespace openrs
