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

// openrs: command line front end.
//
//   openrs eval    --format pairwise --data d.jsonl --rubric general --mock quality
//   openrs refine  --oracle synthetic --iterations 10 --elitism
//   openrs reward  --group g.json --rubric general --mock quality
//   openrs analyze --format pairwise --data d.jsonl --rubric writing --queue q.json
//   openrs serve   --port 8080 --store rubrics
//   openrs rubric  list|show|create|apply

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>

#include "openrs/bench.hpp"
#include "openrs/error.hpp"
#include "openrs/http_judge.hpp"
#include "openrs/judge.hpp"
#include "openrs/mock_judge.hpp"
#include "openrs/pairwise.hpp"
#include "openrs/refine.hpp"
#include "openrs/review.hpp"
#include "openrs/reward.hpp"
#include "openrs/rubric_store.hpp"
#include "openrs/service.hpp"
#include "openrs/util.hpp"
#include "openrs/verifiable.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace openrs;

namespace {

struct JudgeOptions {
  std::string endpoint;
  std::string mock;
  std::string cache;
  std::string model = "judge";
  int max_in_flight = 64;
  int retry_budget = 3;
  bool no_diff = false;
  bool fused = false;

  void add(CLI::App* app) {
    app->add_option("--endpoint", endpoint, "Chat-completion URL of the judge");
    app->add_option("--mock", mock, "Mock table file, or a policy: quality|first|second|equal|marker:<text>");
    app->add_option("--cache", cache, "Transcript cache directory");
    app->add_option("--model", model, "Judge model id");
    app->add_option("--max-in-flight", max_in_flight, "Concurrent judge request cap")->check(CLI::PositiveNumber);
    app->add_option("--retries", retry_budget, "Retries per judge request")->check(CLI::NonNegativeNumber);
    app->add_flag("--no-diff", no_diff, "Skip the diff stage");
    app->add_flag("--fused", fused, "Generate diff and rubric in one call");
  }

  ClientConfig client_config() const {
    ClientConfig c;
    c.endpoint = endpoint;
    c.model = model;
    c.max_in_flight = max_in_flight;
    c.retry_budget = retry_budget;
    c.cache_dir = cache;
    return c;
  }

  std::shared_ptr<JudgeBackend> backend() const {
    if (!mock.empty()) {
      if (fs::exists(mock)) return MockJudge::from_json(json::parse(read_file(mock)));
      if (mock.rfind("marker:", 0) == 0) return MockJudge::from_json({{"policy", "marker"}, {"marker", mock.substr(7)}});
      return MockJudge::from_json({{"policy", mock}});
    }
    if (endpoint.empty()) throw Error(ErrorCode::kInvalidConfig, "one of --endpoint or --mock is required");
    return std::make_shared<HttpJudgeBackend>(client_config());
  }

  PairwiseConfig pairwise_config() const {
    PairwiseConfig p;
    p.use_diff = !no_diff;
    p.fused = fused;
    p.model = model;
    return p;
  }
};

struct Judge {
  explicit Judge(const JudgeOptions& o) : client(o.backend(), o.client_config()), pairwise(client, o.pairwise_config()) {}
  JudgeClient client;
  PairwiseJudge pairwise;
};

/// Rubric from a store id or, when the argument names a file, from JSON.
MetaRubric resolve_rubric(const std::string& store_dir, const std::string& rubric) {
  if (fs::is_regular_file(rubric)) return rubric_from_json(json::parse(read_file(rubric)));
  return RubricStore(store_dir).effective(rubric);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    atomic_write(path, text);
  }
}

int run_eval(const JudgeOptions& jo, const std::string& store, const std::string& rubric, const std::string& format,
             const std::string& data, const std::string& report_path, const std::string& transcripts,
             bool short_circuit) {
  Judge judge(jo);
  const auto meta = resolve_rubric(store, rubric);
  const auto dataset = load_dataset(data, format);
  EvalOptions opts;
  opts.short_circuit = short_circuit;
  const auto report = evaluate(judge.pairwise, dataset, meta, opts);
  if (!report_path.empty()) atomic_write(report_path, to_json(report).dump(2) + "\n");
  if (!transcripts.empty()) {
    std::ostringstream t;
    write_transcripts(t, report);
    atomic_write(transcripts, t.str());
  }
  std::cout << summary_table(report);
  const auto stats = judge.client.stats();
  std::cerr << "live judge calls: " << stats.live_calls << ", cache hits: " << stats.cache_hits << "\n";
  return report.unevaluated == 0 ? 0 : 3;
}

struct RefineOptions {
  std::string oracle = "synthetic";
  std::string proposer = "random";
  std::string data;
  std::string data_format = "pairwise";
  std::string seed_rubric;
  std::string log;
  std::string out;
  std::string records;
  RefineConfig cfg;
};

int run_refine(const JudgeOptions& jo, const std::string& store, const RefineOptions& ro) {
  std::unique_ptr<Judge> judge;
  auto need_judge = [&]() -> Judge& {
    if (!judge) judge = std::make_unique<Judge>(jo);
    return *judge;
  };

  std::unique_ptr<Oracle> oracle;
  std::optional<MetaRubric> parent;
  MetaRubric seed;
  if (!ro.seed_rubric.empty()) {
    if (fs::is_regular_file(ro.seed_rubric)) {
      seed = rubric_from_json(json::parse(read_file(ro.seed_rubric)));
    } else {
      RubricStore s(store);
      seed = s.latest(ro.seed_rubric);
      if (seed.parent_id) parent = s.latest(*seed.parent_id);
    }
  } else {
    seed.id = "seed";
  }
  if (ro.oracle == "synthetic") {
    oracle = std::make_unique<SyntheticOracle>();
  } else if (ro.oracle == "judge") {
    if (ro.data.empty()) throw Error(ErrorCode::kInvalidConfig, "--oracle judge needs --data");
    oracle = std::make_unique<JudgeOracle>(need_judge().pairwise, load_dataset(ro.data, ro.data_format).records,
                                           parent);
  } else {
    throw Error(ErrorCode::kInvalidConfig, "unknown oracle '" + ro.oracle + "'");
  }

  std::unique_ptr<Proposer> proposer;
  if (ro.proposer == "random") {
    proposer = std::make_unique<RandomProposer>(RandomProposerConfig{});
  } else if (ro.proposer == "llm") {
    proposer = std::make_unique<LlmProposer>(need_judge().client, PromptTemplates::defaults());
  } else {
    throw Error(ErrorCode::kInvalidConfig, "unknown proposer '" + ro.proposer + "'");
  }

  std::ofstream log_file;
  std::ostream* log = nullptr;
  if (!ro.log.empty()) {
    log_file.open(ro.log, std::ios::app);
    if (!log_file) throw Error(ErrorCode::kIoFailure, "cannot open " + ro.log);
    log = &log_file;
  }
  const auto result = run_refinement(seed, ro.cfg, *proposer, *oracle, log);
  if (!ro.records.empty()) {
    std::vector<TrainingRecord> all;
    for (const auto& it : result.history) all.insert(all.end(), it.records.begin(), it.records.end());
    std::ostringstream r;
    write_training_records(r, all);
    atomic_write(ro.records, r.str());
  }
  for (std::size_t t = 0; t < result.history.size(); ++t) {
    const auto& rw = result.history[t].next.rewards;
    std::cout << "iteration " << t + 1 << ": best " << format_rational(*std::max_element(rw.begin(), rw.end()))
              << "\n";
  }
  std::cout << "seed reward " << format_rational(result.seed_reward) << ", best reward "
            << format_rational(result.best_reward) << "\n";
  write_text(ro.out.empty() ? "" : ro.out, ro.out.empty() ? render_rubric_context(result.best)
                                                          : to_json(result.best).dump(2) + "\n");
  return 0;
}

int run_reward(const JudgeOptions& jo, const std::string& store, const std::string& rubric, const std::string& group_path,
               RewardConfig cfg, std::uint64_t seed, const std::string& records) {
  Judge judge(jo);
  const auto meta = resolve_rubric(store, rubric);
  const auto j = json::parse(read_file(group_path));
  RolloutGroup group;
  group.query = j.at("query").get<std::string>();
  group.responses = j.at("responses").get<std::vector<std::string>>();
  if (j.contains("verifiers")) group.verifiers = parse_verifier_config(j.at("verifiers"));
  if (j.contains("anchor")) group.anchor = j.at("anchor").get<std::size_t>();
  const auto result = compute_group_rewards(judge.pairwise, group, meta, cfg, seed);
  std::cout << to_json(result).dump(2) << "\n";
  if (!records.empty()) {
    std::vector<std::vector<std::string>> refs;
    for (const auto& r : result.rollouts) {
      std::vector<std::string> rr;
      if (r.judgment) {
        rr = r.judgment->forward.transcript_refs;
        rr.insert(rr.end(), r.judgment->reverse.transcript_refs.begin(), r.judgment->reverse.transcript_refs.end());
      }
      refs.push_back(rr);
    }
    const auto recs = emit_training_records(j.value("group_id", std::string("group-0")), group, result.rewards,
                                            result.advantages, result.mask, refs, result.config_digest);
    std::ostringstream out;
    write_training_records(out, recs);
    atomic_write(records, out.str());
  }
  return 0;
}

int run_analyze(const JudgeOptions& jo, const std::string& store, const std::string& rubric, const std::string& format,
                const std::string& data, const std::string& labels_path, const std::string& queue_path,
                bool summarize) {
  Judge judge(jo);
  const auto meta = resolve_rubric(store, rubric);
  const auto dataset = load_dataset(data, format);
  const auto report = evaluate(judge.pairwise, dataset, meta);

  // Preference data labels the chosen response (shown first) as the winner.
  std::map<std::string, Verdict> labels;
  for (const auto& o : report.records) {
    if (o.status == RecordStatus::kScored) labels[o.id] = Verdict::kFirstWins;
  }
  if (!labels_path.empty()) {
    std::ifstream in(labels_path);
    if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + labels_path);
    labels.clear();
    for (std::string line; std::getline(in, line);) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const auto l = json::parse(line);
      labels[l.at("id").get<std::string>()] = verdict_from_string(l.at("label").get<std::string>());
    }
  }
  auto clusters = analyze_domain_failures(report, labels, &dataset);
  if (summarize) summarize_clusters(judge.client, PromptTemplates::defaults(), clusters, jo.model);
  if (!queue_path.empty()) {
    ReviewQueue queue(queue_path);
    for (const auto& c : clusters) queue.add_cases(c.cases);
  }
  json out = json::array();
  for (const auto& c : clusters) out.push_back(to_json(c));
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_serve(const JudgeOptions& jo, const std::string& store, ServiceConfig cfg, const std::string& queue_path,
              const std::string& holdout, const std::string& holdout_format) {
  Judge judge(jo);
  RubricStore rubric_store(store);
  ReviewQueue queue(queue_path);
  if (!holdout.empty()) cfg.holdout = load_dataset(holdout, holdout_format).records;
  ServiceCore core(cfg, judge.pairwise, rubric_store, queue);
  HttpService http(core);
  const int port = http.bind();
  std::cerr << "openrs listening on " << cfg.host << ":" << port << "\n";
  http.run();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rubric-based reward engine"};
  app.require_subcommand(1);
  std::string store = "rubrics";
  app.add_option("--store", store, "Rubric store directory");

  JudgeOptions jo;

  // eval
  auto* eval = app.add_subcommand("eval", "Score a benchmark dataset");
  std::string format, data, rubric, report, transcripts;
  bool short_circuit = false;
  eval->add_option("--format", format, "pairwise|one_vs_n|variants")->required();
  eval->add_option("--data", data, "Dataset file")->required()->check(CLI::ExistingFile);
  eval->add_option("--rubric", rubric, "Rubric id in the store, or a rubric JSON file")->required();
  eval->add_option("--report", report, "Write the JSON report here");
  eval->add_option("--transcripts", transcripts, "Write per-comparison transcript lines here");
  eval->add_flag("--short-circuit", short_circuit, "one_vs_n: stop a record at its first loss");
  jo.add(eval);

  // refine
  auto* refine = app.add_subcommand("refine", "Beam-search refinement of a meta rubric");
  RefineOptions ro;
  refine->add_option("--oracle", ro.oracle, "synthetic|judge");
  refine->add_option("--proposer", ro.proposer, "random|llm");
  refine->add_option("--data", ro.data, "Oracle preference dataset (judge oracle)");
  refine->add_option("--data-format", ro.data_format, "Oracle dataset format");
  refine->add_option("--seed-rubric", ro.seed_rubric, "Store id or rubric JSON file; empty rubric by default");
  refine->add_option("--beam", ro.cfg.beam, "Beam size B");
  refine->add_option("--rollouts", ro.cfg.rollouts, "Candidates per iteration G");
  refine->add_option("--iterations", ro.cfg.iterations, "Iterations T");
  refine->add_flag("--elitism", ro.cfg.elitism, "Keep parents in the selection pool");
  refine->add_option("--seed", ro.cfg.seed, "Random seed");
  refine->add_option("--parallelism", ro.cfg.parallelism, "Concurrent candidates");
  refine->add_option("--log", ro.log, "Append iteration lines to this file");
  refine->add_option("--out", ro.out, "Write the best rubric as JSON here");
  refine->add_option("--records", ro.records, "Write proposer training records here");
  jo.add(refine);

  // reward
  auto* reward = app.add_subcommand("reward", "Rewards and advantages for one rollout group");
  std::string group_path, reward_records, gamma = "1/2", gate_policy = "report_only";
  std::uint64_t reward_seed = 0;
  std::size_t top_b = 0;
  reward->add_option("--group", group_path, "Group JSON: query, responses, verifiers, anchor")
      ->required()
      ->check(CLI::ExistingFile);
  reward->add_option("--rubric", rubric, "Rubric id in the store, or a rubric JSON file")->required();
  reward->add_option("--seed", reward_seed, "Anchor seed");
  reward->add_option("--gamma", gamma, "Verifier weight, e.g. 1/2");
  reward->add_option("--top-b", top_b, "Asymmetric top-B mask size (0 = no mask)");
  reward->add_option("--gate-policy", gate_policy, "report_only|clamp_to_min");
  reward->add_option("--records", reward_records, "Write training records here");
  jo.add(reward);

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Cluster domain failures for review");
  std::string labels, queue_path;
  bool summarize = false;
  analyze->add_option("--format", format, "pairwise|one_vs_n|variants")->required();
  analyze->add_option("--data", data, "Dataset file")->required()->check(CLI::ExistingFile);
  analyze->add_option("--rubric", rubric, "Domain rubric id")->required();
  analyze->add_option("--labels", labels, "Label lines {\"id\", \"label\"}; default: chosen wins");
  analyze->add_option("--queue", queue_path, "Review queue file receiving the failure cases");
  analyze->add_flag("--summarize", summarize, "Draft a judge summary per cluster");
  jo.add(analyze);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  ServiceConfig scfg;
  std::string holdout, holdout_format = "pairwise";
  queue_path = "review_queue.json";
  serve->add_option("--host", scfg.host, "Bind address");
  serve->add_option("--port", scfg.port, "Port (0 = any)");
  serve->add_option("--reports", scfg.reports_dir, "Directory of <run_id>.json reports");
  serve->add_option("--queue", queue_path, "Review queue file");
  serve->add_option("--holdout", holdout, "Holdout dataset scoring review edits");
  serve->add_option("--holdout-format", holdout_format, "Holdout dataset format");
  serve->add_option("--token-env", scfg.token_env, "Environment variable holding the API token");
  jo.add(serve);

  // rubric
  auto* rubric_cmd = app.add_subcommand("rubric", "Inspect and edit the rubric store");
  rubric_cmd->require_subcommand(1);
  auto* r_list = rubric_cmd->add_subcommand("list", "List rubrics");
  auto* r_show = rubric_cmd->add_subcommand("show", "Print a rubric version");
  std::string rid;
  std::optional<std::uint64_t> version;
  bool effective = false;
  r_show->add_option("id", rid)->required();
  r_show->add_option("--version", version);
  r_show->add_flag("--effective", effective, "Merge a domain rubric with its parent");
  auto* r_create = rubric_cmd->add_subcommand("create", "Add a rubric from a JSON file");
  std::string rubric_file;
  r_create->add_option("file", rubric_file)->required()->check(CLI::ExistingFile);
  auto* r_apply = rubric_cmd->add_subcommand("apply", "Commit an edit sequence");
  std::string edits_file, author = "cli";
  r_apply->add_option("id", rid)->required();
  r_apply->add_option("--edits", edits_file, "JSON array of edits")->required()->check(CLI::ExistingFile);
  r_apply->add_option("--author", author);

  CLI11_PARSE(app, argc, argv);

  try {
    if (eval->parsed()) return run_eval(jo, store, rubric, format, data, report, transcripts, short_circuit);
    if (refine->parsed()) return run_refine(jo, store, ro);
    if (reward->parsed()) {
      RewardConfig cfg;
      cfg.gamma = parse_rational(gamma);
      if (top_b > 0) cfg.top_b = top_b;
      if (gate_policy == "clamp_to_min") {
        cfg.gate_policy = GatePolicy::kClampToMin;
      } else if (gate_policy != "report_only") {
        throw Error(ErrorCode::kInvalidConfig, "unknown gate policy '" + gate_policy + "'");
      }
      return run_reward(jo, store, rubric, group_path, cfg, reward_seed, reward_records);
    }
    if (analyze->parsed()) return run_analyze(jo, store, rubric, format, data, labels, queue_path, summarize);
    if (serve->parsed()) return run_serve(jo, store, scfg, queue_path, holdout, holdout_format);

    RubricStore s(store);
    if (r_list->parsed()) {
      for (const auto& id : s.ids()) {
        const auto r = s.latest(id);
        std::cout << id << "\t" << to_string(r.kind) << "\tv" << r.version
                  << (r.parent_id ? "\tparent=" + *r.parent_id : std::string()) << "\n";
      }
    } else if (r_show->parsed()) {
      const auto r = effective ? s.effective(rid) : version ? s.at(rid, *version) : s.latest(rid);
      std::cout << to_json(r).dump(2) << "\n";
    } else if (r_create->parsed()) {
      const auto r = rubric_from_json(json::parse(read_file(rubric_file)));
      s.create(r);
      std::cout << "created " << r.id << " v" << r.version << "\n";
    } else if (r_apply->parsed()) {
      const auto r = s.commit(rid, edits_from_json(json::parse(read_file(edits_file))), author);
      std::cout << "committed " << r.id << " v" << r.version << "\n";
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "openrs: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "openrs: " << e.what() << "\n";
    return 2;
  }
}
