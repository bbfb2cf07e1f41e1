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

#include "openrs/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "openrs/util.hpp"

namespace openrs {
namespace {

using nlohmann::json;

std::string string_field(const json& j, const char* key, std::size_t line) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw MalformedRecordError(line, std::string("field '") + key + "' must be a string");
  }
  return j.at(key).get<std::string>();
}

std::vector<std::string> list_field(const json& j, const char* key, std::size_t line) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw MalformedRecordError(line, std::string("field '") + key + "' must be an array");
  }
  std::vector<std::string> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_string()) throw MalformedRecordError(line, std::string("field '") + key + "' must hold strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

BenchRecord parse_record(const json& j, DatasetFormat format, std::size_t line) {
  if (!j.is_object()) throw MalformedRecordError(line, "record must be an object");
  BenchRecord r;
  r.id = string_field(j, "id", line);
  r.query = string_field(j, "query", line);
  r.category = j.contains("category") ? string_field(j, "category", line) : "uncategorized";
  if (j.contains("label_error")) {
    if (!j.at("label_error").is_boolean()) throw MalformedRecordError(line, "label_error must be a boolean");
    r.label_error = j.at("label_error").get<bool>();
  }
  if (j.contains("verifiers")) r.verifiers = j.at("verifiers");
  switch (format) {
    case DatasetFormat::kPairwise:
      r.chosen = {string_field(j, "chosen", line)};
      r.rejected = {string_field(j, "rejected", line)};
      if (r.chosen[0] == r.rejected[0]) throw MalformedRecordError(line, "chosen and rejected are identical");
      break;
    case DatasetFormat::kOneVsN:
      r.chosen = {string_field(j, "chosen", line)};
      r.rejected = list_field(j, "rejected", line);
      if (r.rejected.empty()) throw MalformedRecordError(line, "one_vs_n needs at least one rejected response");
      break;
    case DatasetFormat::kVariants:
      r.chosen = list_field(j, "chosen", line);
      r.rejected = list_field(j, "rejected", line);
      if (r.chosen.size() != 3 || r.rejected.size() != 3) {
        throw MalformedRecordError(line, "variants need exactly 3 chosen and 3 rejected responses");
      }
      break;
  }
  return r;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string json_number_or_null(const std::optional<double>& v) { return v ? fmt("%.4f", *v) : "n/a"; }

Comparison compare(PairwiseJudge& judge, const BenchRecord& r, std::size_t ci, std::size_t ri,
                   const MetaRubric& meta) {
  const auto j = judge.judge_pair(r.query, r.chosen[ci], r.rejected[ri], meta);
  Comparison c;
  c.chosen_index = ci;
  c.rejected_index = ri;
  c.verdict = j.verdict;
  c.forward = j.forward.score.value;
  c.reverse = j.reverse.score.value;
  c.transcript_refs = j.forward.transcript_refs;
  c.transcript_refs.insert(c.transcript_refs.end(), j.reverse.transcript_refs.begin(), j.reverse.transcript_refs.end());
  return c;
}

template <typename Body>
RecordOutcome guarded(const BenchRecord& r, Body body) {
  RecordOutcome o;
  o.id = r.id;
  o.category = r.category;
  if (r.label_error) {
    o.status = RecordStatus::kExcluded;
    return o;
  }
  try {
    body(o);
  } catch (const Error& e) {
    o.status = RecordStatus::kUnevaluated;
    o.error = e.what();
    o.credit = Rational(0);
  }
  o.passes = 2 * o.comparisons.size();
  return o;
}

Outcome fold_outcome(const std::vector<Comparison>& cs, std::size_t expected) {
  bool any_loss = false;
  std::size_t wins = 0;
  for (const auto& c : cs) {
    any_loss = any_loss || c.verdict == Verdict::kSecondWins;
    wins += c.verdict == Verdict::kFirstWins ? 1 : 0;
  }
  if (any_loss) return Outcome::kLoss;
  return wins == expected ? Outcome::kWin : Outcome::kTie;
}

template <typename PerRecord>
EvalReport run_protocol(PairwiseJudge& judge, DatasetFormat protocol, std::span<const BenchRecord> records,
                        const MetaRubric& meta, const EvalOptions& opts, PerRecord per_record) {
  std::vector<RecordOutcome> outcomes(records.size());
  std::size_t width = opts.parallelism;
  if (width == 0) width = static_cast<std::size_t>(std::max(1, judge.client().config().max_in_flight));
  parallel_for(records.size(), width, [&](std::size_t i) { outcomes[i] = per_record(records[i]); });
  auto report = compute_metrics(protocol, std::move(outcomes));
  report.config_digest = sha256_hex(judge.config_digest(meta) + "|protocol=" + std::string(to_string(protocol)) +
                                    (opts.short_circuit ? "|short_circuit" : ""));
  return report;
}

}  // namespace

std::string_view to_string(DatasetFormat f) {
  switch (f) {
    case DatasetFormat::kPairwise: return "pairwise";
    case DatasetFormat::kOneVsN: return "one_vs_n";
    case DatasetFormat::kVariants: return "variants";
  }
  return "unknown";
}

DatasetFormat format_from_string(std::string_view s) {
  if (s == "pairwise") return DatasetFormat::kPairwise;
  if (s == "one_vs_n") return DatasetFormat::kOneVsN;
  if (s == "variants") return DatasetFormat::kVariants;
  throw Error(ErrorCode::kUnknownFormat, "unknown dataset format '" + std::string(s) + "'");
}

std::string_view to_string(RecordStatus s) {
  switch (s) {
    case RecordStatus::kScored: return "scored";
    case RecordStatus::kExcluded: return "excluded";
    case RecordStatus::kUnevaluated: return "unevaluated";
  }
  return "unknown";
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::kWin: return "win";
    case Outcome::kLoss: return "loss";
    case Outcome::kTie: return "tie";
  }
  return "unknown";
}

std::size_t Dataset::excluded() const {
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const auto& r) { return r.label_error; }));
}

Dataset parse_dataset(std::istream& in, DatasetFormat format) {
  Dataset d;
  d.format = format;
  std::set<std::string> ids;
  std::string text;
  std::size_t line = 0;
  bool first = true;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw MalformedRecordError(line, e.what());
    }
    if (first && j.is_object() && j.contains("schema")) {
      first = false;
      if (j.at("schema") != kDatasetSchema) throw MalformedRecordError(line, "unknown schema");
      if (j.value("version", 0) > kDatasetSchemaVersion) throw MalformedRecordError(line, "unsupported schema version");
      if (j.contains("format") && format_from_string(j.at("format").get<std::string>()) != format) {
        throw MalformedRecordError(line, "header declares a different format");
      }
      continue;
    }
    first = false;
    auto r = parse_record(j, format, line);
    if (!ids.insert(r.id).second) throw MalformedRecordError(line, "duplicate id '" + r.id + "'");
    d.records.push_back(std::move(r));
  }
  return d;
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot read dataset " + path.string());
  return parse_dataset(in, format);
}

Dataset load_dataset(const std::filesystem::path& path, std::string_view format) {
  return load_dataset(path, format_from_string(format));
}

json to_json(const BenchRecord& r, DatasetFormat format) {
  json j = {{"id", r.id}, {"query", r.query}, {"category", r.category}};
  if (format == DatasetFormat::kVariants) {
    j["chosen"] = r.chosen;
  } else {
    j["chosen"] = r.chosen.at(0);
  }
  if (format == DatasetFormat::kPairwise) {
    j["rejected"] = r.rejected.at(0);
  } else {
    j["rejected"] = r.rejected;
  }
  if (r.label_error) j["label_error"] = true;
  if (!r.verifiers.is_null()) j["verifiers"] = r.verifiers;
  return j;
}

void write_dataset(std::ostream& out, const Dataset& d) {
  out << json{{"schema", kDatasetSchema}, {"version", kDatasetSchemaVersion}, {"format", to_string(d.format)}}.dump()
      << '\n';
  for (const auto& r : d.records) out << to_json(r, d.format).dump() << '\n';
}

RecordOutcome eval_pairwise_record(PairwiseJudge& judge, const BenchRecord& r, const MetaRubric& meta) {
  return guarded(r, [&](RecordOutcome& o) {
    o.comparisons.push_back(compare(judge, r, 0, 0, meta));
    o.outcome = fold_outcome(o.comparisons, 1);
    o.credit = Rational(o.outcome == Outcome::kWin ? 1 : 0);
  });
}

RecordOutcome eval_one_vs_n_record(PairwiseJudge& judge, const BenchRecord& r, const MetaRubric& meta,
                                   bool short_circuit) {
  return guarded(r, [&](RecordOutcome& o) {
    for (std::size_t k = 0; k < r.rejected.size(); ++k) {
      o.comparisons.push_back(compare(judge, r, 0, k, meta));
      if (short_circuit && o.comparisons.back().verdict == Verdict::kSecondWins) break;
    }
    o.outcome = fold_outcome(o.comparisons, r.rejected.size());
    o.credit = Rational(o.outcome == Outcome::kWin ? 1 : 0);
  });
}

RecordOutcome eval_variants_record(PairwiseJudge& judge, const BenchRecord& r, const MetaRubric& meta) {
  return guarded(r, [&](RecordOutcome& o) {
    std::int64_t wins = 0;
    for (std::size_t ci = 0; ci < r.chosen.size(); ++ci) {
      for (std::size_t ri = 0; ri < r.rejected.size(); ++ri) {
        o.comparisons.push_back(compare(judge, r, ci, ri, meta));
        wins += o.comparisons.back().verdict == Verdict::kFirstWins ? 1 : 0;
      }
    }
    o.outcome = fold_outcome(o.comparisons, o.comparisons.size());
    o.credit = Rational(wins, static_cast<std::int64_t>(o.comparisons.size()));
  });
}

EvalReport eval_pairwise(PairwiseJudge& judge, std::span<const BenchRecord> records, const MetaRubric& meta,
                         const EvalOptions& opts) {
  return run_protocol(judge, DatasetFormat::kPairwise, records, meta, opts,
                      [&](const BenchRecord& r) { return eval_pairwise_record(judge, r, meta); });
}

EvalReport eval_one_vs_n(PairwiseJudge& judge, std::span<const BenchRecord> records, const MetaRubric& meta,
                         const EvalOptions& opts) {
  return run_protocol(judge, DatasetFormat::kOneVsN, records, meta, opts, [&](const BenchRecord& r) {
    return eval_one_vs_n_record(judge, r, meta, opts.short_circuit);
  });
}

EvalReport eval_variants(PairwiseJudge& judge, std::span<const BenchRecord> records, const MetaRubric& meta,
                         const EvalOptions& opts) {
  return run_protocol(judge, DatasetFormat::kVariants, records, meta, opts,
                      [&](const BenchRecord& r) { return eval_variants_record(judge, r, meta); });
}

EvalReport evaluate(PairwiseJudge& judge, const Dataset& dataset, const MetaRubric& meta, const EvalOptions& opts) {
  switch (dataset.format) {
    case DatasetFormat::kPairwise: return eval_pairwise(judge, dataset.records, meta, opts);
    case DatasetFormat::kOneVsN: return eval_one_vs_n(judge, dataset.records, meta, opts);
    case DatasetFormat::kVariants: return eval_variants(judge, dataset.records, meta, opts);
  }
  throw Error(ErrorCode::kUnknownFormat, "unknown dataset format");
}

EvalReport compute_metrics(DatasetFormat protocol, std::vector<RecordOutcome> outcomes) {
  std::sort(outcomes.begin(), outcomes.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  EvalReport r;
  r.protocol = protocol;
  r.total = outcomes.size();
  for (const auto& o : outcomes) {
    r.pipeline_passes += o.passes;
    for (const auto& c : o.comparisons) r.judge_calls += c.transcript_refs.size();
    if (o.status == RecordStatus::kExcluded) {
      ++r.excluded;
      continue;
    }
    if (o.status == RecordStatus::kUnevaluated) {
      ++r.unevaluated;
      continue;
    }
    ++r.scored;
    r.credit += o.credit;
    auto& cat = r.categories[o.category];
    ++cat.scored;
    cat.credit += o.credit;
    for (const auto& c : o.comparisons) {
      ++r.verdicts;
      r.same += c.verdict == Verdict::kSame ? 1 : 0;
    }
    switch (o.outcome) {
      case Outcome::kWin: ++r.wins; break;
      case Outcome::kLoss: ++r.losses; break;
      case Outcome::kTie: ++r.ties; break;
    }
  }
  if (r.scored > 0) r.accuracy = to_double(r.credit / static_cast<std::int64_t>(r.scored));
  if (r.verdicts > 0) r.same_rate = static_cast<double>(r.same) / static_cast<double>(r.verdicts);
  r.records = std::move(outcomes);
  return r;
}

json to_json(const Comparison& c) {
  return {{"chosen", c.chosen_index},
          {"rejected", c.rejected_index},
          {"verdict", to_string(c.verdict)},
          {"forward", format_rational(c.forward)},
          {"reverse", format_rational(c.reverse)},
          {"transcript_refs", c.transcript_refs}};
}

json to_json(const RecordOutcome& r) {
  json cs = json::array();
  for (const auto& c : r.comparisons) cs.push_back(to_json(c));
  json j = {{"id", r.id},
            {"category", r.category},
            {"status", to_string(r.status)},
            {"credit", format_rational(r.credit)},
            {"outcome", to_string(r.outcome)},
            {"passes", r.passes},
            {"comparisons", cs}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

json to_json(const EvalReport& r) {
  json cats = json::object();
  for (const auto& [name, c] : r.categories) {
    const auto acc = c.scored ? to_double(c.credit / static_cast<std::int64_t>(c.scored)) : 0.0;
    cats[name] = {{"scored", c.scored}, {"credit", format_rational(c.credit)}, {"accuracy", acc}};
  }
  json records = json::array();
  for (const auto& o : r.records) records.push_back(to_json(o));
  return {{"schema", "openrs.eval_report"},
          {"version", 1},
          {"protocol", to_string(r.protocol)},
          {"empty", r.scored == 0},
          {"records_total", r.total},
          {"scored", r.scored},
          {"excluded", r.excluded},
          {"unevaluated", r.unevaluated},
          {"credit", format_rational(r.credit)},
          {"accuracy", r.accuracy ? json(*r.accuracy) : json(nullptr)},
          {"categories", cats},
          {"verdicts", r.verdicts},
          {"same", r.same},
          {"same_rate", r.same_rate ? json(*r.same_rate) : json(nullptr)},
          {"counts", {{"win", r.wins}, {"loss", r.losses}, {"tie", r.ties}}},
          {"pipeline_passes", r.pipeline_passes},
          {"judge_calls", r.judge_calls},
          {"config_digest", r.config_digest},
          {"records", records}};
}

std::string summary_table(const EvalReport& r) {
  std::ostringstream out;
  auto row = [&](const std::string& k, const std::string& v) {
    out << k << std::string(k.size() < 14 ? 14 - k.size() : 1, ' ') << v << '\n';
  };
  row("protocol", std::string(to_string(r.protocol)));
  row("records", std::to_string(r.total) + " (" + std::to_string(r.scored) + " scored, " + std::to_string(r.excluded) +
                     " excluded, " + std::to_string(r.unevaluated) + " unevaluated)");
  row("accuracy", json_number_or_null(r.accuracy) + (r.scored ? " (" + format_rational(r.credit) + " of " +
                                                                    std::to_string(r.scored) + ")"
                                                              : ""));
  row("same rate", json_number_or_null(r.same_rate) + " (" + std::to_string(r.same) + " of " +
                       std::to_string(r.verdicts) + " verdicts)");
  row("win/loss/tie", std::to_string(r.wins) + "/" + std::to_string(r.losses) + "/" + std::to_string(r.ties));
  row("passes", std::to_string(r.pipeline_passes));
  row("judge calls", std::to_string(r.judge_calls));
  if (!r.categories.empty()) {
    out << '\n';
    std::size_t width = 8;
    for (const auto& [name, _] : r.categories) width = std::max(width, name.size());
    out << "category" << std::string(width - 8 + 2, ' ') << "scored  accuracy\n";
    for (const auto& [name, c] : r.categories) {
      const auto acc = c.scored ? to_double(c.credit / static_cast<std::int64_t>(c.scored)) : 0.0;
      char buf[64];
      std::snprintf(buf, sizeof buf, "%6zu  %8.4f", c.scored, acc);
      out << name << std::string(width - name.size() + 2, ' ') << buf << '\n';
    }
  }
  return out.str();
}

void write_transcripts(std::ostream& out, const EvalReport& r) {
  for (const auto& o : r.records) {
    for (const auto& c : o.comparisons) {
      auto j = to_json(c);
      j["record"] = o.id;
      out << j.dump() << '\n';
    }
  }
}

}  // namespace openrs
