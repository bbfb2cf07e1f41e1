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

// Benchmark datasets and the three aggregation protocols.
//
//   pairwise   one bidirectional judgment per record, credit iff chosen wins
//   one_vs_n   chosen against each of N rejected: Win / Loss / Tie
//   variants   3 x 3 phrasing variants, credit = mean over the 9 pairings
//
// A "same" verdict never earns credit. Records flagged label_error are
// loaded, counted and excluded from scoring.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "openrs/error.hpp"
#include "openrs/pairwise.hpp"
#include "openrs/rational.hpp"

namespace openrs {

enum class DatasetFormat { kPairwise, kOneVsN, kVariants };

std::string_view to_string(DatasetFormat f);
DatasetFormat format_from_string(std::string_view s);

inline constexpr const char* kDatasetSchema = "openrs.dataset";
inline constexpr int kDatasetSchemaVersion = 1;

/// One benchmark record. Pairwise: one chosen, one rejected. one_vs_n: one
/// chosen, N >= 1 rejected. Variants: three of each.
struct BenchRecord {
  std::string id;
  std::string query;
  std::vector<std::string> chosen;
  std::vector<std::string> rejected;
  std::string category;
  bool label_error = false;
  nlohmann::json verifiers;  // raw annotations, parsed by consumers
};

struct Dataset {
  DatasetFormat format = DatasetFormat::kPairwise;
  std::vector<BenchRecord> records;

  std::size_t excluded() const;
};

class MalformedRecordError : public Error {
 public:
  MalformedRecordError(std::size_t line, const std::string& message)
      : Error(ErrorCode::kMalformedRecord, "line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Line-delimited records; an optional first line {"schema": "openrs.dataset",
/// "version": 1} is accepted. Blank lines are skipped.
Dataset parse_dataset(std::istream& in, DatasetFormat format);
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format);
Dataset load_dataset(const std::filesystem::path& path, std::string_view format);

nlohmann::json to_json(const BenchRecord& r, DatasetFormat format);
void write_dataset(std::ostream& out, const Dataset& d);

/// One bidirectional judgment of chosen[ci] (presented as A) against rejected[ri].
struct Comparison {
  std::size_t chosen_index = 0;
  std::size_t rejected_index = 0;
  Verdict verdict = Verdict::kSame;  // A = chosen
  Rational forward{0};
  Rational reverse{0};
  std::vector<std::string> transcript_refs;
};

enum class RecordStatus { kScored, kExcluded, kUnevaluated };
enum class Outcome { kWin, kLoss, kTie };

struct RecordOutcome {
  std::string id;
  std::string category;
  RecordStatus status = RecordStatus::kScored;
  std::vector<Comparison> comparisons;
  Rational credit{0};  // in [0, 1]
  Outcome outcome = Outcome::kTie;
  std::size_t passes = 0;  // directional pipeline passes
  std::string error;
};

struct CategoryStats {
  std::size_t scored = 0;
  Rational credit{0};
};

struct EvalReport {
  DatasetFormat protocol = DatasetFormat::kPairwise;
  std::size_t total = 0;
  std::size_t scored = 0;
  std::size_t excluded = 0;
  std::size_t unevaluated = 0;
  Rational credit{0};
  std::optional<double> accuracy;  // empty when nothing was scored
  std::map<std::string, CategoryStats> categories;
  std::size_t verdicts = 0;
  std::size_t same = 0;
  std::optional<double> same_rate;
  std::size_t wins = 0;
  std::size_t losses = 0;
  std::size_t ties = 0;
  std::size_t pipeline_passes = 0;
  std::size_t judge_calls = 0;  // logical judge requests, replays included
  std::string config_digest;
  std::vector<RecordOutcome> records;  // sorted by id
};

struct EvalOptions {
  bool short_circuit = false;  // one_vs_n: stop at the first loss
  std::size_t parallelism = 0;  // 0 = the judge client's in-flight cap
};

RecordOutcome eval_pairwise_record(PairwiseJudge& judge, const BenchRecord& r, const MetaRubric& meta);
RecordOutcome eval_one_vs_n_record(PairwiseJudge& judge, const BenchRecord& r, const MetaRubric& meta,
                                   bool short_circuit = false);
RecordOutcome eval_variants_record(PairwiseJudge& judge, const BenchRecord& r, const MetaRubric& meta);

EvalReport eval_pairwise(PairwiseJudge& judge, std::span<const BenchRecord> records, const MetaRubric& meta,
                         const EvalOptions& opts = {});
EvalReport eval_one_vs_n(PairwiseJudge& judge, std::span<const BenchRecord> records, const MetaRubric& meta,
                         const EvalOptions& opts = {});
EvalReport eval_variants(PairwiseJudge& judge, std::span<const BenchRecord> records, const MetaRubric& meta,
                         const EvalOptions& opts = {});
EvalReport evaluate(PairwiseJudge& judge, const Dataset& dataset, const MetaRubric& meta,
                    const EvalOptions& opts = {});

/// Folds per-record outcomes; independent of their order.
EvalReport compute_metrics(DatasetFormat protocol, std::vector<RecordOutcome> outcomes);

std::string_view to_string(RecordStatus s);
std::string_view to_string(Outcome o);

nlohmann::json to_json(const Comparison& c);
nlohmann::json to_json(const RecordOutcome& r);
nlohmann::json to_json(const EvalReport& r);

/// Human-readable summary table.
std::string summary_table(const EvalReport& r);

/// One line per comparison: record id, pairing, verdict, scores, cache keys.
void write_transcripts(std::ostream& out, const EvalReport& r);

}  // namespace openrs
