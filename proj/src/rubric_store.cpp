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

#include "openrs/rubric_store.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <mutex>
#include <sstream>

#include "openrs/error.hpp"
#include "openrs/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace openrs {
namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool valid_id(const std::string& id) {
  if (id.empty() || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
  });
}

}  // namespace

RubricStore::RubricStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec || !fs::is_directory(root_)) {
    throw Error(ErrorCode::kStoreUnavailable, "cannot use rubric store at " + root_.string());
  }
}

fs::path RubricStore::version_path(const std::string& id, std::uint64_t version) const {
  return root_ / id / ("v" + std::to_string(version) + ".rubric");
}

std::vector<std::uint64_t> RubricStore::versions_locked(const std::string& id) const {
  std::vector<std::uint64_t> out;
  if (!valid_id(id)) return out;
  const auto dir = root_ / id;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.size() > 8 && name.front() == 'v' && name.ends_with(".rubric")) {
      try {
        out.push_back(std::stoull(name.substr(1, name.size() - 8)));
      } catch (const std::exception&) {
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

MetaRubric RubricStore::read_locked(const std::string& id, std::uint64_t version) const {
  const auto path = version_path(id, version);
  if (!valid_id(id) || !fs::exists(path)) {
    throw Error(ErrorCode::kRubricNotFound, id + " v" + std::to_string(version));
  }
  try {
    return rubric_from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kStoreUnavailable, "corrupt rubric file " + path.string() + ": " + e.what());
  }
}

void RubricStore::write_locked(const MetaRubric& rubric) {
  fs::create_directories(root_ / rubric.id);
  atomic_write(version_path(rubric.id, rubric.version), to_json(rubric).dump(2) + "\n");
}

void RubricStore::create(const MetaRubric& rubric) {
  validate_rubric(rubric);
  if (!valid_id(rubric.id)) throw Error(ErrorCode::kInvalidCriterion, "unusable rubric id '" + rubric.id + "'");
  std::unique_lock lock(mutex_);
  if (!versions_locked(rubric.id).empty()) throw Error(ErrorCode::kDuplicateRubric, rubric.id);
  if (rubric.kind == RubricKind::kDomain) {
    const auto parent = versions_locked(*rubric.parent_id);
    if (parent.empty()) throw Error(ErrorCode::kParentMismatch, "parent '" + *rubric.parent_id + "' not in store");
    if (read_locked(*rubric.parent_id, parent.back()).kind != RubricKind::kGeneral) {
      throw Error(ErrorCode::kParentMismatch, "parent '" + *rubric.parent_id + "' is not a general rubric");
    }
  }
  write_locked(rubric);
}

bool RubricStore::contains(const std::string& id) const {
  std::shared_lock lock(mutex_);
  return !versions_locked(id).empty();
}

std::vector<std::string> RubricStore::ids() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(root_)) {
    if (entry.is_directory() && !versions_locked(entry.path().filename().string()).empty()) {
      out.push_back(entry.path().filename().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::uint64_t> RubricStore::versions(const std::string& id) const {
  std::shared_lock lock(mutex_);
  return versions_locked(id);
}

MetaRubric RubricStore::latest(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto vs = versions_locked(id);
  if (vs.empty()) throw Error(ErrorCode::kRubricNotFound, id);
  return read_locked(id, vs.back());
}

MetaRubric RubricStore::at(const std::string& id, std::uint64_t version) const {
  std::shared_lock lock(mutex_);
  return read_locked(id, version);
}

std::vector<ChangelogRecord> RubricStore::changelog(const std::string& id) const {
  std::shared_lock lock(mutex_);
  std::vector<ChangelogRecord> out;
  if (versions_locked(id).empty()) throw Error(ErrorCode::kRubricNotFound, id);
  std::ifstream in(root_ / id / "changelog.jsonl");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = json::parse(line);
    out.push_back({j.at("version").get<std::uint64_t>(), j.value("edits_digest", ""), j.value("timestamp", ""),
                   j.value("author", ""), edits_from_json(j.at("edits"))});
  }
  return out;
}

MetaRubric RubricStore::effective(const std::string& id) const {
  const auto rubric = latest(id);
  if (rubric.kind == RubricKind::kGeneral) return rubric;
  return merge_hierarchy(latest(*rubric.parent_id), rubric);
}

MetaRubric RubricStore::commit(const std::string& id, const EditSequence& seq, const std::string& author) {
  std::unique_lock lock(mutex_);
  const auto vs = versions_locked(id);
  if (vs.empty()) throw Error(ErrorCode::kRubricNotFound, id);
  const auto current = read_locked(id, vs.back());
  const auto ts = utc_now();
  auto next = apply_edits(current, seq, {author, ts});
  if (next.version == current.version) return next;

  write_locked(next);
  json line{{"version", next.version},
            {"edits_digest", next.changelog.back().edits_digest},
            {"timestamp", ts},
            {"author", author},
            {"edits", to_json(seq)}};
  std::ofstream out(root_ / id / "changelog.jsonl", std::ios::app);
  out << line.dump() << "\n";
  if (!out) throw Error(ErrorCode::kIoFailure, "changelog append failed for " + id);
  return next;
}

}  // namespace openrs
