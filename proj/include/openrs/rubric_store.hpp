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

#pragma once

#include <cstdint>
#include <filesystem>
#include <shared_mutex>
#include <string>
#include <vector>

#include "openrs/rubric.hpp"

namespace openrs {

/// One line of `<root>/<id>/changelog.jsonl`.
struct ChangelogRecord {
  std::uint64_t version = 0;
  std::string edits_digest;
  std::string timestamp;
  std::string author;
  EditSequence edits;
};

/// Directory-backed rubric store: `<root>/<id>/v<version>.rubric` per
/// version, all versions kept side by side. Single writer, many readers.
class RubricStore {
 public:
  explicit RubricStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  /// Stores a new rubric. Domain rubrics must name an existing general one.
  void create(const MetaRubric& rubric);

  bool contains(const std::string& id) const;
  std::vector<std::string> ids() const;
  std::vector<std::uint64_t> versions(const std::string& id) const;
  MetaRubric latest(const std::string& id) const;
  MetaRubric at(const std::string& id, std::uint64_t version) const;
  std::vector<ChangelogRecord> changelog(const std::string& id) const;

  /// Latest version, merged with its general parent when it is a domain rubric.
  MetaRubric effective(const std::string& id) const;

  /// Applies `seq` to the latest version and persists the result. Nothing is
  /// written when application fails.
  MetaRubric commit(const std::string& id, const EditSequence& seq, const std::string& author);

 private:
  std::filesystem::path version_path(const std::string& id, std::uint64_t version) const;
  std::vector<std::uint64_t> versions_locked(const std::string& id) const;
  MetaRubric read_locked(const std::string& id, std::uint64_t version) const;
  void write_locked(const MetaRubric& rubric);

  std::filesystem::path root_;
  mutable std::shared_mutex mutex_;
};

}  // namespace openrs
