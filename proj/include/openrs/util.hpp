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

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace openrs {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Runs fn(0..n-1) on up to `width` threads. Exceptions from fn are captured
/// and the first one (by index) is rethrown after all workers join.
void parallel_for(std::size_t n, std::size_t width, const std::function<void(std::size_t)>& fn);

/// Write to a sibling temp file then rename over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace openrs
