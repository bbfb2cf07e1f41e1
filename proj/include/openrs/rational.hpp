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
#include <string>
#include <string_view>

#include <boost/rational.hpp>
#include <json.hpp>

namespace openrs {

using Rational = boost::rational<std::int64_t>;

inline double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

/// Parses "3", "-3/4", "0.35" or "2.5e-1" exactly. Throws std::invalid_argument.
Rational parse_rational(std::string_view text);

/// "3" for integers, "p/q" otherwise.
std::string format_rational(const Rational& r);

/// JSON integers become integers; JSON floats are read through their shortest
/// decimal form so 0.35 maps to 7/20 rather than the nearest binary double.
Rational rational_from_json(const nlohmann::json& j);
nlohmann::json rational_to_json(const Rational& r);

}  // namespace openrs
