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

#include "openrs/rational.hpp"

#include <cctype>
#include <charconv>
#include <limits>
#include <stdexcept>

namespace openrs {
namespace {

std::int64_t parse_int(std::string_view s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw std::invalid_argument("not an integer: " + std::string(s));
  }
  return v;
}

std::int64_t pow10(int e) {
  if (e < 0 || e > 18) throw std::invalid_argument("decimal exponent out of range");
  std::int64_t p = 1;
  for (int i = 0; i < e; ++i) p *= 10;
  return p;
}

Rational parse_decimal(std::string_view s) {
  int exponent = 0;
  if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
    exponent = static_cast<int>(parse_int(s.substr(e + 1 + (s[e + 1] == '+' ? 1 : 0))));
    s = s.substr(0, e);
  }
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  std::string digits;
  int frac = 0;
  bool seen_dot = false;
  for (char c : s) {
    if (c == '.') {
      if (seen_dot) throw std::invalid_argument("malformed decimal");
      seen_dot = true;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      if (seen_dot) ++frac;
    } else {
      throw std::invalid_argument("malformed decimal");
    }
  }
  if (digits.empty()) throw std::invalid_argument("malformed decimal");
  // Trailing zeros after the dot carry no value and only risk overflow.
  while (frac > 0 && digits.size() > 1 && digits.back() == '0') {
    digits.pop_back();
    --frac;
  }
  std::int64_t mantissa = parse_int(digits);
  if (negative) mantissa = -mantissa;
  const int scale = exponent - frac;
  if (scale >= 0) return Rational(mantissa * pow10(scale));
  return Rational(mantissa, pow10(-scale));
}

}  // namespace

Rational parse_rational(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    const auto den = parse_int(text.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator");
    return Rational(parse_int(text.substr(0, slash)), den);
  }
  return parse_decimal(text);
}

std::string format_rational(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

Rational rational_from_json(const nlohmann::json& j) {
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  if (j.is_number_float()) return parse_decimal(j.dump());
  if (j.is_string()) return parse_rational(j.get<std::string>());
  throw std::invalid_argument("expected a number or rational string, got " + j.dump());
}

nlohmann::json rational_to_json(const Rational& r) {
  if (r.denominator() == 1) return r.numerator();
  return format_rational(r);
}

}  // namespace openrs
