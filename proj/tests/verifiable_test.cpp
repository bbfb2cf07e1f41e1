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

#include <random>

#include "openrs/error.hpp"
#include "openrs/verifiable.hpp"

using namespace openrs;
using nlohmann::json;

namespace {

std::string words(int n) {
  std::string s;
  for (int i = 0; i < n; ++i) s += (i ? " w" : "w") + std::to_string(i);
  return s;
}

VerifiableRubric parse(const std::string& text) { return parse_verifier_config(json::parse(text)); }

ErrorCode code_of(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kBadRequest;
}

}  // namespace

TEST_SUITE("verifiable-rubric") {
  TEST_CASE("word count range") {
    const auto r = parse(R"([{"kind": "word_count_range", "min": 10, "max": 100}])");
    CHECK(run_verifier(r.specs[0], words(50)).value == 1);
    CHECK(run_verifier(r.specs[0], words(5)).value == -1);
    CHECK(run_verifier(r.specs[0], words(101)).value == -1);
    CHECK(run_verifier(r.specs[0], words(10)).value == 1);
  }

  TEST_CASE("word counting trims and splits on any whitespace") {
    CHECK(count_words("") == 0);
    CHECK(count_words("   \n\t ") == 0);
    CHECK(count_words("  a  b\tc\nd  ") == 4);
  }

  TEST_CASE("char length counts code points") {
    CHECK(count_chars("abc") == 3);
    CHECK(count_chars("h\xC3\xA9llo") == 5);
    const auto r = parse(R"([{"kind": "char_length_range", "max": 5}])");
    CHECK(run_verifier(r.specs[0], "h\xC3\xA9llo").value == 1);
    CHECK(run_verifier(r.specs[0], "hello!").value == -1);
  }

  TEST_CASE("exact match normalizers") {
    const auto r = parse(R"([{"kind": "exact_match", "reference": "42", "normalizer": "trim_casefold"},
                             {"kind": "exact_match", "reference": "Yes"}])");
    CHECK(run_verifier(r.specs[0], " 42 ").value == 1);
    CHECK(run_verifier(r.specs[0], "43").value == -1);
    CHECK(run_verifier(r.specs[1], "Yes").value == 1);
    CHECK(run_verifier(r.specs[1], " Yes").value == -1);
    CHECK(run_verifier(r.specs[1], "yes").value == -1);
  }

  TEST_CASE("pattern, include, exclude, structured") {
    const auto r = parse(R"([{"id": "p", "kind": "pattern_match", "pattern": "^Answer: [0-9]+$"},
                             {"id": "i", "kind": "must_include", "literals": ["alpha", "beta"]},
                             {"id": "x", "kind": "must_exclude", "literals": ["TODO"]},
                             {"id": "s", "kind": "structured_wellformed"}])");
    CHECK(run_verifier(r.specs[0], "Answer: 12").value == 1);
    CHECK(run_verifier(r.specs[0], "Answer: twelve").value == -1);
    CHECK(run_verifier(r.specs[1], "alpha and beta").value == 1);
    CHECK(run_verifier(r.specs[1], "alpha only").value == -1);
    CHECK(run_verifier(r.specs[2], "done").value == 1);
    CHECK(run_verifier(r.specs[2], "TODO later").value == -1);
    CHECK(run_verifier(r.specs[3], " {\"a\": [1, 2]} ").value == 1);
    CHECK(run_verifier(r.specs[3], "{\"a\": [1, 2}").value == -1);
    CHECK(run_verifier(r.specs[3], "42").value == -1);
  }

  TEST_CASE("run_all sums reward specs only") {
    CHECK(run_all({}, "x").sum == 0);
    const auto r = parse(R"([{"kind": "must_include", "literals": ["a"]},
                             {"kind": "must_include", "literals": ["z"]}])");
    CHECK(run_all(r, "abc").sum == 0);
    const auto three = parse(R"([{"kind": "must_include", "literals": ["a"]},
                                 {"kind": "must_include", "literals": ["b"]},
                                 {"kind": "must_include", "literals": ["c"]},
                                 {"kind": "must_include", "literals": ["q"], "role": "gate"}])");
    const auto run = run_all(three, "abc");
    CHECK(run.sum == 3);
    CHECK(run.outcomes.size() == 4);
    CHECK(run.outcomes[3].value == -1);
  }

  TEST_CASE("gate is independent of the reward sum") {
    CHECK(gate({}, "anything").pass);
    const auto r = parse(R"([{"id": "g", "kind": "must_exclude", "literals": ["bad"], "role": "gate"},
                             {"kind": "must_include", "literals": ["good"]},
                             {"kind": "must_include", "literals": ["fine"]}])");
    const auto g = gate(r, "good fine bad");
    CHECK_FALSE(g.pass);
    REQUIRE(g.failed.size() == 1);
    CHECK(g.failed[0] == "g");
    CHECK(run_all(r, "good fine bad").sum == 2);
  }

  TEST_CASE("config errors") {
    CHECK(parse(R"({"verifiers": [{"kind": "word_count_range", "min": 1}]})").specs.size() == 1);
    CHECK(parse(R"({"query": "no verifiers"})").specs.empty());
    CHECK(code_of(R"([{"kind": "word_count_range", "min": 5, "max": 1}])") == ErrorCode::kInvalidBounds);
    CHECK(code_of(R"([{"kind": "rhymes"}])") == ErrorCode::kUnknownKind);
    CHECK(code_of(R"([{"kind": "pattern_match", "pattern": "(unclosed"}])") == ErrorCode::kPatternSyntax);
    CHECK(code_of(R"([{"kind": "exact_match"}])") == ErrorCode::kInvalidSpec);
    CHECK(code_of(R"([{"kind": "must_include", "literals": []}])") == ErrorCode::kInvalidSpec);
    CHECK(code_of(R"([{"kind": "word_count_range", "min": 1, "role": "judge"}])") == ErrorCode::kInvalidSpec);
  }

  TEST_CASE("spec json round trip") {
    const auto r = parse(R"([{"id": "a", "kind": "exact_match", "reference": "x", "normalizer": "trim_casefold", "role": "gate"},
                             {"id": "b", "kind": "word_count_range", "min": 1, "max": 3}])");
    const auto again = parse_verifier_config(to_json(r));
    REQUIRE(again.specs.size() == 2);
    CHECK(to_json(again) == to_json(r));
  }

  TEST_CASE("range, parity and gate monotonicity on random inputs") {
    std::mt19937_64 rng(7);
    const char* kLits[] = {"a", "b", "c", "d", "e"};
    for (int trial = 0; trial < 300; ++trial) {
      json specs = json::array();
      const int n = static_cast<int>(rng() % 6);
      for (int i = 0; i < n; ++i) {
        specs.push_back({{"kind", rng() % 2 ? "must_include" : "must_exclude"}, {"literals", {kLits[rng() % 5]}}});
      }
      for (int i = static_cast<int>(rng() % 3); i > 0; --i) {
        specs.push_back({{"kind", "must_exclude"}, {"literals", {kLits[rng() % 5]}}, {"role", "gate"}});
      }
      std::string response;
      for (int i = 0; i < 4; ++i) response += kLits[rng() % 5];
      const auto r = parse_verifier_config(specs);
      const auto run = run_all(r, response);
      CHECK(run.sum >= -n);
      CHECK(run.sum <= n);
      CHECK(((run.sum + n) % 2) == 0);
      CHECK(run_all(r, response).sum == run.sum);

      const auto before = gate(r, response);
      auto with_gate = specs;
      with_gate.push_back({{"kind", "must_include"}, {"literals", {kLits[rng() % 5]}}, {"role", "gate"}});
      const auto after = gate(parse_verifier_config(with_gate), response);
      if (!before.pass) CHECK_FALSE(after.pass);
    }
  }
}
