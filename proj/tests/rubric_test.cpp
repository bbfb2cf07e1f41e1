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

#include <algorithm>
#include <random>

#include "openrs/error.hpp"
#include "openrs/rubric.hpp"
#include "openrs/rubric_store.hpp"
#include "test_support.hpp"

using namespace openrs;
using namespace openrs::testing;

namespace {

std::vector<std::string> ids_of(const MetaRubric& r) {
  std::vector<std::string> out;
  for (const auto& c : r.criteria) out.push_back(c.id);
  return out;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an openrs::Error");
  return ErrorCode::kBadRequest;
}

MetaRubric random_rubric(std::mt19937_64& rng) {
  static const std::vector<std::string> pool{"a", "b", "c", "d", "e", "f", "g", "h"};
  auto ids = pool;
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(std::uniform_int_distribution<std::size_t>(0, pool.size())(rng));
  MetaRubric r = general("rand", {});
  for (const auto& id : ids) {
    auto c = crit(id, Rational(std::uniform_int_distribution<int>(1, 3)(rng)),
                  "text-" + std::to_string(std::uniform_int_distribution<int>(0, 2)(rng)));
    c.non_negotiable = std::uniform_int_distribution<int>(0, 3)(rng) == 0;
    r.criteria.push_back(c);
  }
  return r;
}

}  // namespace

TEST_SUITE("rubric-model") {
  TEST_CASE("apply_edits with an empty sequence is an unchanged copy") {
    auto r = general("g", {crit("a"), crit("b")}, 3);
    auto out = apply_edits(r, {});
    CHECK(out == r);
    CHECK(out.version == 3);
  }

  TEST_CASE("apply_edits DELETE then ADD appends and bumps the version") {
    auto r = general("g", {crit("a"), crit("b")}, 3);
    auto out = apply_edits(r, {DeleteEdit{"a"}, AddEdit{crit("c")}});
    CHECK(ids_of(out) == std::vector<std::string>{"b", "c"});
    CHECK(out.version == 4);
    REQUIRE(out.changelog.size() == 1);
    CHECK(out.changelog[0].version == 4);
    CHECK(out.changelog[0].edits_digest.size() == 64);
    // input untouched
    CHECK(ids_of(r) == std::vector<std::string>{"a", "b"});
    CHECK(r.version == 3);
  }

  TEST_CASE("apply_edits error paths reject the whole sequence") {
    auto r = general("g", {crit("a")});
    CHECK(code_of([&] { apply_edits(r, {ModifyEdit{"z", "x", std::nullopt}}); }) == ErrorCode::kUnknownCriterionId);
    CHECK(code_of([&] { apply_edits(r, {AddEdit{crit("b")}, AddEdit{crit("a")}}); }) ==
          ErrorCode::kDuplicateCriterionId);
    CHECK(code_of([&] { apply_edits(r, {ModifyEdit{"a", std::nullopt, std::nullopt}}); }) == ErrorCode::kEmptyModify);
    CHECK(code_of([&] { apply_edits(r, {ModifyEdit{"a", std::nullopt, Rational(0)}}); }) ==
          ErrorCode::kInvalidCriterion);
    CHECK(code_of([&] { apply_edits(r, {DeleteEdit{"a"}, DeleteEdit{"a"}}); }) == ErrorCode::kUnknownCriterionId);
  }

  TEST_CASE("MODIFY replaces only the named fields") {
    auto r = general("g", {crit("a", Rational(1), "old")});
    auto out = apply_edits(r, {ModifyEdit{"a", std::nullopt, Rational(5, 2)}});
    CHECK(out.criteria[0].text == "old");
    CHECK(out.criteria[0].weight == Rational(5, 2));
    out = apply_edits(out, {ModifyEdit{"a", std::string("new"), std::nullopt}});
    CHECK(out.criteria[0].text == "new");
    CHECK(out.criteria[0].weight == Rational(5, 2));
    CHECK(out.version == 2);
  }

  TEST_CASE("merge_hierarchy") {
    auto g = general("gen", {crit("a"), crit("b")});
    SUBCASE("empty extension") {
      CHECK(ids_of(merge_hierarchy(g, domain("dom", "gen", {}))) == std::vector<std::string>{"a", "b"});
    }
    SUBCASE("disjoint append") {
      CHECK(ids_of(merge_hierarchy(g, domain("dom", "gen", {crit("c")}))) ==
            std::vector<std::string>{"a", "b", "c"});
    }
    SUBCASE("override in place") {
      auto one = general("gen", {crit("a", Rational(1))});
      auto merged = merge_hierarchy(one, domain("dom", "gen", {crit("a", Rational(3))}));
      REQUIRE(merged.criteria.size() == 1);
      CHECK(merged.criteria[0].weight == Rational(3));
      auto two = merge_hierarchy(g, domain("dom", "gen", {crit("c"), crit("a", Rational(3))}));
      CHECK(ids_of(two) == std::vector<std::string>{"a", "b", "c"});
      CHECK(two.criteria[0].weight == Rational(3));
    }
    SUBCASE("parent mismatch") {
      CHECK(code_of([&] { merge_hierarchy(g, domain("dom", "other", {})); }) == ErrorCode::kParentMismatch);
    }
  }

  TEST_CASE("diff_rubrics examples") {
    auto r = general("g", {crit("a"), crit("b")});
    CHECK(diff_rubrics(r, r).empty());

    auto one = diff_rubrics(general("g", {crit("a")}), general("g", {crit("a"), crit("b")}));
    REQUIRE(one.size() == 1);
    CHECK(std::get<AddEdit>(one[0]).criterion.id == "b");

    auto two = diff_rubrics(general("g", {crit("a", Rational(1)), crit("b")}), general("g", {crit("a", Rational(2))}));
    REQUIRE(two.size() == 2);
    const auto& mod = std::get<ModifyEdit>(two[0]);
    CHECK(mod.id == "a");
    CHECK(mod.new_weight == Rational(2));
    CHECK_FALSE(mod.new_text.has_value());
    CHECK(std::get<DeleteEdit>(two[1]).id == "b");
  }

  TEST_CASE("round trip: apply_edits(a, diff_rubrics(a, b)) reproduces b") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 500; ++i) {
      const auto a = random_rubric(rng);
      const auto b = random_rubric(rng);
      const auto out = apply_edits(a, diff_rubrics(a, b));
      REQUIRE(out.criteria == b.criteria);
    }
  }

  TEST_CASE("render_rubric_context") {
    auto empty = general("g", {}, 2);
    const auto header = render_rubric_context(empty);
    CHECK(header == "Meta rubric: g (version 2, general)\n");

    auto one = general("g", {crit("a", Rational(3, 2), "Be accurate")});
    one.criteria[0].non_negotiable = true;
    const auto text = render_rubric_context(one);
    CHECK(text == "Meta rubric: g (version 0, general)\n1. [weight 3/2] [NON-NEGOTIABLE] Be accurate\n");
    CHECK(render_rubric_context(one) == text);
  }

  TEST_CASE("json round trip keeps exact weights") {
    auto r = general("g", {crit("a", Rational(7, 20)), crit("b", Rational(3))}, 4);
    r.criteria[1].tags = {"safety"};
    const auto back = rubric_from_json(nlohmann::json::parse(to_json(r).dump()));
    CHECK(back == r);
    EditSequence seq{AddEdit{crit("c")}, DeleteEdit{"a"}, ModifyEdit{"b", std::string("t"), Rational(1, 3)}};
    CHECK(edits_from_json(to_json(seq)) == seq);
    // decimals from an LLM map onto exact rationals
    CHECK(criterion_from_json(nlohmann::json::parse(R"({"id":"x","text":"t","weight":0.35})")).weight ==
          Rational(7, 20));
  }

  TEST_CASE("validate_rubric enforces parent rules") {
    auto g = general("g", {});
    g.parent_id = "x";
    CHECK(code_of([&] { validate_rubric(g); }) == ErrorCode::kParentMismatch);
    auto d = domain("d", "", {});
    CHECK(code_of([&] { validate_rubric(d); }) == ErrorCode::kParentMismatch);
  }
}

TEST_SUITE("rubric-store") {
  TEST_CASE("versions are kept side by side and commits are atomic") {
    TempDir dir;
    RubricStore store(dir.path());
    store.create(general("gen", {crit("a"), crit("b")}));
    CHECK(std::filesystem::exists(dir.path() / "gen" / "v0.rubric"));

    auto v1 = store.commit("gen", {AddEdit{crit("c")}}, "alice");
    CHECK(v1.version == 1);
    CHECK(store.versions("gen") == std::vector<std::uint64_t>{0, 1});
    CHECK(ids_of(store.at("gen", 0)) == std::vector<std::string>{"a", "b"});

    CHECK(code_of([&] { store.commit("gen", {AddEdit{crit("d")}, DeleteEdit{"zz"}}, "bob"); }) ==
          ErrorCode::kUnknownCriterionId);
    CHECK(store.latest("gen").version == 1);
    CHECK(store.versions("gen").size() == 2);

    CHECK(store.commit("gen", {}, "bob").version == 1);
    CHECK(store.versions("gen").size() == 2);

    const auto log = store.changelog("gen");
    REQUIRE(log.size() == 1);
    CHECK(log[0].author == "alice");
    CHECK(log[0].edits.size() == 1);
  }

  TEST_CASE("domain rubrics need an existing general parent") {
    TempDir dir;
    RubricStore store(dir.path());
    CHECK(code_of([&] { store.create(domain("dom", "gen", {})); }) == ErrorCode::kParentMismatch);
    store.create(general("gen", {crit("a")}));
    store.create(domain("dom", "gen", {crit("a", Rational(4)), crit("w")}));
    const auto eff = store.effective("dom");
    CHECK(ids_of(eff) == std::vector<std::string>{"a", "w"});
    CHECK(eff.criteria[0].weight == Rational(4));
    CHECK(store.ids() == std::vector<std::string>{"dom", "gen"});
    CHECK(code_of([&] { store.create(general("gen", {})); }) == ErrorCode::kDuplicateRubric);
    CHECK(code_of([&] { store.latest("missing"); }) == ErrorCode::kRubricNotFound);
  }
}
