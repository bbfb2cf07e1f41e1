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
#include <httplib.h>

#include <thread>

#include "openrs/service.hpp"
#include "openrs/util.hpp"
#include "test_support.hpp"

using namespace openrs;
using namespace openrs::testing;
using nlohmann::json;

namespace {

constexpr const char* kToken = "test-token";

struct Fixture {
  TempDir dir;
  RubricStore store{dir.path() / "store"};
  ReviewQueue queue{dir.path() / "queue.json"};
  std::shared_ptr<JudgeBackend> backend;
  std::unique_ptr<JudgeClient> client;
  std::unique_ptr<PairwiseJudge> judge;
  std::unique_ptr<ServiceCore> core;

  explicit Fixture(std::shared_ptr<JudgeBackend> b = rubric_sensitive_backend("precise")) : backend(std::move(b)) {
    store.create(general("p", {crit("a", Rational(1), "Answers are precise")}));
    store.create(general("g", {crit("a", Rational(1), "Tone is friendly")}));
    store.create(domain("d", "g", {crit("x", Rational(1), "Style is vivid")}));
    client = std::make_unique<JudgeClient>(backend, fast_config());
    judge = std::make_unique<PairwiseJudge>(*client, PairwiseConfig{});
    ServiceConfig cfg;
    cfg.token = kToken;
    cfg.reports_dir = dir.path() / "reports";
    for (int i = 0; i < 3; ++i) {
      BenchRecord r;
      r.id = "h" + std::to_string(i);
      r.query = "q" + r.id;
      r.chosen = {"[q=3] good"};
      r.rejected = {"[q=1] bad"};
      cfg.holdout.push_back(r);
    }
    core = std::make_unique<ServiceCore>(cfg, *judge, store, queue);
  }

  HttpResponse get(const std::string& path, std::map<std::string, std::string> query = {}) {
    HttpRequest r;
    r.method = "GET";
    r.path = path;
    r.query = std::move(query);
    return core->handle(r);
  }

  HttpResponse post(const std::string& path, const json& body, bool auth = true, std::string request_id = {}) {
    HttpRequest r;
    r.method = "POST";
    r.path = path;
    r.body = body.dump();
    if (auth) r.headers["authorization"] = std::string("Bearer ") + kToken;
    if (!request_id.empty()) r.headers["X-Request-Id"] = request_id;
    return core->handle(r);
  }
};

json body(const HttpResponse& r) { return json::parse(r.body); }

std::string error_code(const HttpResponse& r) { return body(r)["error"]["code"].get<std::string>(); }

}  // namespace

TEST_SUITE("service-api") {
  TEST_CASE("health, routing and digests") {
    Fixture f;
    const auto h = f.get("/healthz");
    CHECK(h.status == 200);
    CHECK(body(h)["status"] == "ok");
    CHECK(body(h)["components"]["judge"]["reachable"] == true);
    CHECK(body(h)["components"]["rubric_store"]["rubrics"] == 3);
    CHECK(h.headers.at(kConfigDigestHeader).size() == 64);

    const auto missing = f.get("/v1/nothing");
    CHECK(missing.status == 404);
    CHECK(missing.headers.count(kConfigDigestHeader) == 1);
    CHECK(f.post("/healthz", json::object()).status == 405);
    CHECK(f.get("/v1/judge/pair").status == 405);
  }

  TEST_CASE("mutating routes require the bearer credential") {
    Fixture f;
    const json req{{"query", "q"}, {"a", "x"}, {"b", "y"}, {"rubric_id", "p"}};
    const auto none = f.post("/v1/judge/pair", req, false);
    CHECK(none.status == 401);
    CHECK(error_code(none) == "Unauthorized");
    HttpRequest wrong;
    wrong.method = "POST";
    wrong.path = "/v1/rubrics/d/edits";
    wrong.headers["Authorization"] = "Bearer nope";
    CHECK(f.core->handle(wrong).status == 401);
    CHECK(f.queue.list(std::nullopt, std::nullopt, std::nullopt, 10).items.empty());
  }

  TEST_CASE("judge pair") {
    Fixture f;
    const auto ok = f.post("/v1/judge/pair", {{"query", "q"}, {"a", "[q=5] a"}, {"b", "[q=1] b"}, {"rubric_id", "p"}});
    REQUIRE(ok.status == 200);
    const auto j = body(ok);
    CHECK(j["verdict"] == "first_wins");
    CHECK(j.contains("forward"));
    CHECK(j.contains("reverse"));
    CHECK_FALSE(j["forward"]["transcript_refs"].empty());
    CHECK(ok.headers.at(kConfigDigestHeader) == f.judge->config_digest(f.store.effective("p")));
    CHECK(j["config_digest"] == ok.headers.at(kConfigDigestHeader));

    const auto no_id = f.post("/v1/judge/pair", {{"query", "q"}, {"a", "a"}, {"b", "b"}});
    CHECK(no_id.status == 404);
    CHECK(error_code(no_id) == "RubricNotFound");
    CHECK(f.post("/v1/judge/pair", {{"query", "q"}, {"a", "a"}, {"b", "b"}, {"rubric_id", "zz"}}).status == 404);
    CHECK(f.post("/v1/judge/pair", {{"a", "a"}, {"b", "b"}, {"rubric_id", "p"}}).status == 400);
  }

  TEST_CASE("judge outage maps to 503 with retry advice") {
    Fixture f(std::make_shared<FnBackend>(
        [](const JudgePrompt&) -> std::string { throw JudgeError(ErrorCode::kTransport, "connection refused"); }));
    const auto r = f.post("/v1/judge/pair", {{"query", "q"}, {"a", "a"}, {"b", "b"}, {"rubric_id", "p"}});
    CHECK(r.status == 503);
    CHECK(r.headers.at("Retry-After") == "5");
  }

  TEST_CASE("reward group") {
    Fixture f;
    const auto r = f.post("/v1/reward/group", {{"query", "q"},
                                               {"responses", {"[q=1] a", "[q=2] b", "[q=3] c", "[q=4] d"}},
                                               {"rubric_id", "p"},
                                               {"anchor", 1},
                                               {"top_b", 2}});
    REQUIRE(r.status == 200);
    const auto j = body(r);
    CHECK(j["anchor"] == 1);
    REQUIRE(j["rollouts"].size() == 4);
    CHECK(j["rollouts"][1]["reward"] == "0");
    CHECK(j["rollouts"][0]["reward"] == "-2");
    CHECK(j["rollouts"][3]["reward"] == "2");
    CHECK(j["rollouts"][3]["mask"] == 1);
    CHECK(j["rollouts"][0]["mask"] == 0);
    CHECK(f.post("/v1/reward/group", {{"query", "q"}, {"responses", json::array()}, {"rubric_id", "p"}}).status ==
          400);
  }

  TEST_CASE("rubric listing and versions") {
    Fixture f;
    const auto list = body(f.get("/v1/rubrics"))["rubrics"];
    REQUIRE(list.size() == 3);
    bool saw_domain = false;
    for (const auto& r : list) {
      if (r["id"] == "d") {
        CHECK(r["kind"] == "domain");
        CHECK(r["parent_id"] == "g");
        saw_domain = true;
      }
    }
    CHECK(saw_domain);
    const auto v = f.get("/v1/rubrics/d/versions/0");
    REQUIRE(v.status == 200);
    CHECK(body(v)["rubric"]["id"] == "d");
    CHECK(v.headers.at(kConfigDigestHeader) == f.judge->config_digest(f.store.at("d", 0)));
    CHECK(f.get("/v1/rubrics/d/versions/9").status == 404);
    CHECK(f.get("/v1/rubrics/d/versions/x").status == 400);
    CHECK(f.get("/v1/rubrics/zz/versions/0").status == 404);
  }

  TEST_CASE("edits become pending proposals; decisions run the review state machine") {
    Fixture f;
    const json add{{"op", "ADD"}, {"criterion", {{"id", "p"}, {"text", "Answers are precise"}, {"weight", 1}}}};
    const auto created = f.post("/v1/rubrics/d/edits", {{"edits", {add}}, {"rationale", "r"}});
    REQUIRE(created.status == 201);
    const auto id = body(created)["proposals"][0]["id"].get<std::string>();
    CHECK(body(created)["proposals"][0]["state"] == "pending");
    CHECK(f.store.latest("d").version == 0);

    CHECK(f.post("/v1/rubrics/d/edits", {{"edit", {{"op", "DELETE"}, {"id", "nope"}}}}).status == 400);
    CHECK(f.post("/v1/rubrics/d/edits", json::object()).status == 400);
    CHECK(f.post("/v1/rubrics/zz/edits", {{"edits", {add}}}).status == 404);

    const auto approved = f.post("/v1/review/edits/" + id + "/decision", {{"decision", "approve"}});
    REQUIRE(approved.status == 200);
    CHECK(body(approved)["state"] == "approved");
    CHECK(body(approved)["holdout_delta"] == "1");
    const auto again = f.post("/v1/review/edits/" + id + "/decision", {{"decision", "approve"}});
    CHECK(again.status == 200);
    CHECK(body(again) == body(approved));

    const auto merged = f.post("/v1/review/edits/" + id + "/decision", {{"decision", "merge"}});
    REQUIRE(merged.status == 200);
    CHECK(body(merged)["merged_version"] == 1);
    CHECK(f.store.latest("d").version == 1);
    CHECK(f.post("/v1/review/edits/" + id + "/decision", {{"decision", "merge"}}).status == 200);
    CHECK(f.store.latest("d").version == 1);

    const auto second =
        body(f.post("/v1/rubrics/d/edits", {{"edit", {{"op", "DELETE"}, {"id", "x"}}}}))["proposals"][0]["id"];
    const auto path = "/v1/review/edits/" + second.get<std::string>() + "/decision";
    CHECK(f.post(path, {{"decision", "reject"}}).status == 200);
    const auto illegal = f.post(path, {{"decision", "merge"}});
    CHECK(illegal.status == 409);
    CHECK(error_code(illegal) == "IllegalTransition");
    CHECK(f.post("/v1/review/edits/edit-404/decision", {{"decision", "approve"}}).status == 404);
    CHECK(f.post(path, {{"decision", "bless"}}).status == 400);
  }

  TEST_CASE("negative holdout delta blocks the merge") {
    Fixture f;
    f.store.commit("d", {AddEdit{crit("p", Rational(1), "Answers are precise")}}, "seed");
    const auto created = f.post("/v1/rubrics/d/edits", {{"edit", {{"op", "DELETE"}, {"id", "p"}}}});
    const auto path = "/v1/review/edits/" + body(created)["proposals"][0]["id"].get<std::string>() + "/decision";
    CHECK(body(f.post(path, {{"decision", "approve"}}))["holdout_delta"] == "-1");
    const auto blocked = f.post(path, {{"decision", "merge"}});
    CHECK(blocked.status == 409);
    CHECK(error_code(blocked) == "HoldoutRegression");
    CHECK(f.store.latest("d").version == 1);
  }

  TEST_CASE("review case listing") {
    Fixture f;
    FailureCase c;
    c.id = "case-w";
    c.category = "writing";
    f.queue.add_cases({c});
    for (int i = 0; i < 25; ++i) {
      json req{{"edit", {{"op", "MODIFY"}, {"id", "x"}, {"new_weight", i + 2}}}};
      if (i % 5 == 0) req["supporting_cases"] = {"case-w"};
      REQUIRE(f.post("/v1/rubrics/d/edits", req).status == 201);
    }
    std::vector<std::string> seen;
    std::map<std::string, std::string> q{{"state", "pending"}, {"limit", "10"}};
    int pages = 0;
    while (true) {
      const auto page = body(f.get("/v1/review/cases", q));
      ++pages;
      for (const auto& item : page["items"]) seen.push_back(item["id"]);
      if (page["next_cursor"].is_null()) break;
      q["cursor"] = page["next_cursor"].get<std::string>();
    }
    CHECK(pages == 3);
    REQUIRE(seen.size() == 25);
    CHECK(seen.front() == "edit-25");
    CHECK(seen.back() == "edit-1");

    const auto writing = body(f.get("/v1/review/cases", {{"category", "writing"}}));
    CHECK(writing["items"].size() == 5);
    CHECK(writing["items"][0]["cases"][0]["id"] == "case-w");
    CHECK(body(f.get("/v1/review/cases", {{"state", "merged"}}))["items"].empty());
    CHECK(f.get("/v1/review/cases", {{"state", "bogus"}}).status == 400);
  }

  TEST_CASE("request ids make retries idempotent") {
    Fixture f;
    const json req{{"edit", {{"op", "DELETE"}, {"id", "x"}}}};
    const auto first = f.post("/v1/rubrics/d/edits", req, true, "req-1");
    const auto retry = f.post("/v1/rubrics/d/edits", req, true, "req-1");
    CHECK(first.status == 201);
    CHECK(retry.body == first.body);
    CHECK(retry.headers.at("X-Idempotent-Replay") == "true");
    CHECK(f.queue.list(std::nullopt, std::nullopt, std::nullopt, 10).items.size() == 1);
    CHECK(f.post("/v1/rubrics/d/edits", {{"edit", {{"op", "DELETE"}, {"id", "y"}}}}, true, "req-1").status == 400);
    CHECK(f.post("/v1/rubrics/d/edits", req, true, "req-2").status == 201);
    CHECK(f.queue.list(std::nullopt, std::nullopt, std::nullopt, 10).items.size() == 2);
  }

  TEST_CASE("reports") {
    Fixture f;
    EvalReport report;
    report.config_digest = std::string(64, 'a');
    atomic_write(f.core->config().reports_dir / "run-1.json", to_json(report).dump());
    const auto r = f.get("/v1/reports/run-1");
    REQUIRE(r.status == 200);
    CHECK(body(r)["schema"] == "openrs.eval_report");
    CHECK(r.headers.at(kConfigDigestHeader) == report.config_digest);
    CHECK(f.get("/v1/reports/run-2").status == 404);
    CHECK(f.get("/v1/reports/..").status == 400);
  }

  TEST_CASE("socket front end") {
    Fixture f;
    ServiceConfig cfg = f.core->config();
    cfg.port = 0;
    ServiceCore core(cfg, *f.judge, f.store, f.queue);
    HttpService http(core);
    const int port = http.bind();
    std::thread runner([&] { http.run(); });
    httplib::Client client("127.0.0.1", port);
    for (int i = 0; i < 200 && !client.Get("/healthz"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    const auto health = client.Get("/healthz");
    REQUIRE(health);
    CHECK(health->status == 200);
    CHECK(health->has_header(kConfigDigestHeader));
    const auto denied = client.Post("/v1/judge/pair", "{}", "application/json");
    REQUIRE(denied);
    CHECK(denied->status == 401);
    httplib::Headers auth{{"Authorization", std::string("Bearer ") + kToken}};
    const auto listed = client.Get("/v1/review/cases?limit=5&state=pending", auth);
    REQUIRE(listed);
    CHECK(listed->status == 200);
    http.stop();
    runner.join();
  }
}
