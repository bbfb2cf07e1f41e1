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

#include "openrs/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <regex>

#include "openrs/error.hpp"
#include "openrs/refine.hpp"
#include "openrs/util.hpp"
#include "openrs/verifiable.hpp"

namespace openrs {
namespace {

using nlohmann::json;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

HttpResponse json_response(int status, const json& body) {
  HttpResponse r;
  r.status = status;
  r.headers["Content-Type"] = "application/json";
  r.body = body.dump();
  return r;
}

HttpResponse error_response(int status, std::string_view code, const std::string& message) {
  return json_response(status, {{"error", {{"code", code}, {"message", message}}}});
}

json parse_body(const HttpRequest& req) {
  try {
    auto j = json::parse(req.body.empty() ? std::string("{}") : req.body);
    if (!j.is_object()) throw Error(ErrorCode::kBadRequest, "request body must be an object");
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kBadRequest, std::string("malformed request body: ") + e.what());
  }
}

std::string required_string(const json& body, const char* field) {
  const auto it = body.find(field);
  if (it == body.end() || !it->is_string()) {
    throw Error(ErrorCode::kBadRequest, std::string("missing string field '") + field + "'");
  }
  return it->get<std::string>();
}

std::uint64_t parse_uint(const std::string& s, const char* what) {
  if (s.empty() || s.size() > 19 || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); })) {
    throw Error(ErrorCode::kBadRequest, std::string("invalid ") + what + " '" + s + "'");
  }
  return std::stoull(s);
}

Rational rational_field(const json& v) {
  if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
  if (v.is_string()) return parse_rational(v.get<std::string>());
  throw Error(ErrorCode::kBadRequest, "expected an integer or a \"p/q\" string");
}

// Rubric id rule shared with run ids: path-safe tokens only.
bool safe_token(const std::string& s) {
  static const std::regex ok(R"([A-Za-z0-9][A-Za-z0-9._-]{0,127})");
  return std::regex_match(s, ok);
}

}  // namespace

std::optional<std::string> HttpRequest::header(const std::string& name) const {
  const auto key = lower(name);
  for (const auto& [k, v] : headers) {
    if (lower(k) == key) return v;
  }
  return std::nullopt;
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kRubricNotFound:
    case ErrorCode::kEditNotFound:
      return 404;
    case ErrorCode::kUnauthorized:
      return 401;
    case ErrorCode::kIllegalTransition:
    case ErrorCode::kHoldoutRegression:
    case ErrorCode::kDuplicateRubric:
      return 409;
    case ErrorCode::kTransport:
    case ErrorCode::kTimeout:
    case ErrorCode::kRateLimited:
    case ErrorCode::kOracleUnavailable:
      return 503;
    case ErrorCode::kBadResponse:
    case ErrorCode::kParseFailure:
    case ErrorCode::kMissingCriterion:
    case ErrorCode::kDiffUnavailable:
    case ErrorCode::kRubricUnavailable:
    case ErrorCode::kScoreUnavailable:
    case ErrorCode::kWeightSumZero:
      return 502;
    case ErrorCode::kStoreUnavailable:
    case ErrorCode::kIoFailure:
    case ErrorCode::kCacheCorrupt:
    case ErrorCode::kBindFailure:
    case ErrorCode::kAlignmentMismatch:
      return 500;
    default:
      return 400;
  }
}

ServiceCore::ServiceCore(ServiceConfig cfg, PairwiseJudge& judge, RubricStore& store, ReviewQueue& queue)
    : cfg_(std::move(cfg)), judge_(judge), store_(store), queue_(queue) {
  MetaRubric none;
  base_digest_ = judge_.config_digest(none);
}

bool ServiceCore::authorized(const HttpRequest& req) const {
  std::optional<std::string> token = cfg_.token;
  if (!token) {
    if (const char* env = std::getenv(cfg_.token_env.c_str()); env && *env) token = env;
  }
  if (!token || token->empty()) return false;
  const auto auth = req.header("Authorization");
  return auth && *auth == "Bearer " + *token;
}

HttpResponse ServiceCore::handle(const HttpRequest& req) {
  std::string digest = base_digest_;
  const bool mutating = req.method == "POST";
  std::optional<std::string> request_id;
  std::string fingerprint;

  HttpResponse resp;
  try {
    if (mutating && !authorized(req)) throw Error(ErrorCode::kUnauthorized, "missing or invalid bearer credential");
    if (mutating) request_id = req.header("X-Request-Id");
    if (request_id) {
      fingerprint = sha256_hex(req.method + "\n" + req.path + "\n" + req.body);
      std::lock_guard lock(replay_mutex_);
      if (auto it = replays_.find(*request_id); it != replays_.end()) {
        if (it->second.fingerprint != fingerprint) {
          throw Error(ErrorCode::kBadRequest, "request id " + *request_id + " was used for a different request");
        }
        auto replay = it->second.response;
        replay.headers["X-Idempotent-Replay"] = "true";
        return replay;
      }
    }
    resp = dispatch(req, digest);
  } catch (const Error& e) {
    resp = error_response(http_status(e.code()), to_string(e.code()), e.what());
    if (resp.status == 503) resp.headers["Retry-After"] = std::to_string(cfg_.retry_after_seconds);
  } catch (const std::exception& e) {
    resp = error_response(500, "Internal", e.what());
  }
  resp.headers[kConfigDigestHeader] = digest;

  // Server faults are retryable, so they are not pinned to the request id.
  if (request_id && resp.status < 500) {
    std::lock_guard lock(replay_mutex_);
    if (replays_.emplace(*request_id, Replay{fingerprint, resp}).second) {
      replay_order_.push_back(*request_id);
      while (replay_order_.size() > cfg_.idempotency_capacity) {
        replays_.erase(replay_order_.front());
        replay_order_.pop_front();
      }
    }
  }
  return resp;
}

HttpResponse ServiceCore::dispatch(const HttpRequest& req, std::string& digest) {
  static const std::regex version_route(R"(/v1/rubrics/([^/]+)/versions/([^/]+))");
  static const std::regex edits_route(R"(/v1/rubrics/([^/]+)/edits)");
  static const std::regex decision_route(R"(/v1/review/edits/([^/]+)/decision)");
  static const std::regex report_route(R"(/v1/reports/([^/]+))");

  const auto& p = req.path;
  const bool get = req.method == "GET";
  const bool post = req.method == "POST";
  std::smatch m;
  auto allow = [&](bool ok, const char* method) {
    if (!ok) {
      auto r = error_response(405, "MethodNotAllowed", req.method + " not allowed on " + p);
      r.headers["Allow"] = method;
      return std::optional<HttpResponse>(r);
    }
    return std::optional<HttpResponse>();
  };

  if (p == "/healthz") {
    if (auto r = allow(get, "GET")) return *r;
    return healthz(digest);
  }
  if (p == "/v1/judge/pair") {
    if (auto r = allow(post, "POST")) return *r;
    return judge_pair(req, digest);
  }
  if (p == "/v1/reward/group") {
    if (auto r = allow(post, "POST")) return *r;
    return reward_group(req, digest);
  }
  if (p == "/v1/rubrics") {
    if (auto r = allow(get, "GET")) return *r;
    return list_rubrics(digest);
  }
  if (p == "/v1/review/cases") {
    if (auto r = allow(get, "GET")) return *r;
    return review_cases(req, digest);
  }
  if (std::regex_match(p, m, version_route)) {
    if (auto r = allow(get, "GET")) return *r;
    return rubric_version(m[1].str(), m[2].str(), digest);
  }
  if (std::regex_match(p, m, edits_route)) {
    if (auto r = allow(post, "POST")) return *r;
    return propose_edits(m[1].str(), req, digest);
  }
  if (std::regex_match(p, m, decision_route)) {
    if (auto r = allow(post, "POST")) return *r;
    return review_decision(m[1].str(), req, digest);
  }
  if (std::regex_match(p, m, report_route)) {
    if (auto r = allow(get, "GET")) return *r;
    return report(m[1].str(), digest);
  }
  return error_response(404, "NotFound", "no route for " + req.method + " " + p);
}

HttpResponse ServiceCore::healthz(std::string&) {
  bool reachable = false;
  try {
    reachable = judge_.client().backend().reachable();
  } catch (const std::exception&) {
  }
  const auto stats = judge_.client().stats();
  const auto pending = queue_.list(ReviewState::kPending, std::nullopt, std::nullopt, 1000000).items.size();
  return json_response(200, {{"status", reachable ? "ok" : "degraded"},
                             {"components",
                              {{"judge", {{"reachable", reachable}, {"live_calls", stats.live_calls},
                                          {"cache_hits", stats.cache_hits}}},
                               {"rubric_store", {{"rubrics", store_.ids().size()}}},
                               {"review_queue", {{"pending", pending}}}}}});
}

HttpResponse ServiceCore::judge_pair(const HttpRequest& req, std::string& digest) {
  const auto body = parse_body(req);
  if (!body.contains("rubric_id")) throw Error(ErrorCode::kRubricNotFound, "request names no rubric_id");
  const auto rubric_id = required_string(body, "rubric_id");
  const auto meta = store_.effective(rubric_id);
  digest = judge_.config_digest(meta);
  const auto j = judge_.judge_pair(required_string(body, "query"), required_string(body, "a"),
                                   required_string(body, "b"), meta);
  auto out = to_json(j);
  out["rubric_id"] = rubric_id;
  out["rubric_version"] = meta.version;
  out["config_digest"] = digest;
  return json_response(200, out);
}

HttpResponse ServiceCore::reward_group(const HttpRequest& req, std::string& digest) {
  const auto body = parse_body(req);
  if (!body.contains("rubric_id")) throw Error(ErrorCode::kRubricNotFound, "request names no rubric_id");
  const auto meta = store_.effective(required_string(body, "rubric_id"));
  digest = judge_.config_digest(meta);

  RolloutGroup group;
  group.query = required_string(body, "query");
  const auto responses = body.find("responses");
  if (responses == body.end() || !responses->is_array()) throw Error(ErrorCode::kBadRequest, "missing 'responses'");
  for (const auto& r : *responses) {
    if (!r.is_string()) throw Error(ErrorCode::kBadRequest, "responses must be strings");
    group.responses.push_back(r.get<std::string>());
  }
  if (body.contains("verifiers")) group.verifiers = parse_verifier_config(body["verifiers"]);
  if (body.contains("anchor")) group.anchor = body["anchor"].get<std::size_t>();

  RewardConfig cfg = cfg_.reward;
  if (body.contains("gamma")) cfg.gamma = rational_field(body["gamma"]);
  if (body.contains("top_b")) cfg.top_b = body["top_b"].get<std::size_t>();
  if (body.contains("gate_policy")) {
    const auto g = body["gate_policy"].get<std::string>();
    if (g == "clamp_to_min") {
      cfg.gate_policy = GatePolicy::kClampToMin;
    } else if (g == "report_only") {
      cfg.gate_policy = GatePolicy::kReportOnly;
    } else {
      throw Error(ErrorCode::kBadRequest, "unknown gate_policy '" + g + "'");
    }
  }
  const auto seed = body.value("seed", std::uint64_t{0});
  const auto result = compute_group_rewards(judge_, std::move(group), meta, cfg, seed);
  digest = result.config_digest.empty() ? digest : result.config_digest;
  return json_response(200, to_json(result));
}

HttpResponse ServiceCore::list_rubrics(std::string&) {
  json items = json::array();
  for (const auto& id : store_.ids()) {
    const auto latest = store_.latest(id);
    json item{{"id", id},
              {"kind", to_string(latest.kind)},
              {"latest_version", latest.version},
              {"versions", store_.versions(id)}};
    if (latest.parent_id) item["parent_id"] = *latest.parent_id;
    items.push_back(item);
  }
  return json_response(200, {{"rubrics", items}});
}

HttpResponse ServiceCore::rubric_version(const std::string& id, const std::string& version, std::string& digest) {
  if (!safe_token(id)) throw Error(ErrorCode::kRubricNotFound, id);
  const auto rubric = store_.at(id, parse_uint(version, "version"));
  digest = judge_.config_digest(rubric);
  json changelog = json::array();
  for (const auto& c : store_.changelog(id)) {
    changelog.push_back({{"version", c.version},
                         {"edits_digest", c.edits_digest},
                         {"timestamp", c.timestamp},
                         {"author", c.author},
                         {"edits", to_json(c.edits)}});
  }
  return json_response(200, {{"rubric", to_json(rubric)}, {"changelog", changelog}});
}

HttpResponse ServiceCore::propose_edits(const std::string& id, const HttpRequest& req, std::string& digest) {
  if (!safe_token(id)) throw Error(ErrorCode::kRubricNotFound, id);
  const auto body = parse_body(req);
  const auto current = store_.latest(id);
  digest = judge_.config_digest(current);

  EditSequence seq;
  try {
    if (body.contains("edits")) {
      seq = edits_from_json(body["edits"]);
    } else if (body.contains("edit")) {
      seq.push_back(edit_from_json(body["edit"]));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kBadRequest, std::string("malformed edit: ") + e.what());
  }
  if (seq.empty()) throw Error(ErrorCode::kBadRequest, "no edits proposed");
  for (const auto& e : seq) apply_edits(current, {e});  // each must apply to the current version

  const auto rationale = body.value("rationale", std::string());
  const auto cases = body.value("supporting_cases", std::vector<std::string>{});
  json proposals = json::array();
  for (auto& e : seq) proposals.push_back(to_json(queue_.propose(id, e, rationale, cases)));
  return json_response(201, {{"proposals", proposals}});
}

HttpResponse ServiceCore::review_cases(const HttpRequest& req, std::string&) {
  auto param = [&](const char* name) -> std::optional<std::string> {
    const auto it = req.query.find(name);
    if (it == req.query.end() || it->second.empty()) return std::nullopt;
    return it->second;
  };
  std::optional<ReviewState> state;
  if (auto s = param("state")) state = review_state_from_string(*s);
  std::optional<std::uint64_t> cursor;
  if (auto c = param("cursor")) cursor = parse_uint(*c, "cursor");
  std::size_t limit = 20;
  if (auto l = param("limit")) limit = std::clamp<std::uint64_t>(parse_uint(*l, "limit"), 1, 100);

  const auto page = queue_.list(state, param("category"), cursor, limit);
  json items = json::array();
  for (const auto& e : page.items) {
    auto item = to_json(e);
    json cases = json::array();
    for (const auto& cid : e.supporting_cases) {
      if (auto c = queue_.find_case(cid)) cases.push_back(to_json(*c));
    }
    item["cases"] = cases;
    items.push_back(item);
  }
  json out{{"items", items}, {"next_cursor", nullptr}};
  if (page.next_cursor) out["next_cursor"] = std::to_string(*page.next_cursor);
  return json_response(200, out);
}

HttpResponse ServiceCore::review_decision(const std::string& id, const HttpRequest& req, std::string& digest) {
  const auto body = parse_body(req);
  const auto decision = decision_from_string(required_string(body, "decision"));
  const auto existing = queue_.get(id);
  if (!existing) throw Error(ErrorCode::kEditNotFound, id);
  const auto reviewer = body.value("reviewer", req.header("X-Actor-Id").value_or("reviewer"));

  JudgeOracle holdout(judge_, cfg_.holdout);
  const auto updated = queue_.decide(id, decision, reviewer, store_, holdout);
  digest = judge_.config_digest(store_.effective(updated.rubric_id));
  return json_response(200, to_json(updated));
}

HttpResponse ServiceCore::report(const std::string& run_id, std::string& digest) {
  if (!safe_token(run_id) || cfg_.reports_dir.empty()) throw Error(ErrorCode::kBadRequest, "invalid run id");
  const auto path = cfg_.reports_dir / (run_id + ".json");
  if (!std::filesystem::exists(path)) return error_response(404, "ReportNotFound", "no report for run " + run_id);
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIoFailure, "report " + run_id + " is unreadable: " + e.what());
  }
  if (j.contains("config_digest") && j["config_digest"].is_string()) digest = j["config_digest"].get<std::string>();
  return json_response(200, j);
}

// ------------------------------------------------------------ sockets

struct HttpService::Impl {
  explicit Impl(ServiceCore& c) : core(c) {}
  ServiceCore& core;
  httplib::Server server;
};

HttpService::HttpService(ServiceCore& core) : impl_(std::make_unique<Impl>(core)) {
  auto handler = [this](const httplib::Request& in, httplib::Response& out) {
    HttpRequest req;
    req.method = in.method;
    req.path = in.path;
    for (const auto& [k, v] : in.params) req.query[k] = v;
    for (const auto& [k, v] : in.headers) req.headers[k] = v;
    req.body = in.body;
    const auto resp = impl_->core.handle(req);
    out.status = resp.status;
    std::string content_type = "application/json";
    for (const auto& [k, v] : resp.headers) {
      if (lower(k) == "content-type") {
        content_type = v;
      } else {
        out.set_header(k, v);
      }
    }
    out.set_content(resp.body, content_type);
  };
  auto& s = impl_->server;
  s.Get(".*", handler);
  s.Post(".*", handler);
  s.Put(".*", handler);
  s.Delete(".*", handler);
  s.Patch(".*", handler);
}

HttpService::~HttpService() { stop(); }

int HttpService::bind() {
  const auto& cfg = impl_->core.config();
  int port = cfg.port;
  bool ok = false;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(cfg.host);
    ok = port > 0;
  } else {
    ok = impl_->server.bind_to_port(cfg.host, port);
  }
  if (!ok) throw Error(ErrorCode::kBindFailure, "cannot bind " + cfg.host + ":" + std::to_string(cfg.port));
  return port;
}

void HttpService::run() { impl_->server.listen_after_bind(); }

void HttpService::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace openrs
