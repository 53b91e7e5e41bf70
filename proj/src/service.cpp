/*
 * Copyright 2026 The Lens Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "lens/service.hpp"

#include <algorithm>
#include <filesystem>

#include "httplib.h"
#include "lens/io.hpp"
#include "lens/synthetic.hpp"

namespace lens {
namespace {

using json = nlohmann::json;

ApiResponse JsonResponse(const json& body, int status = 200) {
  return {status, "application/json", body.dump(2) + "\n"};
}

ApiResponse ErrorResponse(int status, const std::string& code, const std::string& message) {
  return JsonResponse({{"error", {{"code", code}, {"message", message}}}}, status);
}

json Body(const ApiRequest& request) {
  if (request.body.empty()) return json::object();
  json body;
  try {
    body = json::parse(request.body);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("request body is not valid JSON: ") + e.what());
  }
  if (!body.is_object()) Fail(ErrorCode::kInvalidArgument, "request body must be a JSON object");
  return body;
}

std::vector<std::string> Segments(const std::string& path) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t end = std::min(path.find('/', start), path.size());
    if (end > start) out.push_back(httplib::detail::decode_url(path.substr(start, end - start), false));
    start = end + 1;
  }
  return out;
}

std::optional<std::uint64_t> ParseUnsigned(const std::string& text, const std::string& what) {
  if (text.empty()) return std::nullopt;
  if (!std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isdigit(c); })) {
    Fail(ErrorCode::kInvalidArgument, what + " must be a non-negative integer");
  }
  return std::stoull(text);
}

// Detector suite from {tools, configs, tags, min_k, seed}. "MinK" in tools
// without min_k means K = 2.
DetectorSuiteConfig SuiteFromBody(const json& body, std::uint64_t default_seed) {
  if (!body.contains("tools") || !body["tools"].is_array()) {
    Fail(ErrorCode::kInvalidArgument, "tools must be a list of detector names");
  }
  json suite = {{"tools", json::array()}};
  bool wants_min_k = false;
  for (const json& name : body["tools"]) {
    const DetectorKind kind = ParseDetectorKind(name.get<std::string>());
    if (kind == DetectorKind::kMinK) {
      wants_min_k = true;
      continue;
    }
    suite["tools"].push_back(DetectorName(kind));
  }
  const json configs = body.value("configs", json::object());
  for (const char* key : {"sd", "iqr", "isolation_forest", "disguised"}) {
    if (configs.contains(key)) suite[key] = configs[key];
  }
  if (body.contains("tags")) suite["tags"] = body["tags"];
  DetectorSuiteConfig config = suite.get<DetectorSuiteConfig>();
  const bool seeded = configs.contains("isolation_forest") && configs["isolation_forest"].contains("seed");
  if (!seeded) config.isolation_forest.forest.seed = body.value("seed", default_seed);
  if (body.contains("min_k") && !body["min_k"].is_null()) {
    config.min_k = body["min_k"].get<std::size_t>();
  } else if (wants_min_k) {
    config.min_k = 2;
  }
  return config;
}

json CommitList(const std::vector<Commit>& commits) {
  json out = json::array();
  for (const Commit& c : commits) out.push_back(c);
  return out;
}

const char* kMethodNotAllowed = "method_not_allowed";

}  // namespace

const std::vector<ApiErrorCode>& ApiErrorCodes() {
  static const std::vector<ApiErrorCode> kCodes = {
      {"bad_request", 400},       {"parse_error", 400},         {"unknown_tool", 400},
      {"invalid_status", 400},    {"invalid_rule", 400},        {"not_found", 404},
      {kMethodNotAllowed, 405},   {"dataset_exists", 409},      {"already_exists", 409},
      {"no_detections", 409},     {"session_closed", 409},      {"failed_precondition", 409},
      {"type_mismatch", 422},     {"replay_divergence", 500},   {"io_error", 500},
      {"internal", 500},
  };
  return kCodes;
}

std::pair<int, std::string> MapError(const Error& error) {
  if (!error.reason().empty()) {
    for (const ApiErrorCode& c : ApiErrorCodes()) {
      if (c.code == error.reason()) return {c.status, c.code};
    }
  }
  switch (error.code()) {
    case ErrorCode::kInvalidArgument: return {400, "bad_request"};
    case ErrorCode::kParse: return {400, "parse_error"};
    case ErrorCode::kUnknownTool: return {400, "unknown_tool"};
    case ErrorCode::kNotFound: return {404, "not_found"};
    case ErrorCode::kAlreadyExists: return {409, "already_exists"};
    case ErrorCode::kFailedPrecondition: return {409, "failed_precondition"};
    case ErrorCode::kTypeMismatch: return {422, "type_mismatch"};
    case ErrorCode::kReplayDivergence: return {500, "replay_divergence"};
    case ErrorCode::kIo: return {500, "io_error"};
  }
  return {500, "internal"};
}

ApiResponse Service::Handle(const ApiRequest& request) {
  try {
    return Dispatch(request);
  } catch (const Error& e) {
    const auto [status, code] = MapError(e);
    return ErrorResponse(status, code, e.what());
  } catch (const json::parse_error& e) {
    return ErrorResponse(400, "parse_error", e.what());
  } catch (const json::exception& e) {
    return ErrorResponse(400, "bad_request", e.what());
  } catch (const std::exception& e) {
    return ErrorResponse(500, "internal", e.what());
  }
}

ApiResponse Service::Dispatch(const ApiRequest& request) {
  const std::vector<std::string> seg = Segments(request.path);
  const std::string& method = request.method;
  const std::size_t n = seg.size();
  auto not_allowed = [&] {
    return ErrorResponse(405, kMethodNotAllowed, method + " is not supported on " + request.path);
  };
  const std::uint64_t seed = workspace_.options().seed;

  if (n == 1 && seg[0] == "health") return JsonResponse({{"status", "ok"}});
  if (n == 1 && seg[0] == "openapi.json") {
    if (method != "GET") return not_allowed();
    return JsonResponse(OpenApiDocument());
  }
  if (n == 1 && seg[0] == "demos") {
    if (method != "GET") return not_allowed();
    return JsonResponse(DemoNames());
  }
  if (n == 2 && seg[0] == "runs") {
    if (method != "GET") return not_allowed();
    json runs = json::array();
    for (const RunRecord& r : workspace_.tracker().ListRuns(ParseExperiment(seg[1]))) runs.push_back(r);
    return JsonResponse(runs);
  }
  if (n == 1 && seg[0] == "replay") {
    if (method != "POST") return not_allowed();
    const DataSheet sheet = ParseDatasheet(request.body);
    const ReplayResult result = workspace_.Replay(sheet);
    return JsonResponse({{"dataset", sheet.dataset_name},
                         {"version", result.version.value},
                         {"committed", result.committed},
                         {"content_hash", result.content_hash},
                         {"expected_hash", workspace_.store().SnapshotHash(sheet.dataset_name,
                                                                           sheet.version_after)}});
  }
  if (n == 0 || seg[0] != "datasets") {
    return ErrorResponse(404, "not_found", "no route for " + request.path);
  }

  if (n == 1) {
    if (method == "GET") {
      json out = json::array();
      for (const std::string& name : workspace_.Datasets()) {
        out.push_back({{"name", name},
                       {"latest_version", workspace_.store().Latest(name).value},
                       {"working_version", workspace_.WorkingVersion(name).value}});
      }
      return JsonResponse(out);
    }
    if (method != "POST") return not_allowed();
    std::string name;
    std::string csv;
    std::optional<std::uint64_t> version;
    bool must_create = false;
    std::optional<std::string> demo;
    std::optional<std::uint64_t> demo_seed;
    auto field = [&](const std::string& key) -> std::string {
      if (auto it = request.form.find(key); it != request.form.end()) return it->second;
      if (auto it = request.query.find(key); it != request.query.end()) return it->second;
      return {};
    };
    if (!request.form.empty() || request.content_type.rfind("text/csv", 0) == 0) {
      csv = request.form.count("file") != 0 ? request.form.at("file") : request.body;
      name = field("name");
      if (name.empty() && request.filenames.count("file") != 0) {
        name = std::filesystem::path(request.filenames.at("file")).stem().string();
      }
      version = ParseUnsigned(field("version"), "version");
      must_create = field("create") == "true";
    } else {
      const json body = Body(request);
      name = body.value("name", std::string());
      csv = body.value("csv", std::string());
      if (body.contains("version") && !body["version"].is_null()) {
        version = body["version"].get<std::uint64_t>();
      }
      must_create = body.value("create", false);
      if (body.contains("demo")) demo = body["demo"].get<std::string>();
      if (body.contains("seed")) demo_seed = body["seed"].get<std::uint64_t>();
    }
    Workspace::UploadResult result;
    if (demo) {
      if (name.empty()) name = *demo;
      if (must_create && workspace_.store().Exists(name)) {
        Fail(ErrorCode::kAlreadyExists, "dataset " + name + " already exists", "dataset_exists");
      }
      result = workspace_.UploadDemo(*demo, name, demo_seed);
    } else {
      if (name.empty()) Fail(ErrorCode::kInvalidArgument, "upload needs a dataset name");
      result = workspace_.Upload(name, csv, version, must_create);
    }
    return JsonResponse({{"dataset", result.dataset},
                         {"version", result.version.value},
                         {"created", result.created},
                         {"committed", result.committed}},
                        result.created ? 201 : 200);
  }

  const std::string& dataset = seg[1];
  if (n == 2) {
    if (method != "GET") return not_allowed();
    return JsonResponse({{"name", dataset},
                         {"working_version", workspace_.WorkingVersion(dataset).value},
                         {"versions", CommitList(workspace_.Versions(dataset))}});
  }
  const std::string& resource = seg[2];

  if (resource == "versions") {
    if (method != "GET") return not_allowed();
    if (n == 3) {
      return JsonResponse({{"dataset", dataset},
                           {"working_version", workspace_.WorkingVersion(dataset).value},
                           {"versions", CommitList(workspace_.Versions(dataset))}});
    }
    if (n == 4) {
      const auto v = ParseUnsigned(seg[3], "version");
      if (!v) Fail(ErrorCode::kInvalidArgument, "version must be given");
      if (!workspace_.store().HasVersion(dataset, VersionId(*v))) {
        Fail(ErrorCode::kNotFound, "version " + seg[3] + " of " + dataset + " does not exist");
      }
      return {200, "text/csv", workspace_.store().SnapshotBytes(dataset, VersionId(*v))};
    }
  }
  if (resource == "profile" && n == 3) {
    if (method != "GET") return not_allowed();
    return JsonResponse(workspace_.Profile(dataset));
  }
  if (resource == "quality" && n == 3) {
    if (method != "GET") return not_allowed();
    return JsonResponse(workspace_.Quality(dataset));
  }
  if (resource == "rules") {
    if (n == 3 && method == "GET") return JsonResponse(workspace_.Rules(dataset));
    if (n == 3 && method == "POST") {
      const json body = Body(request);
      return JsonResponse(
          workspace_.AddRule(dataset, body.at("determinants").get<std::vector<std::string>>(),
                             body.at("dependents").get<std::vector<std::string>>()),
          201);
    }
    if (n == 4 && method == "PATCH") {
      const json body = Body(request);
      if (!body.contains("status") || !body["status"].is_string()) {
        Fail(ErrorCode::kInvalidArgument, "status is required", "invalid_status");
      }
      return JsonResponse(workspace_.SetRuleStatus(dataset, seg[3], body["status"].get<std::string>()));
    }
    return not_allowed();
  }
  if (resource == "tags" && n == 3) {
    if (method == "GET") return JsonResponse(workspace_.Tags(dataset).tags);
    if (method != "POST") return not_allowed();
    const json body = Body(request);
    return JsonResponse(workspace_.AddTags(dataset, body.at("tags").get<std::vector<std::string>>()).tags);
  }
  if (resource == "detect" && n == 3) {
    if (method != "POST") return not_allowed();
    const Workspace::DetectOutcome outcome =
        workspace_.Detect(dataset, SuiteFromBody(Body(request), seed));
    json out = outcome.context.report;
    out["version"] = outcome.context.version.value;
    out["tools"] = json::array();
    for (DetectorKind kind : outcome.context.config.tools) out["tools"].push_back(DetectorName(kind));
    out["ml_pending"] = outcome.ml_pending;
    out["run_id"] = outcome.run_id;
    return JsonResponse(out);
  }
  if (resource == "detections" && n == 3) {
    if (method != "GET") return not_allowed();
    const auto last = workspace_.LastDetection(dataset);
    if (!last) Fail(ErrorCode::kFailedPrecondition, "no detection has been run", "no_detections");
    json out = last->report;
    out["version"] = last->version.value;
    return JsonResponse(out);
  }
  if (resource == "label-sessions") {
    if (n == 3) {
      if (method != "POST") return not_allowed();
      const json body = Body(request);
      const std::size_t budget = body.at("budget").get<std::size_t>();
      json suite_body = body;
      suite_body["tools"] = json::array();
      const DetectorSuiteConfig base = SuiteFromBody(suite_body, body.value("seed", seed));
      const auto view = workspace_.StartLabelSession(
          dataset, budget, base,
          body.contains("seed") ? std::optional<std::uint64_t>(body["seed"].get<std::uint64_t>())
                                : std::nullopt);
      return JsonResponse(view, 201);
    }
    if (n == 5 && seg[4] == "next") {
      if (method != "GET") return not_allowed();
      return JsonResponse(workspace_.NextTuple(dataset, seg[3]));
    }
    if (n == 5 && seg[4] == "submit") {
      if (method != "POST") return not_allowed();
      const json body = Body(request);
      return JsonResponse(workspace_.Submit(
          dataset, seg[3], body.at("row").get<std::size_t>(),
          body.value("dirty_cols", std::vector<std::string>())));
    }
  }
  if (resource == "repair" && n == 3) {
    if (method != "POST") return not_allowed();
    const json body = Body(request);
    const RepairKind kind = ParseRepairKind(body.value("kind", std::string("standard")));
    std::optional<MlRepairConfig> ml;
    if (body.contains("config")) {
      ml = body["config"].get<MlRepairConfig>();
      if (!body["config"].contains("seed")) ml->seed = seed;
    }
    const Workspace::RepairOutcome outcome = workspace_.RepairDataset(dataset, kind, ml);
    json changes = json::array();
    for (const CellChange& c : outcome.result.changes) changes.push_back(c);
    return JsonResponse({{"version_before", outcome.context.version_before.value},
                         {"version_after", outcome.context.version_after.value},
                         {"kind", RepairKindName(kind)},
                         {"changes_count", outcome.result.changes.size()},
                         {"changes", changes},
                         {"run_id", outcome.run_id}});
  }
  if (resource == "autoclean" && n == 3) {
    if (method != "POST") return not_allowed();
    const json body = Body(request);
    json task_json = body.at("task");
    if (!task_json.contains("seed")) task_json["seed"] = seed;
    json opt_json = body.value("optimizer", json::object());
    if (!opt_json.contains("seed")) opt_json["seed"] = seed;
    const auto out = workspace_.Autoclean(dataset, task_json.get<TaskSpec>(),
                                          opt_json.get<OptimizerConfig>());
    return JsonResponse({{"best_config", out.search.best.config},
                         {"best_score", out.search.best.score.value},
                         {"metric", MetricName(out.search.best.score.metric)},
                         {"history", HistoryJson(out.search.history)},
                         {"curve", out.curve},
                         {"version_before", out.version_before.value},
                         {"version_after", out.version_after.value},
                         {"committed", out.committed}});
  }
  if (resource == "datasheets" && n == 3) {
    if (method != "POST") return not_allowed();
    const auto out = workspace_.CreateDatasheet(dataset);
    return {201, "application/json", DatasheetJson(out.sheet)};
  }
  return ErrorResponse(404, "not_found", "no route for " + request.path);
}

void Service::Mount(httplib::Server& server) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    ApiRequest request;
    request.method = req.method;
    request.path = req.target.substr(0, req.target.find('?'));
    for (const auto& [key, value] : req.params) request.query[key] = value;
    request.body = req.body;
    request.content_type = req.get_header_value("Content-Type");
    for (const auto& [key, file] : req.files) {
      request.form[key] = file.content;
      if (!file.filename.empty()) request.filenames[key] = file.filename;
    }
    if (request.content_type.rfind("multipart/form-data", 0) == 0) request.body.clear();
    const ApiResponse response = Handle(request);
    res.status = response.status;
    res.set_content(response.body, response.content_type);
  };
  server.Get(".*", handler);
  server.Post(".*", handler);
  server.Patch(".*", handler);
  server.Put(".*", handler);
  server.Delete(".*", handler);
}

json OpenApiDocument() {
  auto op = [](const std::string& summary, std::vector<int> statuses) {
    json responses = json::object();
    for (int s : statuses) {
      responses[std::to_string(s)] = {{"description", s < 300 ? "success" : "error, see ErrorCodes"}};
    }
    return json{{"summary", summary}, {"responses", responses}};
  };
  json paths = {
      {"/datasets",
       {{"get", op("List datasets", {200})},
        {"post", op("Upload a CSV (multipart file, text/csv body or JSON {name, csv|demo, version, create})",
                    {200, 201, 400, 409})}}},
      {"/datasets/{d}/versions", {{"get", op("Commit log and working version", {200, 404})}}},
      {"/datasets/{d}/versions/{v}", {{"get", op("Snapshot as text/csv", {200, 404})}}},
      {"/datasets/{d}/profile", {{"get", op("Profile report", {200, 404})}}},
      {"/datasets/{d}/quality", {{"get", op("Quality metrics", {200, 404})}}},
      {"/datasets/{d}/rules",
       {{"get", op("Rules", {200, 404})},
        {"post", op("Add a custom rule {determinants, dependents}", {201, 400, 404})}}},
      {"/datasets/{d}/rules/{key}",
       {{"patch", op("Set status {status: confirm|reject}; key like a,b->c", {200, 400, 404})}}},
      {"/datasets/{d}/tags",
       {{"get", op("Tagged dirty values", {200, 404})},
        {"post", op("Add tags {tags: [..]}", {200, 400, 404})}}},
      {"/datasets/{d}/detect",
       {{"post", op("Run detectors {tools, configs, tags, min_k, seed}", {200, 400, 404, 422})}}},
      {"/datasets/{d}/detections", {{"get", op("Last detection report", {200, 404, 409})}}},
      {"/datasets/{d}/label-sessions",
       {{"post", op("Start a labeling session {budget, seed, configs}", {201, 400, 404})}}},
      {"/datasets/{d}/label-sessions/{id}/next", {{"get", op("Tuple under review", {200, 404})}}},
      {"/datasets/{d}/label-sessions/{id}/submit",
       {{"post", op("Label the tuple {row, dirty_cols}; empty dirty_cols skips", {200, 400, 404, 409})}}},
      {"/datasets/{d}/repair", {{"post", op("Repair {kind: standard|ml, config}", {200, 400, 404, 409})}}},
      {"/datasets/{d}/autoclean",
       {{"post", op("Search cleaning configs {task, optimizer} and apply the best", {200, 400, 404, 422})}}},
      {"/datasets/{d}/datasheets", {{"post", op("Generate and store a DataSheet", {201, 404, 409})}}},
      {"/replay", {{"post", op("Replay a DataSheet (body is the sheet)", {200, 400, 404, 500})}}},
      {"/runs/{experiment}", {{"get", op("Tracked runs of Detection or Repair", {200, 400})}}},
      {"/demos", {{"get", op("Bundled synthetic datasets", {200})}}},
      {"/openapi.json", {{"get", op("This document", {200})}}},
  };
  json codes = json::array();
  for (const ApiErrorCode& c : ApiErrorCodes()) codes.push_back({{"code", c.code}, {"status", c.status}});
  return {{"openapi", "3.0.3"},
          {"info", {{"title", "lens data-quality service"}, {"version", "1.0.0"}}},
          {"paths", paths},
          {"components",
           {{"schemas",
             {{"Error",
               {{"type", "object"},
                {"properties",
                 {{"error",
                   {{"type", "object"},
                    {"properties", {{"code", {{"type", "string"}}}, {"message", {{"type", "string"}}}}}}}}}}}}},
            {"x-error-codes", codes}}}};
}

}  // namespace lens
