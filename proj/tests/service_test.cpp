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


#include <gtest/gtest.h>

#include <set>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "lens/search.hpp"
#include "lens/service.hpp"
#include "lens/synthetic.hpp"
#include "test_support.hpp"

namespace lens {
namespace {

using nlohmann::json;
using testing::TempDir;

class ServiceTest : public ::testing::Test {
 protected:
  ServiceTest() : ws_(Options()), service_(ws_) {}

  WorkspaceOptions Options() {
    WorkspaceOptions options;
    options.data_dir = dir_ / "datasets";
    options.runs_dir = dir_ / "runs";
    options.seed = 2;
    return options;
  }

  ApiResponse Call(const std::string& method, const std::string& path, const json& body = {}) {
    ApiRequest request;
    request.method = method;
    request.path = path;
    if (!body.is_null()) {
      request.body = body.dump();
      request.content_type = "application/json";
    }
    return service_.Handle(request);
  }

  // Uploads a regression benchmark table and returns its name.
  std::string Upload(const std::string& name, std::uint64_t seed = 1, std::size_t rows = 200) {
    const ApiResponse r =
        Call("POST", "/datasets",
             {{"name", name}, {"csv", ToCsv(RegressionBenchmark(seed, rows).dirty)}});
    EXPECT_EQ(r.status, 201) << r.body;
    return name;
  }

  static std::string ErrorOf(const ApiResponse& r) { return r.Json()["error"]["code"]; }

  TempDir dir_;
  Workspace ws_;
  Service service_;
};

TEST_F(ServiceTest, HealthAndDemos) {
  EXPECT_EQ(Call("GET", "/health").Json()["status"], "ok");
  const ApiResponse demos = Call("GET", "/demos");
  EXPECT_EQ(demos.Json().get<std::vector<std::string>>(), DemoNames());
}

TEST_F(ServiceTest, UploadAndVersions) {
  Upload("d");
  ApiResponse r = Call("GET", "/datasets");
  ASSERT_EQ(r.Json().size(), 1u);
  EXPECT_EQ(r.Json()[0]["name"], "d");

  r = Call("POST", "/datasets", {{"name", "d"}, {"csv", "a\n1\n"}});
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.Json()["version"], 1);

  r = Call("POST", "/datasets", {{"name", "d"}, {"version", 0}});
  EXPECT_EQ(r.Json()["committed"], false);
  EXPECT_EQ(Call("GET", "/datasets/d/versions").Json()["working_version"], 0);
  EXPECT_EQ(Call("GET", "/datasets/d").Json()["versions"].size(), 2u);

  r = Call("GET", "/datasets/d/versions/1");
  EXPECT_EQ(r.content_type, "text/csv");
  EXPECT_EQ(r.body, "a\n1\n");
  EXPECT_EQ(Call("GET", "/datasets/d/versions/5").status, 404);
}

TEST_F(ServiceTest, CsvBodyAndMultipartUpload) {
  ApiRequest request;
  request.method = "POST";
  request.path = "/datasets";
  request.content_type = "text/csv";
  request.query = {{"name", "raw"}};
  request.body = "a,b\n1,2\n";
  EXPECT_EQ(service_.Handle(request).status, 201);

  ApiRequest form;
  form.method = "POST";
  form.path = "/datasets";
  form.content_type = "multipart/form-data; boundary=x";
  form.form = {{"file", "a\n3\n"}};
  form.filenames = {{"file", "upload.csv"}};
  const ApiResponse r = service_.Handle(form);
  EXPECT_EQ(r.status, 201);
  EXPECT_EQ(r.Json()["dataset"], "upload");
}

TEST_F(ServiceTest, DemoUploadWithCreate) {
  ApiResponse r = Call("POST", "/datasets", {{"demo", "demo-outliers"}, {"create", true}});
  EXPECT_EQ(r.status, 201);
  EXPECT_EQ(r.Json()["dataset"], "demo-outliers");
  r = Call("POST", "/datasets", {{"demo", "demo-outliers"}, {"create", true}});
  EXPECT_EQ(r.status, 409);
  EXPECT_EQ(ErrorOf(r), "dataset_exists");
}

TEST_F(ServiceTest, ProfileAndQuality) {
  Upload("d");
  const json profile = Call("GET", "/datasets/d/profile").Json();
  EXPECT_TRUE(profile.is_object());
  const json quality = Call("GET", "/datasets/d/quality").Json();
  EXPECT_LT(quality["completeness"].get<double>(), 1.0);
  const ApiResponse missing = Call("GET", "/datasets/nope/profile");
  EXPECT_EQ(missing.status, 404);
  EXPECT_EQ(ErrorOf(missing), "not_found");
}

TEST_F(ServiceTest, RuleEndpoints) {
  Call("POST", "/datasets", {{"name", "r"}, {"csv", "a,b,c\n1,x,p\n1,y,p\n2,x,q\n3,z,q\n"}});
  ApiResponse r = Call("PATCH", "/datasets/r/rules/a-%3Ec", {{"status", "confirm"}});
  ASSERT_EQ(r.status, 200) << r.body;
  bool confirmed = false;
  for (const json& rule : r.Json()) {
    if (rule["determinants"] == json{"a"} && rule["dependents"] == json{"c"}) {
      confirmed = rule["status"] == "Confirmed";
    }
  }
  EXPECT_TRUE(confirmed);

  r = Call("PATCH", "/datasets/r/rules/a-%3Ec", {{"status", "sure"}});
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(ErrorOf(r), "invalid_status");
  EXPECT_EQ(ErrorOf(Call("PATCH", "/datasets/r/rules/a-%3Ec", json::object())), "invalid_status");

  r = Call("POST", "/datasets/r/rules", {{"determinants", {"a", "b"}}, {"dependents", {"b"}}});
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(ErrorOf(r), "invalid_rule");
  r = Call("POST", "/datasets/r/rules", {{"determinants", {"b"}}, {"dependents", {"c"}}});
  EXPECT_EQ(r.status, 201);
  r = Call("POST", "/datasets/r/rules", {{"determinants", {"b"}}, {"dependents", {"c"}}});
  EXPECT_EQ(ErrorOf(r), "invalid_rule");
  EXPECT_EQ(Call("GET", "/datasets/r/rules").Json().size(),
            ws_.Rules("r").rules.size());
  EXPECT_EQ(Call("DELETE", "/datasets/r/rules").status, 405);
}

TEST_F(ServiceTest, DetectAndDetections) {
  Upload("d");
  EXPECT_EQ(ErrorOf(Call("GET", "/datasets/d/detections")), "no_detections");
  ApiResponse r = Call("POST", "/datasets/d/detect", {{"tools", {"SD", "IQR", "MinK"}}});
  ASSERT_EQ(r.status, 200) << r.body;
  const json report = r.Json();
  EXPECT_EQ(report["tools"], (json{"SD", "IQR"}));
  EXPECT_EQ(report["ml_pending"], false);
  EXPECT_FALSE(report["run_id"].get<std::string>().empty());
  const json last = Call("GET", "/datasets/d/detections").Json();
  EXPECT_EQ(last["version"], 0);
  EXPECT_EQ(Call("GET", "/runs/Detection").Json().size(), 1u);
  EXPECT_EQ(Call("GET", "/runs/Repair").Json().size(), 0u);
  EXPECT_EQ(ErrorOf(Call("GET", "/runs/Training")), "bad_request");

  r = Call("POST", "/datasets/d/detect", {{"tools", {"Foo"}}});
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(ErrorOf(r), "unknown_tool");
  EXPECT_EQ(ErrorOf(Call("POST", "/datasets/d/detect", json::object())), "bad_request");
}

TEST_F(ServiceTest, TagsEndpoint) {
  Call("POST", "/datasets", {{"name", "t"}, {"csv", "a\nx\nFILL\n"}});
  EXPECT_EQ(Call("POST", "/datasets/t/tags", {{"tags", {"FILL"}}}).Json(), json{"FILL"});
  EXPECT_EQ(Call("GET", "/datasets/t/tags").Json(), json{"FILL"});
  const json report = Call("POST", "/datasets/t/detect", {{"tools", {"UserTag"}}}).Json();
  EXPECT_EQ(report["histogram"]["a"]["UserTag"], 1);
}

TEST_F(ServiceTest, TypeMismatch) {
  Call("POST", "/datasets", {{"name", "c"}, {"csv", "a,b\nx,1\ny,2\nx,3\n"}});
  // The suite skips the forest when no column is numeric.
  Call("POST", "/datasets", {{"name", "s"}, {"csv", "a\nx\ny\n"}});
  ApiResponse r = Call("POST", "/datasets/s/detect", {{"tools", {"IsolationForest"}}});
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.Json()["detections"].size(), 0u);
  r = Call("POST", "/datasets/c/autoclean", {{"task", {{"target", "a"}}}});
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(ErrorOf(r), "type_mismatch");
}

TEST_F(ServiceTest, LabelFlow) {
  Upload("d");
  ApiResponse r = Call("POST", "/datasets/d/label-sessions", {{"budget", 1}});
  ASSERT_EQ(r.status, 201) << r.body;
  const std::string id = r.Json()["session_id"];
  const std::string base = "/datasets/d/label-sessions/" + id;
  const json first = Call("GET", base + "/next").Json();
  EXPECT_EQ(Call("GET", base + "/next").Json()["row"], first["row"]);

  r = Call("POST", base + "/submit", {{"row", first["row"]}, {"dirty_cols", json::array()}});
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_NE(r.Json()["row"], first["row"]);
  EXPECT_EQ(r.Json()["reviewed_count"], 1);
  EXPECT_EQ(r.Json()["remaining_budget"], 1);

  json view = r.Json();
  while (view["status"] == "Active") {
    view = Call("POST", base + "/submit", {{"row", view["row"]}}).Json();
  }
  EXPECT_EQ(view["reviewed_count"], 5);
  r = Call("POST", base + "/submit", {{"row", 0}});
  EXPECT_EQ(r.status, 409);
  EXPECT_EQ(ErrorOf(r), "session_closed");
  EXPECT_EQ(Call("GET", "/datasets/d/label-sessions/session-9/next").status, 404);
  EXPECT_EQ(ErrorOf(Call("POST", "/datasets/d/label-sessions", {{"budget", 0}})), "bad_request");
}

TEST_F(ServiceTest, RepairBumpsVersion) {
  Upload("d");
  ApiResponse r = Call("POST", "/datasets/d/repair", {{"kind", "standard"}});
  EXPECT_EQ(r.status, 409);
  EXPECT_EQ(ErrorOf(r), "no_detections");
  Call("POST", "/datasets/d/detect", {{"tools", {"SD", "MissingValue"}}});
  r = Call("POST", "/datasets/d/repair", {{"kind", "ml"}});
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(r.Json()["version_after"], r.Json()["version_before"].get<int>() + 1);
  EXPECT_GT(r.Json()["changes_count"].get<int>(), 0);
  EXPECT_EQ(ErrorOf(Call("POST", "/datasets/d/repair", {{"kind", "magic"}})), "unknown_tool");
}

TEST_F(ServiceTest, AutocleanMatchesExhaustive) {
  Upload("d", 11, 300);
  const ApiResponse r = Call("POST", "/datasets/d/autoclean",
                             {{"task", {{"target", "y"}}}, {"optimizer", {{"n_trials", 128}}}});
  ASSERT_EQ(r.status, 200) << r.body;
  TaskSpec task;
  task.target = "y";
  task.seed = 2;
  PipelineDefaults defaults;
  defaults.detectors.isolation_forest.forest.seed = 2;
  defaults.ml_repair.seed = 2;
  const SearchResult exhaustive =
      ExhaustiveSearch(ws_.store().Load("d", VersionId(0)), ws_.Rules("d"), task, defaults);
  EXPECT_DOUBLE_EQ(r.Json()["best_score"].get<double>(), exhaustive.best.score.value);
  EXPECT_EQ(r.Json()["history"].size(), 128u);
  EXPECT_EQ(r.Json()["metric"], "mse");

  const ApiResponse bad = Call("POST", "/datasets/d/autoclean",
                               {{"task", {{"target", "y"}, {"task", "classification"}}}});
  EXPECT_EQ(bad.status, 422);
}

TEST_F(ServiceTest, DatasheetReplay) {
  Upload("d");
  EXPECT_EQ(ErrorOf(Call("POST", "/datasets/d/datasheets")), "no_detections");
  Call("POST", "/datasets/d/detect", {{"tools", {"IsolationForest", "SD"}}, {"seed", 9}});
  Call("POST", "/datasets/d/repair", {{"kind", "standard"}});
  const ApiResponse sheet = Call("POST", "/datasets/d/datasheets");
  ASSERT_EQ(sheet.status, 201) << sheet.body;

  ApiRequest replay{"POST", "/replay", {}, sheet.body, "application/json", {}, {}};
  ApiResponse r = service_.Handle(replay);
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(r.Json()["content_hash"], r.Json()["expected_hash"]);
  EXPECT_EQ(r.Json()["committed"], true);

  json tampered = json::parse(sheet.body);
  tampered["seeds"]["isolation_forest"] = 4242;
  replay.body = tampered.dump();
  r = service_.Handle(replay);
  EXPECT_EQ(r.status, 500);
  EXPECT_EQ(ErrorOf(r), "replay_divergence");

  replay.body = "{oops";
  EXPECT_EQ(ErrorOf(service_.Handle(replay)), "parse_error");
}

TEST_F(ServiceTest, RoutingErrors) {
  EXPECT_EQ(Call("GET", "/nowhere").status, 404);
  EXPECT_EQ(Call("GET", "/datasets/d/nothing").status, 404);
  const ApiResponse r = Call("PUT", "/openapi.json");
  EXPECT_EQ(r.status, 405);
  EXPECT_EQ(ErrorOf(r), "method_not_allowed");
  ApiRequest bad{"POST", "/datasets", {}, "[1,2]", "application/json", {}, {}};
  EXPECT_EQ(ErrorOf(service_.Handle(bad)), "bad_request");
}

TEST(ApiErrors, EveryCodeHasAStatusAndAMapping) {
  std::set<std::string> codes;
  for (const ApiErrorCode& c : ApiErrorCodes()) {
    EXPECT_TRUE(codes.insert(c.code).second) << c.code;
    EXPECT_GE(c.status, 400);
    EXPECT_LT(c.status, 600);
  }
  const std::pair<ErrorCode, std::pair<int, std::string>> generic[] = {
      {ErrorCode::kInvalidArgument, {400, "bad_request"}},
      {ErrorCode::kParse, {400, "parse_error"}},
      {ErrorCode::kUnknownTool, {400, "unknown_tool"}},
      {ErrorCode::kNotFound, {404, "not_found"}},
      {ErrorCode::kAlreadyExists, {409, "already_exists"}},
      {ErrorCode::kFailedPrecondition, {409, "failed_precondition"}},
      {ErrorCode::kTypeMismatch, {422, "type_mismatch"}},
      {ErrorCode::kReplayDivergence, {500, "replay_divergence"}},
      {ErrorCode::kIo, {500, "io_error"}},
  };
  std::set<std::string> reached = {"method_not_allowed", "internal"};
  for (const auto& [code, expected] : generic) {
    EXPECT_EQ(MapError(Error(code, "x")), expected);
    reached.insert(expected.second);
  }
  for (const char* reason :
       {"invalid_status", "invalid_rule", "dataset_exists", "no_detections", "session_closed"}) {
    const auto mapped = MapError(Error(ErrorCode::kInvalidArgument, "x", reason));
    EXPECT_EQ(mapped.second, reason);
    reached.insert(reason);
  }
  EXPECT_EQ(reached, codes);
  // An unrecognised reason falls back to the code's generic mapping.
  EXPECT_EQ(MapError(Error(ErrorCode::kNotFound, "x", "other")).first, 404);
}

TEST(OpenApi, ListsPathsAndErrorCodes) {
  const json doc = OpenApiDocument();
  EXPECT_EQ(doc["openapi"], "3.0.3");
  for (const char* path : {"/datasets", "/datasets/{d}/detect", "/datasets/{d}/repair",
                           "/datasets/{d}/autoclean", "/replay", "/openapi.json"}) {
    EXPECT_TRUE(doc["paths"].contains(path)) << path;
  }
  EXPECT_EQ(doc["components"]["x-error-codes"].size(), ApiErrorCodes().size());
}

TEST_F(ServiceTest, ServesOverHttp) {
  httplib::Server server;
  service_.Mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  httplib::MultipartFormDataItems items = {{"file", "a,b\n1,2\n3,4\n", "web.csv", "text/csv"}};
  auto upload = client.Post("/datasets", items);
  ASSERT_TRUE(upload);
  EXPECT_EQ(upload->status, 201);
  EXPECT_EQ(json::parse(upload->body)["dataset"], "web");

  auto versions = client.Get("/datasets/web/versions/0");
  ASSERT_TRUE(versions);
  EXPECT_EQ(versions->body, "a,b\n1,2\n3,4\n");

  auto patch = client.Patch("/datasets/web/rules/a-%3Eb", "{\"status\":\"confirm\"}",
                            "application/json");
  ASSERT_TRUE(patch);
  EXPECT_EQ(patch->status, 200) << patch->body;

  auto openapi = client.Get("/openapi.json");
  ASSERT_TRUE(openapi);
  EXPECT_EQ(json::parse(openapi->body)["openapi"], "3.0.3");

  server.stop();
  thread.join();
}

}  // namespace
}  // namespace lens
