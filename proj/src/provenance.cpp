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

#include "lens/provenance.hpp"

#include <algorithm>
#include <cstdio>

#include "lens/error.hpp"
#include "lens/io.hpp"

namespace lens {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

bool HasTool(const DetectorSuiteConfig& config, DetectorKind kind) {
  return std::find(config.tools.begin(), config.tools.end(), kind) != config.tools.end();
}

json LabelingConfigJson(const LabelingConfig& config) {
  return {{"seed", config.seed},
          {"max_depth", config.tree.max_depth},
          {"min_samples_leaf", config.tree.min_samples_leaf}};
}

LabelingConfig ParseLabelingConfig(const json& j) {
  LabelingConfig c;
  c.seed = j.value("seed", c.seed);
  c.tree.max_depth = j.value("max_depth", c.tree.max_depth);
  c.tree.min_samples_leaf = j.value("min_samples_leaf", c.tree.min_samples_leaf);
  return c;
}

json RepairConfigJson(RepairKind kind, const MlRepairConfig& ml) {
  if (kind == RepairKind::kStandard) return json::object();
  return ml;
}

// Detectors only, with MinK applied; no labeling model.
DetectionReport AutomatedReport(const Table& table, const DetectorSuiteConfig& config,
                                const RuleSet& rules, Exec exec) {
  return BuildReport(table, RunDetectors(table, config, rules, exec), config.min_k);
}

std::string Relative(const VersionStore& store, const fs::path& path) {
  return path.lexically_relative(store.root()).generic_string();
}

}  // namespace

DetectorOutputs LabelBaseOutputs(const Table& table, const LabelRecord& record, Exec exec) {
  DetectorSuiteConfig base = record.base;
  base.tools.assign(std::begin(kBaseDetectors), std::end(kBaseDetectors));
  base.min_k.reset();
  return RunDetectors(table, base, record.rules, exec);
}

DetectionContext RunDetection(const Table& table, VersionId version,
                              const DetectorSuiteConfig& config, const RuleSet& rules,
                              const std::optional<LabelRecord>& labeling, Exec exec) {
  if (config.tools.empty()) Fail(ErrorCode::kInvalidArgument, "no detection tools selected");
  DetectorOutputs outputs = RunDetectors(table, config, rules, exec);
  if (HasTool(config, DetectorKind::kMLDetector)) {
    if (!labeling) {
      Fail(ErrorCode::kFailedPrecondition, "MLDetector needs a completed labeling session");
    }
    LabelSession session = LabelSession::Replay(table, LabelBaseOutputs(table, *labeling, exec),
                                                labeling->budget, labeling->config,
                                                labeling->submissions, /*require_complete=*/false);
    if (session.status() == LabelStatus::kActive) {
      Fail(ErrorCode::kFailedPrecondition, "labeling session is still active");
    }
    outputs[DetectorKind::kMLDetector] = session.TrainPredict(session.Propagate());
  }
  DetectionContext ctx;
  ctx.version = version;
  ctx.config = config;
  ctx.rules = rules;
  if (HasTool(config, DetectorKind::kMLDetector)) ctx.labeling = labeling;
  ctx.report = BuildReport(table, outputs, config.min_k);
  return ctx;
}

DataSheet GenerateDatasheet(const VersionStore& store, const std::string& dataset,
                            const DetectionContext& detection,
                            const std::optional<RepairContext>& repair, Exec exec) {
  if (repair && repair->version_before != detection.version) {
    Fail(ErrorCode::kFailedPrecondition, "repair does not belong to the current detection");
  }
  const Table before = store.Load(dataset, detection.version);
  DataSheet sheet;
  sheet.dataset_name = dataset;
  sheet.dirty_path = Relative(store, store.DatasetDir(dataset) / "dirty.csv");
  sheet.rows = before.num_rows();
  sheet.cols = before.num_cols();
  sheet.version_before = detection.version;
  sheet.version_after = detection.version;
  sheet.detection = detection.config;
  sheet.num_detected_cells = detection.report.size();
  sheet.rules = detection.rules.Enforced();
  sheet.labeling = detection.labeling;
  sheet.quality_before = ComputeQualityMetrics(before, detection.report, detection.rules);
  if (repair) {
    sheet.repaired_path = Relative(store, store.DatasetDir(dataset) / "repaired.csv");
    sheet.version_after = repair->version_after;
    sheet.repair = repair->kind;
    sheet.ml_repair = repair->ml;
    // Quality after repair is judged by the automated tools; the labeling
    // model only applies to the table it was trained on.
    const Table after = store.Load(dataset, repair->version_after);
    DetectorSuiteConfig automated = detection.config;
    std::erase(automated.tools, DetectorKind::kMLDetector);
    DetectionReport report;
    if (!automated.tools.empty()) {
      report = AutomatedReport(after, automated, detection.rules, exec);
    }
    sheet.quality_after = ComputeQualityMetrics(after, report, detection.rules);
  }
  sheet.created_at = UtcNow();
  return sheet;
}

std::string DatasheetJson(const DataSheet& sheet) {
  return json(sheet).dump(2) + "\n";
}

DataSheet ParseDatasheet(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("datasheet is not valid JSON: ") + e.what());
  }
  try {
    return j.get<DataSheet>();
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("malformed datasheet: ") + e.what());
  }
}

fs::path SaveDatasheet(const VersionStore& store, const DataSheet& sheet) {
  const fs::path dir = store.DatasetDir(sheet.dataset_name) / "datasheets";
  fs::create_directories(dir);
  std::string stem = sheet.created_at;
  std::replace(stem.begin(), stem.end(), ':', '-');
  fs::path path = dir / (stem + ".json");
  for (int i = 1; fs::exists(path); ++i) {
    path = dir / (stem + "-" + std::to_string(i) + ".json");
  }
  WriteFileAtomic(path, DatasheetJson(sheet));
  return path;
}

ReplayResult ReplayDatasheet(VersionStore& store, const DataSheet& sheet, Exec exec) {
  const std::string& dataset = sheet.dataset_name;
  if (!store.HasVersion(dataset, sheet.version_before)) {
    Fail(ErrorCode::kNotFound, "version " + std::to_string(sheet.version_before.value) +
                                   " of " + dataset + " does not exist");
  }
  const Table before = store.Load(dataset, sheet.version_before);
  if (before.num_rows() != sheet.rows || before.num_cols() != sheet.cols) {
    Fail(ErrorCode::kReplayDivergence, "recorded shape differs from version_before");
  }
  RuleSet rules;
  rules.rules = sheet.rules;
  const DetectionContext ctx =
      RunDetection(before, sheet.version_before, sheet.detection, rules, sheet.labeling, exec);
  if (ctx.report.size() != sheet.num_detected_cells) {
    Fail(ErrorCode::kReplayDivergence,
         "replay detected " + std::to_string(ctx.report.size()) + " cells, sheet records " +
             std::to_string(sheet.num_detected_cells));
  }

  ReplayResult result;
  if (!sheet.repair) {
    result.table = before;
    result.version = sheet.version_before;
    result.content_hash = store.SnapshotHash(dataset, sheet.version_before);
    return result;
  }
  if (!store.HasVersion(dataset, sheet.version_after)) {
    Fail(ErrorCode::kNotFound, "version " + std::to_string(sheet.version_after.value) +
                                   " of " + dataset + " does not exist");
  }
  RepairResult repaired = Repair(before, ctx.report, *sheet.repair, sheet.ml_repair, exec);
  const std::string hash = Sha256Hex(ToCsv(repaired.repaired));
  const std::string expected = store.SnapshotHash(dataset, sheet.version_after);
  if (hash != expected) {
    Fail(ErrorCode::kReplayDivergence,
         "replayed table hashes to " + hash + ", version " +
             std::to_string(sheet.version_after.value) + " has " + expected);
  }
  result.version = store.Commit(dataset, repaired.repaired, CommitOperation::kReplay,
                                "replay of datasheet " + sheet.created_at);
  result.table = std::move(repaired.repaired);
  result.committed = true;
  result.content_hash = hash;
  return result;
}

void to_json(json& j, const LabelRecord& record) {
  j = {{"budget", record.budget},
       {"config", LabelingConfigJson(record.config)},
       {"base", record.base},
       {"rules", record.rules},
       {"submissions", record.submissions}};
}

void from_json(const json& j, LabelRecord& record) {
  record.budget = j.at("budget").get<std::size_t>();
  record.config = ParseLabelingConfig(j.at("config"));
  record.base = j.at("base").get<DetectorSuiteConfig>();
  record.rules = j.at("rules").get<RuleSet>();
  record.submissions = j.at("submissions").get<std::vector<Submission>>();
}

void to_json(json& j, const DetectionContext& context) {
  j = {{"version", context.version.value},
       {"config", context.config},
       {"rules", context.rules},
       {"labeling", context.labeling ? json(*context.labeling) : json()},
       {"report", context.report}};
}

void from_json(const json& j, DetectionContext& context) {
  context.version = VersionId(j.at("version").get<std::uint64_t>());
  context.config = j.at("config").get<DetectorSuiteConfig>();
  context.rules = j.at("rules").get<RuleSet>();
  context.labeling.reset();
  if (j.contains("labeling") && !j["labeling"].is_null()) {
    context.labeling = j["labeling"].get<LabelRecord>();
  }
  context.report = j.at("report").get<DetectionReport>();
}

void to_json(json& j, const RepairContext& context) {
  j = {{"kind", RepairKindName(context.kind)},
       {"ml", context.ml},
       {"version_before", context.version_before.value},
       {"version_after", context.version_after.value}};
}

void from_json(const json& j, RepairContext& context) {
  context.kind = ParseRepairKind(j.at("kind").get<std::string>());
  context.ml = j.at("ml").get<MlRepairConfig>();
  context.version_before = VersionId(j.at("version_before").get<std::uint64_t>());
  context.version_after = VersionId(j.at("version_after").get<std::uint64_t>());
}

void to_json(json& j, const DataSheet& sheet) {
  json tools = json::array();
  for (DetectorKind kind : sheet.detection.tools) {
    tools.push_back({{"name", DetectorName(kind)}, {"config", DetectorConfigJson(sheet.detection, kind)}});
  }
  json repair_tools = json::array();
  if (sheet.repair) {
    repair_tools.push_back({{"name", RepairKindName(*sheet.repair)},
                            {"config", RepairConfigJson(*sheet.repair, sheet.ml_repair)}});
  }
  json seeds = {{"isolation_forest", sheet.detection.isolation_forest.forest.seed}};
  if (sheet.labeling) seeds["labeling"] = sheet.labeling->config.seed;
  if (sheet.repair == RepairKind::kMl) seeds["repair"] = sheet.ml_repair.seed;
  j = {{"dataset_name", sheet.dataset_name},
       {"dirty_path", sheet.dirty_path},
       {"repaired_path", sheet.repaired_path},
       {"shape", {{"rows", sheet.rows}, {"cols", sheet.cols}}},
       {"version_before", sheet.version_before.value},
       {"version_after", sheet.version_after.value},
       {"detection_tools", tools},
       {"num_detected_cells", sheet.num_detected_cells},
       {"repair_tools", repair_tools},
       {"rules", sheet.rules},
       {"tags", sheet.detection.tags.tags},
       {"min_k", sheet.detection.min_k ? json(*sheet.detection.min_k) : json()},
       {"labeling", sheet.labeling ? json(*sheet.labeling) : json()},
       {"quality_metrics",
        {{"before", sheet.quality_before},
         {"after", sheet.quality_after ? json(*sheet.quality_after) : json()}}},
       {"seeds", seeds},
       {"created_at", sheet.created_at}};
}

void from_json(const json& j, DataSheet& sheet) {
  sheet = DataSheet();
  sheet.dataset_name = j.at("dataset_name").get<std::string>();
  sheet.dirty_path = j.at("dirty_path").get<std::string>();
  sheet.repaired_path = j.at("repaired_path").get<std::string>();
  sheet.rows = j.at("shape").at("rows").get<std::size_t>();
  sheet.cols = j.at("shape").at("cols").get<std::size_t>();
  sheet.version_before = VersionId(j.at("version_before").get<std::uint64_t>());
  sheet.version_after = VersionId(j.at("version_after").get<std::uint64_t>());

  // Rebuild the suite config from the per-tool entries.
  json suite = {{"tools", json::array()}};
  for (const json& tool : j.at("detection_tools")) {
    const DetectorKind kind = ParseDetectorKind(tool.at("name").get<std::string>());
    suite["tools"].push_back(DetectorName(kind));
    const json& config = tool.value("config", json::object());
    switch (kind) {
      case DetectorKind::kSD: suite["sd"] = config; break;
      case DetectorKind::kIQR: suite["iqr"] = config; break;
      case DetectorKind::kIsolationForest: suite["isolation_forest"] = config; break;
      case DetectorKind::kDisguisedMissing: suite["disguised"] = config; break;
      default: break;
    }
  }
  suite["tags"] = j.at("tags");
  suite["min_k"] = j.value("min_k", json());
  sheet.detection = suite.get<DetectorSuiteConfig>();
  sheet.num_detected_cells = j.at("num_detected_cells").get<std::size_t>();

  const json& repair_tools = j.at("repair_tools");
  if (repair_tools.size() > 1) {
    Fail(ErrorCode::kInvalidArgument, "a datasheet holds at most one repair tool");
  }
  if (!repair_tools.empty()) {
    sheet.repair = ParseRepairKind(repair_tools[0].at("name").get<std::string>());
    if (*sheet.repair == RepairKind::kMl) {
      sheet.ml_repair = repair_tools[0].at("config").get<MlRepairConfig>();
    }
  }
  sheet.rules = j.at("rules").get<std::vector<FDRule>>();
  if (j.contains("labeling") && !j["labeling"].is_null()) {
    sheet.labeling = j["labeling"].get<LabelRecord>();
  }
  const json& quality = j.at("quality_metrics");
  sheet.quality_before = quality.at("before").get<QualityMetrics>();
  if (quality.contains("after") && !quality["after"].is_null()) {
    sheet.quality_after = quality["after"].get<QualityMetrics>();
  }
  // The seeds object is the authoritative record of every seed used.
  if (j.contains("seeds") && j["seeds"].is_object()) {
    const json& seeds = j["seeds"];
    if (seeds.contains("isolation_forest")) {
      sheet.detection.isolation_forest.forest.seed = seeds["isolation_forest"].get<std::uint64_t>();
    }
    if (seeds.contains("labeling") && sheet.labeling) {
      sheet.labeling->config.seed = seeds["labeling"].get<std::uint64_t>();
    }
    if (seeds.contains("repair")) sheet.ml_repair.seed = seeds["repair"].get<std::uint64_t>();
  }
  sheet.created_at = j.at("created_at").get<std::string>();
}

std::string_view ExperimentName(Experiment experiment) {
  return experiment == Experiment::kDetection ? "Detection" : "Repair";
}

Experiment ParseExperiment(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "detection") return Experiment::kDetection;
  if (lower == "repair") return Experiment::kRepair;
  Fail(ErrorCode::kInvalidArgument, "unknown experiment " + std::string(name));
}

void to_json(json& j, const RunRecord& record) {
  j = {{"experiment", ExperimentName(record.experiment)},
       {"run_id", record.run_id},
       {"params", record.params},
       {"metrics", record.metrics},
       {"artifact_paths", record.artifact_paths},
       {"timestamp", record.timestamp}};
}

void from_json(const json& j, RunRecord& record) {
  record.experiment = ParseExperiment(j.at("experiment").get<std::string>());
  record.run_id = j.at("run_id").get<std::string>();
  record.params = j.at("params").get<std::map<std::string, std::string>>();
  record.metrics = j.at("metrics").get<std::map<std::string, double>>();
  record.artifact_paths = j.at("artifact_paths").get<std::vector<std::string>>();
  record.timestamp = j.at("timestamp").get<std::string>();
}

RunTracker::RunTracker(fs::path root) : root_(std::move(root)) {}

RunRecord RunTracker::LogRun(Experiment experiment, const std::map<std::string, std::string>& params,
                             const std::map<std::string, double>& metrics,
                             const std::map<std::string, std::string>& artifacts) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) Fail(ErrorCode::kIo, "cannot create tracker root " + root_.string() + ": " + ec.message());
  FileLock lock(root_ / ".lock");

  std::uint64_t next = 1;
  for (Experiment e : {Experiment::kDetection, Experiment::kRepair}) {
    const fs::path dir = root_ / ExperimentName(e);
    if (!fs::is_directory(dir)) continue;
    for (const auto& entry : fs::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      unsigned long long n = 0;
      if (std::sscanf(name.c_str(), "run-%llu", &n) == 1) next = std::max<std::uint64_t>(next, n + 1);
    }
  }
  char id[32];
  std::snprintf(id, sizeof(id), "run-%06llu", static_cast<unsigned long long>(next));

  RunRecord record;
  record.experiment = experiment;
  record.run_id = id;
  record.params = params;
  record.metrics = metrics;
  record.timestamp = UtcNow();
  const fs::path dir = root_ / ExperimentName(experiment) / record.run_id;
  fs::create_directories(dir / "artifacts", ec);
  if (ec) Fail(ErrorCode::kIo, "cannot create run directory " + dir.string() + ": " + ec.message());
  for (const auto& [name, bytes] : artifacts) {
    if (name.empty() || name.find('/') != std::string::npos || name.front() == '.') {
      Fail(ErrorCode::kInvalidArgument, "bad artifact name " + name);
    }
    WriteFileAtomic(dir / "artifacts" / name, bytes);
    record.artifact_paths.push_back((fs::path("artifacts") / name).generic_string());
  }
  WriteFileAtomic(dir / "params.json", json(params).dump(2) + "\n");
  WriteFileAtomic(dir / "metrics.json", json(metrics).dump(2) + "\n");
  WriteFileAtomic(dir / "run.json", json(record).dump(2) + "\n");
  return record;
}

std::vector<RunRecord> RunTracker::ListRuns(Experiment experiment) const {
  std::vector<RunRecord> out;
  const fs::path dir = root_ / ExperimentName(experiment);
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const fs::path run_json = entry.path() / "run.json";
    if (!fs::is_regular_file(run_json)) continue;
    try {
      out.push_back(json::parse(ReadFile(run_json)).get<RunRecord>());
    } catch (const json::exception& e) {
      Fail(ErrorCode::kParse, "corrupt run record " + run_json.string() + ": " + e.what());
    }
  }
  std::sort(out.begin(), out.end(), [](const RunRecord& a, const RunRecord& b) {
    return std::tie(a.timestamp, a.run_id) < std::tie(b.timestamp, b.run_id);
  });
  return out;
}

}  // namespace lens
