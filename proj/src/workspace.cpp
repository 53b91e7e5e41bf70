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

#include "lens/workspace.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

#include "lens/error.hpp"
#include "lens/io.hpp"
#include "lens/synthetic.hpp"

namespace lens {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string Joined(const std::vector<DetectorKind>& kinds) {
  std::string out;
  for (DetectorKind kind : kinds) {
    if (!out.empty()) out += ",";
    out += DetectorName(kind);
  }
  return out;
}

bool HasKind(const DetectorSuiteConfig& config, DetectorKind kind) {
  return std::find(config.tools.begin(), config.tools.end(), kind) != config.tools.end();
}

// Keeps existing rules (and their statuses) whose columns survive, then adds
// newly discovered ones.
RuleSet MergeRules(const RuleSet& old, const Table& table) {
  RuleSet merged;
  auto known = [&](const FDRule& rule) {
    for (const auto* side : {&rule.determinants, &rule.dependents}) {
      for (const auto& name : *side) {
        if (!table.FindColumn(name)) return false;
      }
    }
    return true;
  };
  for (const FDRule& rule : old.rules) {
    if (known(rule)) merged.rules.push_back(rule);
  }
  if (table.num_rows() > 0) {
    for (const FDRule& rule : DiscoverFds(table).rules) {
      if (merged.Find(rule.key()) == nullptr) merged.rules.push_back(rule);
    }
  }
  for (FDRule& rule : merged.rules) MeasureRule(table, rule);
  return merged;
}

}  // namespace

WorkspaceOptions WorkspaceOptions::FromEnvironment() {
  WorkspaceOptions options;
  if (const char* dir = std::getenv("LENS_DATA_DIR"); dir != nullptr && *dir != '\0') {
    options.data_dir = dir;
  }
  if (const char* dir = std::getenv("LENS_RUNS_DIR"); dir != nullptr && *dir != '\0') {
    options.runs_dir = dir;
  }
  if (const char* seed = std::getenv("LENS_SEED"); seed != nullptr && *seed != '\0') {
    char* end = nullptr;
    const unsigned long long value = std::strtoull(seed, &end, 10);
    if (*end != '\0') Fail(ErrorCode::kInvalidArgument, "LENS_SEED must be an unsigned integer");
    options.seed = value;
  }
  return options;
}

Workspace::Workspace(WorkspaceOptions options)
    : options_(std::move(options)), store_(options_.data_dir), tracker_(options_.runs_dir) {}

fs::path Workspace::Dir(const std::string& dataset) const { return store_.DatasetDir(dataset); }

json Workspace::ReadState(const std::string& dataset, const std::string& file) const {
  const fs::path path = Dir(dataset) / file;
  if (!fs::exists(path)) return json();
  try {
    return json::parse(ReadFile(path));
  } catch (const json::exception& e) {
    Fail(ErrorCode::kIo, "corrupt state file " + path.string() + ": " + e.what());
  }
}

void Workspace::WriteState(const std::string& dataset, const std::string& file,
                           const json& value) const {
  const fs::path path = Dir(dataset) / file;
  fs::create_directories(path.parent_path());
  WriteFileAtomic(path, value.dump(2) + "\n");
}

void Workspace::RequireDataset(const std::string& dataset) const {
  if (!store_.Exists(dataset)) Fail(ErrorCode::kNotFound, "no dataset named " + dataset);
}

void Workspace::SetWorkingVersion(const std::string& dataset, VersionId version) {
  json state = ReadState(dataset, "state.json");
  if (state.is_null()) state = json::object();
  state["working_version"] = version.value;
  WriteState(dataset, "state.json", state);
}

std::uint64_t Workspace::NextCounter(const std::string& dataset, const std::string& name) {
  json state = ReadState(dataset, "state.json");
  if (state.is_null()) state = json::object();
  if (!state.contains("counters")) state["counters"] = json::object();
  const std::uint64_t next = state["counters"].value(name, std::uint64_t{0}) + 1;
  state["counters"][name] = next;
  WriteState(dataset, "state.json", state);
  return next;
}

Workspace::UploadResult Workspace::Upload(const std::string& dataset, std::string_view csv,
                                          std::optional<std::uint64_t> version,
                                          bool must_create) {
  if (!IsValidDatasetName(dataset)) {
    Fail(ErrorCode::kInvalidArgument, "invalid dataset name '" + dataset + "'");
  }
  if (!store_.Exists(dataset)) {
    if (csv.empty()) Fail(ErrorCode::kInvalidArgument, "upload has no CSV content");
    const Table table = ParseCsv(csv, dataset);
    const VersionId v = store_.Init(dataset, table, csv, "upload");
    FileLock lock(Dir(dataset) / ".state.lock");
    WriteState(dataset, "rules.json", MergeRules({}, table));
    SetWorkingVersion(dataset, v);
    return {dataset, v, true, true};
  }
  if (must_create) {
    Fail(ErrorCode::kAlreadyExists, "dataset " + dataset + " already exists", "dataset_exists");
  }
  FileLock lock(Dir(dataset) / ".state.lock");
  if (version && store_.HasVersion(dataset, VersionId(*version))) {
    SetWorkingVersion(dataset, VersionId(*version));
    return {dataset, VersionId(*version), false, false};
  }
  if (csv.empty()) Fail(ErrorCode::kInvalidArgument, "upload has no CSV content");
  const Table table = ParseCsv(csv, dataset);
  const VersionId v = store_.Commit(dataset, table, CommitOperation::kUpload, "upload");
  WriteState(dataset, "rules.json", MergeRules(StoredRules(dataset), table));
  SetWorkingVersion(dataset, v);
  return {dataset, v, false, true};
}

Workspace::UploadResult Workspace::UploadDemo(const std::string& demo, const std::string& dataset,
                                              std::optional<std::uint64_t> seed) {
  const Table table = MakeDemo(demo, seed.value_or(options_.seed));
  return Upload(dataset.empty() ? demo : dataset, ToCsv(table));
}

std::vector<std::string> Workspace::Datasets() const { return store_.ListDatasets(); }

std::vector<Commit> Workspace::Versions(const std::string& dataset) const {
  return store_.History(dataset);
}

VersionId Workspace::WorkingVersion(const std::string& dataset) const {
  RequireDataset(dataset);
  const json state = ReadState(dataset, "state.json");
  if (state.is_object() && state.contains("working_version")) {
    return VersionId(state["working_version"].get<std::uint64_t>());
  }
  return store_.Latest(dataset);
}

Table Workspace::LoadWorking(const std::string& dataset) const {
  return store_.Load(dataset, WorkingVersion(dataset));
}

ProfileReport Workspace::Profile(const std::string& dataset) const {
  return lens::Profile(LoadWorking(dataset), options_.exec);
}

QualityMetrics Workspace::Quality(const std::string& dataset) const {
  const Table table = LoadWorking(dataset);
  DetectionReport report;
  if (auto last = LastDetection(dataset); last && last->version == WorkingVersion(dataset)) {
    report = last->report;
  }
  return ComputeQualityMetrics(table, report, StoredRules(dataset));
}

RuleSet Workspace::StoredRules(const std::string& dataset) const {
  const json j = ReadState(dataset, "rules.json");
  return j.is_null() ? RuleSet{} : j.get<RuleSet>();
}

RuleSet Workspace::Rules(const std::string& dataset) const {
  const Table table = LoadWorking(dataset);
  RuleSet rules = StoredRules(dataset);
  for (FDRule& rule : rules.rules) MeasureRule(table, rule);
  return rules;
}

RuleSet Workspace::SetRuleStatus(const std::string& dataset, const std::string& key,
                                 const std::string& status) {
  RequireDataset(dataset);
  FileLock lock(Dir(dataset) / ".state.lock");
  RuleSet rules = SetStatus(StoredRules(dataset), RuleKey::Parse(key), ParseRuleStatus(status));
  WriteState(dataset, "rules.json", rules);
  return rules;
}

RuleSet Workspace::AddRule(const std::string& dataset, std::vector<std::string> determinants,
                           std::vector<std::string> dependents) {
  const Table table = LoadWorking(dataset);
  FileLock lock(Dir(dataset) / ".state.lock");
  RuleSet rules;
  try {
    rules = AddCustomRule(StoredRules(dataset), std::move(determinants), std::move(dependents), table);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kAlreadyExists) throw;
    Fail(ErrorCode::kInvalidArgument, e.what(), "invalid_rule");
  }
  WriteState(dataset, "rules.json", rules);
  return rules;
}

TagSet Workspace::Tags(const std::string& dataset) const {
  RequireDataset(dataset);
  const json j = ReadState(dataset, "tags.json");
  TagSet tags;
  if (!j.is_null()) tags.tags = j.get<std::set<std::string>>();
  return tags;
}

TagSet Workspace::AddTags(const std::string& dataset, const std::vector<std::string>& tags) {
  RequireDataset(dataset);
  FileLock lock(Dir(dataset) / ".state.lock");
  TagSet current = Tags(dataset);
  for (const std::string& tag : tags) {
    if (Trim(tag).empty()) Fail(ErrorCode::kInvalidArgument, "tags must not be blank");
    current.tags.insert(tag);
  }
  WriteState(dataset, "tags.json", current.tags);
  return current;
}

std::optional<DetectionContext> Workspace::LastDetection(const std::string& dataset) const {
  RequireDataset(dataset);
  const json j = ReadState(dataset, "detection.json");
  if (j.is_null()) return std::nullopt;
  return j.at("context").get<DetectionContext>();
}

Workspace::DetectOutcome Workspace::Detect(const std::string& dataset,
                                           DetectorSuiteConfig config) {
  RequireDataset(dataset);
  if (config.tools.empty()) Fail(ErrorCode::kInvalidArgument, "no detection tools selected");
  FileLock lock(Dir(dataset) / ".state.lock");
  for (const std::string& tag : Tags(dataset).tags) config.tags.tags.insert(tag);
  return DetectLocked(dataset, config);
}

Workspace::DetectOutcome Workspace::DetectLocked(const std::string& dataset,
                                                 const DetectorSuiteConfig& config) {
  const VersionId version = WorkingVersion(dataset);
  const Table table = store_.Load(dataset, version);
  const RuleSet rules = StoredRules(dataset);

  DetectOutcome outcome;
  DetectorSuiteConfig effective = config;
  std::optional<LabelRecord> labeling;
  if (HasKind(config, DetectorKind::kMLDetector)) {
    labeling = CompletedSession(dataset, version);
    if (!labeling) {
      std::erase(effective.tools, DetectorKind::kMLDetector);
      outcome.ml_pending = true;
    }
  }
  if (effective.tools.empty()) {
    outcome.context.version = version;
    outcome.context.config = effective;
    outcome.context.rules = rules;
  } else {
    outcome.context = RunDetection(table, version, effective, rules, labeling, options_.exec);
  }

  const std::uint64_t seq = NextCounter(dataset, "detection");
  WriteState(dataset, "detection.json",
             {{"seq", seq},
              {"context", outcome.context},
              {"requested", config},
              {"ml_pending", outcome.ml_pending}});

  std::map<std::string, double> metrics = {
      {"num_detected_cells", static_cast<double>(outcome.context.report.size())}};
  for (const auto& [kind, count] : outcome.context.report.per_detector_counts()) {
    metrics["count_" + std::string(DetectorName(kind))] = static_cast<double>(count);
  }
  const RunRecord run = tracker_.LogRun(
      Experiment::kDetection,
      {{"dataset", dataset},
       {"version", std::to_string(version.value)},
       {"tools", Joined(effective.tools)},
       {"ml_pending", outcome.ml_pending ? "true" : "false"},
       {"config", json(config).dump()}},
      metrics, {{"report.json", json(outcome.context.report).dump(2) + "\n"}});
  outcome.run_id = run.run_id;
  return outcome;
}

std::optional<LabelRecord> Workspace::CompletedSession(const std::string& dataset,
                                                       VersionId version) const {
  const fs::path dir = Dir(dataset) / "sessions";
  if (!fs::is_directory(dir)) return std::nullopt;
  std::optional<std::pair<std::uint64_t, LabelRecord>> best;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const json j = json::parse(ReadFile(entry.path()));
    if (j.at("version").get<std::uint64_t>() != version.value) continue;
    if (j.at("status").get<std::string>() == LabelStatusName(LabelStatus::kActive)) continue;
    const std::uint64_t n = j.at("number").get<std::uint64_t>();
    if (!best || n > best->first) best.emplace(n, j.at("record").get<LabelRecord>());
  }
  if (!best) return std::nullopt;
  return best->second;
}

Workspace::SessionView Workspace::View(const std::string& session_id, const Table& table,
                                       const LabelSession& session) const {
  SessionView view;
  view.session_id = session_id;
  view.status = session.status();
  view.row = session.status() == LabelStatus::kActive ? session.current_row() : std::nullopt;
  if (view.row) {
    for (std::size_t c = 0; c < table.num_cols(); ++c) {
      view.values.emplace_back(table.column(c).name, table.raw(*view.row, c));
    }
  }
  view.budget = session.budget();
  view.remaining_budget = session.remaining_budget();
  view.reviewed_count = session.reviewed_count();
  view.max_reviews = session.max_reviews();
  return view;
}

Workspace::SessionView Workspace::StartLabelSession(const std::string& dataset,
                                                    std::size_t budget,
                                                    DetectorSuiteConfig base,
                                                    std::optional<std::uint64_t> seed) {
  RequireDataset(dataset);
  FileLock lock(Dir(dataset) / ".state.lock");
  const VersionId version = WorkingVersion(dataset);
  const Table table = store_.Load(dataset, version);
  LabelRecord record;
  record.budget = budget;
  record.config.seed = seed.value_or(options_.seed);
  base.tools.clear();
  base.min_k.reset();
  for (const std::string& tag : Tags(dataset).tags) base.tags.tags.insert(tag);
  record.base = base;
  record.rules = StoredRules(dataset);
  LabelSession session =
      LabelSession::Start(table, LabelBaseOutputs(table, record, options_.exec), budget, record.config);
  session.NextTuple();

  const std::uint64_t n = NextCounter(dataset, "session");
  const std::string id = "session-" + std::to_string(n);
  WriteState(dataset, "sessions/" + id + ".json",
             {{"id", id},
              {"number", n},
              {"version", version.value},
              {"status", LabelStatusName(session.status())},
              {"record", record}});
  return View(id, table, session);
}

namespace {

struct LoadedSession {
  nlohmann::json file;
  LabelRecord record;
  Table table;
  LabelSession session;
};

bool ValidSessionId(const std::string& id) {
  constexpr std::string_view kPrefix = "session-";
  if (id.size() <= kPrefix.size() || id.compare(0, kPrefix.size(), kPrefix) != 0) return false;
  return std::all_of(id.begin() + kPrefix.size(), id.end(),
                     [](unsigned char c) { return std::isdigit(c) != 0; });
}

LoadedSession LoadSession(const VersionStore& store, const std::string& dataset,
                          const std::string& id, Exec exec) {
  const fs::path path = store.DatasetDir(dataset) / "sessions" / (id + ".json");
  if (!ValidSessionId(id) || !fs::exists(path)) {
    Fail(ErrorCode::kNotFound, "no labeling session " + id + " for " + dataset);
  }
  json file = json::parse(ReadFile(path));
  LabelRecord record = file.at("record").get<LabelRecord>();
  Table table = store.Load(dataset, VersionId(file.at("version").get<std::uint64_t>()));
  LabelSession session =
      LabelSession::Replay(table, LabelBaseOutputs(table, record, exec), record.budget,
                           record.config, record.submissions, /*require_complete=*/false);
  return {std::move(file), std::move(record), std::move(table), std::move(session)};
}

}  // namespace

Workspace::SessionView Workspace::NextTuple(const std::string& dataset,
                                            const std::string& session_id) {
  RequireDataset(dataset);
  FileLock lock(Dir(dataset) / ".state.lock");
  LoadedSession loaded = LoadSession(store_, dataset, session_id, options_.exec);
  return View(session_id, loaded.table, loaded.session);
}

Workspace::SessionView Workspace::Submit(const std::string& dataset,
                                         const std::string& session_id, std::size_t row,
                                         const std::vector<std::string>& dirty_cols) {
  RequireDataset(dataset);
  FileLock lock(Dir(dataset) / ".state.lock");
  LoadedSession loaded = LoadSession(store_, dataset, session_id, options_.exec);
  LabelSession& session = loaded.session;
  session.Submit(row, dirty_cols);
  if (session.status() == LabelStatus::kActive) session.NextTuple();
  loaded.record.submissions = session.submissions();
  loaded.file["record"] = loaded.record;
  loaded.file["status"] = LabelStatusName(session.status());
  WriteState(dataset, "sessions/" + session_id + ".json", loaded.file);

  // A detection that was waiting for this session is completed now.
  if (session.status() != LabelStatus::kActive) {
    const json detection = ReadState(dataset, "detection.json");
    if (detection.is_object() && detection.value("ml_pending", false) &&
        detection.at("context").at("version") == loaded.file.at("version") &&
        loaded.file.at("version").get<std::uint64_t>() == WorkingVersion(dataset).value) {
      DetectLocked(dataset, detection.at("requested").get<DetectorSuiteConfig>());
    }
  }
  return View(session_id, loaded.table, session);
}

Workspace::RepairOutcome Workspace::RepairDataset(const std::string& dataset, RepairKind kind,
                                                  std::optional<MlRepairConfig> ml) {
  RequireDataset(dataset);
  FileLock lock(Dir(dataset) / ".state.lock");
  MlRepairConfig config;
  config.seed = options_.seed;
  return RepairLocked(dataset, kind, ml.value_or(config));
}

Workspace::RepairOutcome Workspace::RepairLocked(const std::string& dataset, RepairKind kind,
                                                 const MlRepairConfig& ml) {
  const json detection = ReadState(dataset, "detection.json");
  if (detection.is_null()) {
    Fail(ErrorCode::kFailedPrecondition, "no detection has been run on " + dataset,
         "no_detections");
  }
  const DetectionContext ctx = detection.at("context").get<DetectionContext>();
  const Table table = store_.Load(dataset, ctx.version);

  RepairOutcome outcome;
  outcome.result = Repair(table, ctx.report, kind, ml, options_.exec);
  const VersionId after = ApplyAndCommit(store_, dataset, outcome.result,
                                         "repair (" + std::string(RepairKindName(kind)) + ")");
  SetWorkingVersion(dataset, after);
  outcome.context = {kind, ml, ctx.version, after};
  WriteState(dataset, "repair.json",
             {{"detection_seq", detection.at("seq")}, {"context", outcome.context}});

  json changes = json::array();
  for (const CellChange& change : outcome.result.changes) changes.push_back(change);
  const RunRecord run = tracker_.LogRun(
      Experiment::kRepair,
      {{"dataset", dataset},
       {"kind", std::string(RepairKindName(kind))},
       {"config", json(ml).dump()},
       {"version_before", std::to_string(ctx.version.value)},
       {"version_after", std::to_string(after.value)}},
      {{"changes_count", static_cast<double>(outcome.result.changes.size())},
       {"num_detected_cells", static_cast<double>(ctx.report.size())}},
      {{"changes.json", changes.dump(2) + "\n"}});
  outcome.run_id = run.run_id;
  return outcome;
}

Workspace::AutocleanOutcome Workspace::Autoclean(const std::string& dataset, TaskSpec task,
                                                 OptimizerConfig optimizer) {
  RequireDataset(dataset);
  FileLock lock(Dir(dataset) / ".state.lock");
  const VersionId version = WorkingVersion(dataset);
  const Table table = store_.Load(dataset, version);
  ValidateTask(table, task);

  PipelineDefaults defaults;
  defaults.detectors.isolation_forest.forest.seed = task.seed;
  defaults.ml_repair.seed = task.seed;

  AutocleanOutcome out;
  out.task = task;
  out.optimizer = optimizer;
  out.version_before = version;
  out.version_after = version;
  out.search = RunSearch(table, StoredRules(dataset), task, optimizer, defaults);
  out.curve = MakeIterationCurve(out.search.history, ScoreTable(table, task).value);

  const CleaningConfig& best = out.search.best.config;
  if (!best.AllOff()) {
    DetectorSuiteConfig suite = defaults.detectors;
    suite.tools = best.EnabledDetectors();
    const DetectOutcome detected = DetectLocked(dataset, suite);
    out.num_detected_cells = detected.context.report.size();
    MlRepairConfig ml = defaults.ml_repair;
    ml.seed = task.seed;
    const RepairOutcome repaired = RepairLocked(dataset, best.repair, ml);
    out.version_after = repaired.context.version_after;
    out.committed = true;
  }
  return out;
}

Workspace::SheetOutcome Workspace::CreateDatasheet(const std::string& dataset) {
  RequireDataset(dataset);
  FileLock lock(Dir(dataset) / ".state.lock");
  const json detection = ReadState(dataset, "detection.json");
  if (detection.is_null()) {
    Fail(ErrorCode::kFailedPrecondition, "no detection has been run on " + dataset,
         "no_detections");
  }
  const DetectionContext ctx = detection.at("context").get<DetectionContext>();
  std::optional<RepairContext> repair;
  const json stored = ReadState(dataset, "repair.json");
  if (stored.is_object() && stored.at("detection_seq") == detection.at("seq")) {
    repair = stored.at("context").get<RepairContext>();
  }
  SheetOutcome out;
  out.sheet = GenerateDatasheet(store_, dataset, ctx, repair, options_.exec);
  out.path = SaveDatasheet(store_, out.sheet);
  return out;
}

ReplayResult Workspace::Replay(const DataSheet& sheet) {
  RequireDataset(sheet.dataset_name);
  FileLock lock(Dir(sheet.dataset_name) / ".state.lock");
  ReplayResult result = ReplayDatasheet(store_, sheet, options_.exec);
  if (result.committed) SetWorkingVersion(sheet.dataset_name, result.version);
  return result;
}

void to_json(nlohmann::json& j, const Workspace::SessionView& view) {
  json values = json::array();
  for (const auto& [column, value] : view.values) {
    values.push_back({{"column", column}, {"value", value}});
  }
  j = {{"session_id", view.session_id},
       {"status", LabelStatusName(view.status)},
       {"row", view.row ? json(*view.row) : json()},
       {"values", values},
       {"budget", view.budget},
       {"remaining_budget", view.remaining_budget},
       {"reviewed_count", view.reviewed_count},
       {"max_reviews", view.max_reviews}};
}

}  // namespace lens
