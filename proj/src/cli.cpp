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

#include "lens/cli.hpp"

#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lens/error.hpp"
#include "lens/io.hpp"
#include "lens/workspace.hpp"

namespace lens {
namespace {

using json = nlohmann::json;

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const std::string trimmed(Trim(item));
    if (!trimmed.empty()) out.push_back(trimmed);
  }
  return out;
}

int ExitFor(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kUnknownTool:
      return kExitUsage;
    case ErrorCode::kReplayDivergence:
      return kExitReplayDivergence;
    default:
      return kExitData;
  }
}

std::string Fixed(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

struct Globals {
  bool json = false;
  std::optional<std::uint64_t> seed;
  std::string data_dir;
  std::string runs_dir;
};

class Runner {
 public:
  Runner(const Globals& globals, std::istream& in, std::ostream& out, std::ostream& err)
      : globals_(globals), in_(in), out_(out), err_(err), workspace_(MakeOptions(globals)) {}

  std::uint64_t seed() const { return workspace_.options().seed; }

  void Emit(const json& j, const std::string& text) {
    if (globals_.json) {
      out_ << j.dump(2) << "\n";
    } else {
      out_ << text;
    }
  }

  void Ingest(const std::string& csv_path, std::string name, std::optional<std::uint64_t> version,
              const std::string& demo) {
    Workspace::UploadResult r;
    if (!demo.empty()) {
      r = workspace_.UploadDemo(demo, name);
    } else {
      if (csv_path.empty()) Fail(ErrorCode::kInvalidArgument, "ingest needs a CSV path or --demo");
      if (name.empty()) name = std::filesystem::path(csv_path).stem().string();
      std::string bytes;
      if (!(version && workspace_.store().Exists(name) &&
            workspace_.store().HasVersion(name, VersionId(*version)))) {
        bytes = ReadFile(csv_path);
      }
      r = workspace_.Upload(name, bytes, version);
    }
    std::ostringstream text;
    text << (r.created ? "created " : (r.committed ? "committed " : "switched ")) << r.dataset
         << " version " << r.version.value << "\n";
    Emit({{"dataset", r.dataset}, {"version", r.version.value}, {"created", r.created},
          {"committed", r.committed}},
         text.str());
  }

  void Profile(const std::string& dataset) {
    const ProfileReport report = workspace_.Profile(dataset);
    std::ostringstream text;
    text << dataset << ": " << (report.columns.empty() ? 0 : report.columns[0].count) << " rows, "
         << report.columns.size() << " columns, "
         << report.duplicate_row_count << " duplicate rows\n";
    for (const ColumnProfile& c : report.columns) {
      text << "  " << c.name << " (" << (c.type == ColumnType::kNumeric ? "numeric" : "categorical")
           << "): " << c.missing_count << " missing, " << c.distinct_count << " distinct";
      if (c.numeric) {
        text << ", mean " << Fixed(c.numeric->mean) << ", std " << Fixed(c.numeric->std)
             << ", range [" << Fixed(c.numeric->min) << ", " << Fixed(c.numeric->max) << "]";
      }
      text << "\n";
    }
    Emit(report, text.str());
  }

  void Quality(const std::string& dataset) {
    const QualityMetrics q = workspace_.Quality(dataset);
    std::ostringstream text;
    text << "completeness " << Fixed(q.completeness) << "\nerror_rate " << Fixed(q.error_rate)
         << "\nduplicate_row_rate " << Fixed(q.duplicate_row_rate) << "\nrule_violation_rate "
         << Fixed(q.rule_violation_rate) << "\n";
    Emit(q, text.str());
  }

  void Rules(const std::string& dataset, const std::vector<std::string>& confirm,
             const std::vector<std::string>& reject, const std::vector<std::string>& add) {
    for (const std::string& key : confirm) workspace_.SetRuleStatus(dataset, key, "Confirmed");
    for (const std::string& key : reject) workspace_.SetRuleStatus(dataset, key, "Rejected");
    for (const std::string& text : add) {
      const RuleKey key = RuleKey::Parse(text);
      workspace_.AddRule(dataset, key.determinants, key.dependents);
    }
    const RuleSet rules = workspace_.Rules(dataset);
    std::ostringstream text;
    for (const FDRule& r : rules.rules) {
      text << r.key().ToString() << "  " << RuleStatusName(r.status) << "  support " << r.support
           << "  violations " << r.violations << "\n";
    }
    if (rules.rules.empty()) text << "no rules\n";
    Emit(rules, text.str());
  }

  void Tag(const std::string& dataset, const std::vector<std::string>& values) {
    const TagSet tags = workspace_.AddTags(dataset, values);
    std::ostringstream text;
    text << tags.tags.size() << " tagged values\n";
    Emit(tags.tags, text.str());
  }

  void Detect(const std::string& dataset, const std::string& tools,
              const std::vector<std::string>& tags, std::optional<std::size_t> min_k) {
    DetectorSuiteConfig config;
    bool wants_min_k = false;
    for (const std::string& name : SplitList(tools)) {
      const DetectorKind kind = ParseDetectorKind(name);
      if (kind == DetectorKind::kMinK) {
        wants_min_k = true;
      } else {
        config.tools.push_back(kind);
      }
    }
    if (config.tools.empty()) Fail(ErrorCode::kInvalidArgument, "--tools lists no detectors");
    config.isolation_forest.forest.seed = seed();
    config.tags.tags.insert(tags.begin(), tags.end());
    config.min_k = min_k;
    if (!min_k && wants_min_k) config.min_k = 2;
    const auto outcome = workspace_.Detect(dataset, config);
    const DetectionReport& report = outcome.context.report;
    json j = report;
    j["version"] = outcome.context.version.value;
    j["ml_pending"] = outcome.ml_pending;
    j["run_id"] = outcome.run_id;
    std::ostringstream text;
    text << report.size() << " cells detected on version " << outcome.context.version.value
         << " (" << outcome.run_id << ")\n";
    for (const auto& [kind, count] : report.per_detector_counts()) {
      text << "  " << DetectorName(kind) << ": " << count << "\n";
    }
    if (outcome.ml_pending) {
      text << "  MLDetector: pending, finish a labeling session on this version first\n";
    }
    Emit(j, text.str());
  }

  void Label(const std::string& dataset, std::size_t budget, const std::string& session_id) {
    Workspace::SessionView view;
    if (session_id.empty()) {
      DetectorSuiteConfig base;
      base.isolation_forest.forest.seed = seed();
      view = workspace_.StartLabelSession(dataset, budget, base, seed());
    } else {
      view = workspace_.NextTuple(dataset, session_id);
    }
    std::ostream& prompt = globals_.json ? err_ : out_;
    while (view.status == LabelStatus::kActive && view.row) {
      prompt << "tuple " << *view.row << " (budget left " << view.remaining_budget << ", reviewed "
             << view.reviewed_count << ")\n";
      for (const auto& [column, value] : view.values) prompt << "  " << column << " = " << value << "\n";
      prompt << "dirty columns, comma-separated; empty line skips, q stops> " << std::flush;
      std::string line;
      if (!std::getline(in_, line) || Trim(line) == "q") break;
      view = workspace_.Submit(dataset, view.session_id, *view.row, SplitList(line));
    }
    std::ostringstream text;
    text << "session " << view.session_id << " " << LabelStatusName(view.status) << ", reviewed "
         << view.reviewed_count << ", budget left " << view.remaining_budget << "\n";
    Emit(view, text.str());
  }

  void Repair(const std::string& dataset, const std::string& kind_name) {
    const RepairKind kind = ParseRepairKind(kind_name);
    MlRepairConfig ml;
    ml.seed = seed();
    const auto outcome = workspace_.RepairDataset(dataset, kind, ml);
    std::ostringstream text;
    text << "repaired " << outcome.result.changes.size() << " cells with " << RepairKindName(kind)
         << ": version " << outcome.context.version_before.value << " -> "
         << outcome.context.version_after.value << "\n";
    Emit({{"version_before", outcome.context.version_before.value},
          {"version_after", outcome.context.version_after.value},
          {"kind", RepairKindName(kind)},
          {"changes_count", outcome.result.changes.size()},
          {"run_id", outcome.run_id}},
         text.str());
  }

  void Autoclean(const std::string& dataset, const std::string& target, std::size_t trials,
                 const std::string& task_name, const std::string& curve_out) {
    TaskSpec task;
    task.target = target;
    task.seed = seed();
    if (task_name.empty()) {
      const Table table = workspace_.LoadWorking(dataset);
      task.task = table.is_numeric(table.ColumnIndex(target)) ? TreeTask::kRegression
                                                               : TreeTask::kClassification;
    } else if (task_name == "regression") {
      task.task = TreeTask::kRegression;
    } else if (task_name == "classification") {
      task.task = TreeTask::kClassification;
    } else {
      Fail(ErrorCode::kInvalidArgument, "--task must be regression or classification");
    }
    OptimizerConfig optimizer;
    optimizer.n_trials = trials;
    optimizer.seed = seed();
    const auto out = workspace_.Autoclean(dataset, task, optimizer);
    if (!curve_out.empty()) WriteFileAtomic(curve_out, out.curve.ToCsv());
    std::ostringstream text;
    text << "best " << MetricName(out.search.best.score.metric) << " " << Fixed(out.search.best.score.value)
         << " after " << out.search.history.size() << " trials (dirty baseline "
         << Fixed(out.curve.dirty_baseline) << ")\nbest config " << json(out.search.best.config).dump()
         << "\n";
    if (out.committed) {
      text << "applied: version " << out.version_before.value << " -> " << out.version_after.value << "\n";
    } else {
      text << "best configuration cleans nothing; no version committed\n";
    }
    Emit({{"best_config", out.search.best.config},
          {"best_score", out.search.best.score.value},
          {"metric", MetricName(out.search.best.score.metric)},
          {"history", HistoryJson(out.search.history)},
          {"curve", out.curve},
          {"version_before", out.version_before.value},
          {"version_after", out.version_after.value},
          {"committed", out.committed}},
         text.str());
  }

  void Datasheet(const std::string& dataset, const std::string& out_path) {
    const auto out = workspace_.CreateDatasheet(dataset);
    if (!out_path.empty()) WriteFileAtomic(out_path, DatasheetJson(out.sheet));
    if (globals_.json) {
      out_ << DatasheetJson(out.sheet);
    } else {
      out_ << "datasheet written to " << out.path.string() << "\n";
    }
  }

  void Replay(const std::string& sheet_path) {
    const DataSheet sheet = ParseDatasheet(ReadFile(sheet_path));
    const ReplayResult r = workspace_.Replay(sheet);
    std::ostringstream text;
    text << "replay of " << sheet.dataset_name << " matches, sha256 " << r.content_hash;
    text << (r.committed ? ", committed version " + std::to_string(r.version.value) : std::string(", detection only"))
         << "\n";
    Emit({{"dataset", sheet.dataset_name},
          {"version", r.version.value},
          {"committed", r.committed},
          {"content_hash", r.content_hash}},
         text.str());
  }

  void Versions(const std::string& dataset) {
    const auto commits = workspace_.Versions(dataset);
    const VersionId working = workspace_.WorkingVersion(dataset);
    std::ostringstream text;
    json list = json::array();
    for (const Commit& c : commits) {
      list.push_back(c);
      text << (c.version == working ? "* " : "  ") << "v" << c.version.value << "  "
           << CommitOperationName(c.operation) << "  " << c.timestamp << "  "
           << c.content_hash.substr(0, 12) << "  " << c.note << "\n";
    }
    Emit({{"dataset", dataset}, {"working_version", working.value}, {"versions", list}}, text.str());
  }

  void Runs(const std::string& experiment) {
    json list = json::array();
    std::ostringstream text;
    for (const RunRecord& r : workspace_.tracker().ListRuns(ParseExperiment(experiment))) {
      list.push_back(r);
      text << r.run_id << "  " << r.timestamp << "  "
           << (r.params.count("dataset") != 0 ? r.params.at("dataset") : std::string()) << "\n";
    }
    Emit(list, text.str());
  }

 private:
  static WorkspaceOptions MakeOptions(const Globals& g) {
    WorkspaceOptions options = WorkspaceOptions::FromEnvironment();
    if (!g.data_dir.empty()) options.data_dir = g.data_dir;
    if (!g.runs_dir.empty()) options.runs_dir = g.runs_dir;
    if (g.seed) options.seed = *g.seed;
    return options;
  }

  const Globals& globals_;
  std::istream& in_;
  std::ostream& out_;
  std::ostream& err_;
  Workspace workspace_;
};

}  // namespace

int RunCli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"lens: tabular data-quality engine", "lens"};
  app.require_subcommand(1);
  Globals g;
  app.add_flag("--json", g.json, "Machine-readable JSON output");
  app.add_option("--seed", g.seed, "Seed for every randomized step (default LENS_SEED or 0)");
  app.add_option("--data-dir", g.data_dir, "Dataset root (default LENS_DATA_DIR or ./datasets)");
  app.add_option("--runs-dir", g.runs_dir, "Run tracker root (default LENS_RUNS_DIR or ./runs)");

  std::string dataset, path, name, demo, tools, kind = "standard", target, task, curve_out,
      session, out_path, experiment;
  std::optional<std::uint64_t> version;
  std::optional<std::size_t> min_k;
  std::size_t budget = 0, trials = 20;
  std::vector<std::string> tags, confirm, reject, add, values;

  auto* ingest = app.add_subcommand("ingest", "Upload a CSV file as a dataset or a new version");
  ingest->add_option("csv", path, "CSV file");
  ingest->add_option("--name", name, "Dataset name (default: file stem)");
  ingest->add_option("--version", version, "Switch to this version if it exists");
  ingest->add_option("--demo", demo, "Generate a bundled synthetic dataset instead");

  auto* profile = app.add_subcommand("profile", "Column statistics and correlations");
  profile->add_option("dataset", dataset)->required();
  auto* quality = app.add_subcommand("quality", "Quality metrics of the working version");
  quality->add_option("dataset", dataset)->required();

  auto* rules = app.add_subcommand("rules", "List, confirm, reject or add functional dependencies");
  rules->add_option("dataset", dataset)->required();
  rules->add_option("--confirm", confirm, "Rule key such as a,b->c");
  rules->add_option("--reject", reject, "Rule key");
  rules->add_option("--add", add, "Custom rule such as a->b");

  auto* tag = app.add_subcommand("tag", "Mark values as dirty wherever they occur");
  tag->add_option("dataset", dataset)->required();
  tag->add_option("values", values)->required();

  auto* detect = app.add_subcommand("detect", "Run error detectors");
  detect->add_option("dataset", dataset)->required();
  detect->add_option("--tools", tools, "Comma-separated: sd,iqr,if,mv,dm,rv,tag,ml")->required();
  detect->add_option("--tags", tags, "Extra tagged values")->delimiter(',');
  detect->add_option("--min-k", min_k, "Keep cells flagged by at least K detectors");

  auto* label = app.add_subcommand("label", "Interactive labeling session");
  label->add_option("dataset", dataset)->required();
  label->add_option("--budget", budget, "Tuples to label dirty");
  label->add_option("--session", session, "Resume an existing session");

  auto* repair = app.add_subcommand("repair", "Repair the last detection");
  repair->add_option("dataset", dataset)->required();
  repair->add_option("--kind", kind, "standard or ml");

  auto* autoclean = app.add_subcommand("autoclean", "Search detector/repair combinations");
  autoclean->add_option("dataset", dataset)->required();
  autoclean->add_option("--target", target, "Target column")->required();
  autoclean->add_option("--trials", trials, "Number of trials");
  autoclean->add_option("--task", task, "regression or classification (default from column type)");
  autoclean->add_option("--curve-out", curve_out, "Write the iteration curve CSV here");

  auto* datasheet = app.add_subcommand("datasheet", "Generate a DataSheet");
  datasheet->add_option("dataset", dataset)->required();
  datasheet->add_option("--out", out_path, "Also write the sheet here");

  auto* replay = app.add_subcommand("replay", "Replay a DataSheet");
  replay->add_option("sheet", path, "DataSheet JSON file")->required();

  auto* versions = app.add_subcommand("versions", "Commit log");
  versions->add_option("dataset", dataset)->required();

  auto* runs = app.add_subcommand("runs", "Tracked runs of an experiment");
  runs->add_option("experiment", experiment, "Detection or Repair")->required();

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    Runner runner(g, in, out, err);
    if (ingest->parsed()) {
      runner.Ingest(path, name, version, demo);
    } else if (profile->parsed()) {
      runner.Profile(dataset);
    } else if (quality->parsed()) {
      runner.Quality(dataset);
    } else if (rules->parsed()) {
      runner.Rules(dataset, confirm, reject, add);
    } else if (tag->parsed()) {
      runner.Tag(dataset, values);
    } else if (detect->parsed()) {
      runner.Detect(dataset, tools, tags, min_k);
    } else if (label->parsed()) {
      if (session.empty() && budget == 0) {
        Fail(ErrorCode::kInvalidArgument, "label needs --budget N (N >= 1) or --session ID");
      }
      runner.Label(dataset, budget, session);
    } else if (repair->parsed()) {
      runner.Repair(dataset, kind);
    } else if (autoclean->parsed()) {
      runner.Autoclean(dataset, target, trials, task, curve_out);
    } else if (datasheet->parsed()) {
      runner.Datasheet(dataset, out_path);
    } else if (replay->parsed()) {
      runner.Replay(path);
    } else if (versions->parsed()) {
      runner.Versions(dataset);
    } else if (runs->parsed()) {
      runner.Runs(experiment);
    }
  } catch (const Error& e) {
    const int code = ExitFor(e);
    err << "error (" << ErrorCodeName(e.code()) << "): " << e.what() << "\n";
    if (code == kExitUsage) err << "run with --help for usage\n";
    return code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace lens
