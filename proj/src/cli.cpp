/*
 * Copyright 2026 The AutoFT Authors.
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

#include "autoft/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "autoft/checkpoint.hpp"
#include "autoft/config.hpp"
#include "autoft/evaluation.hpp"
#include "autoft/feature_pipeline.hpp"
#include "autoft/synth.hpp"
#include "autoft/training.hpp"
#include "json.hpp"

namespace autoft::cli {

namespace fs = std::filesystem;

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kParameter:
      return kExitConfig;
    case ErrorKind::kData:
    case ErrorKind::kSchema:
    case ErrorKind::kIo:
      return kExitData;
    case ErrorKind::kVocabMismatch:
      return kExitVocabMismatch;
    case ErrorKind::kMetricUndefined:
    case ErrorKind::kEvaluation:
      return kExitEvaluation;
    default:
      return kExitInternal;
  }
}

namespace {

struct RunOptions {
  std::string data_dir;
  std::string schema_path;
  std::string vocab_path;
  std::string run_dir;
  std::string config_path;
  std::string checkpoint_path;
  std::string stage = "autoft";
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  bool overwrite = false;
  bool quiet = false;
};

struct DataContext {
  Schema schema;
  Vocabulary vocab;
  std::uint64_t vocab_hash = 0;
  std::string data_dir;
};

void RequireFile(const std::string& path, const char* what) {
  if (path.empty() || !fs::is_regular_file(path)) {
    Fail(ErrorKind::kConfig, std::string(what) + " not found: " + path);
  }
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
}

std::string DefaultIn(const std::string& given, const std::string& dir, const char* name) {
  if (!given.empty()) return given;
  return (fs::path(dir) / name).string();
}

DataContext LoadContext(const RunOptions& opt) {
  if (opt.data_dir.empty() || !fs::is_directory(opt.data_dir)) {
    Fail(ErrorKind::kConfig, "data directory not found: " + opt.data_dir);
  }
  DataContext ctx;
  ctx.data_dir = opt.data_dir;
  const std::string schema_path = DefaultIn(opt.schema_path, opt.data_dir, kSchemaFile);
  const std::string vocab_path = DefaultIn(opt.vocab_path, opt.data_dir, kVocabFile);
  RequireFile(schema_path, "schema file");
  RequireFile(vocab_path, "vocabulary file (run build-vocab first)");
  ctx.schema = LoadSchema(schema_path);
  ctx.vocab = Vocabulary::Load(vocab_path);
  if (ctx.vocab.num_fields() != ctx.schema.num_fields()) {
    Fail(ErrorKind::kVocabMismatch, "vocabulary has " + std::to_string(ctx.vocab.num_fields()) +
                                        " fields but the schema has " +
                                        std::to_string(ctx.schema.num_fields()));
  }
  ctx.vocab_hash = ctx.vocab.Hash();
  return ctx;
}

DomainDataset LoadSplit(const DataContext& ctx, Domain domain, Split split) {
  const std::string path = (fs::path(ctx.data_dir) / DataFileName(domain, split)).string();
  RequireFile(path, "data file");
  return LoadDataset(path, ctx.schema, ctx.vocab, domain, split);
}

DomainDataset Concat(const DomainDataset& a, const DomainDataset& b) {
  DomainDataset out = a;
  out.instances.insert(out.instances.end(), b.instances.begin(), b.instances.end());
  return out;
}

RunConfig ResolveConfig(const RunOptions& opt, Stage stage) {
  RunConfig config;
  if (!opt.config_path.empty()) config = LoadRunConfig(opt.config_path);
  ApplyOverrides(config, opt.overrides);
  if (opt.seed) config.seed = *opt.seed;
  config.stage = stage;
  config.Validate();
  return config;
}

std::string MethodName(const RunConfig& config) {
  switch (config.stage) {
    case Stage::kPretrain:
      return config.pretrain_data == PretrainData::kSource ? "Source-only" : "All";
    case Stage::kFineTune: return "Fine-Tune";
    case Stage::kAutoFT: return "AutoFT";
    case Stage::kTargetOnly: return "Target-only";
    case Stage::kAblationEmbedding: return "AutoFT-Embedding";
    case Stage::kAblationCross: return "AutoFT-Cross";
    case Stage::kAblationDeep: return "AutoFT-Deep";
    case Stage::kAblationCrossDeep: return "AutoFT-Cross&Deep";
  }
  return "unknown";
}

// Creates (or, with overwrite, empties) the run directory and writes the
// resolved config snapshot.
class RunDir {
 public:
  RunDir(const std::string& path, bool overwrite, const RunConfig& config, bool quiet)
      : path_(path), quiet_(quiet) {
    if (path.empty()) Fail(ErrorKind::kConfig, "--run-dir is required");
    if (fs::exists(path_)) {
      if (!fs::is_directory(path_)) {
        Fail(ErrorKind::kConfig, "run directory path is a file: " + path);
      }
      if (!fs::is_empty(path_)) {
        if (!overwrite) {
          Fail(ErrorKind::kConfig,
               "run directory " + path + " is not empty (use --overwrite to replace it)");
        }
        for (const auto& entry : fs::directory_iterator(path_)) fs::remove_all(entry.path());
      }
    }
    fs::create_directories(path_);
    WriteText(path_ / kConfigFile, SerializeRunConfig(config));
    metrics_.open(path_ / kMetricsFile, std::ios::binary);
    if (!metrics_) Fail(ErrorKind::kIo, "cannot write " + (path_ / kMetricsFile).string());
  }

  fs::path file(const char* name) const { return path_ / name; }

  void LogEpoch(const EpochRecord& r, bool autoft) {
    nlohmann::ordered_json j;
    j["epoch"] = r.epoch;
    j["split"] = "validation";
    j["auc"] = r.valid_auc;
    j["logloss"] = r.valid_logloss;
    j["tau"] = autoft ? nlohmann::ordered_json(r.tau) : nlohmann::ordered_json(nullptr);
    j["train_loss"] = r.train_loss;
    metrics_ << j.dump() << "\n";
    metrics_.flush();
    if (!quiet_) {
      std::cout << "epoch " << r.epoch << " train_loss=" << r.train_loss
                << " valid_auc=" << r.valid_auc << " valid_logloss=" << r.valid_logloss;
      if (autoft) std::cout << " tau=" << r.tau;
      std::cout << std::endl;
    }
  }

  void LogTest(std::size_t best_epoch, double auc, double logloss) {
    nlohmann::ordered_json j;
    j["epoch"] = best_epoch;
    j["split"] = "test";
    j["auc"] = auc;
    j["logloss"] = logloss;
    j["tau"] = nullptr;
    metrics_ << j.dump() << "\n";
    metrics_.flush();
  }

  void Finish(const RunSummary& summary) {
    WriteText(path_ / kSummaryFile, RunSummaryToJson(summary));
    if (!quiet_) {
      std::cout << summary.method << " seed " << summary.seed << ": test_auc=" << summary.test_auc
                << " test_logloss=" << summary.test_logloss << std::endl;
    }
  }

 private:
  fs::path path_;
  bool quiet_;
  std::ofstream metrics_;
};

RunSummary Evaluate(RunDir& dir, const RunConfig& config, const DomainDataset& test,
                    const std::vector<double>& scores, std::size_t best_epoch) {
  const std::vector<int> labels = Labels(test);
  RunSummary s;
  s.method = MethodName(config);
  s.stage = StageName(config.stage);
  s.seed = config.seed;
  s.test_auc = Auc(labels, scores);
  s.test_logloss = LogLoss(labels, scores);
  s.test_instances = test.size();
  dir.LogTest(best_epoch, s.test_auc, s.test_logloss);
  return s;
}

DcnCheckpoint LoadPretrained(const RunOptions& opt, const DataContext& ctx) {
  RequireFile(opt.checkpoint_path, "checkpoint");
  DcnCheckpoint ckpt = LoadDcnCheckpoint(opt.checkpoint_path);
  if (ckpt.vocab_hash != ctx.vocab_hash) {
    Fail(ErrorKind::kVocabMismatch, "checkpoint " + opt.checkpoint_path + " was built with vocabulary " +
                                        HexU64(ckpt.vocab_hash) + " but the data uses " +
                                        HexU64(ctx.vocab_hash));
  }
  return ckpt;
}

void CmdGenSynth(const SynthSpec& spec, const std::string& out, bool overwrite, bool quiet) {
  if (out.empty()) Fail(ErrorKind::kConfig, "--out is required");
  spec.Validate();
  if (!overwrite) {
    for (int d = 0; d < 2; ++d) {
      for (int s = 0; s < 3; ++s) {
        const fs::path p = fs::path(out) / DataFileName(static_cast<Domain>(d), static_cast<Split>(s));
        if (fs::exists(p)) {
          Fail(ErrorKind::kConfig, p.string() + " already exists (use --overwrite)");
        }
      }
    }
  }
  const SynthBenchmark bench = GenerateSynth(spec);
  WriteSynth(bench, out);
  if (!quiet) {
    std::cout << "wrote synthetic benchmark to " << out << " (" << spec.source_count
              << " source, " << spec.target_count << " target instances)" << std::endl;
  }
}

void CmdBuildVocab(const RunOptions& opt, const std::string& out, std::size_t min_count) {
  if (opt.data_dir.empty() || !fs::is_directory(opt.data_dir)) {
    Fail(ErrorKind::kConfig, "data directory not found: " + opt.data_dir);
  }
  const std::string schema_path = DefaultIn(opt.schema_path, opt.data_dir, kSchemaFile);
  RequireFile(schema_path, "schema file");
  const Schema schema = LoadSchema(schema_path);
  std::vector<CsvTable> tables;
  for (Domain d : {Domain::kSource, Domain::kTarget}) {
    const std::string path = (fs::path(opt.data_dir) / DataFileName(d, Split::kTrain)).string();
    if (fs::is_regular_file(path)) tables.push_back(ReadCsvFile(path));
  }
  if (tables.empty()) {
    Fail(ErrorKind::kConfig, "no source_train.csv or target_train.csv in " + opt.data_dir);
  }
  std::vector<const CsvTable*> ptrs;
  for (const auto& t : tables) ptrs.push_back(&t);
  const Vocabulary vocab = BuildVocab(ptrs, schema, min_count);
  const std::string out_path = DefaultIn(out, opt.data_dir, kVocabFile);
  vocab.Save(out_path, schema);
  if (!opt.quiet) {
    std::cout << "vocabulary " << HexU64(vocab.Hash()) << " written to " << out_path << ":";
    for (std::size_t f = 0; f < schema.num_fields(); ++f) {
      std::cout << ' ' << schema.fields[f].name << '=' << vocab.field_size(f);
    }
    std::cout << std::endl;
  }
}

void CmdPretrain(const RunOptions& opt, Stage stage) {
  const RunConfig config = ResolveConfig(opt, stage);
  const DataContext ctx = LoadContext(opt);
  DomainDataset train, valid;
  if (stage == Stage::kTargetOnly) {
    train = LoadSplit(ctx, Domain::kTarget, Split::kTrain);
    valid = LoadSplit(ctx, Domain::kTarget, Split::kValidation);
  } else {
    train = LoadSplit(ctx, Domain::kSource, Split::kTrain);
    valid = LoadSplit(ctx, Domain::kSource, Split::kValidation);
    if (config.pretrain_data == PretrainData::kAll) {
      train = Concat(train, LoadSplit(ctx, Domain::kTarget, Split::kTrain));
      valid = Concat(valid, LoadSplit(ctx, Domain::kTarget, Split::kValidation));
    }
  }
  const DomainDataset test = LoadSplit(ctx, Domain::kTarget, Split::kTest);
  if (train.empty()) Fail(ErrorKind::kConfig, "training dataset is empty");
  if (valid.empty()) Fail(ErrorKind::kConfig, "validation dataset is empty");

  RunDir dir(opt.run_dir, opt.overwrite, config, opt.quiet);
  const DomainDataset* sets[] = {&train};
  const DcnRunResult result =
      RunPretrain(sets, valid, ctx.vocab.field_sizes(), config,
                  [&](const EpochRecord& r) { dir.LogEpoch(r, false); });
  const RunSummary summary =
      Evaluate(dir, config, test, PredictDcn(result.params, test), result.history.best_epoch);
  SaveDcnCheckpoint(dir.file(kCheckpointFile).string(), {result.params, ctx.vocab_hash});
  dir.Finish(summary);
}

void CmdFinetune(const RunOptions& opt) {
  const RunConfig config = ResolveConfig(opt, Stage::kFineTune);
  const DataContext ctx = LoadContext(opt);
  const DcnCheckpoint ckpt = LoadPretrained(opt, ctx);
  const DomainDataset train = LoadSplit(ctx, Domain::kTarget, Split::kTrain);
  const DomainDataset valid = LoadSplit(ctx, Domain::kTarget, Split::kValidation);
  const DomainDataset test = LoadSplit(ctx, Domain::kTarget, Split::kTest);
  if (train.empty() || valid.empty()) Fail(ErrorKind::kConfig, "target dataset is empty");

  RunDir dir(opt.run_dir, opt.overwrite, config, opt.quiet);
  const DcnRunResult result =
      RunFinetune(ckpt.params, ckpt.vocab_hash, ctx.vocab_hash, train, valid, config,
                  [&](const EpochRecord& r) { dir.LogEpoch(r, false); });
  const RunSummary summary =
      Evaluate(dir, config, test, PredictDcn(result.params, test), result.history.best_epoch);
  SaveDcnCheckpoint(dir.file(kCheckpointFile).string(), {result.params, ctx.vocab_hash});
  dir.Finish(summary);
}

void CmdAutoft(const RunOptions& opt) {
  const Stage stage = ParseStage(opt.stage);
  if (!IsAutoftStage(stage)) {
    Fail(ErrorKind::kConfig, "--stage must be autoft or an ablation stage, got " + opt.stage);
  }
  const RunConfig config = ResolveConfig(opt, stage);
  const DataContext ctx = LoadContext(opt);
  const DcnCheckpoint ckpt = LoadPretrained(opt, ctx);
  const DomainDataset train = LoadSplit(ctx, Domain::kTarget, Split::kTrain);
  const DomainDataset valid = LoadSplit(ctx, Domain::kTarget, Split::kValidation);
  const DomainDataset test = LoadSplit(ctx, Domain::kTarget, Split::kTest);
  if (train.empty() || valid.empty()) Fail(ErrorKind::kConfig, "target dataset is empty");

  RunDir dir(opt.run_dir, opt.overwrite, config, opt.quiet);
  const std::uint64_t bank_before = BankHash(ckpt.params);
  const AutoftRunResult result =
      RunAutoft(ckpt.params, ckpt.vocab_hash, ctx.vocab_hash, train, valid, config,
                [&](const EpochRecord& r) { dir.LogEpoch(r, true); });
  if (BankHash(result.model.source) != bank_before) {
    Fail(ErrorKind::kInternal, "source bank changed during training");
  }
  std::vector<RouteDecision> routes;
  const std::vector<double> scores = PredictAutoft(result.model, test, &routes);
  const RunSummary summary = Evaluate(dir, config, test, scores, result.history.best_epoch);
  WriteRouteDump(dir.file(kRoutesFile).string(), MakeRouteDump(routes, result.model.target.arch));
  WriteFileBytes(dir.file(kCheckpointFile).string(),
                 SerializeAutoftCheckpoint(result.model, ctx.vocab_hash));
  dir.Finish(summary);
}

void CmdEvaluate(const std::vector<std::string>& runs, const std::string& out, bool quiet) {
  std::vector<std::string> dirs;
  for (const auto& r : runs) {
    if (!fs::is_directory(r)) Fail(ErrorKind::kConfig, "run directory not found: " + r);
    if (fs::is_regular_file(fs::path(r) / kSummaryFile)) {
      dirs.push_back(r);
      continue;
    }
    std::vector<std::string> children;
    for (const auto& entry : fs::directory_iterator(r)) {
      if (entry.is_directory() && fs::is_regular_file(entry.path() / kSummaryFile)) {
        children.push_back(entry.path().string());
      }
    }
    std::sort(children.begin(), children.end());
    dirs.insert(dirs.end(), children.begin(), children.end());
  }
  if (dirs.empty()) Fail(ErrorKind::kConfig, "no completed runs (summary.json) found");
  const MetricReport report = ResultsTableFromDirs(dirs);
  const std::string text = ResultsTableText(report);
  if (!out.empty()) {
    fs::create_directories(out);
    WriteText(fs::path(out) / "results_table.csv", ResultsTableCsv(report));
    WriteText(fs::path(out) / "results_table.txt", text);
  }
  if (!quiet) std::cout << text;
}

void CmdReportPolicy(const std::string& run_dir, const std::string& out, bool quiet) {
  const std::string routes = (fs::path(run_dir) / kRoutesFile).string();
  RequireFile(routes, "route dump");
  const RoutingReport report = RoutingFractions(ReadRouteDump(routes));
  const fs::path dest = out.empty() ? fs::path(run_dir) : fs::path(out);
  fs::create_directories(dest);
  WriteText(dest / "routing_fractions.csv", RoutingFractionsCsv(report));
  const std::string text = RoutingSummaryText(report);
  WriteText(dest / "routing_summary.txt", text);
  if (!quiet) std::cout << text;
}

void AddRunOptions(CLI::App* cmd, RunOptions& opt, bool needs_checkpoint) {
  cmd->add_option("--data", opt.data_dir, "Data directory with the split CSVs")->required();
  cmd->add_option("--schema", opt.schema_path, "Schema file (default <data>/schema.ini)");
  cmd->add_option("--vocab", opt.vocab_path, "Vocabulary file (default <data>/vocab.json)");
  cmd->add_option("--run-dir", opt.run_dir, "Output run directory")->required();
  cmd->add_option("--config", opt.config_path, "Run config file");
  cmd->add_option("--set", opt.overrides, "Override a config key: section.key=value");
  cmd->add_option("--seed", opt.seed, "Random seed (overrides run.seed)");
  cmd->add_flag("--overwrite", opt.overwrite, "Replace an existing run directory");
  if (needs_checkpoint) {
    cmd->add_option("--checkpoint", opt.checkpoint_path, "Pre-trained checkpoint")->required();
  }
}

int Dispatch(int argc, const char* const* argv) {
  CLI::App app{"AutoFT: routed fine-tuning of DCN click-through-rate models"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress output");

  SynthSpec spec;
  std::string synth_out;
  bool synth_overwrite = false;
  auto* gen = app.add_subcommand("gen-synth", "Generate the synthetic two-domain benchmark");
  gen->add_option("--out", synth_out, "Output directory")->required();
  gen->add_option("--seed", spec.seed, "Generator seed");
  gen->add_option("--delta", spec.delta, "Domain divergence in [0, 1]");
  gen->add_option("--overlap", spec.item_overlap, "Item overlap fraction in [0, 1]");
  gen->add_option("--user-overlap", spec.user_overlap, "User overlap fraction in [0, 1]");
  gen->add_option("--source-count", spec.source_count, "Source instances");
  gen->add_option("--target-count", spec.target_count, "Target instances");
  gen->add_option("--source-users", spec.source_users, "Source users");
  gen->add_option("--target-users", spec.target_users, "Target users");
  gen->add_option("--items", spec.items, "Items per domain pool");
  gen->add_option("--signal-std", spec.signal_std, "Logit standard deviation");
  gen->add_flag("--overwrite", synth_overwrite, "Replace existing files");

  RunOptions vocab_opt;
  std::string vocab_out;
  std::size_t min_count = 1;
  auto* bv = app.add_subcommand("build-vocab", "Build the shared vocabulary from training rows");
  bv->add_option("--data", vocab_opt.data_dir, "Data directory")->required();
  bv->add_option("--schema", vocab_opt.schema_path, "Schema file (default <data>/schema.ini)");
  bv->add_option("--out", vocab_out, "Output file (default <data>/vocab.json)");
  bv->add_option("--min-count", min_count, "Minimum feature count")->check(CLI::PositiveNumber);

  RunOptions pre_opt, ft_opt, af_opt, to_opt;
  auto* pre = app.add_subcommand("pretrain", "Train a bank on source (or all) data");
  AddRunOptions(pre, pre_opt, false);
  auto* ft = app.add_subcommand("finetune", "Fine-tune every parameter on target data");
  AddRunOptions(ft, ft_opt, true);
  auto* af = app.add_subcommand("autoft", "Routed fine-tuning or one of its ablations");
  AddRunOptions(af, af_opt, true);
  af->add_option("--stage", af_opt.stage,
                 "autoft, ablation-embedding, ablation-cross, ablation-deep or "
                 "ablation-cross-deep");
  auto* to = app.add_subcommand("target-only", "Train a fresh bank on target data only");
  AddRunOptions(to, to_opt, false);

  std::vector<std::string> eval_runs;
  std::string eval_out;
  auto* ev = app.add_subcommand("evaluate", "Aggregate run summaries into a results table");
  ev->add_option("runs", eval_runs, "Run directories or parents of run directories")
      ->required();
  ev->add_option("--out", eval_out, "Directory for results_table.csv/.txt");

  std::string policy_run, policy_out;
  auto* rp = app.add_subcommand("report-policy", "Routing fractions of an AutoFT run");
  rp->add_option("--run-dir", policy_run, "AutoFT run directory")->required();
  rp->add_option("--out", policy_out, "Output directory (default: the run directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  for (RunOptions* o : {&vocab_opt, &pre_opt, &ft_opt, &af_opt, &to_opt}) o->quiet = quiet;
  if (*gen) CmdGenSynth(spec, synth_out, synth_overwrite, quiet);
  if (*bv) CmdBuildVocab(vocab_opt, vocab_out, min_count);
  if (*pre) CmdPretrain(pre_opt, Stage::kPretrain);
  if (*ft) CmdFinetune(ft_opt);
  if (*af) CmdAutoft(af_opt);
  if (*to) CmdPretrain(to_opt, Stage::kTargetOnly);
  if (*ev) CmdEvaluate(eval_runs, eval_out, quiet);
  if (*rp) CmdReportPolicy(policy_run, policy_out, quiet);
  return kExitOk;
}

}  // namespace

int Main(int argc, const char* const* argv) {
  try {
    return Dispatch(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << ErrorKindName(e.kind()) << ": " << e.what() << std::endl;
    return ExitCodeFor(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: io_error: " << e.what() << std::endl;
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: internal_error: " << e.what() << std::endl;
    return kExitInternal;
  }
}

int Main(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("autoft");
  for (const auto& a : args) argv.push_back(a.c_str());
  return Main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace autoft::cli
