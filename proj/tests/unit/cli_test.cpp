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

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "autoft/config.hpp"
#include "autoft/evaluation.hpp"
#include "test_util.hpp"

namespace autoft {
namespace {

namespace fs = std::filesystem;
using cli::Main;

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Shared tiny benchmark with a vocabulary and a pretrained checkpoint.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new fs::path(testing::TempDir("cli"));
    const std::string data = Data();
    ASSERT_EQ(Main({"-q", "gen-synth", "--out", data, "--source-count", "3000", "--target-count",
                    "800", "--source-users", "100", "--target-users", "40", "--items", "80"}),
              0);
    ASSERT_EQ(Main({"-q", "build-vocab", "--data", data}), 0);
    std::ofstream(*root_ / "small.ini") << SmallIni();
    ASSERT_EQ(Main({"-q", "pretrain", "--data", data, "--config", Config(), "--run-dir",
                    Run("pre")}),
              0);
  }
  static void TearDownTestSuite() { delete root_; }

  static std::string SmallIni() {
    return "[run]\nepochs = 2\nbatch_size = 64\nlearning_rate = 0.003\n\n"
           "[arch]\nembedding_dim = 4\ncross_layers = 2\ndeep_layers = 8, 4\n\n"
           "[policy]\nhidden = 8\n";
  }
  static std::string Data() { return (*root_ / "data").string(); }
  static std::string Config() { return (*root_ / "small.ini").string(); }
  static std::string Run(const std::string& name) { return (*root_ / "runs" / name).string(); }
  static std::string Checkpoint() { return (fs::path(Run("pre")) / cli::kCheckpointFile).string(); }

  static fs::path* root_;
};

fs::path* CliTest::root_ = nullptr;

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(cli::ExitCodeFor(ErrorKind::kConfig), 2);
  EXPECT_EQ(cli::ExitCodeFor(ErrorKind::kData), 3);
  EXPECT_EQ(cli::ExitCodeFor(ErrorKind::kSchema), 3);
  EXPECT_EQ(cli::ExitCodeFor(ErrorKind::kVocabMismatch), 4);
  EXPECT_EQ(cli::ExitCodeFor(ErrorKind::kMetricUndefined), 5);
  EXPECT_EQ(cli::ExitCodeFor(ErrorKind::kInternal), 1);
}

TEST(ExitCodes, ParseErrorsAreConfigErrors) {
  EXPECT_EQ(Main({"no-such-command"}), 2);
  EXPECT_EQ(Main({"pretrain"}), 2);
  EXPECT_EQ(Main({"--help"}), 0);
}

TEST_F(CliTest, PretrainWritesRunDirectory) {
  const fs::path run = Run("pre");
  for (const char* f : {cli::kConfigFile, cli::kMetricsFile, cli::kCheckpointFile, cli::kSummaryFile}) {
    EXPECT_TRUE(fs::is_regular_file(run / f)) << f;
  }
  const RunSummary s = RunSummaryFromJson(Slurp(run / cli::kSummaryFile));
  EXPECT_EQ(s.method, "All");
  EXPECT_EQ(s.test_instances, 80u);
  std::istringstream metrics(Slurp(run / cli::kMetricsFile));
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(metrics, line)) lines.push_back(line);
  ASSERT_GE(lines.size(), 2u);
  EXPECT_NE(lines.front().find("\"split\":\"validation\""), std::string::npos);
  EXPECT_NE(lines.back().find("\"split\":\"test\""), std::string::npos);
}

TEST_F(CliTest, ConfigSnapshotReparsesEqual) {
  const RunConfig snap = LoadRunConfig((fs::path(Run("pre")) / cli::kConfigFile).string());
  RunConfig expected = ParseRunConfig(SmallIni());
  expected.stage = Stage::kPretrain;
  EXPECT_EQ(snap, expected);
}

TEST_F(CliTest, OverridesAndSeedReachTheSnapshot) {
  const std::string run = Run("target_only");
  ASSERT_EQ(Main({"-q", "target-only", "--data", Data(), "--config", Config(), "--set",
                  "run.epochs=1", "--seed", "9", "--run-dir", run}),
            0);
  const RunConfig snap = LoadRunConfig((fs::path(run) / cli::kConfigFile).string());
  EXPECT_EQ(snap.epochs, 1u);
  EXPECT_EQ(snap.seed, 9u);
  EXPECT_EQ(snap.stage, Stage::kTargetOnly);
}

TEST_F(CliTest, MissingCheckpointLeavesNoRunDir) {
  const std::string run = Run("no_ckpt");
  EXPECT_EQ(Main({"-q", "finetune", "--data", Data(), "--config", Config(), "--checkpoint",
                  (*root_ / "missing.bin").string(), "--run-dir", run}),
            2);
  EXPECT_FALSE(fs::exists(run));
  EXPECT_EQ(Main({"-q", "finetune", "--data", Data(), "--run-dir", run}), 2);
  EXPECT_FALSE(fs::exists(run));
}

TEST_F(CliTest, NonEmptyRunDirNeedsOverwrite) {
  const std::string run = Run("busy");
  fs::create_directories(run);
  std::ofstream(fs::path(run) / "keep.txt") << "x";
  const std::vector<std::string> args = {"-q", "finetune", "--data", Data(), "--config",
                                         Config(), "--checkpoint", Checkpoint(), "--run-dir", run};
  EXPECT_EQ(Main(args), 2);
  EXPECT_TRUE(fs::exists(fs::path(run) / "keep.txt"));
  std::vector<std::string> with = args;
  with.push_back("--overwrite");
  EXPECT_EQ(Main(with), 0);
  EXPECT_FALSE(fs::exists(fs::path(run) / "keep.txt"));
  EXPECT_EQ(RunSummaryFromJson(Slurp(fs::path(run) / cli::kSummaryFile)).method, "Fine-Tune");
}

TEST_F(CliTest, BadDataIsExitThree) {
  const fs::path bad = *root_ / "bad_data";
  fs::create_directories(bad);
  for (const auto& entry : fs::directory_iterator(Data())) {
    fs::copy_file(entry.path(), bad / entry.path().filename(), fs::copy_options::overwrite_existing);
  }
  std::ofstream(bad / "target_train.csv", std::ios::app) << "tu1,i1,c1,x1,t1,maybe\n";
  EXPECT_EQ(Main({"-q", "finetune", "--data", bad.string(), "--config", Config(), "--checkpoint",
                  Checkpoint(), "--run-dir", Run("bad")}),
            3);
  EXPECT_FALSE(fs::exists(Run("bad")));
}

TEST_F(CliTest, VocabMismatchIsExitFour) {
  const fs::path other = *root_ / "other_vocab.json";
  ASSERT_EQ(Main({"-q", "build-vocab", "--data", Data(), "--min-count", "3", "--out",
                  other.string()}),
            0);
  EXPECT_EQ(Main({"-q", "autoft", "--data", Data(), "--vocab", other.string(), "--config",
                  Config(), "--checkpoint", Checkpoint(), "--run-dir", Run("mismatch")}),
            4);
  EXPECT_FALSE(fs::exists(Run("mismatch")));
}

TEST_F(CliTest, CrossDeepAblationNeverRoutesEmbeddings) {
  const std::string run = Run("cross_deep");
  ASSERT_EQ(Main({"-q", "autoft", "--stage", "ablation-cross-deep", "--data", Data(), "--config",
                  Config(), "--checkpoint", Checkpoint(), "--run-dir", run}),
            0);
  const RouteDump dump = ReadRouteDump((fs::path(run) / cli::kRoutesFile).string());
  EXPECT_EQ(dump.rows.size(), 80u);
  for (const auto& row : dump.rows) {
    for (int bit : row.embed) EXPECT_EQ(bit, 0);
  }
  ASSERT_EQ(Main({"-q", "report-policy", "--run-dir", run}), 0);
  EXPECT_TRUE(fs::is_regular_file(fs::path(run) / "routing_fractions.csv"));
  EXPECT_EQ(RunSummaryFromJson(Slurp(fs::path(run) / cli::kSummaryFile)).method,
            "AutoFT-Cross&Deep");
}

TEST_F(CliTest, FullPipelineAndIdempotentEvaluate) {
  ASSERT_EQ(Main({"-q", "autoft", "--data", Data(), "--config", Config(), "--checkpoint",
                  Checkpoint(), "--run-dir", Run("autoft")}),
            0);
  ASSERT_EQ(Main({"-q", "finetune", "--data", Data(), "--config", Config(), "--checkpoint",
                  Checkpoint(), "--run-dir", Run("finetune")}),
            0);
  const fs::path out = *root_ / "report";
  ASSERT_EQ(Main({"-q", "evaluate", (*root_ / "runs").string(), "--out", out.string()}), 0);
  const std::string first = Slurp(out / "results_table.csv");
  ASSERT_EQ(Main({"-q", "evaluate", (*root_ / "runs").string(), "--out", out.string()}), 0);
  EXPECT_EQ(Slurp(out / "results_table.csv"), first);
  EXPECT_NE(first.find("\nAutoFT,"), std::string::npos);
  EXPECT_NE(first.find("\nFine-Tune,"), std::string::npos);
  EXPECT_NE(first.find("\nAll,"), std::string::npos);
  EXPECT_EQ(Main({"-q", "evaluate", (*root_ / "nothing").string()}), 2);
}

TEST_F(CliTest, RejectsNonAutoftStage) {
  EXPECT_EQ(Main({"-q", "autoft", "--stage", "finetune", "--data", Data(), "--checkpoint",
                  Checkpoint(), "--run-dir", Run("wrong_stage")}),
            2);
  EXPECT_FALSE(fs::exists(Run("wrong_stage")));
}

}  // namespace
}  // namespace autoft
