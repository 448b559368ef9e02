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

#include "autoft/synth.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "autoft/error.hpp"
#include "autoft/evaluation.hpp"
#include "autoft/training.hpp"
#include "json.hpp"
#include "test_util.hpp"

namespace autoft {
namespace {

std::string Slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig SourceConfig() {
  RunConfig c;
  c.stage = Stage::kPretrain;
  c.pretrain_data = PretrainData::kSource;
  c.embedding_dim = 8;
  c.cross_layers = 2;
  c.deep_layers = {32, 16};
  c.batch_size = 128;
  c.epochs = 6;
  c.patience = 2;
  c.learning_rate = 2e-3;
  return c;
}

// Test AUC of a source-trained model on both domains.
std::pair<double, double> SourceModelAucs(const SynthSpec& spec) {
  const testing::EncodedBenchmark b = testing::EncodeBenchmark(spec);
  const DomainDataset* train[] = {&b.get(Domain::kSource, Split::kTrain)};
  const DcnRunResult r = RunPretrain(train, b.get(Domain::kSource, Split::kValidation),
                                     b.vocab.field_sizes(), SourceConfig());
  const auto& src = b.get(Domain::kSource, Split::kTest);
  const auto& tgt = b.get(Domain::kTarget, Split::kTest);
  return {Auc(Labels(src), PredictDcn(r.params, src)), Auc(Labels(tgt), PredictDcn(r.params, tgt))};
}

TEST(Synth, SameSeedSameBytes) {
  SynthSpec spec = testing::SmallSpec(5);
  const auto a = testing::TempDir("synth_a"), b = testing::TempDir("synth_b");
  WriteSynth(GenerateSynth(spec), a.string());
  WriteSynth(GenerateSynth(spec), b.string());
  for (const auto& entry : std::filesystem::directory_iterator(a)) {
    EXPECT_EQ(Slurp(entry.path()), Slurp(b / entry.path().filename())) << entry.path();
  }
  spec.seed = 6;
  EXPECT_NE(GenerateSynth(spec).manifest_json, GenerateSynth(testing::SmallSpec(5)).manifest_json);
}

TEST(Synth, SplitIsEightOneOne) {
  SynthSpec spec = testing::SmallSpec();
  spec.source_count = 1000;
  spec.target_count = 250;
  const SynthBenchmark b = GenerateSynth(spec);
  EXPECT_EQ(b.tables[0][0].rows.size(), 800u);
  EXPECT_EQ(b.tables[0][1].rows.size(), 100u);
  EXPECT_EQ(b.tables[0][2].rows.size(), 100u);
  EXPECT_EQ(b.tables[1][0].rows.size(), 200u);
  EXPECT_EQ(b.tables[1][1].rows.size(), 25u);
  EXPECT_EQ(b.tables[1][2].rows.size(), 25u);
  for (int d = 0; d < 2; ++d) {
    for (int s = 0; s < 3; ++s) EXPECT_EQ(b.truth[d][s].size(), b.tables[d][s].rows.size());
  }
}

TEST(Synth, ManifestRecordsWeights) {
  for (double delta : {0.0, 0.5, 1.0}) {
    SynthSpec spec = testing::SmallSpec();
    spec.delta = delta;
    const auto m = nlohmann::json::parse(GenerateSynth(spec).manifest_json);
    const auto& s = m["weights"]["source"];
    const auto& t = m["weights"]["target"];
    ASSERT_EQ(s["first_order"].size(), kSynthFields);
    ASSERT_EQ(s["pairwise"].size(), kSynthFields * (kSynthFields - 1) / 2);
    if (delta == 0.0) {
      EXPECT_EQ(s, t);
    } else {
      EXPECT_NE(s, t);
    }
  }
}

TEST(Synth, OverlapControlsSharedEntities) {
  SynthSpec spec = testing::SmallSpec();
  spec.item_overlap = 0.0;
  const SynthBenchmark none = GenerateSynth(spec);
  std::set<std::string> source_items, source_users;
  for (const auto& row : none.tables[0][0].rows) {
    source_items.insert(row[1]);
    source_users.insert(row[0]);
  }
  for (const auto& row : none.tables[1][0].rows) {
    EXPECT_FALSE(source_items.count(row[1])) << row[1];
    EXPECT_FALSE(source_users.count(row[0])) << row[0];
  }
  spec.item_overlap = 1.0;
  spec.user_overlap = 1.0;
  const SynthBenchmark full = GenerateSynth(spec);
  std::size_t shared = 0;
  for (const auto& row : full.tables[1][0].rows) {
    EXPECT_EQ(row[0].substr(0, 2), "su");
    EXPECT_LT(std::stoul(row[1].substr(1)), spec.items);
    shared += 1;
  }
  EXPECT_GT(shared, 0u);
}

TEST(Synth, LabelsFollowTruth) {
  const SynthBenchmark b = GenerateSynth(testing::SmallSpec());
  const auto& rows = b.tables[0][0].rows;
  const auto& p = b.truth[0][0];
  double mean_p = 0, mean_y = 0;
  std::vector<int> y;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    y.push_back(rows[i].back() == "1");
    mean_p += p[i];
    mean_y += y.back();
  }
  EXPECT_NEAR(mean_y / rows.size(), mean_p / rows.size(), 0.02);
  EXPECT_GT(Auc(y, p), 0.7);
}

TEST(Synth, InvalidSpecIsConfigError) {
  SynthSpec spec;
  spec.delta = 1.5;
  EXPECT_THROW(GenerateSynth(spec), Error);
  spec = SynthSpec{};
  spec.items = 0;
  EXPECT_THROW(GenerateSynth(spec), Error);
  spec = SynthSpec{};
  spec.user_overlap = -0.1;
  EXPECT_THROW(GenerateSynth(spec), Error);
}

// Identical domains: a source model transfers without loss.
TEST(SynthTransfer, ZeroDeltaMatchesSourceAuc) {
  SynthSpec spec;
  spec.delta = 0.0;
  spec.item_overlap = 1.0;
  spec.user_overlap = 1.0;
  spec.source_count = 40000;
  spec.target_count = 40000;
  spec.source_users = 300;
  spec.target_users = 300;
  spec.items = 200;
  const auto [source_auc, target_auc] = SourceModelAucs(spec);
  EXPECT_GT(source_auc, 0.7);
  EXPECT_NEAR(target_auc, source_auc, 0.01);
}

// Independent domains with nothing shared: source knowledge is useless.
TEST(SynthTransfer, IndependentDomainsGiveChanceAuc) {
  SynthSpec spec;
  spec.delta = 1.0;
  spec.item_overlap = 0.0;
  spec.source_count = 20000;
  spec.target_count = 20000;
  spec.source_users = 300;
  spec.target_users = 300;
  spec.items = 200;
  const auto [source_auc, target_auc] = SourceModelAucs(spec);
  EXPECT_GT(source_auc, 0.7);
  EXPECT_NEAR(target_auc, 0.5, 0.05);
}

}  // namespace
}  // namespace autoft
