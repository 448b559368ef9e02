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

#include "autoft/config.hpp"

#include <gtest/gtest.h>

#include "autoft/error.hpp"

namespace autoft {
namespace {

TEST(RunConfigText, DefaultsRoundTrip) {
  const RunConfig c;
  EXPECT_EQ(ParseRunConfig(SerializeRunConfig(c)), c);
}

TEST(RunConfigText, RandomConfigsRoundTrip) {
  SeededRng rng(9);
  const Stage stages[] = {Stage::kPretrain, Stage::kAutoFT, Stage::kAblationCrossDeep};
  for (int i = 0; i < 50; ++i) {
    RunConfig c;
    c.stage = stages[rng.NextBelow(3)];
    c.learning_rate = rng.NextUniform(1e-5, 1e-2);
    c.batch_size = 1 + rng.NextBelow(1000);
    c.epochs = rng.NextBelow(30);
    c.lambda = rng.NextUniform() * 1e-3;
    c.l2_scope = rng.NextBelow(2) ? L2Scope::kAll : L2Scope::kWeights;
    c.l2_include_policies = rng.NextBelow(2);
    c.tau_start = rng.NextUniform(0.1, 10);
    c.tau_end = rng.NextUniform(0.01, 1);
    c.seed = rng.NextU64();
    c.patience = 1 + rng.NextBelow(5);
    c.pretrain_data = rng.NextBelow(2) ? PretrainData::kSource : PretrainData::kAll;
    c.backbone = rng.NextBelow(2) ? Backbone::kDnn : Backbone::kDcn;
    c.embedding_dim = 1 + rng.NextBelow(64);
    c.cross_layers = rng.NextBelow(5);
    c.deep_layers.clear();
    for (std::uint64_t j = rng.NextBelow(4); j > 0; --j) c.deep_layers.push_back(1 + rng.NextBelow(128));
    c.policy.hidden = 1 + rng.NextBelow(64);
    c.policy.output_relu = rng.NextBelow(2);
    c.policy.pretrained_bias = rng.NextUniform(-1, 1);
    c.policy.init_scale = rng.NextUniform(0, 1);
    c.policy.lr_scale = rng.NextUniform(0.1, 10);
    const std::string text = SerializeRunConfig(c);
    EXPECT_EQ(ParseRunConfig(text), c) << text;
    EXPECT_EQ(SerializeRunConfig(ParseRunConfig(text)), text);
  }
}

TEST(RunConfigText, MissingKeysKeepDefaults) {
  const RunConfig c = ParseRunConfig("[run]\nepochs = 4\n\n[arch]\ndeep_layers = 8, 4\n");
  EXPECT_EQ(c.epochs, 4u);
  EXPECT_EQ(c.deep_layers, (std::vector<std::size_t>{8, 4}));
  EXPECT_EQ(c.learning_rate, RunConfig{}.learning_rate);
}

TEST(RunConfigText, OverridesWin) {
  RunConfig c = ParseRunConfig("[run]\nseed = 1\nlearning_rate = 0.01\n");
  ApplyOverrides(c, {"run.seed=7", "arch.deep_layers=", "policy.output_relu=true"});
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.learning_rate, 0.01);
  EXPECT_TRUE(c.deep_layers.empty());
  EXPECT_TRUE(c.policy.output_relu);
}

TEST(RunConfigText, ErrorsAreConfigErrors) {
  for (const char* text : {"[run]\nepochs = many\n", "[run]\nunknown = 1\n", "[weird]\na = 1\n",
                           "[run]\nl2_scope = some\n", "[arch]\nbackbone = rnn\n",
                           "[run]\nstage = nope\n", "[run]\nepochs = -1\n"}) {
    try {
      ParseRunConfig(text);
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kConfig) << text;
    }
  }
  RunConfig c;
  EXPECT_THROW(ApplyOverrides(c, {"run.seed"}), Error);
  EXPECT_THROW(LoadRunConfig("/nonexistent/config.ini"), Error);
}

}  // namespace
}  // namespace autoft
