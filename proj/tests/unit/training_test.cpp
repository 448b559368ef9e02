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

#include "autoft/training.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "autoft/checkpoint.hpp"
#include "autoft/error.hpp"
#include "autoft/evaluation.hpp"
#include "test_util.hpp"

namespace autoft {
namespace {

using testing::EncodedBenchmark;

const EncodedBenchmark& Bench() {
  static const EncodedBenchmark bench = testing::EncodeBenchmark(testing::SmallSpec());
  return bench;
}

RunConfig SmallConfig(Stage stage) {
  RunConfig c;
  c.stage = stage;
  c.embedding_dim = 4;
  c.cross_layers = 2;
  c.deep_layers = {8, 4};
  c.policy.hidden = 8;
  c.batch_size = 64;
  c.epochs = 2;
  c.learning_rate = 3e-3;
  return c;
}

TEST(Adam, FirstStepMovesByLearningRate) {
  AdamState s;
  Vector p = {1.0};
  const Vector g = {0.5};
  std::vector<std::span<double>> ps = {p};
  std::vector<std::span<const double>> gs = {g};
  AdamStep(s, ps, gs, 0.01);
  EXPECT_NEAR(p[0], 1.0 - 0.01 * 0.5 / (std::sqrt(0.25) + 1e-8), 1e-12);
  EXPECT_NEAR(p[0], 0.99, 1e-6);
  EXPECT_EQ(s.t, 1u);
}

TEST(Adam, MatchesClosedFormOverSeveralSteps) {
  AdamState s;
  Vector p = {0.3, -0.2};
  std::vector<std::span<double>> ps = {p};
  double m = 0, v = 0, ref = 0.3;
  for (int t = 1; t <= 5; ++t) {
    const double g = 0.1 * t - 0.25;
    const Vector grad = {g, g};
    std::vector<std::span<const double>> gs = {grad};
    AdamStep(s, ps, gs, 0.05);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    ref -= 0.05 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    EXPECT_NEAR(p[0], ref, 1e-14);
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  AdamState s;
  Vector p = {1.5, -2.0, 0.0};
  const Vector g(3, 0.0);
  std::vector<std::span<double>> ps = {p};
  std::vector<std::span<const double>> gs = {g};
  for (int i = 0; i < 4; ++i) AdamStep(s, ps, gs, 0.1);
  EXPECT_EQ(p, (Vector{1.5, -2.0, 0.0}));
}

TEST(Adam, IdenticalGradientsGiveIdenticalUpdates) {
  AdamState s;
  Vector a = {0.0, 0.0}, b = {0.0};
  const Vector ga = {0.7, 0.7}, gb = {0.7};
  std::vector<std::span<double>> ps = {a, b};
  std::vector<std::span<const double>> gs = {ga, gb};
  AdamStep(s, ps, gs, 0.01);
  EXPECT_EQ(a[0], a[1]);
  EXPECT_EQ(a[0], b[0]);
}

TEST(Adam, ShapeMismatchIsInternalError) {
  AdamState s;
  Vector p = {1.0, 2.0};
  const Vector g = {1.0};
  std::vector<std::span<double>> ps = {p};
  std::vector<std::span<const double>> gs = {g};
  try {
    AdamStep(s, ps, gs, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInternal);
  }
}

TEST(Adam, FrozenBankHasNoMomentBuffers) {
  SeededRng rng(1);
  const DcnParams pre = InitDcnParams(testing::ToyArch(), rng);
  for (Stage stage : {Stage::kAutoFT, Stage::kAblationEmbedding, Stage::kAblationCrossDeep}) {
    AutoftModel m = MakeAutoftModel(pre, {}, StagePolicyMask(stage), rng);
    const auto tensors = TrainableTensors(m);
    std::size_t target = 0;
    ForEachTensor(m.target, [&](const std::string&, ParamGroup, auto) { ++target; });
    const PolicyMask mask = StagePolicyMask(stage);
    const std::size_t policies = 4 * ((mask.embed ? 1 : 0) + (mask.cross ? 1 : 0) + (mask.deep ? 1 : 0));
    EXPECT_EQ(tensors.size(), target + policies);
    for (const auto& t : tensors) {
      ForEachTensor(m.source, [&](const std::string& name, ParamGroup, std::span<double> s) {
        EXPECT_NE(t.data(), s.data()) << name;
      });
    }
    AdamState adam;
    AutoftGradients g = ZeroGradients(m);
    AdamStep(adam, tensors, GradientTensors(g, m.mask), 0.1);
    EXPECT_EQ(adam.num_buffers(), tensors.size());
  }
}

TEST(EarlyStop, RuleTraces) {
  const std::vector<double> trace = {0.6, 0.7, 0.69, 0.69, 0.69};
  for (std::size_t n = 1; n <= 4; ++n) {
    EXPECT_FALSE(EarlyStop(std::span(trace).first(n), 3).stop) << n;
  }
  const EarlyStopDecision d = EarlyStop(trace, 3);
  EXPECT_TRUE(d.stop);
  EXPECT_EQ(d.best_epoch, 2u);

  const std::vector<double> flat(10, 0.5);
  std::size_t stop_at = 0;
  for (std::size_t n = 1; n <= flat.size() && !stop_at; ++n) {
    if (EarlyStop(std::span(flat).first(n), 3).stop) stop_at = n;
  }
  EXPECT_EQ(stop_at, 4u);

  std::vector<double> rising;
  for (int i = 0; i < 20; ++i) {
    rising.push_back(0.5 + 0.01 * i);
    EXPECT_FALSE(EarlyStop(rising, 1).stop);
  }
  EXPECT_EQ(EarlyStop({}, 3).best_epoch, 0u);
  // Gains of at most 1e-4 do not count as improvement.
  EXPECT_TRUE(EarlyStop(std::vector<double>{0.7, 0.70005, 0.7001}, 2).stop);
}

TEST(Temperature, ExponentialScheduleEndpoints) {
  RunConfig c;
  EXPECT_DOUBLE_EQ(TemperatureAt(c, 0, 10), 5.0);
  EXPECT_NEAR(TemperatureAt(c, 9, 10), 0.5, 1e-12);
  const double ratio = TemperatureAt(c, 1, 10) / TemperatureAt(c, 0, 10);
  for (std::size_t e = 1; e < 9; ++e) {
    EXPECT_NEAR(TemperatureAt(c, e + 1, 10) / TemperatureAt(c, e, 10), ratio, 1e-12);
  }
  EXPECT_EQ(TemperatureAt(c, 0, 1), 5.0);
}

TEST(Stages, NamesAndMasks) {
  for (Stage s : {Stage::kPretrain, Stage::kFineTune, Stage::kAutoFT, Stage::kTargetOnly,
                  Stage::kAblationEmbedding, Stage::kAblationCross, Stage::kAblationDeep,
                  Stage::kAblationCrossDeep}) {
    EXPECT_EQ(ParseStage(StageName(s)), s);
  }
  EXPECT_EQ(StagePolicyMask(Stage::kAblationEmbedding), (PolicyMask{true, false, false}));
  EXPECT_EQ(StagePolicyMask(Stage::kAblationCross), (PolicyMask{false, true, false}));
  EXPECT_EQ(StagePolicyMask(Stage::kAblationDeep), (PolicyMask{false, false, true}));
  EXPECT_EQ(StagePolicyMask(Stage::kAblationCrossDeep), (PolicyMask{false, true, true}));
  EXPECT_FALSE(IsAutoftStage(Stage::kFineTune));
  EXPECT_THROW(ParseStage("bogus"), Error);
}

TEST(Config, ValidateRejectsBadValues) {
  RunConfig c;
  c.learning_rate = 0;
  EXPECT_THROW(c.Validate(), Error);
  c = RunConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.Validate(), Error);
  c = RunConfig{};
  c.tau_end = -1;
  EXPECT_THROW(c.Validate(), Error);
  c = RunConfig{};
  c.patience = 0;
  EXPECT_THROW(c.Validate(), Error);
}

TEST(Pretrain, LearnsSeparableData) {
  // Labels are a deterministic function of one field: every training AUC
  // after enough epochs should be near perfect.
  ArchConfig arch = testing::ToyArch();
  arch.field_sizes = {20, 7};
  SeededRng rng(3);
  DomainDataset train, valid;
  for (int i = 0; i < 1200; ++i) {
    EncodedInstance inst = testing::RandomInstance(arch, rng);
    inst.label = inst.fields[0][0] % 2 == 0 ? 1 : 0;
    (i < 1000 ? train : valid).instances.push_back(inst);
  }
  RunConfig c = SmallConfig(Stage::kPretrain);
  c.embedding_dim = 4;
  c.epochs = 20;
  c.patience = 20;
  c.learning_rate = 1e-2;
  const DomainDataset* sets[] = {&train};
  const DcnRunResult r = RunPretrain(sets, valid, arch.field_sizes, c);
  const double train_auc = Auc(Labels(train), PredictDcn(r.params, train));
  EXPECT_GT(train_auc, 0.95);
}

TEST(Pretrain, LossDecreasesOverFirstEpoch) {
  const auto& b = Bench();
  RunConfig c = SmallConfig(Stage::kPretrain);
  c.epochs = 1;
  const DomainDataset* sets[] = {&b.get(Domain::kSource, Split::kTrain)};
  const DcnRunResult r = RunPretrain(sets, b.get(Domain::kSource, Split::kValidation),
                                     b.vocab.field_sizes(), c);
  const auto& l = r.history.batch_losses;
  ASSERT_GE(l.size(), 20u);
  double head = 0, tail = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    head += l[i];
    tail += l[l.size() - 10 + i];
  }
  EXPECT_LT(tail, head);
  for (double v : l) EXPECT_TRUE(std::isfinite(v));
}

TEST(Pretrain, SameSeedSameCheckpointBytes) {
  const auto& b = Bench();
  RunConfig c = SmallConfig(Stage::kPretrain);
  const DomainDataset* sets[] = {&b.get(Domain::kSource, Split::kTrain)};
  auto run = [&](std::uint64_t seed) {
    c.seed = seed;
    const DcnRunResult r =
        RunPretrain(sets, b.get(Domain::kSource, Split::kValidation), b.vocab.field_sizes(), c);
    return SerializeDcnCheckpoint({r.params, b.vocab.Hash()});
  };
  const std::string first = run(5);
  EXPECT_EQ(run(5), first);
  EXPECT_NE(run(6), first);
}

TEST(Pretrain, EmptyDatasetIsConfigError) {
  const DomainDataset empty;
  const DomainDataset* sets[] = {&empty};
  try {
    RunPretrain(sets, empty, {3, 3}, SmallConfig(Stage::kPretrain));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
}

TEST(Pretrain, KeepsBestValidationEpoch) {
  const auto& b = Bench();
  RunConfig c = SmallConfig(Stage::kPretrain);
  c.epochs = 4;
  const DomainDataset& valid = b.get(Domain::kSource, Split::kValidation);
  const DomainDataset* sets[] = {&b.get(Domain::kSource, Split::kTrain)};
  const DcnRunResult r = RunPretrain(sets, valid, b.vocab.field_sizes(), c);
  ASSERT_GE(r.history.best_epoch, 1u);
  const double kept = Auc(Labels(valid), PredictDcn(r.params, valid));
  EXPECT_EQ(kept, r.history.epochs[r.history.best_epoch - 1].valid_auc);
}

class FinetuneTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const auto& b = Bench();
    RunConfig c = SmallConfig(Stage::kPretrain);
    c.epochs = 3;
    const DomainDataset* sets[] = {&b.get(Domain::kSource, Split::kTrain),
                                   &b.get(Domain::kTarget, Split::kTrain)};
    pretrained_ = new DcnParams(
        RunPretrain(sets, b.get(Domain::kSource, Split::kValidation), b.vocab.field_sizes(), c)
            .params);
  }
  static void TearDownTestSuite() { delete pretrained_; }
  static DcnParams* pretrained_;
};

DcnParams* FinetuneTest::pretrained_ = nullptr;

TEST_F(FinetuneTest, ZeroEpochsReturnsInput) {
  const auto& b = Bench();
  RunConfig c = SmallConfig(Stage::kFineTune);
  c.epochs = 0;
  const DcnRunResult r = RunFinetune(*pretrained_, b.vocab.Hash(), b.vocab.Hash(),
                                     b.get(Domain::kTarget, Split::kTrain),
                                     b.get(Domain::kTarget, Split::kValidation), c);
  EXPECT_EQ(BankHash(r.params), BankHash(*pretrained_));
}

TEST_F(FinetuneTest, VocabularyMismatchIsRejected) {
  const auto& b = Bench();
  try {
    RunFinetune(*pretrained_, b.vocab.Hash() ^ 1, b.vocab.Hash(),
                b.get(Domain::kTarget, Split::kTrain), b.get(Domain::kTarget, Split::kValidation),
                SmallConfig(Stage::kFineTune));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kVocabMismatch);
  }
  RunConfig c = SmallConfig(Stage::kAutoFT);
  EXPECT_THROW(RunAutoft(*pretrained_, 1, 2, b.get(Domain::kTarget, Split::kTrain),
                         b.get(Domain::kTarget, Split::kValidation), c),
               Error);
}

TEST_F(FinetuneTest, SelfTransferWithTinyLearningRate) {
  const auto& b = Bench();
  const DomainDataset& valid = b.get(Domain::kSource, Split::kValidation);
  const double before = Auc(Labels(valid), PredictDcn(*pretrained_, valid));
  RunConfig c = SmallConfig(Stage::kFineTune);
  c.learning_rate = 1e-6;
  c.epochs = 1;
  const DcnRunResult r = RunFinetune(*pretrained_, 1, 1, b.get(Domain::kSource, Split::kTrain),
                                     valid, c);
  EXPECT_NEAR(Auc(Labels(valid), PredictDcn(r.params, valid)), before, 0.005);
}

TEST_F(FinetuneTest, AutoftKeepsSourceBankFrozen) {
  const auto& b = Bench();
  const std::uint64_t before = BankHash(*pretrained_);
  RunConfig c = SmallConfig(Stage::kAutoFT);
  c.epochs = 2;
  const AutoftRunResult r = RunAutoft(*pretrained_, 7, 7, b.get(Domain::kTarget, Split::kTrain),
                                      b.get(Domain::kTarget, Split::kValidation), c);
  EXPECT_EQ(BankHash(r.model.source), before);
  EXPECT_NE(BankHash(r.model.target), before);
  EXPECT_EQ(r.history.epochs.size(), 2u);
  EXPECT_DOUBLE_EQ(r.history.epochs[0].tau, 5.0);
  EXPECT_NEAR(r.history.epochs[1].tau, 0.5, 1e-12);
}

TEST_F(FinetuneTest, CrossDeepAblationNeverRoutesEmbeddings) {
  const auto& b = Bench();
  RunConfig c = SmallConfig(Stage::kAblationCrossDeep);
  c.epochs = 1;
  const AutoftRunResult r = RunAutoft(*pretrained_, 7, 7, b.get(Domain::kTarget, Split::kTrain),
                                      b.get(Domain::kTarget, Split::kValidation), c);
  std::vector<RouteDecision> routes;
  PredictAutoft(r.model, b.get(Domain::kTarget, Split::kTest), &routes);
  ASSERT_FALSE(routes.empty());
  for (const auto& route : routes) {
    for (int bit : route.embed.hard) EXPECT_EQ(bit, 0);
  }
}

TEST_F(FinetuneTest, AutoftIsDeterministic) {
  const auto& b = Bench();
  RunConfig c = SmallConfig(Stage::kAutoFT);
  c.epochs = 1;
  auto run = [&]() {
    const AutoftRunResult r = RunAutoft(*pretrained_, 7, 7, b.get(Domain::kTarget, Split::kTrain),
                                        b.get(Domain::kTarget, Split::kValidation), c);
    return SerializeAutoftCheckpoint(r.model, 7);
  };
  EXPECT_EQ(run(), run());
}

TEST_F(FinetuneTest, NonAutoftStageIsRejected) {
  const auto& b = Bench();
  try {
    RunAutoft(*pretrained_, 7, 7, b.get(Domain::kTarget, Split::kTrain),
              b.get(Domain::kTarget, Split::kValidation), SmallConfig(Stage::kFineTune));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
}

}  // namespace
}  // namespace autoft
