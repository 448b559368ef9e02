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

#pragma once

// Adam, minibatch loops and the experimental stages: pretraining, plain
// fine-tuning, target-only training, AutoFT and its ablations.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "autoft/autoft_policy.hpp"
#include "autoft/dcn_model.hpp"
#include "autoft/feature_pipeline.hpp"

namespace autoft {

enum class Stage {
  kPretrain,
  kFineTune,
  kAutoFT,
  kTargetOnly,
  kAblationEmbedding,
  kAblationCross,
  kAblationDeep,
  kAblationCrossDeep,
};

const char* StageName(Stage stage);
Stage ParseStage(const std::string& name);
bool IsAutoftStage(Stage stage);
// Policies kept alive by an AutoFT-family stage.
PolicyMask StagePolicyMask(Stage stage);

enum class PretrainData { kSource, kAll };

struct RunConfig {
  Stage stage = Stage::kPretrain;
  double learning_rate = 1e-3;
  std::size_t batch_size = 256;
  std::size_t epochs = 10;
  double lambda = 0.0;
  L2Scope l2_scope = L2Scope::kWeights;
  bool l2_include_policies = false;
  double tau_start = 5.0;
  double tau_end = 0.5;
  std::uint64_t seed = 42;
  std::size_t patience = 3;
  PretrainData pretrain_data = PretrainData::kAll;
  // Architecture (field sizes come from the vocabulary).
  Backbone backbone = Backbone::kDcn;
  std::size_t embedding_dim = 16;
  std::size_t cross_layers = 3;
  std::vector<std::size_t> deep_layers = {64, 32};
  PolicyConfig policy;

  ArchConfig MakeArch(std::vector<std::size_t> field_sizes) const;
  void Validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Temperature used during `epoch` (0-based) of `total` epochs: exponential
// decay from tau_start to tau_end.
double TemperatureAt(const RunConfig& config, std::size_t epoch, std::size_t total);

// Adam with bias correction. Moment buffers are created on the first step
// and mirror exactly the tensors passed in, so frozen parameters (never
// passed) have none.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t t = 0;
  std::vector<Vector> m;
  std::vector<Vector> v;

  std::size_t num_buffers() const { return m.size(); }
};

// `lr_scale`, when non-empty, holds one learning-rate multiplier per tensor.
void AdamStep(AdamState& state, std::span<const std::span<double>> params,
              std::span<const std::span<const double>> grads, double lr,
              std::span<const double> lr_scale = {});

// Trainable tensor lists in a fixed order.
std::vector<std::span<double>> TrainableTensors(DcnParams& params);
std::vector<std::span<const double>> GradientTensors(const DcnParams& grads);
std::vector<std::span<double>> TrainableTensors(AutoftModel& model);
std::vector<std::span<const double>> GradientTensors(const AutoftGradients& grads,
                                                     const PolicyMask& mask);

struct EarlyStopDecision {
  bool stop = false;
  std::size_t best_epoch = 0;  // 1-based; 0 when history is empty
};

// Stop once the validation AUC has failed to beat the best so far by more
// than 1e-4 for `patience` consecutive epochs.
EarlyStopDecision EarlyStop(std::span<const double> auc_history, std::size_t patience);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double valid_auc = 0.0;
  double valid_logloss = 0.0;
  double tau = 0.0;  // 0 for non-AutoFT stages
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
  // Mean training loss per minibatch, in order.
  std::vector<double> batch_losses;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

struct DcnRunResult {
  DcnParams params;
  TrainHistory history;
};

struct AutoftRunResult {
  AutoftModel model;
  TrainHistory history;
};

// Trains a bank on the concatenation of `train` sets; keeps the parameters
// of the best validation-AUC epoch.
DcnRunResult TrainDcn(DcnParams init, std::span<const DomainDataset* const> train,
                      const DomainDataset& validation, const RunConfig& config,
                      const EpochCallback& on_epoch = {});

AutoftRunResult TrainAutoft(AutoftModel init, const DomainDataset& train,
                            const DomainDataset& validation, const RunConfig& config,
                            const EpochCallback& on_epoch = {});

// Fresh bank trained on source (or source + target) training data.
DcnRunResult RunPretrain(std::span<const DomainDataset* const> train,
                         const DomainDataset& validation, std::vector<std::size_t> field_sizes,
                         const RunConfig& config, const EpochCallback& on_epoch = {});

// Continues training every parameter of a pre-trained bank on target data.
// `checkpoint_vocab_hash` must equal the vocabulary hash of the data.
DcnRunResult RunFinetune(const DcnParams& pretrained, std::uint64_t checkpoint_vocab_hash,
                         std::uint64_t data_vocab_hash, const DomainDataset& train,
                         const DomainDataset& validation, const RunConfig& config,
                         const EpochCallback& on_epoch = {});

DcnRunResult RunTargetOnly(const DomainDataset& train, const DomainDataset& validation,
                           std::vector<std::size_t> field_sizes, const RunConfig& config,
                           const EpochCallback& on_epoch = {});

// AutoFT or one of its ablations, selected by config.stage.
AutoftRunResult RunAutoft(const DcnParams& pretrained, std::uint64_t checkpoint_vocab_hash,
                          std::uint64_t data_vocab_hash, const DomainDataset& train,
                          const DomainDataset& validation, const RunConfig& config,
                          const EpochCallback& on_epoch = {});

// Predictions (AutoFT uses deterministic inference routes).
std::vector<double> PredictDcn(const DcnParams& params, const DomainDataset& data);
std::vector<double> PredictAutoft(const AutoftModel& model, const DomainDataset& data,
                                  std::vector<RouteDecision>* routes = nullptr);

std::vector<int> Labels(const DomainDataset& data);

}  // namespace autoft
