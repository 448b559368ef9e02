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

#include <algorithm>
#include <cmath>
#include <limits>

#include "autoft/error.hpp"
#include "autoft/evaluation.hpp"

namespace autoft {

namespace {

constexpr std::uint64_t kShuffleTag = std::numeric_limits<std::uint64_t>::max();
constexpr std::uint64_t kInitTag = std::numeric_limits<std::uint64_t>::max() - 1;
constexpr double kImprovement = 1e-4;

struct StageInfo {
  Stage stage;
  const char* name;
};

constexpr StageInfo kStages[] = {
    {Stage::kPretrain, "pretrain"},
    {Stage::kFineTune, "finetune"},
    {Stage::kAutoFT, "autoft"},
    {Stage::kTargetOnly, "target-only"},
    {Stage::kAblationEmbedding, "ablation-embedding"},
    {Stage::kAblationCross, "ablation-cross"},
    {Stage::kAblationDeep, "ablation-deep"},
    {Stage::kAblationCrossDeep, "ablation-cross-deep"},
};

// Position of an instance inside a list of datasets.
struct InstanceRef {
  const DomainDataset* set;
  std::size_t index;
  std::size_t global;
};

std::vector<std::size_t> ShuffledOrder(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  SeededRng rng = SeededRng::Substream(seed, epoch, kShuffleTag);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.NextBelow(i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

void RequireNonEmpty(const DomainDataset& data, const char* what) {
  if (data.empty()) Fail(ErrorKind::kConfig, std::string(what) + " dataset is empty");
}

void RequireFiniteLoss(double loss, std::size_t epoch, std::size_t batch) {
  if (!std::isfinite(loss)) {
    Fail(ErrorKind::kEvaluation, "non-finite training loss at epoch " + std::to_string(epoch) +
                                     ", batch " + std::to_string(batch));
  }
}

void RequireVocabMatch(std::uint64_t checkpoint_hash, std::uint64_t data_hash) {
  if (checkpoint_hash != data_hash) {
    Fail(ErrorKind::kVocabMismatch, "checkpoint vocabulary hash " + HexU64(checkpoint_hash) +
                                        " does not match data vocabulary hash " +
                                        HexU64(data_hash));
  }
}

// Records one epoch, updates the early-stopping state and reports whether
// this epoch is the new best.
struct EpochBook {
  std::vector<double> aucs;

  bool Record(TrainHistory& history, EpochRecord record, std::size_t patience,
              const EpochCallback& on_epoch) {
    aucs.push_back(record.valid_auc);
    history.epochs.push_back(record);
    if (on_epoch) on_epoch(record);
    const EarlyStopDecision d = EarlyStop(aucs, patience);
    const bool improved = d.best_epoch != history.best_epoch;
    history.best_epoch = d.best_epoch;
    history.stopped_early = d.stop;
    return improved;
  }
};

}  // namespace

const char* StageName(Stage stage) {
  for (const auto& s : kStages) {
    if (s.stage == stage) return s.name;
  }
  return "unknown";
}

Stage ParseStage(const std::string& name) {
  for (const auto& s : kStages) {
    if (name == s.name) return s.stage;
  }
  Fail(ErrorKind::kConfig, "unknown stage '" + name + "'");
}

bool IsAutoftStage(Stage stage) {
  switch (stage) {
    case Stage::kAutoFT:
    case Stage::kAblationEmbedding:
    case Stage::kAblationCross:
    case Stage::kAblationDeep:
    case Stage::kAblationCrossDeep:
      return true;
    default:
      return false;
  }
}

PolicyMask StagePolicyMask(Stage stage) {
  switch (stage) {
    case Stage::kAutoFT: return {true, true, true};
    case Stage::kAblationEmbedding: return {true, false, false};
    case Stage::kAblationCross: return {false, true, false};
    case Stage::kAblationDeep: return {false, false, true};
    case Stage::kAblationCrossDeep: return {false, true, true};
    default: return {false, false, false};
  }
}

ArchConfig RunConfig::MakeArch(std::vector<std::size_t> field_sizes) const {
  ArchConfig arch;
  arch.backbone = backbone;
  arch.embedding_dim = embedding_dim;
  arch.cross_layers = cross_layers;
  arch.deep_layers = deep_layers;
  arch.field_sizes = std::move(field_sizes);
  return arch;
}

void RunConfig::Validate() const {
  auto bad = [](const std::string& msg) { Fail(ErrorKind::kConfig, msg); };
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) bad("learning_rate must be > 0");
  if (batch_size == 0) bad("batch_size must be >= 1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) bad("lambda must be >= 0");
  if (!(tau_start > 0.0) || !(tau_end > 0.0) || !std::isfinite(tau_start) ||
      !std::isfinite(tau_end)) {
    bad("tau_start and tau_end must be > 0");
  }
  if (patience == 0) bad("patience must be >= 1");
  if (embedding_dim == 0) bad("embedding_dim must be >= 1");
  for (std::size_t w : deep_layers) {
    if (w == 0) bad("deep layer widths must be >= 1");
  }
  if (policy.hidden == 0) bad("policy.hidden must be >= 1");
  if (!(policy.init_scale >= 0.0) || !std::isfinite(policy.pretrained_bias)) {
    bad("policy init_scale must be >= 0 and pretrained_bias finite");
  }
  if (!(policy.lr_scale > 0.0) || !std::isfinite(policy.lr_scale)) {
    bad("policy lr_scale must be > 0");
  }
}

double TemperatureAt(const RunConfig& config, std::size_t epoch, std::size_t total) {
  if (total <= 1) return config.tau_start;
  const double frac = static_cast<double>(std::min(epoch, total - 1)) /
                      static_cast<double>(total - 1);
  return config.tau_start * std::pow(config.tau_end / config.tau_start, frac);
}

void AdamStep(AdamState& state, std::span<const std::span<double>> params,
              std::span<const std::span<const double>> grads, double lr,
              std::span<const double> lr_scale) {
  if (params.size() != grads.size() || (!lr_scale.empty() && lr_scale.size() != params.size())) {
    Fail(ErrorKind::kInternal, "adam: " + std::to_string(params.size()) + " tensors but " +
                                   std::to_string(grads.size()) + " gradients");
  }
  if (state.m.empty() && state.t == 0) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), 0.0);
      state.v.emplace_back(p.size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) {
    Fail(ErrorKind::kInternal, "adam: state has " + std::to_string(state.m.size()) +
                                   " buffers for " + std::to_string(params.size()) + " tensors");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != grads[i].size() || params[i].size() != state.m[i].size()) {
      Fail(ErrorKind::kInternal, "adam: shape mismatch on tensor " + std::to_string(i));
    }
  }
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i];
    auto g = grads[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    const double step = lr_scale.empty() ? lr : lr * lr_scale[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      p[j] -= step * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

std::vector<std::span<double>> TrainableTensors(DcnParams& params) {
  std::vector<std::span<double>> out;
  ForEachTensor(params, [&](const std::string&, ParamGroup, std::span<double> t) {
    out.push_back(t);
  });
  return out;
}

std::vector<std::span<const double>> GradientTensors(const DcnParams& grads) {
  std::vector<std::span<const double>> out;
  ForEachTensor(grads, [&](const std::string&, ParamGroup, std::span<const double> t) {
    out.push_back(t);
  });
  return out;
}

std::vector<std::span<double>> TrainableTensors(AutoftModel& model) {
  std::vector<std::span<double>> out = TrainableTensors(model.target);
  ForEachPolicyTensor(model.policies, model.mask,
                      [&](const std::string&, ParamGroup, std::span<double> t) {
                        out.push_back(t);
                      });
  return out;
}

std::vector<std::span<const double>> GradientTensors(const AutoftGradients& grads,
                                                     const PolicyMask& mask) {
  std::vector<std::span<const double>> out = GradientTensors(grads.target);
  ForEachPolicyTensor(grads.policies, mask,
                      [&](const std::string&, ParamGroup, std::span<const double> t) {
                        out.push_back(t);
                      });
  return out;
}

EarlyStopDecision EarlyStop(std::span<const double> auc_history, std::size_t patience) {
  EarlyStopDecision d;
  if (auc_history.empty()) return d;
  double best = auc_history[0];
  d.best_epoch = 1;
  std::size_t since = 0;
  for (std::size_t i = 1; i < auc_history.size(); ++i) {
    if (auc_history[i] > best + kImprovement) {
      best = auc_history[i];
      d.best_epoch = i + 1;
      since = 0;
    } else {
      ++since;
    }
  }
  d.stop = since >= patience;
  return d;
}

std::vector<int> Labels(const DomainDataset& data) {
  std::vector<int> labels;
  labels.reserve(data.size());
  for (const auto& inst : data.instances) labels.push_back(inst.label);
  return labels;
}

std::vector<double> PredictDcn(const DcnParams& params, const DomainDataset& data) {
  std::vector<double> scores;
  scores.reserve(data.size());
  ForwardTape tape;
  for (const auto& inst : data.instances) scores.push_back(Forward(inst, params, tape));
  return scores;
}

std::vector<double> PredictAutoft(const AutoftModel& model, const DomainDataset& data,
                                  std::vector<RouteDecision>* routes) {
  std::vector<double> scores;
  scores.reserve(data.size());
  if (routes) routes->clear();
  AutoftOptions options;
  options.mode = RouteMode::kInfer;
  const GumbelNoise none;
  AutoftTape tape;
  for (const auto& inst : data.instances) {
    scores.push_back(AutoftForward(inst, model, options, none, tape));
    if (routes) routes->push_back(tape.route);
  }
  return scores;
}

DcnRunResult TrainDcn(DcnParams init, std::span<const DomainDataset* const> train,
                      const DomainDataset& validation, const RunConfig& config,
                      const EpochCallback& on_epoch) {
  config.Validate();
  std::vector<InstanceRef> refs;
  for (const DomainDataset* set : train) {
    for (std::size_t i = 0; i < set->size(); ++i) refs.push_back({set, i, refs.size()});
  }
  if (refs.empty()) Fail(ErrorKind::kConfig, "training dataset is empty");
  RequireNonEmpty(validation, "validation");

  DcnRunResult result{init, {}};
  if (config.epochs == 0) return result;

  DcnParams params = std::move(init);
  DcnParams grads = ZerosLike(params);
  AdamState adam;
  ForwardTape tape;
  EpochBook book;
  const std::vector<int> valid_labels = Labels(validation);
  const double penalty_scale = config.lambda;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const std::vector<std::size_t> order = ShuffledOrder(refs.size(), config.seed, epoch);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double inv = 1.0 / static_cast<double>(end - start);
      SetZero(grads);
      double ce = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const InstanceRef& ref = refs[order[k]];
        const EncodedInstance& inst = ref.set->instances[ref.index];
        const double yhat = Forward(inst, params, tape);
        ce += CrossEntropy(inst.label, yhat);
        Backward(inst, params, tape, inst.label, 0.0, grads, inv, config.l2_scope);
      }
      double loss = ce * inv;
      if (penalty_scale > 0.0) {
        loss += penalty_scale * L2Penalty(params, config.l2_scope);
        AddL2Gradient(params, penalty_scale, config.l2_scope, 1.0, grads);
      }
      RequireFiniteLoss(loss, epoch + 1, batches + 1);
      result.history.batch_losses.push_back(loss);
      epoch_loss += loss;
      ++batches;
      const auto p = TrainableTensors(params);
      const auto g = GradientTensors(grads);
      AdamStep(adam, p, g, config.learning_rate);
    }
    const std::vector<double> scores = PredictDcn(params, validation);
    EpochRecord record;
    record.epoch = epoch + 1;
    record.train_loss = epoch_loss / static_cast<double>(batches);
    record.valid_auc = Auc(valid_labels, scores);
    record.valid_logloss = LogLoss(valid_labels, scores);
    if (book.Record(result.history, record, config.patience, on_epoch)) result.params = params;
    if (result.history.stopped_early) break;
  }
  return result;
}

AutoftRunResult TrainAutoft(AutoftModel init, const DomainDataset& train,
                            const DomainDataset& validation, const RunConfig& config,
                            const EpochCallback& on_epoch) {
  config.Validate();
  RequireNonEmpty(train, "training");
  RequireNonEmpty(validation, "validation");

  AutoftRunResult result{init, {}};
  if (config.epochs == 0) return result;

  AutoftModel model = std::move(init);
  AutoftGradients grads = ZeroGradients(model);
  const AutoftRegularization reg{config.lambda, config.l2_scope, config.l2_include_policies};
  AdamState adam;
  AutoftTape tape;
  EpochBook book;
  const std::vector<int> valid_labels = Labels(validation);
  // Bank tensors first, then policy tensors.
  std::vector<double> lr_scale(TrainableTensors(model.target).size(), 1.0);
  lr_scale.resize(TrainableTensors(model).size(), config.policy.lr_scale);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    AutoftOptions options;
    options.mode = RouteMode::kTrain;
    options.tau = TemperatureAt(config, epoch, config.epochs);
    const std::vector<std::size_t> order = ShuffledOrder(train.size(), config.seed, epoch);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double inv = 1.0 / static_cast<double>(end - start);
      SetZero(grads);
      double ce = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t idx = order[k];
        const EncodedInstance& inst = train.instances[idx];
        SeededRng rng = SeededRng::Substream(config.seed, epoch, idx);
        const double yhat = AutoftForward(inst, model, options, rng, tape);
        ce += CrossEntropy(inst.label, yhat);
        AutoftBackward(inst, model, tape, inst.label, grads, inv);
      }
      double loss = ce * inv;
      if (reg.lambda > 0.0) {
        loss += reg.lambda * AutoftPenalty(model, reg);
        AddAutoftL2Gradient(model, reg, 1.0, grads);
      }
      RequireFiniteLoss(loss, epoch + 1, batches + 1);
      result.history.batch_losses.push_back(loss);
      epoch_loss += loss;
      ++batches;
      const auto p = TrainableTensors(model);
      const auto g = GradientTensors(grads, model.mask);
      AdamStep(adam, p, g, config.learning_rate, lr_scale);
    }
    const std::vector<double> scores = PredictAutoft(model, validation);
    EpochRecord record;
    record.epoch = epoch + 1;
    record.train_loss = epoch_loss / static_cast<double>(batches);
    record.valid_auc = Auc(valid_labels, scores);
    record.valid_logloss = LogLoss(valid_labels, scores);
    record.tau = options.tau;
    if (book.Record(result.history, record, config.patience, on_epoch)) result.model = model;
    if (result.history.stopped_early) break;
  }
  return result;
}

DcnRunResult RunPretrain(std::span<const DomainDataset* const> train,
                         const DomainDataset& validation, std::vector<std::size_t> field_sizes,
                         const RunConfig& config, const EpochCallback& on_epoch) {
  config.Validate();
  const ArchConfig arch = config.MakeArch(std::move(field_sizes));
  ValidateArch(arch);
  SeededRng rng = SeededRng::Substream(config.seed, 0, kInitTag);
  return TrainDcn(InitDcnParams(arch, rng), train, validation, config, on_epoch);
}

DcnRunResult RunFinetune(const DcnParams& pretrained, std::uint64_t checkpoint_vocab_hash,
                         std::uint64_t data_vocab_hash, const DomainDataset& train,
                         const DomainDataset& validation, const RunConfig& config,
                         const EpochCallback& on_epoch) {
  RequireVocabMatch(checkpoint_vocab_hash, data_vocab_hash);
  const DomainDataset* sets[] = {&train};
  return TrainDcn(pretrained, sets, validation, config, on_epoch);
}

DcnRunResult RunTargetOnly(const DomainDataset& train, const DomainDataset& validation,
                           std::vector<std::size_t> field_sizes, const RunConfig& config,
                           const EpochCallback& on_epoch) {
  const DomainDataset* sets[] = {&train};
  return RunPretrain(sets, validation, std::move(field_sizes), config, on_epoch);
}

AutoftRunResult RunAutoft(const DcnParams& pretrained, std::uint64_t checkpoint_vocab_hash,
                          std::uint64_t data_vocab_hash, const DomainDataset& train,
                          const DomainDataset& validation, const RunConfig& config,
                          const EpochCallback& on_epoch) {
  RequireVocabMatch(checkpoint_vocab_hash, data_vocab_hash);
  if (!IsAutoftStage(config.stage)) {
    Fail(ErrorKind::kConfig, std::string("stage ") + StageName(config.stage) +
                                 " is not an AutoFT stage");
  }
  config.Validate();
  SeededRng rng = SeededRng::Substream(config.seed, 0, kInitTag);
  AutoftModel model =
      MakeAutoftModel(pretrained, config.policy, StagePolicyMask(config.stage), rng);
  return TrainAutoft(std::move(model), train, validation, config, on_epoch);
}

}  // namespace autoft
