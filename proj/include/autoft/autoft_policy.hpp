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

// Instance-conditioned routing between a frozen pre-trained parameter bank
// and a trainable fine-tuned bank.
//
// Three policy networks emit one binary decision per embedding field, per
// cross layer and per deep layer. Each decision is a 2-way categorical over
// {0: pre-trained, 1: fine-tuned}; the routing value p used by the mixing
// equations is the indicator of category 0, so p = 1 selects the frozen bank.
//
// Training samples decisions with the Gumbel-max trick and back-propagates
// through the Gumbel-Softmax relaxation Y (straight-through). Inference takes
// the argmax of the raw logits.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "autoft/checkpoint.hpp"
#include "autoft/dcn_model.hpp"
#include "autoft/feature_pipeline.hpp"
#include "autoft/numerics.hpp"

namespace autoft {

// Two fully connected layers: logits = W2 ReLU(W1 x + b1) + b2, optionally
// followed by a ReLU. Logits come in (pre-trained, fine-tuned) pairs.
struct PolicyNetwork {
  DenseMatrix w1;  // hidden x input
  Vector b1;
  DenseMatrix w2;  // 2*decisions x hidden
  Vector b2;
  std::size_t decision_count = 0;
  bool output_relu = false;

  std::size_t input_dim() const { return w1.cols(); }
  bool empty() const { return decision_count == 0; }
};

struct PolicyConfig {
  std::size_t hidden = 64;
  bool output_relu = false;
  // Initial bias added to every pre-trained logit.
  double pretrained_bias = 0.5;
  // Weights ~ U[-scale/sqrt(fan_in), scale/sqrt(fan_in)].
  double init_scale = 0.1;
  // Learning-rate multiplier for the policy networks.
  double lr_scale = 1.0;

  friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

PolicyNetwork InitPolicyNetwork(std::size_t input_dim, std::size_t decision_count,
                                const PolicyConfig& config, SeededRng& rng);

enum class PolicyKind { kEmbed, kCross, kDeep };

struct PolicySet {
  PolicyNetwork embed;
  PolicyNetwork cross;
  PolicyNetwork deep;

  PolicyNetwork& get(PolicyKind kind);
  const PolicyNetwork& get(PolicyKind kind) const;
};

// Which policies are live. A disabled policy forces p = 0 (always fine-tuned)
// for its units and its parameters are neither evaluated nor trained.
struct PolicyMask {
  bool embed = true;
  bool cross = true;
  bool deep = true;

  bool enabled(PolicyKind kind) const;
  friend bool operator==(const PolicyMask&, const PolicyMask&) = default;
};

struct AutoftModel {
  DcnParams source;  // frozen
  DcnParams target;  // trainable; its prediction layer is always used
  PolicySet policies;
  PolicyMask mask;
  PolicyConfig policy_config;
};

// Builds a model whose target bank is a copy of the pre-trained bank.
AutoftModel MakeAutoftModel(const DcnParams& pretrained, const PolicyConfig& config,
                            const PolicyMask& mask, SeededRng& rng);

enum class RouteMode {
  kTrain,  // hard Gumbel-max routes forward, relaxation gradients backward
  kSoft,   // the relaxation Y is used as the mixing weight in both passes
  kInfer,  // argmax of raw logits, no noise
};

// Per-policy routing state for one instance.
struct RouteSlice {
  std::vector<int> hard;  // p per unit: 1 = pre-trained, 0 = fine-tuned
  Vector soft;            // Y_0 per unit (Train/Soft modes)
  Vector mix;             // weight on the pre-trained branch in the forward pass
  Vector grad_mix;        // weight used by the backward pass
  Vector logits;          // 2 per unit
  Vector noise;           // Gumbel samples, 2 per unit
  Vector hidden_pre;      // policy hidden pre-activation
  Vector out_pre;         // policy output pre-activation
  bool forced = false;    // mixing weights were fixed externally
};

struct RouteDecision {
  RouteSlice embed;
  RouteSlice cross;
  RouteSlice deep;

  RouteSlice& get(PolicyKind kind);
  const RouteSlice& get(PolicyKind kind) const;
};

// Gumbel noise for every decision of one instance (2 samples per unit).
struct GumbelNoise {
  Vector embed;
  Vector cross;
  Vector deep;
};

GumbelNoise DrawNoise(const ArchConfig& arch, SeededRng& rng);

// Externally fixed routing values; used for ablations and tests.
struct RouteOverride {
  std::optional<Vector> embed;
  std::optional<Vector> cross;
  std::optional<Vector> deep;
};

struct PolicyOutput {
  Vector logits;
  Vector hidden_pre;
  Vector out_pre;
};

PolicyOutput PolicyLogits(const PolicyNetwork& net, std::span<const double> input);

// Routing decisions of one policy for one input.
RouteSlice PolicyForward(const PolicyNetwork& net, std::span<const double> input, double tau,
                         std::span<const double> noise, RouteMode mode);
RouteSlice PolicyForward(const PolicyNetwork& net, std::span<const double> input, double tau,
                         SeededRng& rng, RouteMode mode);

// Y_0 = softmax((log alpha + G) / tau)_0 for one logit pair, alpha = softmax(logits).
double RelaxedPretrainedWeight(double logit_pre, double logit_fine, double g_pre, double g_fine,
                               double tau);

// x_hat_i = p_i * lookup(V_i^S) + (1 - p_i) * lookup(V_i^T).
Vector MixFieldEmbeddings(std::span<const double> p_e, const EmbeddingTable& src,
                          const EmbeddingTable& tgt, const EncodedInstance& inst);

Vector RoutedCrossForward(std::span<const double> x0, std::span<const double> xl, double p,
                          const CrossLayerParams& src, const CrossLayerParams& tgt);
Vector RoutedDeepForward(std::span<const double> hl, double p, const DeepLayerParams& src,
                         const DeepLayerParams& tgt);

struct AutoftTape {
  RouteDecision route;
  double tau = 1.0;
  RouteMode mode = RouteMode::kInfer;
  Vector x_source;  // source-bank embedding (embed policy input)
  Vector x_target;  // target-bank embedding
  Vector x_hat;     // routed embedding, x_hat^(0)
  std::vector<Vector> cross;      // routed x_hat^(0..Lc)
  std::vector<Vector> cross_src;  // F_c outputs
  std::vector<Vector> cross_tgt;  // F_c-hat outputs
  std::vector<Vector> deep;       // routed h_hat^(0..Ld)
  std::vector<Vector> deep_src_pre;
  std::vector<Vector> deep_tgt_pre;
  Vector concat;
  double logit = 0.0;
  double yhat = 0.5;
};

struct AutoftOptions {
  RouteMode mode = RouteMode::kInfer;
  double tau = 1.0;
  RouteOverride override_route;
};

double AutoftForward(const EncodedInstance& inst, const AutoftModel& model,
                     const AutoftOptions& options, const GumbelNoise& noise, AutoftTape& tape);
double AutoftForward(const EncodedInstance& inst, const AutoftModel& model,
                     const AutoftOptions& options, SeededRng& rng, AutoftTape& tape);

// Gradients for the trainable parts only; the source bank has no buffer.
struct AutoftGradients {
  DcnParams target;
  PolicySet policies;
};

AutoftGradients ZeroGradients(const AutoftModel& model);
void SetZero(AutoftGradients& grads);

struct AutoftRegularization {
  double lambda = 0.0;
  L2Scope scope = L2Scope::kWeights;
  bool include_policies = false;
};

// Straight-through backward pass. Forward values come from the tape; the
// mixing Jacobians use tape.route.*.grad_mix (Y in Train/Soft mode). Policy
// logit gradients go through the relaxation at temperature tape.tau.
void AutoftBackward(const EncodedInstance& inst, const AutoftModel& model,
                    const AutoftTape& tape, int y, AutoftGradients& grads, double weight = 1.0);

double AutoftPenalty(const AutoftModel& model, const AutoftRegularization& reg);
double AutoftLoss(int y, double yhat, const AutoftModel& model, const AutoftRegularization& reg);
void AddAutoftL2Gradient(const AutoftModel& model, const AutoftRegularization& reg,
                         double weight, AutoftGradients& grads);

// Visits every policy tensor of enabled networks in a fixed order.
template <typename Set, typename Fn>
void ForEachPolicyTensor(Set& set, const PolicyMask& mask, Fn&& fn) {
  static constexpr PolicyKind kKinds[] = {PolicyKind::kEmbed, PolicyKind::kCross,
                                          PolicyKind::kDeep};
  static constexpr const char* kNames[] = {"embed", "cross", "deep"};
  for (int i = 0; i < 3; ++i) {
    if (!mask.enabled(kKinds[i])) continue;
    auto& net = set.get(kKinds[i]);
    if (net.empty()) continue;
    const std::string base = std::string("policy/") + kNames[i] + "/";
    fn(base + "w1", ParamGroup::kPolicyWeight, net.w1.values());
    fn(base + "b1", ParamGroup::kPolicyBias, std::span(net.b1));
    fn(base + "w2", ParamGroup::kPolicyWeight, net.w2.values());
    fn(base + "b2", ParamGroup::kPolicyBias, std::span(net.b2));
  }
}

// Checkpoint: header kind "autoft" with arch, policy config and mask;
// tensors under "source/", "target/" and "policy/".
std::string SerializeAutoftCheckpoint(const AutoftModel& model, std::uint64_t vocab_hash);
AutoftModel DeserializeAutoftCheckpoint(const std::string& bytes, std::uint64_t* vocab_hash,
                                        const std::string& source = "<bytes>");

}  // namespace autoft
