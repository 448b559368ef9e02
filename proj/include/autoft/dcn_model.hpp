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

// Deep & Cross Network backbone: embedding lookup, cross network, deep ReLU
// network and a sigmoid prediction layer, with analytic gradients.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "autoft/feature_pipeline.hpp"
#include "autoft/numerics.hpp"

namespace autoft {

enum class Backbone { kDcn, kDnn };

const char* BackboneName(Backbone backbone);
Backbone ParseBackbone(const std::string& name);

struct ArchConfig {
  Backbone backbone = Backbone::kDcn;
  std::size_t embedding_dim = 16;
  std::size_t cross_layers = 3;
  std::vector<std::size_t> deep_layers = {64, 32};
  // n_i per field, OOV slot included.
  std::vector<std::size_t> field_sizes;

  std::size_t num_fields() const { return field_sizes.size(); }
  // d = m * k.
  std::size_t input_dim() const { return num_fields() * embedding_dim; }
  std::size_t num_cross() const { return backbone == Backbone::kDcn ? cross_layers : 0; }
  std::size_t deep_output_dim() const {
    return deep_layers.empty() ? input_dim() : deep_layers.back();
  }
  // Length of [x^(Lc), h^(Ld)] (or h^(Ld) alone for the DNN backbone).
  std::size_t prediction_dim() const {
    return (backbone == Backbone::kDcn ? input_dim() : 0) + deep_output_dim();
  }

  friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

struct EmbeddingTable {
  std::size_t dim = 0;
  std::vector<DenseMatrix> tables;  // one n_i x k matrix per field
};

struct CrossLayerParams {
  Vector w;
  Vector b;
};

struct DeepLayerParams {
  DenseMatrix w;  // out x in
  Vector b;
};

struct PredictionParams {
  Vector w;
  double b = 0.0;
};

// One complete parameter bank.
struct DcnParams {
  ArchConfig arch;
  EmbeddingTable embedding;
  std::vector<CrossLayerParams> cross;
  std::vector<DeepLayerParams> deep;
  PredictionParams prediction;
};

enum class ParamGroup {
  kEmbedding,
  kCrossWeight,
  kCrossBias,
  kDeepWeight,
  kDeepBias,
  kPredictionWeight,
  kPredictionBias,
  kPolicyWeight,
  kPolicyBias,
};

bool IsWeightGroup(ParamGroup group);

// Which parameters the L2 term covers.
enum class L2Scope {
  kWeights,  // weight matrices/vectors only
  kAll,      // weights, biases and embedding tables
};

bool InL2Scope(ParamGroup group, L2Scope scope);

// Visits every tensor of a bank in a fixed order.
template <typename Params, typename Fn>
void ForEachTensor(Params& p, Fn&& fn) {
  for (std::size_t f = 0; f < p.embedding.tables.size(); ++f) {
    fn("embedding/" + std::to_string(f), ParamGroup::kEmbedding, p.embedding.tables[f].values());
  }
  for (std::size_t l = 0; l < p.cross.size(); ++l) {
    fn("cross/" + std::to_string(l) + "/w", ParamGroup::kCrossWeight, std::span(p.cross[l].w));
    fn("cross/" + std::to_string(l) + "/b", ParamGroup::kCrossBias, std::span(p.cross[l].b));
  }
  for (std::size_t l = 0; l < p.deep.size(); ++l) {
    fn("deep/" + std::to_string(l) + "/w", ParamGroup::kDeepWeight, p.deep[l].w.values());
    fn("deep/" + std::to_string(l) + "/b", ParamGroup::kDeepBias, std::span(p.deep[l].b));
  }
  fn(std::string("prediction/w"), ParamGroup::kPredictionWeight, std::span(p.prediction.w));
  fn(std::string("prediction/b"), ParamGroup::kPredictionBias,
     std::span(&p.prediction.b, 1));
}

void ValidateArch(const ArchConfig& arch);

// Embeddings ~ U[-1/sqrt(k), 1/sqrt(k)]; cross and prediction weights
// ~ U[-1/sqrt(fan_in), 1/sqrt(fan_in)]; deep weights He-uniform
// U[-sqrt(6/fan_in), sqrt(6/fan_in)]; biases zero.
DcnParams InitDcnParams(const ArchConfig& arch, SeededRng& rng);
DcnParams ZerosLike(const DcnParams& params);
void SetZero(DcnParams& params);
void CheckSameShape(const DcnParams& a, const DcnParams& b);

// Mean of the rows of `table` selected by `indices`, written to `out`.
void EmbedField(const DenseMatrix& table, std::span<const std::uint32_t> indices,
                std::span<double> out);
// Concatenation of per-field (averaged) embeddings, length m * k.
Vector EmbedLookup(const EmbeddingTable& tables, const EncodedInstance& inst);
// Adds `grad` (length k) to the rows selected by `indices`, each scaled by
// weight / |indices|.
void AccumulateEmbeddingGrad(DenseMatrix& table_grad, std::span<const std::uint32_t> indices,
                             std::span<const double> grad, double weight);

// x^(l+1) = x0 * <xl, w> + b + xl.
Vector CrossLayerForward(std::span<const double> x0, std::span<const double> xl,
                         std::span<const double> w, std::span<const double> b);
// Backward of one cross layer given dL/d(output). Adds into g_xl and g_x0;
// adds parameter gradients when gw/gb are non-empty.
void CrossLayerBackward(std::span<const double> x0, std::span<const double> xl,
                        std::span<const double> w, std::span<const double> g_out,
                        double weight, std::span<double> gw, std::span<double> gb,
                        std::span<double> g_xl, std::span<double> g_x0);

// ReLU(w h + b).
Vector DeepLayerForward(std::span<const double> h, const DenseMatrix& w,
                        std::span<const double> b);
// Backward of one deep layer given its pre-activation z. gw may be null.
void DeepLayerBackward(std::span<const double> h, std::span<const double> z,
                       const DenseMatrix& w, std::span<const double> g_out, double weight,
                       DenseMatrix* gw, std::span<double> gb, std::span<double> g_h);

// sigmoid(<w_o, [x_cross, h_deep]> + b_o). x_cross is empty for DNN.
double Predict(std::span<const double> x_cross, std::span<const double> h_deep,
               const PredictionParams& p);

inline constexpr double kProbClamp = 1e-7;

double CrossEntropy(int y, double yhat);
// Sum of squares of the tensors in scope.
double L2Penalty(const DcnParams& params, L2Scope scope = L2Scope::kWeights);
double Loss(int y, double yhat, double lambda, const DcnParams& params,
            L2Scope scope = L2Scope::kWeights);
// grads += weight * 2 * lambda * params over the tensors in scope.
void AddL2Gradient(const DcnParams& params, double lambda, L2Scope scope, double weight,
                   DcnParams& grads);

struct ForwardTape {
  std::vector<Vector> cross;    // x^(0..Lc)
  std::vector<Vector> deep;     // h^(0..Ld)
  std::vector<Vector> deep_pre; // pre-activations, Ld entries
  Vector concat;
  double logit = 0.0;
  double yhat = 0.5;
};

double Forward(const EncodedInstance& inst, const DcnParams& params, ForwardTape& tape);
double Forward(const EncodedInstance& inst, const DcnParams& params);

// Accumulates weight * dLoss/dparams into `grads`. The L2 term uses the
// given scope and lambda (pass 0 to add it separately per batch).
void Backward(const EncodedInstance& inst, const DcnParams& params, const ForwardTape& tape,
              int y, double lambda, DcnParams& grads, double weight = 1.0,
              L2Scope scope = L2Scope::kWeights);
DcnParams Backward(const EncodedInstance& inst, const DcnParams& params,
                   const ForwardTape& tape, int y, double lambda,
                   L2Scope scope = L2Scope::kWeights);

}  // namespace autoft
